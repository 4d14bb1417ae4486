//! `GSCT` tensor blobs: magic, version, dtype, rank, `u32` dims, then
//! row-major little-endian data.

use alloc::vec::Vec;

pub const TENSOR_MAGIC: &[u8; 4] = b"GSCT";
pub const TENSOR_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    U8(Vec<u8>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    fn len(&self) -> usize {
        match self {
            TensorData::U8(v) => v.len(),
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    fn dtype(&self) -> u8 {
        match self {
            TensorData::U8(_) => 0,
            TensorData::F32(_) => 1,
            TensorData::F64(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("truncated tensor at offset {offset}")]
    Truncated { offset: usize },
    #[error("bad tensor magic at offset {offset}")]
    BadMagic { offset: usize },
    #[error("unsupported tensor version {version} at offset {offset}")]
    Version { version: u8, offset: usize },
    #[error("unknown dtype {dtype} at offset {offset}")]
    UnknownDtype { dtype: u8, offset: usize },
    #[error("shape holds {expected} elements but data has {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("tensor has too many dimensions ({0})")]
    TooManyDims(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self, TensorError> {
        if dims.len() > usize::from(u8::MAX) {
            return Err(TensorError::TooManyDims(dims.len()));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(TensorError::ShapeMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor { dims, data })
    }

    pub fn f32(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        Tensor::new(dims, TensorData::F32(data))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    /// Elements widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            TensorData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        let width = match self.data {
            TensorData::U8(_) => 1,
            TensorData::F32(_) => 4,
            TensorData::F64(_) => 8,
        };
        7 + 4 * self.dims.len() + width * self.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(TENSOR_MAGIC);
        out.push(TENSOR_VERSION);
        out.push(self.data.dtype());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &self.data {
            TensorData::U8(v) => out.extend_from_slice(v),
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }

    /// Decodes one blob from the front of `bytes`, returning it with the
    /// number of bytes consumed. Error offsets are relative to `bytes`.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Tensor, usize), TensorError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != TENSOR_MAGIC {
            return Err(TensorError::BadMagic { offset: 0 });
        }
        let version = cur.u8()?;
        if version != TENSOR_VERSION {
            return Err(TensorError::Version { version, offset: 4 });
        }
        let dtype = cur.u8()?;
        if dtype > 2 {
            return Err(TensorError::UnknownDtype { dtype, offset: 5 });
        }
        let ndim = cur.u8()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        let mut count: usize = 1;
        for _ in 0..ndim {
            let d = u32::from_le_bytes(cur.array()?) as usize;
            count = count.checked_mul(d).ok_or(TensorError::Truncated { offset: cur.pos })?;
            dims.push(d);
        }
        let data = match dtype {
            0 => TensorData::U8(cur.take(count)?.to_vec()),
            1 => {
                let raw = cur.take(count.checked_mul(4).ok_or(TensorError::Truncated { offset: cur.pos })?)?;
                TensorData::F32(
                    raw.chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                        .collect(),
                )
            }
            _ => {
                let raw = cur.take(count.checked_mul(8).ok_or(TensorError::Truncated { offset: cur.pos })?)?;
                TensorData::F64(
                    raw.chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
        };
        Ok((Tensor { dims, data }, cur.pos))
    }

    /// Decodes exactly one blob; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Tensor, TensorError> {
        let (t, used) = Tensor::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(TensorError::ShapeMismatch {
                expected: used,
                got: bytes.len(),
            });
        }
        Ok(t)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(TensorError::Truncated { offset: self.pos })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, TensorError> {
        Ok(self.take(1)?[0])
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], TensorError> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}
