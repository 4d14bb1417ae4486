//! The transmitted semantic bundle and its `GSCP` wire format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "GSCP" | version u8 = 1 | stream_count u8 | stream*
//!
//! vector stream (type 0 = task, 1 = perceptual):
//!   type u8 | id_len u8 | id | rank u16 | vector_count u32 | bits u8 |
//!   (lo f32, hi f32) × rank | codes, `bits` each, MSB-first, zero-padded
//! text stream (type 2):
//!   type u8 | byte_length u32 | bytes
//! basis stream (type 3, self-contained mode only):
//!   type u8 | id_len u8 | id | blob_len u32 | GSCT f64 [rank + 1, dim]
//!   (row 0 is the mean, rows 1.. the components)
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::bits::{BitReader, BitWriter};
use crate::pca::{PcaBasis, PcaError};
use crate::quant::{QuantError, QuantSpec};
use crate::tensor::{Tensor, TensorData, TensorError};

pub const PAYLOAD_MAGIC: &[u8; 4] = b"GSCP";
pub const PAYLOAD_VERSION: u8 = 1;
/// Size of an encoded payload with no streams.
pub const HEADER_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    Task,
    Perceptual,
}

impl StreamKind {
    fn tag(self) -> u8 {
        match self {
            StreamKind::Task => 0,
            StreamKind::Perceptual => 1,
        }
    }
}

const TEXT_TAG: u8 = 2;
const BASIS_TAG: u8 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PayloadError {
    #[error("payload truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("bad payload magic")]
    BadMagic,
    #[error("unsupported payload version {0}")]
    VersionMismatch(u8),
    #[error("unknown stream type {value} at offset {offset}")]
    UnknownStreamType { offset: usize, value: u8 },
    #[error("invalid quantizer at offset {offset}: {source}")]
    InvalidQuant { offset: usize, source: QuantError },
    #[error("nonzero padding bits in stream ending at offset {offset}")]
    NonZeroPadding { offset: usize },
    #[error("{count} trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, count: usize },
    #[error("basis id at offset {offset} is not UTF-8")]
    BadBasisId { offset: usize },
    #[error("bad basis blob at offset {offset}: {source}")]
    BadBasis { offset: usize, source: TensorError },
    #[error("basis at offset {offset} is not a valid PCA basis: {source}")]
    InvalidBasis { offset: usize, source: PcaError },
    #[error("too many streams ({0}, max 255)")]
    TooManyStreams(usize),
    #[error("basis id longer than 255 bytes")]
    BasisIdTooLong,
    #[error("stream field out of range: {0}")]
    FieldOverflow(&'static str),
    #[error("{codes} codes do not fill vectors of rank {rank}")]
    RaggedCodes { codes: usize, rank: usize },
    #[error(transparent)]
    Quant(#[from] QuantError),
}

/// Quantized PCA coefficients for one task-relevant or perceptual stream.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStream {
    kind: StreamKind,
    basis_id: String,
    quant: QuantSpec,
    codes: Vec<u16>,
}

impl VectorStream {
    /// `codes` holds `vector_count × rank` entries, vector-major; the rank is
    /// the quantizer's dimension.
    pub fn new(
        kind: StreamKind,
        basis_id: &str,
        quant: QuantSpec,
        codes: Vec<u16>,
    ) -> Result<Self, PayloadError> {
        let rank = quant.dim();
        if basis_id.len() > 255 {
            return Err(PayloadError::BasisIdTooLong);
        }
        if rank == 0 || rank > usize::from(u16::MAX) {
            return Err(PayloadError::FieldOverflow("rank"));
        }
        if !codes.len().is_multiple_of(rank) {
            return Err(PayloadError::RaggedCodes {
                codes: codes.len(),
                rank,
            });
        }
        if codes.len() / rank > u32::MAX as usize {
            return Err(PayloadError::FieldOverflow("vector_count"));
        }
        if let Some(&c) = codes.iter().find(|&&c| u32::from(c) >= quant.levels()) {
            return Err(QuantError::CodeOutOfRange {
                code: c,
                levels: quant.levels(),
            }
            .into());
        }
        Ok(VectorStream {
            kind,
            basis_id: basis_id.to_string(),
            quant,
            codes,
        })
    }

    /// Quantizes `vectors` (each of length `quant.dim()`).
    pub fn from_vectors<V: AsRef<[f64]>>(
        kind: StreamKind,
        basis_id: &str,
        quant: QuantSpec,
        vectors: &[V],
    ) -> Result<Self, PayloadError> {
        let mut codes = Vec::with_capacity(vectors.len() * quant.dim());
        for v in vectors {
            codes.extend(quant.quantize(v.as_ref())?);
        }
        VectorStream::new(kind, basis_id, quant, codes)
    }

    pub fn kind(&self) -> StreamKind {
        self.kind
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    pub fn rank(&self) -> usize {
        self.quant.dim()
    }

    pub fn bits(&self) -> u8 {
        self.quant.bits()
    }

    pub fn quant(&self) -> &QuantSpec {
        &self.quant
    }

    pub fn vector_count(&self) -> usize {
        self.codes.len() / self.rank()
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    /// Dequantized coefficient vectors.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.codes
            .chunks(self.rank())
            .map(|c| self.quant.dequantize(c).expect("codes validated at construction"))
            .collect()
    }

    fn encoded_len(&self) -> usize {
        vector_stream_size(self.basis_id.len(), self.rank(), self.vector_count(), self.bits())
    }
}

/// A PCA basis shipped inside the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisStream {
    basis: PcaBasis,
}

impl BasisStream {
    pub fn new(basis: PcaBasis) -> Result<Self, PayloadError> {
        if basis.basis_id().len() > 255 {
            return Err(PayloadError::BasisIdTooLong);
        }
        Ok(BasisStream { basis })
    }

    pub fn basis(&self) -> &PcaBasis {
        &self.basis
    }

    fn tensor(&self) -> Tensor {
        let b = &self.basis;
        let mut data = b.mean().to_vec();
        data.extend_from_slice(b.components());
        Tensor::new(alloc::vec![b.rank() + 1, b.dim()], TensorData::F64(data))
            .expect("basis shape is consistent")
    }

    fn encoded_len(&self) -> usize {
        basis_stream_size(self.basis.basis_id().len(), self.basis.rank(), self.basis.dim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stream {
    Vectors(VectorStream),
    Text(Vec<u8>),
    Basis(BasisStream),
}

impl Stream {
    pub fn encoded_len(&self) -> usize {
        match self {
            Stream::Vectors(v) => v.encoded_len(),
            Stream::Text(t) => text_stream_size(t.len()),
            Stream::Basis(b) => b.encoded_len(),
        }
    }
}

/// Wire size of a vector stream.
pub fn vector_stream_size(id_len: usize, rank: usize, count: usize, bits: u8) -> usize {
    9 + id_len + 8 * rank + (count * rank * usize::from(bits)).div_ceil(8)
}

/// Wire size of a text stream.
pub fn text_stream_size(len: usize) -> usize {
    5 + len
}

/// Wire size of a basis stream.
pub fn basis_stream_size(id_len: usize, rank: usize, dim: usize) -> usize {
    // GSCT header with two dims, then f64 data
    6 + id_len + 15 + 8 * (rank + 1) * dim
}

/// The transmitted bundle: task-relevant vectors, perceptual vectors and
/// text segments, each in its own stream, in transmission order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemanticPayload {
    streams: Vec<Stream>,
}

impl SemanticPayload {
    pub fn new(streams: Vec<Stream>) -> Result<Self, PayloadError> {
        if streams.len() > 255 {
            return Err(PayloadError::TooManyStreams(streams.len()));
        }
        for s in &streams {
            if let Stream::Text(t) = s {
                if t.len() > u32::MAX as usize {
                    return Err(PayloadError::FieldOverflow("byte_length"));
                }
            }
        }
        Ok(SemanticPayload { streams })
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn vector_streams(&self, kind: StreamKind) -> impl Iterator<Item = &VectorStream> {
        self.streams.iter().filter_map(move |s| match s {
            Stream::Vectors(v) if v.kind == kind => Some(v),
            _ => None,
        })
    }

    pub fn text_segments(&self) -> impl Iterator<Item = &[u8]> {
        self.streams.iter().filter_map(|s| match s {
            Stream::Text(t) => Some(t.as_slice()),
            _ => None,
        })
    }

    pub fn bases(&self) -> impl Iterator<Item = &PcaBasis> {
        self.streams.iter().filter_map(|s| match s {
            Stream::Basis(b) => Some(b.basis()),
            _ => None,
        })
    }
}

/// Exact encoded length of `p`, computed without encoding.
pub fn payload_byte_size(p: &SemanticPayload) -> usize {
    HEADER_LEN + p.streams.iter().map(Stream::encoded_len).sum::<usize>()
}

pub fn serialize_payload(p: &SemanticPayload) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload_byte_size(p));
    out.extend_from_slice(PAYLOAD_MAGIC);
    out.push(PAYLOAD_VERSION);
    out.push(p.streams.len() as u8);
    for s in &p.streams {
        match s {
            Stream::Vectors(v) => {
                out.push(v.kind.tag());
                out.push(v.basis_id.len() as u8);
                out.extend_from_slice(v.basis_id.as_bytes());
                out.extend_from_slice(&(v.rank() as u16).to_le_bytes());
                out.extend_from_slice(&(v.vector_count() as u32).to_le_bytes());
                out.push(v.bits());
                for (lo, hi) in v.quant.lo().iter().zip(v.quant.hi()) {
                    out.extend_from_slice(&lo.to_le_bytes());
                    out.extend_from_slice(&hi.to_le_bytes());
                }
                let mut w = BitWriter::new();
                for &c in &v.codes {
                    w.write(u32::from(c), v.bits());
                }
                out.extend(w.finish());
            }
            Stream::Text(t) => {
                out.push(TEXT_TAG);
                out.extend_from_slice(&(t.len() as u32).to_le_bytes());
                out.extend_from_slice(t);
            }
            Stream::Basis(b) => {
                let blob = b.tensor().encode();
                out.push(BASIS_TAG);
                let id = b.basis.basis_id();
                out.push(id.len() as u8);
                out.extend_from_slice(id.as_bytes());
                out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
                out.extend(blob);
            }
        }
    }
    debug_assert_eq!(out.len(), payload_byte_size(p));
    out
}

pub fn deserialize_payload(bytes: &[u8]) -> Result<SemanticPayload, PayloadError> {
    deserialize_with_spans(bytes).map(|(p, _)| p)
}

/// Like [`deserialize_payload`], also returning each stream's byte range.
pub fn deserialize_with_spans(
    bytes: &[u8],
) -> Result<(SemanticPayload, Vec<Range<usize>>), PayloadError> {
    let mut cur = Reader { bytes, pos: 0 };
    if cur.take(4)? != PAYLOAD_MAGIC {
        return Err(PayloadError::BadMagic);
    }
    let version = cur.u8()?;
    if version != PAYLOAD_VERSION {
        return Err(PayloadError::VersionMismatch(version));
    }
    let count = cur.u8()?;
    let mut streams = Vec::with_capacity(usize::from(count));
    let mut spans = Vec::with_capacity(usize::from(count));
    for _ in 0..count {
        let start = cur.pos;
        let tag = cur.u8()?;
        let stream = match tag {
            0 | 1 => {
                let kind = if tag == 0 { StreamKind::Task } else { StreamKind::Perceptual };
                let basis_id = cur.basis_id()?;
                let rank = usize::from(cur.u16()?);
                let vector_count = cur.u32()? as usize;
                let bits_at = cur.pos;
                let bits = cur.u8()?;
                let mut lo = Vec::with_capacity(rank);
                let mut hi = Vec::with_capacity(rank);
                for _ in 0..rank {
                    lo.push(cur.f32()?);
                    hi.push(cur.f32()?);
                }
                let quant = QuantSpec::new(bits, lo, hi)
                    .map_err(|source| PayloadError::InvalidQuant { offset: bits_at, source })?;
                let n = vector_count
                    .checked_mul(rank)
                    .ok_or(PayloadError::Truncated { offset: cur.pos })?;
                let packed_len = n
                    .checked_mul(usize::from(bits))
                    .ok_or(PayloadError::Truncated { offset: cur.pos })?
                    .div_ceil(8);
                let packed = cur.take(packed_len)?;
                let mut r = BitReader::new(packed);
                let codes: Vec<u16> = (0..n).map(|_| r.read(bits).unwrap() as u16).collect();
                while let Some(b) = r.read_bit() {
                    if b {
                        return Err(PayloadError::NonZeroPadding { offset: cur.pos });
                    }
                }
                if rank == 0 {
                    return Err(PayloadError::InvalidQuant {
                        offset: bits_at,
                        source: QuantError::LengthMismatch { expected: 1, got: 0 },
                    });
                }
                Stream::Vectors(VectorStream {
                    kind,
                    basis_id,
                    quant,
                    codes,
                })
            }
            TEXT_TAG => {
                let len = cur.u32()? as usize;
                Stream::Text(cur.take(len)?.to_vec())
            }
            BASIS_TAG => {
                let basis_id = cur.basis_id()?;
                let len = cur.u32()? as usize;
                let at = cur.pos;
                let blob = cur.take(len)?;
                let t = Tensor::decode(blob)
                    .map_err(|source| PayloadError::BadBasis { offset: at, source })?;
                let (rows, dim) = match (t.dims(), t.data()) {
                    ([r, d], TensorData::F64(_)) if *r >= 2 => (*r, *d),
                    _ => {
                        return Err(PayloadError::BadBasis {
                            offset: at,
                            source: TensorError::ShapeMismatch { expected: 2, got: t.dims().len() },
                        })
                    }
                };
                let data = t.to_f64();
                let basis = PcaBasis::from_parts(
                    &basis_id,
                    data[..dim].to_vec(),
                    data[dim..].to_vec(),
                    rows - 1,
                )
                .map_err(|source| PayloadError::InvalidBasis { offset: at, source })?;
                Stream::Basis(BasisStream { basis })
            }
            value => {
                return Err(PayloadError::UnknownStreamType {
                    offset: start,
                    value,
                })
            }
        };
        streams.push(stream);
        spans.push(start..cur.pos);
    }
    if cur.pos != bytes.len() {
        return Err(PayloadError::TrailingBytes {
            offset: cur.pos,
            count: bytes.len() - cur.pos,
        });
    }
    Ok((SemanticPayload { streams }, spans))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PayloadError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(PayloadError::Truncated { offset: self.pos })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PayloadError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PayloadError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PayloadError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, PayloadError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn basis_id(&mut self) -> Result<String, PayloadError> {
        let len = usize::from(self.u8()?);
        let at = self.pos;
        let raw = self.take(len)?;
        core::str::from_utf8(raw)
            .map(String::from)
            .map_err(|_| PayloadError::BadBasisId { offset: at })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn stream(kind: StreamKind, rank: usize, count: usize, bits: u8) -> VectorStream {
        let quant = QuantSpec::new(bits, vec![-1.0; rank], vec![1.0; rank]).unwrap();
        let levels = 1u32 << bits;
        let codes = (0..rank * count).map(|i| (i as u32 % levels) as u16).collect();
        VectorStream::new(kind, "task0", quant, codes).unwrap()
    }

    #[test]
    fn empty_payload_is_header_only() {
        let p = SemanticPayload::default();
        let b = serialize_payload(&p);
        assert_eq!(b, b"GSCP\x01\x00");
        assert_eq!(payload_byte_size(&p), HEADER_LEN);
        assert_eq!(deserialize_payload(&b).unwrap(), p);
    }

    #[test]
    fn ten_vectors_rank_sixteen_eight_bits() {
        let s = stream(StreamKind::Task, 16, 10, 8);
        let p = SemanticPayload::new(vec![Stream::Vectors(s)]).unwrap();
        let b = serialize_payload(&p);
        // header 6, stream header 1+1+5+2+4+1, ranges 16·8, data 10·16
        let stream_header = 14 + 128;
        assert_eq!(b.len(), HEADER_LEN + stream_header + 160);
        assert_eq!(payload_byte_size(&p), b.len());
        assert_eq!(deserialize_payload(&b).unwrap(), p);
    }

    #[test]
    fn text_stream_layout() {
        let p = SemanticPayload::new(vec![Stream::Text("a white car".into())]).unwrap();
        let b = serialize_payload(&p);
        assert_eq!(&b[6..11], &[2, 11, 0, 0, 0]);
        assert_eq!(b.len(), 6 + 5 + 11);
    }

    #[test]
    fn distinct_errors() {
        let p = SemanticPayload::new(vec![Stream::Vectors(stream(StreamKind::Task, 2, 3, 5))]).unwrap();
        let good = serialize_payload(&p);
        let mut bad = good.clone();
        bad[1] = b'X';
        assert_eq!(deserialize_payload(&bad), Err(PayloadError::BadMagic));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(deserialize_payload(&bad), Err(PayloadError::VersionMismatch(2)));
        assert!(matches!(
            deserialize_payload(&good[..good.len() - 1]),
            Err(PayloadError::Truncated { .. })
        ));
        let mut bad = good.clone();
        bad[6] = 9;
        assert_eq!(
            deserialize_payload(&bad),
            Err(PayloadError::UnknownStreamType { offset: 6, value: 9 })
        );
        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(deserialize_payload(&bad), Err(PayloadError::TrailingBytes { .. })));
        // 2·3·5 = 30 bits, last two are padding
        let mut bad = good.clone();
        *bad.last_mut().unwrap() |= 1;
        assert!(matches!(deserialize_payload(&bad), Err(PayloadError::NonZeroPadding { .. })));
    }

    #[test]
    fn basis_stream_round_trip() {
        let samples: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64, 1.0]).collect();
        let basis = crate::pca::fit_basis(&samples, 2, "b").unwrap();
        let p = SemanticPayload::new(vec![Stream::Basis(BasisStream::new(basis.clone()).unwrap())]).unwrap();
        let b = serialize_payload(&p);
        assert_eq!(b.len(), payload_byte_size(&p));
        let back = deserialize_payload(&b).unwrap();
        assert_eq!(back.bases().next().unwrap(), &basis);
    }

    fn arb_stream() -> impl Strategy<Value = Stream> {
        prop_oneof![
            (0u8..2, 1usize..6, 0usize..5, 1u8..=16, "[a-z0-9]{0,8}", any::<u64>()).prop_map(
                |(k, rank, count, bits, id, seed)| {
                    let kind = if k == 0 { StreamKind::Task } else { StreamKind::Perceptual };
                    let lo: Vec<f32> = (0..rank).map(|i| -(i as f32) - (seed % 7) as f32).collect();
                    let hi: Vec<f32> = lo.iter().map(|l| l + 0.5 + (seed % 3) as f32).collect();
                    let quant = QuantSpec::new(bits, lo, hi).unwrap();
                    let mask = (1u64 << bits) - 1;
                    let codes = (0..rank * count)
                        .map(|i| ((seed.rotate_left(i as u32 * 7) ^ i as u64) & mask) as u16)
                        .collect();
                    Stream::Vectors(VectorStream::new(kind, &id, quant, codes).unwrap())
                }
            ),
            proptest::collection::vec(any::<u8>(), 0..40).prop_map(Stream::Text),
        ]
    }

    fn arb_payload() -> impl Strategy<Value = SemanticPayload> {
        proptest::collection::vec(arb_stream(), 0..5).prop_map(|s| SemanticPayload::new(s).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip_is_bit_exact(p in arb_payload()) {
            let b = serialize_payload(&p);
            prop_assert_eq!(b.len(), payload_byte_size(&p));
            let back = deserialize_payload(&b).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(serialize_payload(&back), b);
        }
    }

    proptest! {
        #[test]
        fn truncations_are_rejected(p in arb_payload()) {
            let b = serialize_payload(&p);
            for cut in 0..b.len() {
                prop_assert!(deserialize_payload(&b[..cut]).is_err());
            }
        }
    }
}
