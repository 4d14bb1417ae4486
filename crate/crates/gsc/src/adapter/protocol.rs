//! Framed adapter wire protocol.
//!
//! A frame is a `u32` little-endian length `L` followed by `L` bytes: one
//! JSON header object, then `tensor_count` GSCT blobs back to back.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use gsc_core::tensor::{Tensor, TensorError};
use serde::{Deserialize, Serialize};

/// Frames larger than this are rejected before allocation.
pub const MAX_FRAME_LEN: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Header {
    pub op: String,
    pub request_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic_seed: Option<u64>,
    pub tensor_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Role of each tensor (`task`, `perceptual`, `image`, `embedding`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Floating-point operations spent serving the request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Header {
    pub fn new(op: &str, request_id: u64) -> Self {
        Header {
            op: op.to_string(),
            request_id,
            ..Header::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub header: Header,
    pub tensors: Vec<Tensor>,
}

impl Frame {
    pub fn new(mut header: Header, tensors: Vec<Tensor>) -> Self {
        header.tensor_count = tensors.len();
        Frame { header, tensors }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("frame truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("frame length {0} exceeds limit")]
    TooLarge(usize),
    #[error("header at offset {offset}: {reason}")]
    Header { offset: usize, reason: String },
    #[error("tensor {index} (frame offset {frame_offset}): {source}")]
    Tensor {
        index: usize,
        frame_offset: usize,
        #[source]
        source: TensorError,
    },
    #[error("{count} unexpected trailing bytes at offset {offset}")]
    Trailing { offset: usize, count: usize },
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let mut header = frame.header.clone();
    header.tensor_count = frame.tensors.len();
    let json = serde_json::to_vec(&header).expect("header serializes");
    let body_len = json.len() + frame.tensors.iter().map(Tensor::encoded_len).sum::<usize>();
    let mut out = Vec::with_capacity(4 + body_len);
    out.extend_from_slice(&(body_len as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &frame.tensors {
        t.encode_into(&mut out);
    }
    out
}

/// Parses the bytes after the length prefix. Offsets in errors count from
/// the start of the frame, prefix included.
pub fn decode_body(body: &[u8]) -> Result<Frame, ProtocolError> {
    const BASE: usize = 4;
    let mut stream = serde_json::Deserializer::from_slice(body).into_iter::<Header>();
    let header = match stream.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) if e.is_eof() => {
            return Err(ProtocolError::Truncated {
                offset: BASE + body.len(),
            })
        }
        Some(Err(e)) => {
            return Err(ProtocolError::Header {
                offset: BASE,
                reason: e.to_string(),
            })
        }
        None => return Err(ProtocolError::Truncated { offset: BASE }),
    };
    let mut pos = stream.byte_offset();
    let mut tensors = Vec::with_capacity(header.tensor_count.min(64));
    for index in 0..header.tensor_count {
        let (t, used) = Tensor::decode_prefix(&body[pos..]).map_err(|source| ProtocolError::Tensor {
            index,
            frame_offset: BASE + pos,
            source,
        })?;
        tensors.push(t);
        pos += used;
    }
    if pos != body.len() {
        return Err(ProtocolError::Trailing {
            offset: BASE + pos,
            count: body.len() - pos,
        });
    }
    Ok(Frame { header, tensors })
}

/// Parses one complete frame, prefix included.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, ProtocolError> {
    let prefix: [u8; 4] = bytes
        .get(..4)
        .and_then(|b| b.try_into().ok())
        .ok_or(ProtocolError::Truncated { offset: bytes.len() })?;
    let len = u32::from_le_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(ProtocolError::TooLarge(len));
    }
    match bytes.len() - 4 {
        n if n < len => Err(ProtocolError::Truncated { offset: bytes.len() }),
        n if n > len => Err(ProtocolError::Trailing {
            offset: 4 + len,
            count: n - len,
        }),
        _ => decode_body(&bytes[4..]),
    }
}

/// Reads one frame; `Ok(None)` on end of stream before the first byte.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>, ProtocolError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(ProtocolError::Truncated { offset: got }),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(ProtocolError::TooLarge(len));
    }
    let mut body = vec![0u8; len];
    let mut filled = 0;
    while filled < len {
        match r.read(&mut body[filled..]) {
            Ok(0) => return Err(ProtocolError::Truncated { offset: 4 + filled }),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    decode_body(&body).map(Some)
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> io::Result<()> {
    w.write_all(&encode_frame(frame))?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsc_core::tensor::TensorData;

    fn sample() -> Frame {
        let mut h = Header::new("extract", 7);
        h.text = Some("caption".into());
        h.roles = vec!["task".into(), "perceptual".into()];
        Frame::new(
            h,
            vec![
                Tensor::f32(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
                Tensor::new(vec![3], TensorData::U8(vec![1, 2, 3])).unwrap(),
            ],
        )
    }

    #[test]
    fn round_trip() {
        let f = sample();
        let bytes = encode_frame(&f);
        assert_eq!(u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize, bytes.len() - 4);
        assert_eq!(decode_frame(&bytes).unwrap(), f);
        assert_eq!(read_frame(&mut &bytes[..]).unwrap().unwrap(), f);
    }

    #[test]
    fn header_fields_on_the_wire() {
        let bytes = encode_frame(&Frame::new(Header::new("hello", 1), vec![]));
        let json: serde_json::Value = serde_json::from_slice(&bytes[4..]).unwrap();
        assert_eq!(json, serde_json::json!({"op": "hello", "request_id": 1, "tensor_count": 0}));
    }

    #[test]
    fn every_truncation_is_detected() {
        let bytes = encode_frame(&sample());
        for cut in 0..bytes.len() {
            assert!(decode_frame(&bytes[..cut]).is_err(), "cut {cut}");
            match read_frame(&mut &bytes[..cut]) {
                Ok(None) => assert_eq!(cut, 0),
                Ok(Some(_)) => panic!("misparsed prefix of {cut} bytes"),
                Err(_) => {}
            }
        }
    }

    #[test]
    fn truncated_body_with_patched_length() {
        let bytes = encode_frame(&sample());
        for cut in 4..bytes.len() {
            let mut b = bytes[..cut].to_vec();
            b[..4].copy_from_slice(&((cut - 4) as u32).to_le_bytes());
            assert!(decode_frame(&b).is_err(), "cut {cut}");
        }
    }

    #[test]
    fn bad_tensor_magic_names_offset_zero() {
        let f = sample();
        let mut bytes = encode_frame(&f);
        let json_len = serde_json::to_vec(&f.header).unwrap().len();
        bytes[4 + json_len] = b'X';
        let e = decode_frame(&bytes).unwrap_err();
        assert!(matches!(
            e,
            ProtocolError::Tensor {
                index: 0,
                source: TensorError::BadMagic { offset: 0 },
                ..
            }
        ));
        assert!(e.to_string().contains("offset 0"), "{e}");
    }

    #[test]
    fn garbage_header() {
        let mut bytes = vec![3, 0, 0, 0];
        bytes.extend_from_slice(b"{x}");
        assert!(matches!(decode_frame(&bytes), Err(ProtocolError::Header { offset: 4, .. })));
    }
}
