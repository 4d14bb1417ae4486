//! Conversion between extractor tensors and fixed-length vectors for PCA.
//!
//! Tensors shaped `[H, W]` or `[H, W, C]` are cut into 8×8 spatial patches
//! (edge-replicated at the borders), giving vectors of length `64·C`. Any
//! other shape is flattened and chunked into zero-padded vectors of length 64.

use gsc_core::tensor::{Tensor, TensorData};

pub const PATCH: usize = 8;
pub const FLAT_CHUNK: usize = PATCH * PATCH;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layout {
    Spatial { dims: Vec<usize>, height: usize, width: usize, channels: usize },
    Flat { dims: Vec<usize>, len: usize },
}

impl Layout {
    pub fn of(dims: &[usize]) -> Layout {
        match *dims {
            [h, w] if h > 0 && w > 0 => Layout::Spatial {
                dims: dims.to_vec(),
                height: h,
                width: w,
                channels: 1,
            },
            [h, w, c] if h > 0 && w > 0 && c > 0 => Layout::Spatial {
                dims: dims.to_vec(),
                height: h,
                width: w,
                channels: c,
            },
            _ => Layout::Flat {
                dims: dims.to_vec(),
                len: dims.iter().product(),
            },
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            Layout::Spatial { dims, .. } | Layout::Flat { dims, .. } => dims,
        }
    }

    pub fn vector_dim(&self) -> usize {
        match self {
            Layout::Spatial { channels, .. } => FLAT_CHUNK * channels,
            Layout::Flat { .. } => FLAT_CHUNK,
        }
    }

    pub fn vector_count(&self) -> usize {
        match *self {
            Layout::Spatial { height, width, .. } => height.div_ceil(PATCH) * width.div_ceil(PATCH),
            Layout::Flat { len, .. } => len.div_ceil(FLAT_CHUNK),
        }
    }
}

pub fn to_vectors(t: &Tensor) -> (Layout, Vec<Vec<f64>>) {
    let layout = Layout::of(t.dims());
    let data = t.to_f64();
    let vectors = match layout {
        Layout::Spatial {
            height, width, channels, ..
        } => {
            let mut out = Vec::with_capacity(layout.vector_count());
            for by in 0..height.div_ceil(PATCH) {
                for bx in 0..width.div_ceil(PATCH) {
                    let mut v = Vec::with_capacity(layout.vector_dim());
                    for py in 0..PATCH {
                        let y = (by * PATCH + py).min(height - 1);
                        for px in 0..PATCH {
                            let x = (bx * PATCH + px).min(width - 1);
                            let at = (y * width + x) * channels;
                            v.extend_from_slice(&data[at..at + channels]);
                        }
                    }
                    out.push(v);
                }
            }
            out
        }
        Layout::Flat { .. } => data
            .chunks(FLAT_CHUNK)
            .map(|c| {
                let mut v = c.to_vec();
                v.resize(FLAT_CHUNK, 0.0);
                v
            })
            .collect(),
    };
    (layout, vectors)
}

/// Inverse of [`to_vectors`]; padding is discarded. Output is `f64`.
pub fn from_vectors(layout: &Layout, vectors: &[Vec<f64>]) -> Result<Tensor, String> {
    if vectors.len() != layout.vector_count() || vectors.iter().any(|v| v.len() != layout.vector_dim()) {
        return Err(format!(
            "expected {} vectors of length {}, got {}",
            layout.vector_count(),
            layout.vector_dim(),
            vectors.len()
        ));
    }
    let data = match *layout {
        Layout::Spatial {
            height, width, channels, ..
        } => {
            let mut data = vec![0.0; height * width * channels];
            let cols = width.div_ceil(PATCH);
            for (i, v) in vectors.iter().enumerate() {
                let (by, bx) = (i / cols, i % cols);
                for py in 0..PATCH {
                    let y = by * PATCH + py;
                    if y >= height {
                        break;
                    }
                    for px in 0..PATCH {
                        let x = bx * PATCH + px;
                        if x >= width {
                            break;
                        }
                        let src = (py * PATCH + px) * channels;
                        let dst = (y * width + x) * channels;
                        data[dst..dst + channels].copy_from_slice(&v[src..src + channels]);
                    }
                }
            }
            data
        }
        Layout::Flat { len, .. } => vectors.iter().flatten().take(len).copied().collect(),
    };
    Tensor::new(layout.dims().to_vec(), TensorData::F64(data)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(dims: Vec<usize>) -> Tensor {
        let n: usize = dims.iter().product();
        Tensor::new(dims, TensorData::F64((0..n).map(|i| (i * 7 % 13) as f64).collect())).unwrap()
    }

    #[test]
    fn round_trips() {
        for dims in [vec![16, 16], vec![13, 21], vec![9, 10, 3], vec![5], vec![2, 3, 4, 5], vec![100]] {
            let t = tensor(dims.clone());
            let (layout, v) = to_vectors(&t);
            assert_eq!(v.len(), layout.vector_count());
            assert!(v.iter().all(|x| x.len() == layout.vector_dim()));
            let back = from_vectors(&layout, &v).unwrap();
            assert_eq!(back.dims(), &dims[..]);
            assert_eq!(back.to_f64(), t.to_f64(), "{dims:?}");
        }
    }

    #[test]
    fn spatial_patch_order() {
        let t = tensor(vec![8, 16]);
        let (layout, v) = to_vectors(&t);
        assert_eq!(layout.vector_count(), 2);
        let d = t.to_f64();
        assert_eq!(v[1][0], d[8]);
        assert_eq!(v[0][PATCH], d[16]);
    }

    #[test]
    fn borders_replicate() {
        let t = tensor(vec![9, 9]);
        let (_, v) = to_vectors(&t);
        let d = t.to_f64();
        assert_eq!(v[3][63], d[80]);
        assert_eq!(v[3][0], d[80]);
    }
}
