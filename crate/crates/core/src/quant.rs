//! Uniform mid-rise scalar quantization with per-component ranges.

use alloc::vec::Vec;

pub const MIN_BITS: u8 = 1;
pub const MAX_BITS: u8 = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantError {
    #[error("bit depth {0} outside 1..=16")]
    BitsOutOfRange(u8),
    #[error("range for component {0} is empty or not finite")]
    InvalidRange(usize),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("code {code} exceeds {levels} levels")]
    CodeOutOfRange { code: u16, levels: u32 },
}

/// Quantizer description: bit depth plus `[lo, hi]` per component.
///
/// Ranges are stored as `f32` because that is how they travel in the
/// payload header.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantSpec {
    bits: u8,
    lo: Vec<f32>,
    hi: Vec<f32>,
}

impl QuantSpec {
    pub fn new(bits: u8, lo: Vec<f32>, hi: Vec<f32>) -> Result<Self, QuantError> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(QuantError::BitsOutOfRange(bits));
        }
        if lo.len() != hi.len() {
            return Err(QuantError::LengthMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && h > l) {
                return Err(QuantError::InvalidRange(i));
            }
        }
        Ok(QuantSpec { bits, lo, hi })
    }

    /// Ranges covering every component of `vectors` (all of length `dim`).
    ///
    /// `f32` bounds are rounded outward so that the data stays in range, and
    /// a zero-width component is widened to one unit above its value.
    pub fn fit<V: AsRef<[f64]>>(bits: u8, dim: usize, vectors: &[V]) -> Result<Self, QuantError> {
        let mut lo = alloc::vec![f64::INFINITY; dim];
        let mut hi = alloc::vec![f64::NEG_INFINITY; dim];
        for v in vectors {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(QuantError::LengthMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            for i in 0..dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        let mut lo32 = Vec::with_capacity(dim);
        let mut hi32 = Vec::with_capacity(dim);
        for i in 0..dim {
            let (l, h) = if lo[i].is_finite() && hi[i].is_finite() {
                (lo[i], hi[i])
            } else {
                (0.0, 0.0)
            };
            let mut l32 = l as f32;
            if f64::from(l32) > l {
                l32 = next_down(l32);
            }
            let mut h32 = h as f32;
            if f64::from(h32) < h {
                h32 = next_up(h32);
            }
            if h32 <= l32 {
                h32 = l32 + 1.0;
            }
            lo32.push(l32);
            hi32.push(h32);
        }
        QuantSpec::new(bits, lo32, hi32)
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn levels(&self) -> u32 {
        1u32 << self.bits
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f32] {
        &self.lo
    }

    pub fn hi(&self) -> &[f32] {
        &self.hi
    }

    /// Same ranges at a different bit depth.
    pub fn with_bits(&self, bits: u8) -> Result<Self, QuantError> {
        QuantSpec::new(bits, self.lo.clone(), self.hi.clone())
    }

    fn cell_width(&self, i: usize) -> f64 {
        (f64::from(self.hi[i]) - f64::from(self.lo[i])) / f64::from(self.levels())
    }

    /// Worst-case round-trip error for in-range values of component `i`.
    pub fn max_error(&self, i: usize) -> f64 {
        self.cell_width(i) / 2.0
    }

    /// Cell index of each component; out-of-range values clamp to the end cells.
    pub fn quantize(&self, v: &[f64]) -> Result<Vec<u16>, QuantError> {
        self.check_len(v.len())?;
        let top = self.levels() - 1;
        Ok(v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cell = libm::floor((x - f64::from(self.lo[i])) / self.cell_width(i));
                if cell <= 0.0 || cell.is_nan() {
                    0
                } else if cell >= f64::from(top) {
                    top as u16
                } else {
                    cell as u16
                }
            })
            .collect())
    }

    /// Midpoint of each code's cell.
    pub fn dequantize(&self, codes: &[u16]) -> Result<Vec<f64>, QuantError> {
        self.check_len(codes.len())?;
        codes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if u32::from(c) >= self.levels() {
                    return Err(QuantError::CodeOutOfRange {
                        code: c,
                        levels: self.levels(),
                    });
                }
                Ok(f64::from(self.lo[i]) + (f64::from(c) + 0.5) * self.cell_width(i))
            })
            .collect()
    }

    fn check_len(&self, got: usize) -> Result<(), QuantError> {
        if got != self.dim() {
            return Err(QuantError::LengthMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

fn next_up(x: f32) -> f32 {
    if x == 0.0 {
        return f32::from_bits(1);
    }
    let b = x.to_bits();
    f32::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

fn next_down(x: f32) -> f32 {
    -next_up(-x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit(bits: u8, lo: f32, hi: f32) -> QuantSpec {
        QuantSpec::new(bits, vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn one_bit_midpoints() {
        let q = unit(1, 0.0, 1.0);
        assert_eq!(q.quantize(&[0.7]).unwrap(), vec![1]);
        assert_eq!(q.dequantize(&[1]).unwrap(), vec![0.75]);
        assert_eq!(q.dequantize(&[0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn boundaries_clamp() {
        let q = unit(4, -1.0, 1.0);
        assert_eq!(q.quantize(&[-1.0]).unwrap(), vec![0]);
        assert_eq!(q.quantize(&[1.0]).unwrap(), vec![15]);
        assert_eq!(q.quantize(&[7.0]).unwrap(), vec![15]);
        assert_eq!(q.quantize(&[-7.0]).unwrap(), vec![0]);
    }

    #[test]
    fn uniform_values_respect_bound() {
        let q = unit(8, -1.0, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let r = q.dequantize(&q.quantize(&[x]).unwrap()).unwrap()[0];
            worst = worst.max((x - r).abs());
        }
        assert!(worst <= 2.0 / 512.0 + 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(QuantSpec::new(0, vec![0.0], vec![1.0]), Err(QuantError::BitsOutOfRange(0)));
        assert_eq!(QuantSpec::new(17, vec![0.0], vec![1.0]), Err(QuantError::BitsOutOfRange(17)));
        assert_eq!(QuantSpec::new(4, vec![1.0], vec![1.0]), Err(QuantError::InvalidRange(0)));
        assert_eq!(QuantSpec::new(4, vec![f32::NAN], vec![1.0]), Err(QuantError::InvalidRange(0)));
        let q = unit(2, 0.0, 1.0);
        assert!(matches!(q.quantize(&[0.0, 1.0]), Err(QuantError::LengthMismatch { .. })));
        assert!(matches!(q.dequantize(&[4]), Err(QuantError::CodeOutOfRange { .. })));
    }

    #[test]
    fn fit_covers_data() {
        let data = vec![vec![0.1, 5.0], vec![-0.3, 5.0], vec![0.7, 5.0]];
        let q = QuantSpec::fit(8, 2, &data).unwrap();
        assert!(f64::from(q.lo()[0]) <= -0.3 && f64::from(q.hi()[0]) >= 0.7);
        // constant component widened
        assert_eq!(q.lo()[1], 5.0);
        assert_eq!(q.hi()[1], 6.0);
        for v in &data {
            let r = q.dequantize(&q.quantize(v).unwrap()).unwrap();
            for i in 0..2 {
                assert!((r[i] - v[i]).abs() <= q.max_error(i) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn in_range_error_bound(bits in 1u8..=16, lo in -1e3f32..1e3, width in 1e-3f32..1e3, t in 0.0f64..=1.0) {
            let hi = lo + width;
            prop_assume!(hi > lo);
            let q = QuantSpec::new(bits, vec![lo], vec![hi]).unwrap();
            let x = f64::from(lo) + t * (f64::from(hi) - f64::from(lo));
            let r = q.dequantize(&q.quantize(&[x]).unwrap()).unwrap()[0];
            let bound = (f64::from(hi) - f64::from(lo)) / f64::from(1u32 << (bits + 1));
            prop_assert!((x - r).abs() <= bound + 1e-12 * (1.0 + x.abs()));
        }
    }
}
