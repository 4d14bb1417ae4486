//! Perception-based Image Quality Evaluator (Venkatanath et al., NCC 2015).
//!
//! Lower scores mean better perceived quality. The computation follows the
//! widely used MATLAB `piqe` behaviour:
//!
//! 1. pad symmetrically to a multiple of the block size, rescale to
//!    `round(255·x / max x)`;
//! 2. MSCN coefficients `(x − μ) / (σ + 1)` with a 7×7, σ = 7/6 Gaussian
//!    window and replicated borders;
//! 3. a 16×16 block is *active* when its sample variance exceeds the
//!    activity threshold;
//! 4. an active block shows a *noticeable artifact* when any 6-pixel
//!    segment of its four edges has sample std below the impairment
//!    threshold, and *noise* when `σ_block > 2·β`, with β comparing σ_block
//!    to the centre/surround std ratio;
//! 5. `score = (Σ distortion + 1) / (active + 1) · 100`, clamped to [0, 100].
//!
//! The surround excludes block columns 7 and 9 (0-based), matching the
//! reference implementation's sequential column deletion.

use alloc::vec::Vec;

use crate::image::{convolve_separable, gaussian_kernel, Plane};
use crate::metrics::MetricError;

/// Every tunable PIQE constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiqeConstants {
    pub block_size: usize,
    pub activity_threshold: f64,
    pub impaired_threshold: f64,
    pub segment_len: usize,
    pub window: usize,
    pub window_sigma: f64,
    pub stability: f64,
    pub min_side: usize,
}

pub const PIQE: PiqeConstants = PiqeConstants {
    block_size: 16,
    activity_threshold: 0.1,
    impaired_threshold: 0.1,
    segment_len: 6,
    window: 7,
    window_sigma: 7.0 / 6.0,
    stability: 1.0,
    min_side: 32,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiqeReport {
    pub score: f64,
    pub active_blocks: usize,
    pub artifact_blocks: usize,
    pub noise_blocks: usize,
}

/// Numpy-style `symmetric` index reflection (edge sample repeated).
fn reflect(i: usize, n: usize) -> usize {
    let period = 2 * n;
    let m = i % period;
    if m < n {
        m
    } else {
        period - 1 - m
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance (`n − 1` denominator).
fn var1(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn std1(v: &[f64]) -> f64 {
    libm::sqrt(var1(v))
}

pub fn piqe(image: &Plane) -> Result<f64, MetricError> {
    piqe_detailed(image).map(|r| r.score)
}

pub fn piqe_detailed(image: &Plane) -> Result<PiqeReport, MetricError> {
    let c = PIQE;
    if image.width < c.min_side || image.height < c.min_side {
        return Err(MetricError::ImageTooSmall(image.width, image.height));
    }
    if image.data.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let bs = c.block_size;
    let w = image.width.div_ceil(bs) * bs;
    let h = image.height.div_ceil(bs) * bs;
    let max = image.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut padded = Vec::with_capacity(w * h);
    for y in 0..h {
        let sy = reflect(y, image.height);
        for x in 0..w {
            padded.push(libm::round(image.at(reflect(x, image.width), sy) * scale));
        }
    }
    let img = Plane::new(w, h, padded);

    let k = gaussian_kernel(c.window, c.window_sigma);
    let mu = convolve_separable(&img, &k);
    let sq = convolve_separable(&img.map(|v| v * v), &k);
    let norm: Vec<f64> = (0..w * h)
        .map(|i| {
            let sigma = libm::sqrt((sq.data[i] - mu.data[i] * mu.data[i]).abs());
            (img.data[i] - mu.data[i]) / (sigma + c.stability)
        })
        .collect();

    let mut report = PiqeReport {
        score: 0.0,
        active_blocks: 0,
        artifact_blocks: 0,
        noise_blocks: 0,
    };
    let mut distortion = 0.0;
    let mut block = Vec::with_capacity(bs * bs);
    for by in (0..h).step_by(bs) {
        for bx in (0..w).step_by(bs) {
            block.clear();
            for y in by..by + bs {
                block.extend_from_slice(&norm[y * w + bx..y * w + bx + bs]);
            }
            let v = var1(&block);
            if v <= c.activity_threshold {
                continue;
            }
            report.active_blocks += 1;
            let impaired = noticeable_artifact(&block, bs, c.segment_len, c.impaired_threshold);
            let sigma = libm::sqrt(v);
            let csd = center_surround_dev(&block, bs);
            let beta = (sigma - csd).abs() / sigma.max(csd);
            let noisy = sigma > 2.0 * beta;
            if impaired {
                report.artifact_blocks += 1;
                distortion += 1.0 - v;
            }
            if noisy {
                report.noise_blocks += 1;
                distortion += v;
            }
        }
    }
    let score = (distortion + 1.0) / (report.active_blocks as f64 + 1.0) * 100.0;
    report.score = score.clamp(0.0, 100.0);
    Ok(report)
}

fn noticeable_artifact(block: &[f64], n: usize, seg: usize, threshold: f64) -> bool {
    let top: Vec<f64> = block[..n].to_vec();
    let bottom: Vec<f64> = block[(n - 1) * n..].to_vec();
    let left: Vec<f64> = (0..n).map(|r| block[r * n]).collect();
    let right: Vec<f64> = (0..n).map(|r| block[r * n + n - 1]).collect();
    (0..=n - seg).any(|i| [&top, &right, &bottom, &left].iter().any(|e| std1(&e[i..i + seg]) < threshold))
}

fn center_surround_dev(block: &[f64], n: usize) -> f64 {
    let c1 = n / 2 - 1;
    let c2 = n / 2;
    let skip = n / 2 + 1;
    let mut center = Vec::with_capacity(2 * n);
    center.extend((0..n).map(|r| block[r * n + c1]));
    center.extend((0..n).map(|r| block[r * n + c2]));
    let surround: Vec<f64> = (0..n * n).filter(|i| i % n != c1 && i % n != skip).map(|i| block[i]).collect();
    let ratio = std1(&center) / std1(&surround);
    if ratio.is_nan() {
        0.0
    } else {
        ratio
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn texture(w: usize, h: usize) -> Plane {
        Plane::new(
            w,
            h,
            (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    128.0 + 60.0 * libm::sin(x / 1.3) * libm::cos(y / 2.1) + 30.0 * libm::sin((x * y) / 9.0)
                })
                .collect(),
        )
    }

    #[test]
    fn uniform_image_scores_100() {
        assert_eq!(piqe(&Plane::filled(64, 64, 77.0)).unwrap(), 100.0);
        assert_eq!(piqe(&Plane::filled(40, 33, 0.0)).unwrap(), 100.0);
    }

    #[test]
    fn small_images_are_rejected() {
        assert_eq!(piqe(&Plane::filled(31, 64, 1.0)), Err(MetricError::ImageTooSmall(31, 64)));
    }

    #[test]
    fn noise_raises_score() {
        let clean = texture(96, 96);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 40.0).unwrap();
        let noisy = Plane::new(96, 96, clean.data.iter().map(|v| (v + n.sample(&mut rng)).clamp(0.0, 255.0)).collect());
        let (a, b) = (piqe(&clean).unwrap(), piqe(&noisy).unwrap());
        assert!((0.0..=100.0).contains(&a) && (0.0..=100.0).contains(&b));
        assert!(b > a, "clean {a} noisy {b}");
    }

    #[test]
    fn deterministic() {
        let t = texture(50, 70);
        assert_eq!(piqe(&t).unwrap(), piqe(&t).unwrap());
    }

    #[test]
    fn symmetric_reflection() {
        let idx: Vec<usize> = (0..8).map(|i| reflect(i, 3)).collect();
        assert_eq!(idx, [0, 1, 2, 2, 1, 0, 0, 1]);
    }
}
