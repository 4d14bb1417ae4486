//! Distortion and divergence measures plus the per-run report row.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("reference vector has zero norm")]
    ZeroReference,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample set is empty")]
    EmptySamples,
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("feature shapes differ between source and destination")]
    ShapeMismatch,
    #[error("image is {0}x{1}, at least 32x32 is required")]
    ImageTooSmall(usize, usize),
    #[error("non-finite sample")]
    NonFinite,
}

/// `‖x − x̂‖² / ‖x‖²`.
pub fn nmse(x: &[f64], x_hat: &[f64]) -> Result<f64, MetricError> {
    if x.len() != x_hat.len() {
        return Err(MetricError::LengthMismatch(x.len(), x_hat.len()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in x.iter().zip(x_hat) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    Ok(num / den)
}

/// NMSE over the concatenation, in order, of task-relevant features from
/// the source and from the destination.
pub fn semantic_nmse_from_features(source: &[Vec<f64>], destination: &[Vec<f64>]) -> Result<f64, MetricError> {
    if source.len() != destination.len() || source.iter().zip(destination).any(|(a, b)| a.len() != b.len()) {
        return Err(MetricError::ShapeMismatch);
    }
    let x: Vec<f64> = source.iter().flatten().copied().collect();
    let y: Vec<f64> = destination.iter().flatten().copied().collect();
    nmse(&x, &y)
}

pub const DEFAULT_KL_EPSILON: f64 = 1e-9;

/// Counts over `bins` equal-width bins spanning `[lo, hi]`; the top edge is inclusive.
pub fn histogram(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    let width = hi - lo;
    for &s in samples {
        let i = if width > 0.0 {
            (((s - lo) / width * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        h[i] += 1;
    }
    h
}

/// `KL(P‖Q)` between histograms of two sample sets on shared edges taken
/// from their joint range, with `p_i = (c_i / N + ε) / (1 + bins·ε)`.
pub fn kl_divergence_hist(p: &[f64], q: &[f64], bins: usize, epsilon: f64) -> Result<f64, MetricError> {
    if bins < 2 {
        return Err(MetricError::TooFewBins(bins));
    }
    if p.is_empty() || q.is_empty() {
        return Err(MetricError::EmptySamples);
    }
    if p.iter().chain(q).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let lo = p.iter().chain(q).copied().fold(f64::INFINITY, f64::min);
    let hi = p.iter().chain(q).copied().fold(f64::NEG_INFINITY, f64::max);
    let hp = histogram(p, bins, lo, hi);
    let hq = histogram(q, bins, lo, hi);
    Ok(kl_from_counts(&hp, &hq, epsilon))
}

/// Smoothed KL between two count vectors of equal length.
pub fn kl_from_counts(p: &[u64], q: &[u64], epsilon: f64) -> f64 {
    let np: u64 = p.iter().sum();
    let nq: u64 = q.iter().sum();
    let norm = 1.0 + p.len() as f64 * epsilon;
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let pi = (a as f64 / np as f64 + epsilon) / norm;
        let qi = (b as f64 / nq as f64 + epsilon) / norm;
        kl += pi * libm::log(pi / qi);
    }
    kl.max(0.0)
}

/// Levenshtein distance over Unicode scalar values divided by the reference length.
pub fn character_error_rate(reference: &str, hypothesis: &str) -> f64 {
    let r: Vec<char> = reference.chars().collect();
    let h: Vec<char> = hypothesis.chars().collect();
    if r.is_empty() {
        return if h.is_empty() { 0.0 } else { 1.0 };
    }
    let mut prev: Vec<usize> = (0..=h.len()).collect();
    let mut cur = vec![0; h.len() + 1];
    for (i, rc) in r.iter().enumerate() {
        cur[0] = i + 1;
        for (j, hc) in h.iter().enumerate() {
            let sub = prev[j] + usize::from(rc != hc);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[h.len()] as f64 / r.len() as f64
}

/// One evaluated pipeline run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub scenario: String,
    pub method: String,
    /// Configured byte budget, if any.
    pub budget_bytes: Option<u64>,
    pub semantic_nmse: Option<f64>,
    pub piqe: Option<f64>,
    pub nrqm: Option<f64>,
    pub kl_divergence: Option<f64>,
    pub cer: Option<f64>,
    pub bytes_transmitted: u64,
    pub coded_bits: u64,
    /// `None` when some stage declared no operation count.
    pub flops_estimate: Option<u64>,
    pub seed: u64,
    pub basis_mode: String,
    pub task_constraint_ok: Option<bool>,
    pub perceptual_constraint_ok: Option<bool>,
}

impl MetricReport {
    /// True when every present value is finite and in range.
    pub fn is_valid(&self) -> bool {
        let nonneg = |v: Option<f64>| v.is_none_or(|x| x.is_finite() && x >= 0.0);
        nonneg(self.semantic_nmse)
            && nonneg(self.kl_divergence)
            && nonneg(self.cer)
            && self.nrqm.is_none_or(f64::is_finite)
            && self.piqe.is_none_or(|p| (0.0..=100.0).contains(&p))
    }

    /// Sets the pass/fail flags against optional thresholds.
    pub fn apply_thresholds(&mut self, semantic_nmse_max: Option<f64>, piqe_max: Option<f64>) {
        self.task_constraint_ok = semantic_nmse_max.zip(self.semantic_nmse).map(|(t, v)| v <= t);
        self.perceptual_constraint_ok = piqe_max.zip(self.piqe).map(|(t, v)| v <= t);
    }
}
