//! PCA basis fitting, projection and reconstruction.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, symmetric_eigen};

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// variance.
const NULL_VARIANCE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcaError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("rank {rank} exceeds dimension {dim}")]
    RankExceedsDim { rank: usize, dim: usize },
    #[error("{samples} samples cannot support rank {rank}")]
    TooFewSamples { samples: usize, rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis components are not orthonormal")]
    NotOrthonormal,
}

/// Rank-`k` PCA basis over `d`-dimensional vectors.
///
/// Components are stored row-major (`rank × dim`), rows orthonormal, each
/// row's first nonzero entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    basis_id: String,
    dim: usize,
    rank: usize,
    mean: Vec<f64>,
    components: Vec<f64>,
}

impl PcaBasis {
    /// Builds a basis from explicit parts, checking shape and orthonormality.
    pub fn from_parts(
        basis_id: &str,
        mean: Vec<f64>,
        components: Vec<f64>,
        rank: usize,
    ) -> Result<Self, PcaError> {
        let dim = mean.len();
        if rank == 0 {
            return Err(PcaError::ZeroRank);
        }
        if rank > dim {
            return Err(PcaError::RankExceedsDim { rank, dim });
        }
        if components.len() != rank * dim {
            return Err(PcaError::DimensionMismatch {
                expected: rank * dim,
                got: components.len(),
            });
        }
        let b = PcaBasis {
            basis_id: basis_id.into(),
            dim,
            rank,
            mean,
            components,
        };
        if b.orthonormality_error() > 1e-8 {
            return Err(PcaError::NotOrthonormal);
        }
        Ok(b)
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    /// Leading `rank` components of this basis (PCA bases are nested).
    pub fn truncated(&self, rank: usize) -> Result<PcaBasis, PcaError> {
        if rank == 0 {
            return Err(PcaError::ZeroRank);
        }
        if rank > self.rank {
            return Err(PcaError::RankExceedsDim {
                rank,
                dim: self.rank,
            });
        }
        Ok(PcaBasis {
            basis_id: self.basis_id.clone(),
            dim: self.dim,
            rank,
            mean: self.mean.clone(),
            components: self.components[..rank * self.dim].to_vec(),
        })
    }

    /// Largest entry of `|C·Cᵀ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rank {
            for j in 0..self.rank {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.component(i), self.component(j)) - target).abs());
            }
        }
        worst
    }

    /// `components · (x − mean)`
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, PcaError> {
        if x.len() != self.dim {
            return Err(PcaError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok((0..self.rank)
            .map(|i| dot(self.component(i), &centered))
            .collect())
    }

    /// `componentsᵀ · y + mean`
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>, PcaError> {
        if y.len() != self.rank {
            return Err(PcaError::DimensionMismatch {
                expected: self.rank,
                got: y.len(),
            });
        }
        let mut out = self.mean.clone();
        for (i, &coef) in y.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(i)) {
                *o += coef * c;
            }
        }
        Ok(out)
    }
}

/// Fits a rank-`rank` basis to `samples` from the eigendecomposition of
/// their covariance.
///
/// Directions with no variance are filled from the standard basis
/// (Gram–Schmidt against the components already chosen, `e_0` first), so
/// degenerate data still yields a complete orthonormal basis.
pub fn fit_basis<S: AsRef<[f64]>>(
    samples: &[S],
    rank: usize,
    basis_id: &str,
) -> Result<PcaBasis, PcaError> {
    if rank == 0 {
        return Err(PcaError::ZeroRank);
    }
    let dim = samples.first().map(|s| s.as_ref().len()).unwrap_or(0);
    if samples.len() < rank {
        return Err(PcaError::TooFewSamples {
            samples: samples.len(),
            rank,
        });
    }
    if rank > dim {
        return Err(PcaError::RankExceedsDim { rank, dim });
    }
    for s in samples {
        if s.as_ref().len() != dim {
            return Err(PcaError::DimensionMismatch {
                expected: dim,
                got: s.as_ref().len(),
            });
        }
    }

    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for s in samples {
        for ((c, x), m) in centered.iter_mut().zip(s.as_ref()).zip(&mean) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut cov[i * dim..(i + 1) * dim];
            for j in i..dim {
                row[j] += ci * centered[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / n;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }

    let (values, vectors) = symmetric_eigen(&cov, dim);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let mut components: Vec<f64> = Vec::with_capacity(rank * dim);
    let mut chosen = 0;
    for (i, &lambda) in values.iter().enumerate().take(rank) {
        if top == 0.0 || lambda <= NULL_VARIANCE_RATIO * top {
            break;
        }
        let mut row = vectors[i * dim..(i + 1) * dim].to_vec();
        canonical_sign(&mut row);
        components.extend(row);
        chosen += 1;
    }

    let mut e = 0;
    while chosen < rank {
        let mut row = vec![0.0; dim];
        row[e] = 1.0;
        e += 1;
        // two passes keep the completion orthogonal to working precision
        for _ in 0..2 {
            for j in 0..chosen {
                let c = &components[j * dim..(j + 1) * dim];
                let p = dot(&row, c);
                for (r, ci) in row.iter_mut().zip(c) {
                    *r -= p * ci;
                }
            }
        }
        let norm = libm::sqrt(dot(&row, &row));
        // a standard-basis vector nearly inside the current span is skipped
        if norm < 1e-3 {
            continue;
        }
        row.iter_mut().for_each(|r| *r /= norm);
        canonical_sign(&mut row);
        components.extend(row);
        chosen += 1;
    }

    Ok(PcaBasis {
        basis_id: basis_id.into(),
        dim,
        rank,
        mean,
        components,
    })
}

fn canonical_sign(row: &mut [f64]) {
    if let Some(&first) = row.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
