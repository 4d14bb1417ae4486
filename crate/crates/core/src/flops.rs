//! Floating-point operation accounting per pipeline stage.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    /// `2·d·k` per vector.
    PcaProjection { dim: u64, rank: u64, vectors: u64 },
    /// `2·d·k` per vector.
    PcaReconstruction { dim: u64, rank: u64, vectors: u64 },
    /// 2 per scalar.
    Quantization { scalars: u64 },
    /// 2 per scalar.
    Dequantization { scalars: u64 },
    /// `iterations · 6 · edges`.
    MinSumDecode { iterations: u64, edges: u64 },
    /// `2·N·8` per 8-point transform, `N = 8`.
    Dct8 { transforms: u64 },
    /// Count reported by the adapter itself.
    Adapter { name: String, declared: Option<u64> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlopsError {
    #[error("stage {0:?} declares no operation count")]
    Undeclared(String),
    #[error("operation count overflow")]
    Overflow,
}

pub fn stage_flops(stage: &Stage) -> Result<u64, FlopsError> {
    let mul = |v: &[u64]| v.iter().try_fold(1u64, |a, &b| a.checked_mul(b)).ok_or(FlopsError::Overflow);
    match stage {
        Stage::PcaProjection { dim, rank, vectors } | Stage::PcaReconstruction { dim, rank, vectors } => {
            mul(&[2, *dim, *rank, *vectors])
        }
        Stage::Quantization { scalars } | Stage::Dequantization { scalars } => mul(&[2, *scalars]),
        Stage::MinSumDecode { iterations, edges } => mul(&[6, *iterations, *edges]),
        Stage::Dct8 { transforms } => mul(&[2 * 8 * 8, *transforms]),
        Stage::Adapter { name, declared } => declared.ok_or_else(|| FlopsError::Undeclared(name.clone())),
    }
}

/// Sum of per-stage counts; an empty pipeline costs 0.
pub fn flops_estimate(stages: &[Stage]) -> Result<u64, FlopsError> {
    stages
        .iter()
        .try_fold(0u64, |acc, s| acc.checked_add(stage_flops(s)?).ok_or(FlopsError::Overflow))
}

/// 8-point transforms in a separable 2-D DCT over `blocks` 8×8 blocks.
pub fn dct_transforms(blocks: u64) -> u64 {
    blocks * 16
}
