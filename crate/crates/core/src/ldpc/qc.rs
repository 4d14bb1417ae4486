//! Quasi-cyclic construction from a binary base pattern and circulant shifts.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LdpcCode, LdpcError};

/// Shift draws attempted before a rank-deficient construction is an error.
pub const MAX_ATTEMPTS: usize = 16;

/// Rate-1/2, (3,6)-regular, `z = 64`, `n = 8192`.
pub const DEFAULT_QC: QcParams = QcParams {
    z: 64,
    rows: 64,
    cols: 128,
    seed: 1,
};

/// Which base-graph entries carry a circulant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePattern {
    rows: usize,
    cols: usize,
    ones: Vec<bool>,
}

impl BasePattern {
    pub fn new(rows: usize, cols: usize, ones: Vec<bool>) -> Result<Self, LdpcError> {
        if rows == 0 || cols <= rows {
            return Err(LdpcError::InvalidBase(format!("{rows}x{cols} leaves no information columns")));
        }
        if ones.len() != rows * cols {
            return Err(LdpcError::InvalidBase(format!(
                "{} entries for a {rows}x{cols} base",
                ones.len()
            )));
        }
        if let Some(r) = (0..rows).find(|&r| !(0..cols).any(|c| ones[r * cols + c])) {
            return Err(LdpcError::InvalidBase(format!("base row {r} is empty")));
        }
        Ok(BasePattern { rows, cols, ones })
    }

    /// Parses rows of `0`/`1` characters.
    pub fn from_rows(rows: &[&str]) -> Result<Self, LdpcError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut ones = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LdpcError::InvalidBase("ragged base rows".to_string()));
            }
            for ch in r.chars() {
                match ch {
                    '0' => ones.push(false),
                    '1' => ones.push(true),
                    _ => return Err(LdpcError::InvalidBase(format!("unexpected character {ch:?}"))),
                }
            }
        }
        BasePattern::new(rows.len(), cols, ones)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.ones[r * self.cols + c]
    }
}

/// Column `j` connects to base rows `3j, 3j+1, 3j+2 (mod rows)`.
pub fn regular_base(rows: usize, cols: usize) -> Result<BasePattern, LdpcError> {
    if rows < 3 {
        return Err(LdpcError::InvalidBase(format!("column weight 3 needs at least 3 rows, got {rows}")));
    }
    if !(cols * 3).is_multiple_of(rows) {
        return Err(LdpcError::InvalidBase(format!("{rows}x{cols} cannot be (3, {})-regular", cols * 3 / rows)));
    }
    let mut ones = vec![false; rows * cols];
    for j in 0..cols {
        for t in 0..3 {
            ones[((3 * j + t) % rows) * cols + j] = true;
        }
    }
    BasePattern::new(rows, cols, ones)
}

/// Parameters of a regular QC code, printable as its code id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcParams {
    pub z: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl fmt::Display for QcParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qc-z{}-{}x{}-s{}", self.z, self.rows, self.cols, self.seed)
    }
}

/// Accepts `default` or `qc-z<z>-<rows>x<cols>[-s<seed>]`.
pub fn parse_code_id(id: &str) -> Result<QcParams, LdpcError> {
    if id == "default" {
        return Ok(DEFAULT_QC);
    }
    let bad = || LdpcError::UnknownCodeId(id.to_string());
    let rest = id.strip_prefix("qc-z").ok_or_else(bad)?;
    let mut parts = rest.split('-');
    let z = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let (rows, cols) = parts.next().and_then(|s| s.split_once('x')).ok_or_else(bad)?;
    let rows = rows.parse().map_err(|_| bad())?;
    let cols = cols.parse().map_err(|_| bad())?;
    let seed = match parts.next() {
        Some(s) => s.strip_prefix('s').and_then(|s| s.parse().ok()).ok_or_else(bad)?,
        None => 1,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(QcParams { z, rows, cols, seed })
}

/// Lifts `base` by `z` with circulant shifts drawn from `seed`. A draw that
/// leaves H rank deficient is replaced by a fresh one, up to
/// [`MAX_ATTEMPTS`] draws.
pub fn make_qc_ldpc(code_id: impl Into<String>, z: usize, base: &BasePattern, seed: u64) -> Result<LdpcCode, LdpcError> {
    if z < 4 {
        return Err(LdpcError::LiftingTooSmall(z));
    }
    let code_id = code_id.into();
    let n = base.cols * z;
    let m = base.rows * z;
    let mut rank = 0;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut checks = vec![Vec::new(); m];
        for br in 0..base.rows {
            for bc in 0..base.cols {
                if !base.get(br, bc) {
                    continue;
                }
                let s = rng.random_range(0..z);
                for r in 0..z {
                    checks[br * z + r].push((bc * z + (r + s) % z) as u32);
                }
            }
        }
        match LdpcCode::from_checks(code_id.clone(), n, checks) {
            Ok(code) => return Ok(code),
            Err(LdpcError::RankDeficient { rank: r, .. }) => rank = r,
            Err(e) => return Err(e),
        }
    }
    Err(LdpcError::RankDeficient {
        attempts: MAX_ATTEMPTS,
        rank,
        rows: m,
    })
}

pub fn make_regular_qc_ldpc(z: usize, rows: usize, cols: usize, seed: u64) -> Result<LdpcCode, LdpcError> {
    let id = QcParams { z, rows, cols, seed }.to_string();
    make_qc_ldpc(id, z, &regular_base(rows, cols)?, seed)
}

pub fn default_code() -> LdpcCode {
    let p = DEFAULT_QC;
    make_regular_qc_ldpc(p.z, p.rows, p.cols, p.seed).expect("default code construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::ldpc_encode;

    #[test]
    fn regular_pattern_degrees() {
        let b = regular_base(4, 8).unwrap();
        for c in 0..8 {
            assert_eq!((0..4).filter(|&r| b.get(r, c)).count(), 3);
        }
        for r in 0..4 {
            assert_eq!((0..8).filter(|&c| b.get(r, c)).count(), 6);
        }
        assert!(regular_base(2, 4).is_err());
        assert!(regular_base(5, 8).is_err());
    }

    #[test]
    fn lifted_degrees_match_base() {
        let code = make_regular_qc_ldpc(8, 4, 8, 5).unwrap();
        assert!(code.checks().iter().all(|r| r.len() == 6));
        assert_eq!(code.edges(), 64 * 3);
    }

    #[test]
    fn exhaustive_small_code() {
        let base = BasePattern::from_rows(&["111100", "111110", "111011"]).unwrap();
        let code = make_qc_ldpc("toy", 4, &base, 7).unwrap();
        assert_eq!((code.n(), code.k()), (24, 12));
        let mut seen = alloc::collections::BTreeSet::new();
        for m in 0u32..1 << 12 {
            let msg: Vec<u8> = (0..12).map(|i| (m >> i & 1) as u8).collect();
            let c = ldpc_encode(&code, &msg).unwrap();
            assert!(code.is_codeword(&c), "message {m:#x}");
            assert!(seen.insert(c));
        }
    }

    #[test]
    fn code_ids() {
        assert_eq!(parse_code_id("default").unwrap(), DEFAULT_QC);
        assert_eq!(DEFAULT_QC.to_string(), "qc-z64-64x128-s1");
        assert_eq!(
            parse_code_id("qc-z8-4x8").unwrap(),
            QcParams {
                z: 8,
                rows: 4,
                cols: 8,
                seed: 1
            }
        );
        assert_eq!(parse_code_id("qc-z8-4x8-s9").unwrap().seed, 9);
        for bad in ["qc-8-4x8", "qc-z8-4", "qc-z8-4x8-9", "qc-z8-4x8-s1-x", "ldpc"] {
            assert!(parse_code_id(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn tiny_lifting_is_rejected() {
        assert_eq!(make_regular_qc_ldpc(3, 4, 8, 1), Err(LdpcError::LiftingTooSmall(3)));
    }
}
