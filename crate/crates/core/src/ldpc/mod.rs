//! Binary LDPC codes: quasi-cyclic construction, alist exchange, systematic
//! encoding and normalized min-sum decoding.

mod alist;
mod decode;
pub mod gf2;
mod qc;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use alist::{load_alist, to_alist};
pub use decode::{ldpc_decode, DecodeOutcome, DEFAULT_MAX_ITERS, MIN_SUM_NORM};
pub use qc::{
    default_code, make_qc_ldpc, make_regular_qc_ldpc, parse_code_id, regular_base, BasePattern, QcParams,
    DEFAULT_QC, MAX_ATTEMPTS,
};

use gf2::{pack_bits, BitMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LdpcError {
    #[error("lifting size {0} is below the minimum of 4")]
    LiftingTooSmall(usize),
    #[error("invalid base graph: {0}")]
    InvalidBase(String),
    #[error("parity matrix is rank deficient after {attempts} attempts (rank {rank} of {rows})")]
    RankDeficient { attempts: usize, rank: usize, rows: usize },
    #[error("parity matrix has no information bits")]
    NoInformationBits,
    #[error("column index {index} out of range for {n} columns")]
    ColumnOutOfRange { index: usize, n: usize },
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("alist line {line}: {reason}")]
    Alist { line: usize, reason: String },
    #[error("unrecognized code id {0:?}")]
    UnknownCodeId(String),
}

/// A binary linear block code defined by a sparse parity-check matrix.
///
/// Encoding is systematic: message bit `i` is written to
/// `info_positions()[i]`, and each parity position is a GF(2) combination of
/// message bits taken from a dense generator derived by Gaussian elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    code_id: String,
    n: usize,
    k: usize,
    /// Column indices of each check, ascending.
    checks: Vec<Vec<u32>>,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `r` gives the message bits summed into `parity_positions[r]`.
    parity_gen: BitMatrix,
}

impl LdpcCode {
    /// Builds a code whose parity matrix must have full row rank.
    pub fn from_checks(code_id: impl Into<String>, n: usize, checks: Vec<Vec<u32>>) -> Result<Self, LdpcError> {
        let code = Self::build(code_id.into(), n, checks)?;
        if code.n - code.k != code.checks.len() {
            return Err(LdpcError::RankDeficient {
                attempts: 1,
                rank: code.n - code.k,
                rows: code.checks.len(),
            });
        }
        Ok(code)
    }

    /// Like [`LdpcCode::from_checks`] but tolerates redundant checks, giving
    /// `k = n − rank(H)`. Redundant rows still take part in decoding.
    pub fn from_checks_redundant(
        code_id: impl Into<String>,
        n: usize,
        checks: Vec<Vec<u32>>,
    ) -> Result<Self, LdpcError> {
        Self::build(code_id.into(), n, checks)
    }

    fn build(code_id: String, n: usize, mut checks: Vec<Vec<u32>>) -> Result<Self, LdpcError> {
        let m = checks.len();
        let mut h = BitMatrix::zeros(m, n);
        for (r, row) in checks.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &c in row.iter() {
                let c = c as usize;
                if c >= n {
                    return Err(LdpcError::ColumnOutOfRange { index: c, n });
                }
                h.set(r, c, true);
            }
        }
        let pivots = h.rref_from_right();
        let rank = pivots.len();
        let k = n - rank;
        if k == 0 {
            return Err(LdpcError::NoInformationBits);
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let mut parity_gen = BitMatrix::zeros(rank, k);
        for r in 0..rank {
            for (i, &c) in info_positions.iter().enumerate() {
                if h.get(r, c) {
                    parity_gen.set(r, i, true);
                }
            }
        }
        Ok(LdpcCode {
            code_id,
            n,
            k,
            checks,
            info_positions,
            parity_positions: pivots,
            parity_gen,
        })
    }

    pub fn code_id(&self) -> &str {
        &self.code_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Number of parity checks (rows of H), including any redundant ones.
    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    /// Number of ones in H.
    pub fn edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Dense copy of H.
    pub fn parity_matrix(&self) -> BitMatrix {
        let mut h = BitMatrix::zeros(self.m(), self.n);
        for (r, row) in self.checks.iter().enumerate() {
            for &c in row {
                h.set(r, c as usize, true);
            }
        }
        h
    }

    /// `H·cᵀ` over GF(2).
    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.checks
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n && self.checks.iter().all(|row| row.iter().fold(0u8, |a, &c| a ^ (word[c as usize] & 1)) == 0)
    }

    /// Message bits read back from a codeword.
    pub fn extract_message(&self, word: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| word[p] & 1).collect()
    }
}

/// Systematic encoding of `k` message bits (0/1 values) into `n` bits.
pub fn ldpc_encode(code: &LdpcCode, message: &[u8]) -> Result<Vec<u8>, LdpcError> {
    if message.len() != code.k {
        return Err(LdpcError::LengthMismatch {
            expected: code.k,
            got: message.len(),
        });
    }
    let mut word = vec![0u8; code.n];
    for (&p, &b) in code.info_positions.iter().zip(message) {
        word[p] = b & 1;
    }
    let parity = code.parity_gen.mul_packed(&pack_bits(message));
    for (&p, b) in code.parity_positions.iter().zip(parity) {
        word[p] = b;
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    /// Dense `H·cᵀ` straight from the definition.
    fn oracle_syndrome_zero(h: &BitMatrix, c: &[u8]) -> bool {
        (0..h.rows()).all(|r| (0..h.cols()).filter(|&j| h.get(r, j) && c[j] == 1).count() % 2 == 0)
    }

    #[test]
    fn small_regular_code_parity_holds() {
        let code = make_regular_qc_ldpc(8, 4, 8, 3).unwrap();
        assert_eq!((code.n(), code.k()), (64, 32));
        let h = code.parity_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let msg = random_bits(&mut rng, code.k());
            let c = ldpc_encode(&code, &msg).unwrap();
            assert!(oracle_syndrome_zero(&h, &c));
            assert_eq!(code.extract_message(&c), msg);
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = make_regular_qc_ldpc(8, 4, 8, 11).unwrap();
        let b = make_regular_qc_ldpc(8, 4, 8, 11).unwrap();
        assert_eq!(a.checks(), b.checks());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_message_and_linearity() {
        let code = make_regular_qc_ldpc(8, 4, 8, 1).unwrap();
        assert!(ldpc_encode(&code, &[0; 32]).unwrap().iter().all(|&b| b == 0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = ldpc_encode(&code, &random_bits(&mut rng, 32)).unwrap();
        let b = ldpc_encode(&code, &random_bits(&mut rng, 32)).unwrap();
        let s: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert!(code.is_codeword(&s));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let code = make_regular_qc_ldpc(4, 4, 8, 1).unwrap();
        assert_eq!(
            ldpc_encode(&code, &[0; 3]),
            Err(LdpcError::LengthMismatch {
                expected: code.k(),
                got: 3
            })
        );
    }

    #[test]
    fn rank_deficient_checks_are_refused_or_tolerated() {
        let checks = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
        assert!(matches!(
            LdpcCode::from_checks("t", 4, checks.clone()),
            Err(LdpcError::RankDeficient { .. })
        ));
        let code = LdpcCode::from_checks_redundant("t", 4, checks).unwrap();
        assert_eq!(code.k(), 2);
        assert_eq!(code.m(), 3);
    }
}
