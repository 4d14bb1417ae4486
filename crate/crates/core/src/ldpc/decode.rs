//! Flooding normalized min-sum decoder.

use alloc::vec;
use alloc::vec::Vec;

use super::{LdpcCode, LdpcError};

pub const MIN_SUM_NORM: f64 = 0.8;
pub const DEFAULT_MAX_ITERS: usize = 25;

const LLR_CLAMP: f64 = 1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub message: Vec<u8>,
    /// Hard decision on the final posteriors.
    pub codeword: Vec<u8>,
    pub converged: bool,
    /// Message-passing iterations run; 0 when the input already satisfied every check.
    pub iterations: usize,
}

fn hard(post: &[f64], out: &mut [u8]) {
    for (o, &l) in out.iter_mut().zip(post) {
        *o = u8::from(l < 0.0);
    }
}

/// Decodes channel LLRs (positive favours 0). Always returns the best hard
/// estimate; `converged` reports whether every parity check is met.
pub fn ldpc_decode(code: &LdpcCode, llrs: &[f64], max_iters: usize) -> Result<DecodeOutcome, LdpcError> {
    if llrs.len() != code.n() {
        return Err(LdpcError::LengthMismatch {
            expected: code.n(),
            got: llrs.len(),
        });
    }
    let channel: Vec<f64> = llrs
        .iter()
        .map(|&l| if l.is_nan() { 0.0 } else { l.clamp(-LLR_CLAMP, LLR_CLAMP) })
        .collect();
    let mut word = vec![0u8; code.n()];
    hard(&channel, &mut word);
    let finish = |word: Vec<u8>, converged, iterations| DecodeOutcome {
        message: code.extract_message(&word),
        codeword: word,
        converged,
        iterations,
    };
    if code.is_codeword(&word) {
        return Ok(finish(word, true, 0));
    }

    let checks = code.checks();
    let mut c2v = vec![0.0f64; code.edges()];
    let mut post = channel.clone();
    let mut scratch: Vec<f64> = Vec::new();
    for it in 1..=max_iters {
        let mut e0 = 0;
        for row in checks {
            scratch.clear();
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut at = 0;
            let mut neg = false;
            for (i, &v) in row.iter().enumerate() {
                let m = post[v as usize] - c2v[e0 + i];
                scratch.push(m);
                neg ^= m < 0.0;
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    at = i;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for (i, &m) in scratch.iter().enumerate() {
                let mag = MIN_SUM_NORM * if i == at { min2 } else { min1 };
                let mag = if mag.is_finite() { mag } else { 0.0 };
                let sign_neg = neg ^ (m < 0.0);
                c2v[e0 + i] = if sign_neg { -mag } else { mag };
            }
            e0 += row.len();
        }
        post.copy_from_slice(&channel);
        let mut e = 0;
        for row in checks {
            for &v in row {
                post[v as usize] += c2v[e];
                e += 1;
            }
        }
        hard(&post, &mut word);
        if code.is_codeword(&word) {
            return Ok(finish(word, true, it));
        }
    }
    Ok(finish(word, false, max_iters))
}
