//! Monte-Carlo bit and block error rates over coded AWGN links.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{awgn_stream, ChannelConfig};
use crate::ldpc::{ldpc_decode, ldpc_encode, LdpcCode, DEFAULT_MAX_ITERS};
use crate::modem::{llr_from_symbols, modulate, Modulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameResult {
    pub bit_errors: u64,
    pub block_error: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BerResult {
    pub ber: f64,
    pub bler: f64,
    pub frames: u64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
}

impl BerResult {
    pub fn from_frames(frames: &[FrameResult], k: usize) -> Self {
        let n = frames.len() as u64;
        let bit_errors = frames.iter().map(|f| f.bit_errors).sum();
        let block_errors = frames.iter().filter(|f| f.block_error).count() as u64;
        let info_bits = n * k as u64;
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        BerResult {
            ber: ratio(bit_errors, info_bits),
            bler: ratio(block_errors, n),
            frames: n,
            info_bits,
            bit_errors,
            block_errors,
        }
    }
}

/// Frames needed to carry at least `num_bits` information bits.
pub fn frames_for_bits(code: &LdpcCode, num_bits: u64) -> u64 {
    num_bits.div_ceil(code.k() as u64).max(1)
}

/// Passes a codeword through modulation, noise and demapping, returning LLRs.
/// Noise for frame `index` comes from its own stream of the channel seed.
pub fn transmit_codeword(word: &[u8], config: &ChannelConfig, index: u64) -> Vec<f64> {
    let odd = config.modulation == Modulation::Qpsk && word.len() % 2 == 1;
    let mut bits = word.to_vec();
    if odd {
        bits.push(0);
    }
    let tx = modulate(&bits, config.modulation).expect("even length");
    let rx = awgn_stream(&tx, config, index);
    let mut llr = llr_from_symbols(&rx, config.snr, config.modulation);
    llr.truncate(word.len());
    llr
}

/// One trial: a random message drawn from `(seed, index)`, encoded, sent and decoded.
pub fn simulate_frame(code: &LdpcCode, config: &ChannelConfig, index: u64) -> FrameResult {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d65_7373_6167_6573);
    rng.set_stream(index);
    let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let word = ldpc_encode(code, &msg).expect("message length is k");
    let llr = transmit_codeword(&word, config, index);
    let out = ldpc_decode(code, &llr, DEFAULT_MAX_ITERS).expect("llr length is n");
    let bit_errors = msg.iter().zip(&out.message).filter(|(a, b)| a != b).count() as u64;
    FrameResult {
        bit_errors,
        block_error: bit_errors > 0,
        converged: out.converged,
    }
}

/// Runs enough frames to cover `num_bits` information bits.
pub fn measure_ber(code: &LdpcCode, config: &ChannelConfig, num_bits: u64) -> BerResult {
    let frames: Vec<FrameResult> = (0..frames_for_bits(code, num_bits))
        .map(|i| simulate_frame(code, config, i))
        .collect();
    BerResult::from_frames(&frames, code.k())
}
