//! LDPC framing of payload bytes and their passage over the channel.

use gsc_core::ber::transmit_codeword;
use gsc_core::bits::{bits_to_bytes, bytes_to_bits};
use gsc_core::channel::ChannelConfig;
use gsc_core::ldpc::{ldpc_decode, ldpc_encode, LdpcCode};
use rayon::prelude::*;

/// Codewords carrying one payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedFrame {
    pub code_id: String,
    /// Payload bits before padding.
    pub payload_bits: usize,
    /// Zero bits appended to fill the last message.
    pub padding_bits: usize,
    /// Concatenated codewords, one `u8` per bit.
    pub bits: Vec<u8>,
}

impl CodedFrame {
    pub fn codeword_count(&self, n: usize) -> usize {
        self.bits.len() / n
    }
}

/// Channel output for a frame: one LLR per coded bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub code_id: String,
    pub payload_bits: usize,
    pub llrs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deframed {
    pub bytes: Vec<u8>,
    /// Per codeword: the decoder reached a valid codeword.
    pub codeword_ok: Vec<bool>,
    pub iterations: Vec<usize>,
}

impl Deframed {
    pub fn failed(&self) -> usize {
        self.codeword_ok.iter().filter(|ok| !**ok).count()
    }

    /// Whether any failed codeword carries part of `bytes` (a byte range).
    pub fn touches_failure(&self, bytes: std::ops::Range<usize>, k: usize) -> bool {
        if bytes.is_empty() {
            return false;
        }
        let first = bytes.start * 8 / k;
        let last = (bytes.end * 8 - 1) / k;
        (first..=last).any(|i| !self.codeword_ok.get(i).copied().unwrap_or(false))
    }
}

pub fn encode_frame(payload: &[u8], code: &LdpcCode) -> CodedFrame {
    let k = code.k();
    let mut bits = bytes_to_bits(payload);
    let payload_bits = bits.len();
    let padded = payload_bits.div_ceil(k).max(1) * k;
    bits.resize(padded, 0);
    let words: Vec<Vec<u8>> = bits
        .par_chunks(k)
        .map(|m| ldpc_encode(code, m).expect("chunk length is k"))
        .collect();
    CodedFrame {
        code_id: code.code_id().to_string(),
        payload_bits,
        padding_bits: padded - payload_bits,
        bits: words.concat(),
    }
}

/// Modulates each codeword, adds noise from its own stream of the channel
/// seed and demaps to LLRs.
pub fn send(frame: &CodedFrame, n: usize, channel: &ChannelConfig) -> ReceivedFrame {
    let llrs: Vec<Vec<f64>> = frame
        .bits
        .par_chunks(n)
        .enumerate()
        .map(|(i, w)| transmit_codeword(w, channel, i as u64))
        .collect();
    ReceivedFrame {
        code_id: frame.code_id.clone(),
        payload_bits: frame.payload_bits,
        llrs: llrs.concat(),
    }
}

pub fn decode_frame(rx: &ReceivedFrame, code: &LdpcCode, max_iters: usize) -> Deframed {
    let outcomes: Vec<_> = rx
        .llrs
        .par_chunks(code.n())
        .map(|l| ldpc_decode(code, l, max_iters).expect("chunk length is n"))
        .collect();
    let mut bits = Vec::with_capacity(outcomes.len() * code.k());
    let mut codeword_ok = Vec::with_capacity(outcomes.len());
    let mut iterations = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        bits.extend_from_slice(&o.message);
        codeword_ok.push(o.converged);
        iterations.push(o.iterations);
    }
    bits.truncate(rx.payload_bits);
    Deframed {
        bytes: bits_to_bytes(&bits),
        codeword_ok,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsc_core::channel::Snr;
    use gsc_core::ldpc::make_regular_qc_ldpc;
    use gsc_core::modem::Modulation;

    #[test]
    fn framing_accounts_for_padding() {
        let code = make_regular_qc_ldpc(8, 4, 8, 1).unwrap();
        let payload: Vec<u8> = (0..10u8).collect();
        let f = encode_frame(&payload, &code);
        assert_eq!(f.payload_bits, 80);
        assert_eq!(f.bits.len(), 3 * 64);
        assert_eq!(f.padding_bits, 16);
        for w in f.bits.chunks(64) {
            assert!(code.is_codeword(w));
        }
        let rx = send(&f, code.n(), &ChannelConfig::noiseless());
        let d = decode_frame(&rx, &code, 25);
        assert_eq!(d.bytes, payload);
        assert_eq!(d.failed(), 0);
    }

    #[test]
    fn heavy_noise_is_flagged() {
        let code = make_regular_qc_ldpc(16, 4, 8, 1).unwrap();
        let payload = vec![0xa5; 64];
        let f = encode_frame(&payload, &code);
        let ch = ChannelConfig::new(Snr::Db(-10.0), Modulation::Bpsk, 3);
        let d = decode_frame(&send(&f, code.n(), &ch), &code, 25);
        assert!(d.failed() > 0);
        assert!(d.touches_failure(0..1, code.k()));
        assert!(!d.touches_failure(0..0, code.k()));
    }
}
