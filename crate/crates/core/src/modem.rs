//! Unit-energy BPSK and Gray-mapped QPSK with AWGN soft demapping.
//!
//! SNR is Es/N0 per channel use. With unit symbol energy the complex noise
//! has variance `N0 = 1 / snr`, i.e. `σ² = N0 / 2` per real dimension, and a
//! real dimension carrying amplitude `a` yields `LLR = 2·a·y / σ²`:
//!
//! * BPSK (`a = 1`): `LLR = 4·snr·y`
//! * QPSK (`a = 1/√2`): `LLR = 2·√2·snr·y` on each of I and Q
//!
//! Positive LLRs favour bit 0.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::Snr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Modulation {
    #[default]
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = ModemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            _ => Err(ModemError::UnknownModulation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ModemError {
    #[error("QPSK needs an even number of bits, got {0}")]
    OddQpsk(usize),
    #[error("unknown modulation (expected BPSK or QPSK)")]
    UnknownModulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Symbol {
    pub re: f64,
    pub im: f64,
}

impl Symbol {
    pub fn new(re: f64, im: f64) -> Self {
        Symbol { re, im }
    }

    pub fn energy(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// LLR scale applied to the noiseless sentinel, large but finite.
pub const NOISELESS_LLR_SCALE: f64 = 1e4;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

fn level(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn modulate(bits: &[u8], modulation: Modulation) -> Result<Vec<Symbol>, ModemError> {
    match modulation {
        Modulation::Bpsk => Ok(bits.iter().map(|&b| Symbol::new(level(b), 0.0)).collect()),
        Modulation::Qpsk => {
            if !bits.len().is_multiple_of(2) {
                return Err(ModemError::OddQpsk(bits.len()));
            }
            Ok(bits
                .chunks_exact(2)
                .map(|p| Symbol::new(level(p[0]) * FRAC_1_SQRT_2, level(p[1]) * FRAC_1_SQRT_2))
                .collect())
        }
    }
}

/// Per-dimension LLR gain `2·a / σ²` for the given SNR.
pub fn llr_scale(snr: Snr, modulation: Modulation) -> f64 {
    let Some(lin) = snr.linear() else {
        return NOISELESS_LLR_SCALE;
    };
    match modulation {
        Modulation::Bpsk => 4.0 * lin,
        Modulation::Qpsk => 2.0 * core::f64::consts::SQRT_2 * lin,
    }
}

pub fn llr_from_symbols(symbols: &[Symbol], snr: Snr, modulation: Modulation) -> Vec<f64> {
    let g = llr_scale(snr, modulation);
    match modulation {
        Modulation::Bpsk => symbols.iter().map(|s| g * s.re).collect(),
        Modulation::Qpsk => symbols.iter().flat_map(|s| [g * s.re, g * s.im]).collect(),
    }
}

/// Es/N0 in dB for a given Eb/N0, code rate and modulation.
pub fn es_n0_from_eb_n0(eb_n0_db: f64, code_rate: f64, modulation: Modulation) -> f64 {
    eb_n0_db + 10.0 * libm::log10(code_rate * modulation.bits_per_symbol() as f64)
}

pub fn eb_n0_from_es_n0(es_n0_db: f64, code_rate: f64, modulation: Modulation) -> f64 {
    es_n0_db - 10.0 * libm::log10(code_rate * modulation.bits_per_symbol() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn bpsk_mapping() {
        let s = modulate(&[0, 1], Modulation::Bpsk).unwrap();
        assert_eq!(s, vec![Symbol::new(1.0, 0.0), Symbol::new(-1.0, 0.0)]);
    }

    #[test]
    fn qpsk_is_gray_and_unit_energy() {
        let s = modulate(&[0, 0, 0, 1, 1, 1, 1, 0], Modulation::Qpsk).unwrap();
        for x in &s {
            assert!((x.energy() - 1.0).abs() < 1e-15);
        }
        // neighbours in phase differ in one bit
        assert!(s[0].re > 0.0 && s[0].im > 0.0);
        assert!(s[1].re > 0.0 && s[1].im < 0.0);
        assert!(s[2].re < 0.0 && s[2].im < 0.0);
        assert!(s[3].re < 0.0 && s[3].im > 0.0);
        assert_eq!(modulate(&[0, 1, 1], Modulation::Qpsk), Err(ModemError::OddQpsk(3)));
    }

    #[test]
    fn noiseless_hard_decision_recovers_bits() {
        let bits = [0u8, 1, 1, 0, 1, 0, 0, 0];
        for m in [Modulation::Bpsk, Modulation::Qpsk] {
            let l = llr_from_symbols(&modulate(&bits, m).unwrap(), Snr::Noiseless, m);
            let back: Vec<u8> = l.iter().map(|&x| u8::from(x < 0.0)).collect();
            assert_eq!(back, bits);
        }
    }

    #[test]
    fn llr_formula_and_monotonicity() {
        let y = [Symbol::new(0.3, -0.2)];
        let at = |db: f64, m| llr_from_symbols(&y, Snr::Db(db), m);
        let lin = |db: f64| libm::pow(10.0, db / 10.0);
        assert!((at(3.0, Modulation::Bpsk)[0] - 4.0 * lin(3.0) * 0.3).abs() < 1e-12);
        let q = at(3.0, Modulation::Qpsk);
        assert!((q[1] + 2.0 * core::f64::consts::SQRT_2 * lin(3.0) * 0.2).abs() < 1e-12);
        let mags: Vec<f64> = [-5.0, 0.0, 5.0].iter().map(|&d| at(d, Modulation::Bpsk)[0].abs()).collect();
        assert!(mags[0] < mags[1] && mags[1] < mags[2]);
    }

    #[test]
    fn eb_n0_round_trip() {
        let es = es_n0_from_eb_n0(4.0, 0.5, Modulation::Bpsk);
        assert!((es - (4.0 - 3.0103)).abs() < 1e-4);
        assert!((eb_n0_from_es_n0(es, 0.5, Modulation::Bpsk) - 4.0).abs() < 1e-12);
        assert!((es_n0_from_eb_n0(4.0, 0.5, Modulation::Qpsk) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn modulation_names() {
        assert_eq!("qpsk".parse::<Modulation>().unwrap(), Modulation::Qpsk);
        assert_eq!(Modulation::Bpsk.to_string(), "BPSK");
        assert!("8psk".parse::<Modulation>().is_err());
    }
}
