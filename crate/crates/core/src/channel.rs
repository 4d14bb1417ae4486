//! Complex AWGN channel with seeded, per-stream noise.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::modem::{Modulation, Symbol};

/// Es/N0 in dB, or no noise at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Db(f64),
    Noiseless,
}

impl Snr {
    /// Linear Es/N0; `None` for the noiseless sentinel.
    pub fn linear(self) -> Option<f64> {
        match self {
            Snr::Db(db) => Some(libm::pow(10.0, db / 10.0)),
            Snr::Noiseless => None,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            Snr::Db(db) => db.is_finite(),
            Snr::Noiseless => true,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Db(db) => write!(f, "{db}"),
            Snr::Noiseless => f.write_str("noiseless"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("SNR must be a finite dB value or \"noiseless\"")]
pub struct SnrParseError;

impl FromStr for Snr {
    type Err = SnrParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("noiseless") || s.eq_ignore_ascii_case("inf") {
            return Ok(Snr::Noiseless);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Snr::Db(v)),
            _ => Err(SnrParseError),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr: Snr,
    pub modulation: Modulation,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(snr: Snr, modulation: Modulation, seed: u64) -> Self {
        ChannelConfig { snr, modulation, seed }
    }

    pub fn noiseless() -> Self {
        ChannelConfig::new(Snr::Noiseless, Modulation::Bpsk, 1)
    }
}

/// Adds noise from stream 0 of the configured seed.
pub fn awgn(symbols: &[Symbol], config: &ChannelConfig) -> Vec<Symbol> {
    awgn_stream(symbols, config, 0)
}

/// Adds complex Gaussian noise of variance `N0 = 1 / snr` (half per real
/// dimension), drawing from an independent ChaCha stream so that frame `i`
/// of a run sees the same noise regardless of scheduling.
pub fn awgn_stream(symbols: &[Symbol], config: &ChannelConfig, stream: u64) -> Vec<Symbol> {
    let Some(lin) = config.snr.linear() else {
        return symbols.to_vec();
    };
    let sigma = libm::sqrt(1.0 / (2.0 * lin));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    symbols
        .iter()
        .map(|s| {
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            Symbol::new(s.re + sigma * nr, s.im + sigma * ni)
        })
        .collect()
}
