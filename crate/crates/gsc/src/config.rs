//! Strict JSON experiment configuration.
//!
//! Unknown keys, missing required keys and invalid values are reported with
//! the JSON path of the offending field. Relative paths are resolved against
//! the directory holding the configuration file.

use std::path::{Path, PathBuf};

use gsc_core::channel::{ChannelConfig, Snr};
use gsc_core::ldpc::{parse_code_id, DEFAULT_MAX_ITERS};
use gsc_core::modem::Modulation;
use gsc_core::payload::HEADER_LEN;
use gsc_core::quant::{MAX_BITS, MIN_BITS};
use serde::{Deserialize, Serialize};

use crate::adapter::AdapterSpec;
use crate::baseline::{BaselineConfig, Codec};
use crate::pipeline::{
    BasisMode, Evaluators, PipelineConfig, Scenario, StreamSettings, Thresholds, DEFAULT_PERCEPTUAL, DEFAULT_TASK,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    /// JSON path of the offending value (`.` for the document root).
    pub path: String,
    pub message: String,
}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationName {
    #[default]
    Bpsk,
    Qpsk,
}

impl From<ModulationName> for Modulation {
    fn from(m: ModulationName) -> Self {
        match m {
            ModulationName::Bpsk => Modulation::Bpsk,
            ModulationName::Qpsk => Modulation::Qpsk,
        }
    }
}

/// Es/N0 in dB, or the string `"noiseless"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnrRepr", into = "SnrRepr")]
pub struct SnrDb(pub Snr);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SnrRepr {
    Db(f64),
    Word(String),
}

impl TryFrom<SnrRepr> for SnrDb {
    type Error = String;

    fn try_from(r: SnrRepr) -> Result<Self, String> {
        match r {
            SnrRepr::Db(v) if v.is_finite() => Ok(SnrDb(Snr::Db(v))),
            SnrRepr::Word(w) if w == "noiseless" => Ok(SnrDb(Snr::Noiseless)),
            _ => Err("expected a finite number of dB or \"noiseless\"".to_string()),
        }
    }
}

impl From<SnrDb> for SnrRepr {
    fn from(s: SnrDb) -> Self {
        match s.0 {
            Snr::Db(v) => SnrRepr::Db(v),
            Snr::Noiseless => SnrRepr::Word("noiseless".into()),
        }
    }
}

fn default_snr() -> SnrDb {
    SnrDb(Snr::Db(10.0))
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "default_snr")]
    pub snr_db: SnrDb,
    #[serde(default)]
    pub modulation: ModulationName,
    /// Replaced by the sweep seed when the experiment runs.
    #[serde(default = "one")]
    pub seed: u64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            snr_db: default_snr(),
            modulation: ModulationName::Bpsk,
            seed: 1,
        }
    }
}

impl ChannelSection {
    pub fn to_channel(self, seed: u64) -> ChannelConfig {
        ChannelConfig::new(self.snr_db.0, self.modulation.into(), seed)
    }
}

fn default_task_rank() -> Option<usize> {
    DEFAULT_TASK.rank
}

fn default_bits() -> u8 {
    8
}

fn yes() -> bool {
    true
}

fn default_code() -> String {
    "default".to_string()
}

fn default_iters() -> usize {
    DEFAULT_MAX_ITERS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// `null` keeps every codebook component.
    #[serde(default = "default_task_rank")]
    pub rank: Option<usize>,
    #[serde(default = "default_bits")]
    pub bits: u8,
}

impl Default for TaskSection {
    fn default() -> Self {
        TaskSection {
            rank: DEFAULT_TASK.rank,
            bits: DEFAULT_TASK.bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptualSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_bits")]
    pub bits: u8,
}

impl Default for PerceptualSection {
    fn default() -> Self {
        PerceptualSection {
            enabled: true,
            rank: DEFAULT_PERCEPTUAL.rank,
            bits: DEFAULT_PERCEPTUAL.bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub extractor: Option<AdapterSpec>,
    #[serde(default)]
    pub generator: Option<AdapterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedder: Option<AdapterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nrqm: Option<AdapterSpec>,
    #[serde(default)]
    pub basis_mode: BasisMode,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub perceptual: PerceptualSection,
    #[serde(default = "default_code")]
    pub code: String,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default = "default_iters")]
    pub decoder_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub codec: Codec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<u8>,
    #[serde(default)]
    pub extractor: Option<AdapterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedder: Option<AdapterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nrqm: Option<AdapterSpec>,
    #[serde(default = "default_code")]
    pub code: String,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default = "default_iters")]
    pub decoder_iterations: usize,
}

/// One compared method: exactly one of `pipeline` and `baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: PathBuf,
    /// Results directory; `results/<name>` when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub methods: Vec<MethodConfig>,
    pub budgets: Vec<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// Runtime configuration of one method for one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodRun {
    Pipeline(PipelineConfig),
    Baseline(BaselineConfig),
}

impl MethodRun {
    pub fn scenario(&self) -> Scenario {
        match self {
            MethodRun::Pipeline(p) => p.scenario,
            MethodRun::Baseline(b) => b.scenario,
        }
    }
}

fn check_bits(path: &str, bits: u8) -> Result<(), ConfigError> {
    if (MIN_BITS..=MAX_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(err(path, format!("bits must be in {MIN_BITS}..={MAX_BITS}, got {bits}")))
    }
}

fn check_code(path: &str, code: &str) -> Result<(), ConfigError> {
    if crate::codes::looks_like_path(code) {
        if !Path::new(code).is_file() {
            return Err(err(path, format!("alist file {code:?} does not exist")));
        }
        return Ok(());
    }
    parse_code_id(code).map(|_| ()).map_err(|e| err(path, e.to_string()))
}

fn check_rank(path: &str, rank: Option<usize>) -> Result<(), ConfigError> {
    match rank {
        Some(0) => Err(err(path, "rank must be at least 1")),
        _ => Ok(()),
    }
}

fn check_iters(path: &str, n: usize) -> Result<(), ConfigError> {
    if n == 0 {
        Err(err(path, "decoder_iterations must be at least 1"))
    } else {
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_code(base: &Path, code: &mut String) {
    if crate::codes::looks_like_path(code) && Path::new(code.as_str()).is_relative() {
        *code = base.join(&*code).to_string_lossy().into_owned();
    }
}

impl ExperimentConfig {
    /// Fills scenario-dependent defaults so the echoed configuration is explicit.
    fn fill_defaults(&mut self) {
        if self.output.is_none() {
            self.output = Some(PathBuf::from("results").join(&self.name));
        }
        for m in &mut self.methods {
            if let Some(p) = &mut m.pipeline {
                p.extractor.get_or_insert_with(|| AdapterSpec::builtin(p.scenario.default_extractor()));
                p.generator.get_or_insert_with(|| AdapterSpec::builtin(p.scenario.default_generator()));
            }
            if let Some(b) = &mut m.baseline {
                b.extractor.get_or_insert_with(|| AdapterSpec::builtin(crate::baseline::DEFAULT_EXTRACTOR));
            }
        }
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        self.dataset = resolve(base, &self.dataset);
        if let Some(o) = &self.output {
            self.output = Some(resolve(base, o));
        }
        for m in &mut self.methods {
            if let Some(p) = &mut m.pipeline {
                resolve_code(base, &mut p.code);
            }
            if let Some(b) = &mut m.baseline {
                resolve_code(base, &mut b.code);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(err("name", "must not be empty"));
        }
        if self.methods.is_empty() {
            return Err(err("methods", "at least one method is required"));
        }
        if self.budgets.is_empty() {
            return Err(err("budgets", "at least one budget is required"));
        }
        if self.seeds.is_empty() {
            return Err(err("seeds", "at least one seed is required"));
        }
        for (i, &b) in self.budgets.iter().enumerate() {
            if (b as usize) < HEADER_LEN {
                return Err(err(format!("budgets[{i}]"), format!("budget {b} is below the {HEADER_LEN}-byte payload header")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            let at = |f: &str| format!("methods[{i}].{f}");
            if m.label.trim().is_empty() {
                return Err(err(at("label"), "must not be empty"));
            }
            if !seen.insert(m.label.as_str()) {
                return Err(err(at("label"), format!("duplicate label {:?}", m.label)));
            }
            match (&m.pipeline, &m.baseline) {
                (Some(p), None) => {
                    check_rank(&at("pipeline.task.rank"), p.task.rank)?;
                    check_bits(&at("pipeline.task.bits"), p.task.bits)?;
                    check_rank(&at("pipeline.perceptual.rank"), p.perceptual.rank)?;
                    check_bits(&at("pipeline.perceptual.bits"), p.perceptual.bits)?;
                    check_code(&at("pipeline.code"), &p.code)?;
                    check_iters(&at("pipeline.decoder_iterations"), p.decoder_iterations)?;
                }
                (None, Some(b)) => {
                    if let Some(q) = b.quality.filter(|q| !(1..=100).contains(q)) {
                        return Err(err(at("baseline.quality"), format!("quality must be in 1..=100, got {q}")));
                    }
                    check_code(&at("baseline.code"), &b.code)?;
                    check_iters(&at("baseline.decoder_iterations"), b.decoder_iterations)?;
                }
                _ => return Err(err(format!("methods[{i}]"), "exactly one of `pipeline` or `baseline` is required")),
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("results").join(&self.name))
    }

    /// The method as run in the cell `(budget, seed)`.
    pub fn method_run(&self, method: &MethodConfig, budget: u64, seed: u64) -> MethodRun {
        let evaluators = |e: &Option<AdapterSpec>, n: &Option<AdapterSpec>| Evaluators {
            embedder: e.clone(),
            nrqm: n.clone(),
        };
        if let Some(p) = &method.pipeline {
            MethodRun::Pipeline(PipelineConfig {
                scenario: p.scenario,
                extractor: p
                    .extractor
                    .clone()
                    .unwrap_or_else(|| AdapterSpec::builtin(p.scenario.default_extractor())),
                generator: p
                    .generator
                    .clone()
                    .unwrap_or_else(|| AdapterSpec::builtin(p.scenario.default_generator())),
                evaluators: evaluators(&p.embedder, &p.nrqm),
                basis_mode: p.basis_mode,
                task: StreamSettings {
                    rank: p.task.rank,
                    bits: p.task.bits,
                },
                perceptual: StreamSettings {
                    rank: p.perceptual.rank,
                    bits: p.perceptual.bits,
                },
                perceptual_enabled: p.perceptual.enabled,
                code_id: p.code.clone(),
                channel: p.channel.to_channel(seed),
                byte_budget: Some(budget as usize),
                decoder_iterations: p.decoder_iterations,
                thresholds: self.thresholds,
            })
        } else {
            let b = method.baseline.clone().unwrap_or_default();
            MethodRun::Baseline(BaselineConfig {
                scenario: b.scenario,
                codec: b.codec,
                quality: b.quality,
                extractor: b
                    .extractor
                    .clone()
                    .unwrap_or_else(|| AdapterSpec::builtin(crate::baseline::DEFAULT_EXTRACTOR)),
                evaluators: evaluators(&b.embedder, &b.nrqm),
                code_id: b.code.clone(),
                channel: b.channel.to_channel(seed),
                byte_budget: Some(budget as usize),
                decoder_iterations: b.decoder_iterations,
                thresholds: self.thresholds,
            })
        }
    }

    /// The fully defaulted configuration as pretty JSON.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a configuration document; paths stay as written.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        err(path, e.into_inner().to_string())
    })?;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a configuration file, resolving paths
/// relative to its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(".", format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        err(path, e.into_inner().to_string())
    })?;
    cfg.fill_defaults();
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}
