//! The traditional baseline: block-DCT source coding of the whole image,
//! sent over the same LDPC-coded link.

use std::sync::Arc;

use gsc_core::channel::ChannelConfig;
use gsc_core::dct::{block_count, dct_baseline_decode, dct_baseline_encode};
use gsc_core::flops::{dct_transforms, flops_estimate, Stage};
use gsc_core::image::Image;
use gsc_core::ldpc::{LdpcCode, DEFAULT_MAX_ITERS};
use gsc_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};

use crate::adapter::{open_adapter, AdapterClient, AdapterSpec};
use crate::codes::resolve_code;
use crate::item::Item;
use crate::pipeline::evaluate::{EvaluatorClients, Evaluation};
use crate::pipeline::{adapter_err, decode_frame, encode_frame, item_seed, send, Evaluators, PipelineError, Scenario, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codec {
    #[default]
    Dct,
}

/// Extractor used for the baseline's semantic NMSE when none is configured.
pub const DEFAULT_EXTRACTOR: &str = "depth-proxy";

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub scenario: Scenario,
    pub codec: Codec,
    /// Fixed quality; otherwise the highest quality that fits the budget.
    pub quality: Option<u8>,
    /// Defines `q(·)` for semantic NMSE.
    pub extractor: AdapterSpec,
    pub evaluators: Evaluators,
    pub code_id: String,
    pub channel: ChannelConfig,
    pub byte_budget: Option<usize>,
    pub decoder_iterations: usize,
    pub thresholds: Thresholds,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            scenario: Scenario::OnlineMeeting,
            codec: Codec::Dct,
            quality: None,
            extractor: AdapterSpec::builtin(DEFAULT_EXTRACTOR),
            evaluators: Evaluators::default(),
            code_id: "default".to_string(),
            channel: ChannelConfig::new(gsc_core::channel::Snr::Db(10.0), Default::default(), 1),
            byte_budget: None,
            decoder_iterations: DEFAULT_MAX_ITERS,
            thresholds: Thresholds::default(),
        }
    }
}

/// Encodes at the highest quality, scanning down from 100, whose stream
/// fits `budget`.
pub fn encode_within(image: &Image, budget: Option<usize>) -> Result<(u8, Vec<u8>), PipelineError> {
    let codec = |e: gsc_core::dct::DctError| PipelineError::Codec(e.to_string());
    let mut smallest = usize::MAX;
    for q in (1..=100u8).rev() {
        let bytes = dct_baseline_encode(image, q).map_err(codec)?;
        if budget.is_none_or(|b| bytes.len() <= b) {
            return Ok((q, bytes));
        }
        smallest = smallest.min(bytes.len());
    }
    Err(PipelineError::Budget(crate::pipeline::BudgetError::Infeasible {
        budget: budget.unwrap_or(0),
        minimum: smallest,
    }))
}

pub struct BaselineSession {
    config: BaselineConfig,
    extractor: AdapterClient,
    evaluators: EvaluatorClients,
    code: Arc<LdpcCode>,
}

impl BaselineSession {
    pub fn open(config: BaselineConfig) -> Result<Self, PipelineError> {
        let code = resolve_code(&config.code_id)?;
        let extractor = open_adapter(&config.extractor).map_err(adapter_err(&config.extractor.label()))?;
        let evaluators = EvaluatorClients::open(&config.evaluators)?;
        Ok(BaselineSession {
            config,
            extractor,
            evaluators,
            code,
        })
    }

    pub fn run_end_to_end(&mut self, item: &Item, index: u64) -> Result<MetricReport, PipelineError> {
        let cfg = &self.config;
        let seed = item_seed(cfg.channel.seed, index);
        let img = &item.image;
        let (_, bytes) = match cfg.quality {
            Some(q) => (
                q,
                dct_baseline_encode(img, q).map_err(|e| PipelineError::Codec(e.to_string()))?,
            ),
            None => encode_within(img, cfg.byte_budget)?,
        };
        if let Some(b) = cfg.byte_budget.filter(|&b| bytes.len() > b) {
            return Err(PipelineError::Budget(crate::pipeline::BudgetError::Infeasible {
                budget: b,
                minimum: bytes.len(),
            }));
        }
        let frame = encode_frame(&bytes, &self.code);
        let ch = ChannelConfig { seed, ..cfg.channel };
        let rx = send(&frame, self.code.n(), &ch);
        let d = decode_frame(&rx, &self.code, cfg.decoder_iterations);
        let dest = dct_baseline_decode(&d.bytes).map_err(|e| PipelineError::Codec(e.to_string()))?;
        if (dest.width(), dest.height()) != (img.width(), img.height()) {
            return Err(PipelineError::Codec("decoded image has the wrong size".into()));
        }
        let blocks = block_count(img.width(), img.height(), img.channels()) as u64;
        let stages = [
            Stage::Dct8 {
                transforms: dct_transforms(blocks),
            },
            Stage::MinSumDecode {
                iterations: d.iterations.iter().map(|&i| i as u64).sum(),
                edges: self.code.edges() as u64,
            },
            Stage::Dct8 {
                transforms: dct_transforms(blocks),
            },
        ];
        let label = self.extractor.label().to_string();
        let source = self.extractor.extract(item, Some(seed)).map_err(adapter_err(&label))?;
        let mut report = MetricReport {
            scenario: cfg.scenario.name().to_string(),
            bytes_transmitted: bytes.len() as u64,
            coded_bits: frame.bits.len() as u64,
            flops_estimate: flops_estimate(&stages).ok(),
            seed: cfg.channel.seed,
            basis_mode: String::new(),
            budget_bytes: cfg.byte_budget.map(|b| b as u64),
            ..MetricReport::default()
        };
        Evaluation {
            source: item,
            source_features: &source,
            destination: &dest,
            received_text: None,
            seed,
        }
        .fill(&mut report, &mut self.extractor, &mut self.evaluators)?;
        report.apply_thresholds(cfg.thresholds.semantic_nmse_max, cfg.thresholds.piqe_max);
        Ok(report)
    }

    pub fn close(self) {
        let _ = self.extractor.shutdown();
        self.evaluators.close();
    }
}
