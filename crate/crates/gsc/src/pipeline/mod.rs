//! The end-to-end GSC chain: extraction, PCA and quantization, payload
//! serialization, LDPC framing, the AWGN link, decoding, reconstruction,
//! generation and evaluation.

pub mod budget;
pub mod codebook;
pub mod evaluate;
pub mod link;
pub mod patches;

use std::sync::Arc;

use gsc_core::channel::ChannelConfig;
use gsc_core::flops::{flops_estimate, Stage};
use gsc_core::image::Image;
use gsc_core::ldpc::{LdpcCode, DEFAULT_MAX_ITERS};
use gsc_core::metrics::{MetricError, MetricReport};
use gsc_core::payload::{
    deserialize_with_spans, serialize_payload, BasisStream, PayloadError, SemanticPayload, Stream, StreamKind,
    VectorStream,
};
use gsc_core::pca::{PcaBasis, PcaError};
use gsc_core::quant::{QuantError, QuantSpec};
use gsc_core::tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::adapter::{open_adapter, AdapterClient, AdapterError, AdapterSpec, Extraction, GenerateRequest};
use crate::codes::{resolve_code, CodeError};
use crate::item::Item;
pub use budget::{fit_budget, BudgetError, Plan, StreamPlan};
pub use codebook::{stream_id, Codebook};
pub use evaluate::{Evaluators, Thresholds};
pub use link::{decode_frame, encode_frame, send, CodedFrame, Deframed, ReceivedFrame};
pub use patches::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    OnlineMeeting,
    RoadMonitoring,
    Custom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::OnlineMeeting => "online_meeting",
            Scenario::RoadMonitoring => "road_monitoring",
            Scenario::Custom => "custom",
        }
    }

    pub fn default_extractor(self) -> &'static str {
        match self {
            Scenario::OnlineMeeting => "segment-depth",
            Scenario::RoadMonitoring => "captioner",
            Scenario::Custom => "identity",
        }
    }

    pub fn default_generator(self) -> &'static str {
        match self {
            Scenario::OnlineMeeting | Scenario::RoadMonitoring => "upsample",
            Scenario::Custom => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    /// Bases fitted on calibration data and known to both ends.
    #[default]
    Shared,
    /// Bases travel inside the payload and count against the budget.
    SelfContained,
}

impl BasisMode {
    pub fn name(self) -> &'static str {
        match self {
            BasisMode::Shared => "shared",
            BasisMode::SelfContained => "self_contained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSettings {
    /// `None` keeps every component the codebook holds.
    pub rank: Option<usize>,
    pub bits: u8,
}

pub const DEFAULT_TASK: StreamSettings = StreamSettings {
    rank: Some(16),
    bits: 8,
};
pub const DEFAULT_PERCEPTUAL: StreamSettings = StreamSettings { rank: None, bits: 8 };

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scenario: Scenario,
    pub extractor: AdapterSpec,
    pub generator: AdapterSpec,
    pub evaluators: Evaluators,
    pub basis_mode: BasisMode,
    pub task: StreamSettings,
    pub perceptual: StreamSettings,
    /// When false only task-relevant streams (and text) are sent.
    pub perceptual_enabled: bool,
    pub code_id: String,
    pub channel: ChannelConfig,
    pub byte_budget: Option<usize>,
    pub decoder_iterations: usize,
    pub thresholds: Thresholds,
}

impl PipelineConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        PipelineConfig {
            scenario,
            extractor: AdapterSpec::builtin(scenario.default_extractor()),
            generator: AdapterSpec::builtin(scenario.default_generator()),
            evaluators: Evaluators::default(),
            basis_mode: BasisMode::Shared,
            task: DEFAULT_TASK,
            perceptual: DEFAULT_PERCEPTUAL,
            perceptual_enabled: true,
            code_id: "default".to_string(),
            channel: ChannelConfig::new(gsc_core::channel::Snr::Db(10.0), Default::default(), 1),
            byte_budget: None,
            decoder_iterations: DEFAULT_MAX_ITERS,
            thresholds: Thresholds::default(),
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::for_scenario(Scenario::OnlineMeeting)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("adapter {label}: {source}")]
    Adapter {
        label: String,
        #[source]
        source: AdapterError,
    },
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("PCA: {0}")]
    Pca(#[from] PcaError),
    #[error("quantizer: {0}")]
    Quant(#[from] QuantError),
    #[error("payload: {0}")]
    Payload(#[from] PayloadError),
    #[error("metric: {0}")]
    Metric(#[from] MetricError),
    #[error("no basis {0:?} in the codebook")]
    MissingBasis(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("baseline codec: {0}")]
    Codec(String),
    #[error("nothing usable was received")]
    NothingReceived,
}

pub(crate) fn adapter_err(label: &str) -> impl FnOnce(AdapterError) -> PipelineError + '_ {
    move |source| PipelineError::Adapter {
        label: label.to_string(),
        source,
    }
}

/// Out-of-band description of what a payload carries, known to the receiver
/// through the session configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SideInfo {
    pub task_layouts: Vec<Layout>,
    pub perceptual_layouts: Vec<Layout>,
    pub has_text: bool,
    pub stream_count: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Accounting {
    /// Serialized payload size, the quantity held to the byte budget.
    pub payload_bytes: usize,
    /// Channel bits after LDPC coding.
    pub coded_bits: usize,
    pub codewords: usize,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub frame: CodedFrame,
    pub payload: SemanticPayload,
    pub side: SideInfo,
    pub plan: Plan,
    /// Extractor output for the source, kept for evaluation.
    pub source: Extraction,
    pub accounting: Accounting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    /// As decoded; empty when the payload could not be parsed.
    pub payload: SemanticPayload,
    /// Per payload stream, in order: no failed codeword touched it.
    pub stream_valid: Vec<bool>,
    pub payload_intact: bool,
    pub deframed: Deframed,
    pub task: Vec<Tensor>,
    pub perceptual: Vec<Tensor>,
    pub text: Option<String>,
    pub stages: Vec<Stage>,
}

impl Reception {
    pub fn all_valid(&self) -> bool {
        self.payload_intact && self.stream_valid.iter().all(|v| *v)
    }
}

/// Mixes a run seed and an item index into a per-item seed (SplitMix64).
pub fn item_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn u(v: usize) -> u64 {
    v as u64
}

/// One configured pipeline with its adapter connections, code and codebook.
pub struct Session {
    config: PipelineConfig,
    extractor: AdapterClient,
    generator: AdapterClient,
    evaluators: evaluate::EvaluatorClients,
    code: Arc<LdpcCode>,
    codebook: Codebook,
}

impl Session {
    pub fn open(config: PipelineConfig) -> Result<Session, PipelineError> {
        let code = resolve_code(&config.code_id)?;
        let extractor = open_adapter(&config.extractor).map_err(adapter_err(&config.extractor.label()))?;
        let generator = open_adapter(&config.generator).map_err(adapter_err(&config.generator.label()))?;
        let evaluators = evaluate::EvaluatorClients::open(&config.evaluators)?;
        Ok(Session {
            config,
            extractor,
            generator,
            evaluators,
            code,
            codebook: Codebook::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn set_codebook(&mut self, codebook: Codebook) {
        self.codebook = codebook;
    }

    pub fn extract(&mut self, item: &Item, seed: u64) -> Result<Extraction, PipelineError> {
        let label = self.extractor.label().to_string();
        self.extractor.extract(item, Some(seed)).map_err(adapter_err(&label))
    }

    /// Fits the shared codebook on the extractor output for `items`.
    pub fn calibrate(&mut self, items: &[Item]) -> Result<(), PipelineError> {
        let extractions = items
            .iter()
            .enumerate()
            .map(|(i, it)| self.extract(it, item_seed(self.config.channel.seed, u(i))))
            .collect::<Result<Vec<_>, _>>()?;
        self.codebook = Codebook::calibrate(&extractions)?;
        Ok(())
    }

    fn basis(&self, id: &str, rank: usize) -> Result<PcaBasis, PipelineError> {
        let b = self.codebook.get(id).ok_or_else(|| PipelineError::MissingBasis(id.to_string()))?;
        Ok(b.truncated(rank.min(b.rank()))?)
    }

    /// Builds the payload for `item` and frames it for the channel.
    pub fn transmit(&mut self, item: &Item, seed: u64) -> Result<Transmission, PipelineError> {
        let source = self.extract(item, seed)?;
        self.transmit_extraction(item, source)
    }

    pub fn transmit_extraction(&mut self, item: &Item, source: Extraction) -> Result<Transmission, PipelineError> {
        let cfg = &self.config;
        let mut groups: Vec<(StreamKind, &Tensor)> = source.task.iter().map(|t| (StreamKind::Task, t)).collect();
        if cfg.perceptual_enabled {
            groups.extend(source.perceptual.iter().map(|t| (StreamKind::Perceptual, t)));
        }
        let mut side = SideInfo {
            has_text: source.text.is_some(),
            width: item.image.width(),
            height: item.image.height(),
            ..SideInfo::default()
        };
        let mut plan = Plan {
            text_len: source.text.as_ref().map(String::len),
            self_contained: cfg.basis_mode == BasisMode::SelfContained,
            ..Plan::default()
        };
        let mut vectors = Vec::new();
        let mut counters = [0usize; 2];
        for (kind, t) in groups {
            let (layout, v) = patches::to_vectors(t);
            let (settings, idx) = match kind {
                StreamKind::Task => (cfg.task, &mut counters[0]),
                StreamKind::Perceptual => (cfg.perceptual, &mut counters[1]),
            };
            let id = stream_id(kind, *idx);
            *idx += 1;
            let full = self.codebook.get(&id).ok_or_else(|| PipelineError::MissingBasis(id.clone()))?;
            if full.dim() != layout.vector_dim() {
                return Err(PipelineError::Shape(format!(
                    "stream {id} has vectors of length {} but its basis expects {}",
                    layout.vector_dim(),
                    full.dim()
                )));
            }
            plan.streams.push(StreamPlan {
                kind,
                id,
                dim: full.dim(),
                vectors: v.len(),
                rank: settings.rank.unwrap_or(full.rank()).clamp(1, full.rank()),
                bits: settings.bits,
            });
            match kind {
                StreamKind::Task => side.task_layouts.push(layout),
                StreamKind::Perceptual => side.perceptual_layouts.push(layout),
            }
            vectors.push(v);
        }
        let plan = fit_budget(plan, cfg.byte_budget)?;

        let mut stages = vec![Stage::Adapter {
            name: format!("extract:{}", self.extractor.label()),
            declared: source.flops,
        }];
        let mut bases = Vec::new();
        let mut streams = Vec::new();
        for (sp, v) in plan.streams.iter().zip(&vectors) {
            let basis = self.basis(&sp.id, sp.rank)?;
            let coeffs = v.iter().map(|x| basis.project(x)).collect::<Result<Vec<_>, _>>()?;
            let quant = QuantSpec::fit(sp.bits, sp.rank, &coeffs)?;
            streams.push(Stream::Vectors(VectorStream::from_vectors(sp.kind, &sp.id, quant, &coeffs)?));
            stages.push(Stage::PcaProjection {
                dim: u(sp.dim),
                rank: u(sp.rank),
                vectors: u(v.len()),
            });
            stages.push(Stage::Quantization {
                scalars: u(sp.rank * v.len()),
            });
            if plan.self_contained {
                bases.push(Stream::Basis(BasisStream::new(basis)?));
            }
        }
        bases.extend(streams);
        let mut streams = bases;
        if let Some(text) = &source.text {
            streams.push(Stream::Text(text.as_bytes().to_vec()));
        }
        side.stream_count = streams.len();
        let payload = SemanticPayload::new(streams)?;
        let bytes = serialize_payload(&payload);
        debug_assert_eq!(bytes.len(), plan.size());
        let frame = encode_frame(&bytes, &self.code);
        let accounting = Accounting {
            payload_bytes: bytes.len(),
            coded_bits: frame.bits.len(),
            codewords: frame.codeword_count(self.code.n()),
            stages,
        };
        Ok(Transmission {
            frame,
            payload,
            side,
            plan,
            source,
            accounting,
        })
    }

    /// Passes a frame over the configured channel; `seed` picks the noise.
    pub fn channel(&self, frame: &CodedFrame, seed: u64) -> ReceivedFrame {
        let ch = ChannelConfig {
            seed,
            ..self.config.channel
        };
        send(frame, self.code.n(), &ch)
    }

    /// Decodes the frame and rebuilds the streams that arrived intact.
    pub fn receive(&self, rx: &ReceivedFrame, side: &SideInfo) -> Result<Reception, PipelineError> {
        let code = &self.code;
        let deframed = decode_frame(rx, code, self.config.decoder_iterations);
        let mut stages = vec![Stage::MinSumDecode {
            iterations: deframed.iterations.iter().map(|&i| u(i)).sum(),
            edges: u(code.edges()),
        }];
        let (payload, spans) = match deserialize_with_spans(&deframed.bytes) {
            Ok(p) => p,
            Err(_) => {
                return Ok(Reception {
                    payload: SemanticPayload::default(),
                    stream_valid: vec![false; side.stream_count],
                    payload_intact: false,
                    deframed,
                    task: vec![],
                    perceptual: vec![],
                    text: None,
                    stages,
                })
            }
        };
        let header_ok = !deframed.touches_failure(0..gsc_core::payload::HEADER_LEN, code.k());
        let mut stream_valid: Vec<bool> = spans
            .iter()
            .map(|s| header_ok && !deframed.touches_failure(s.clone(), code.k()))
            .collect();
        let shape_ok = payload.streams().len() == side.stream_count;

        let mut payload_bases = std::collections::BTreeMap::new();
        for (s, ok) in payload.streams().iter().zip(&stream_valid) {
            if let Stream::Basis(b) = s {
                payload_bases.insert(b.basis().basis_id().to_string(), *ok);
            }
        }
        let mut task = Vec::new();
        let mut perceptual = Vec::new();
        let mut text = None;
        let mut counters = [0usize; 2];
        for (i, s) in payload.streams().iter().enumerate() {
            match s {
                Stream::Vectors(v) => {
                    let (layouts, out, idx) = match v.kind() {
                        StreamKind::Task => (&side.task_layouts, &mut task, &mut counters[0]),
                        StreamKind::Perceptual => (&side.perceptual_layouts, &mut perceptual, &mut counters[1]),
                    };
                    let layout = layouts.get(*idx);
                    *idx += 1;
                    let basis_ok = payload_bases.get(v.basis_id()).copied().unwrap_or(true);
                    if !(stream_valid[i] && basis_ok && shape_ok) {
                        stream_valid[i] = false;
                        continue;
                    }
                    match self.rebuild(&payload, v, layout) {
                        Ok((t, st)) => {
                            out.push(t);
                            stages.extend(st);
                        }
                        Err(_) => stream_valid[i] = false,
                    }
                }
                Stream::Text(bytes) if stream_valid[i] => {
                    text = Some(String::from_utf8_lossy(bytes).into_owned());
                }
                _ => {}
            }
        }
        Ok(Reception {
            payload,
            stream_valid,
            payload_intact: header_ok && shape_ok,
            deframed,
            task,
            perceptual,
            text,
            stages,
        })
    }

    fn rebuild(
        &self,
        payload: &SemanticPayload,
        v: &VectorStream,
        layout: Option<&Layout>,
    ) -> Result<(Tensor, Vec<Stage>), PipelineError> {
        let layout = layout.ok_or_else(|| PipelineError::Shape(format!("unexpected stream {}", v.basis_id())))?;
        let basis = match payload.bases().find(|b| b.basis_id() == v.basis_id()) {
            Some(b) => b.truncated(v.rank())?,
            None => self.basis(v.basis_id(), v.rank())?,
        };
        if basis.rank() != v.rank() {
            return Err(PipelineError::Shape(format!("stream {} rank {}", v.basis_id(), v.rank())));
        }
        let vectors = v
            .vectors()
            .iter()
            .map(|y| basis.reconstruct(y))
            .collect::<Result<Vec<_>, _>>()?;
        let t = patches::from_vectors(layout, &vectors).map_err(PipelineError::Shape)?;
        let n = u(v.vector_count());
        let stages = vec![
            Stage::Dequantization {
                scalars: u(v.rank()) * n,
            },
            Stage::PcaReconstruction {
                dim: u(basis.dim()),
                rank: u(v.rank()),
                vectors: n,
            },
        ];
        Ok((t, stages))
    }

    /// Hands the received streams to the generator.
    pub fn generate(&mut self, rec: &Reception, side: &SideInfo, seed: u64) -> Result<(Image, Stage), PipelineError> {
        if rec.task.is_empty() && rec.perceptual.is_empty() && rec.text.is_none() {
            return Err(PipelineError::NothingReceived);
        }
        let req = GenerateRequest {
            task: rec.task.clone(),
            perceptual: rec.perceptual.clone(),
            text: rec.text.clone(),
            width: Some(side.width),
            height: Some(side.height),
            seed: Some(seed),
        };
        let label = self.generator.label().to_string();
        let g = self.generator.generate(&req).map_err(adapter_err(&label))?;
        let stage = Stage::Adapter {
            name: format!("generate:{label}"),
            declared: g.flops,
        };
        Ok((g.image, stage))
    }

    /// Transmit, channel, receive, generate and evaluate one item.
    pub fn run_end_to_end(&mut self, item: &Item, index: u64) -> Result<MetricReport, PipelineError> {
        if self.codebook.is_empty() {
            self.calibrate(std::slice::from_ref(item))?;
        }
        let seed = item_seed(self.config.channel.seed, index);
        let tx = self.transmit(item, seed)?;
        let rx = self.channel(&tx.frame, seed);
        let rec = self.receive(&rx, &tx.side)?;
        let (dest, gen_stage) = self.generate(&rec, &tx.side, seed)?;
        let mut stages = tx.accounting.stages.clone();
        stages.extend(rec.stages.iter().cloned());
        stages.push(gen_stage);
        let mut report = MetricReport {
            scenario: self.config.scenario.name().to_string(),
            bytes_transmitted: u(tx.accounting.payload_bytes),
            coded_bits: u(tx.accounting.coded_bits),
            flops_estimate: flops_estimate(&stages).ok(),
            seed: self.config.channel.seed,
            basis_mode: self.config.basis_mode.name().to_string(),
            budget_bytes: self.config.byte_budget.map(u),
            ..MetricReport::default()
        };
        let ev = evaluate::Evaluation {
            source: item,
            source_features: &tx.source,
            destination: &dest,
            received_text: rec.text.as_deref(),
            seed,
        };
        ev.fill(&mut report, &mut self.extractor, &mut self.evaluators)?;
        report.apply_thresholds(self.config.thresholds.semantic_nmse_max, self.config.thresholds.piqe_max);
        Ok(report)
    }

    pub fn close(self) {
        let _ = self.extractor.shutdown();
        let _ = self.generator.shutdown();
        self.evaluators.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsc_core::channel::Snr;

    fn gradient(w: usize, h: usize) -> Item {
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f32, (i / w) as f32);
                60.0 + 0.8 * x + 0.5 * y + 20.0 * ((x * 0.3).sin() * (y * 0.2).cos())
            })
            .collect();
        Item::new("grad", Image::new(w, h, 1, data).unwrap())
    }

    fn small_code(cfg: &mut PipelineConfig) {
        cfg.code_id = "qc-z16-4x8".to_string();
    }

    #[test]
    fn item_seeds_differ() {
        assert_ne!(item_seed(1, 0), item_seed(1, 1));
        assert_ne!(item_seed(1, 0), item_seed(2, 0));
        assert_eq!(item_seed(5, 9), item_seed(5, 9));
    }

    #[test]
    fn identity_round_trip_is_lossless() {
        let mut cfg = PipelineConfig::for_scenario(Scenario::Custom);
        small_code(&mut cfg);
        cfg.task = StreamSettings { rank: None, bits: 16 };
        cfg.channel = ChannelConfig::noiseless();
        let mut s = Session::open(cfg).unwrap();
        let item = gradient(64, 64);
        let r = s.run_end_to_end(&item, 0).unwrap();
        assert!(r.semantic_nmse.unwrap() < 1e-9, "{:?}", r.semantic_nmse);
        assert_eq!(r.coded_bits % 128, 0);
        assert!(r.flops_estimate.is_some());
    }

    #[test]
    fn noiseless_payload_is_bit_exact_and_accounted() {
        let mut cfg = PipelineConfig::default();
        small_code(&mut cfg);
        cfg.channel = ChannelConfig::noiseless();
        let mut s = Session::open(cfg).unwrap();
        let item = gradient(64, 48);
        s.calibrate(std::slice::from_ref(&item)).unwrap();
        let tx = s.transmit(&item, 3).unwrap();
        assert_eq!(tx.accounting.payload_bytes, serialize_payload(&tx.payload).len());
        let k = s.code().k();
        assert_eq!(tx.accounting.coded_bits, (tx.accounting.payload_bytes * 8).div_ceil(k) * s.code().n());
        let rec = s.receive(&s.channel(&tx.frame, 3), &tx.side).unwrap();
        assert_eq!(rec.payload, tx.payload);
        assert!(rec.all_valid());
        let (img, _) = s.generate(&rec, &tx.side, 3).unwrap();
        assert_eq!((img.width(), img.height()), (64, 48));
    }

    #[test]
    fn budget_is_respected() {
        let mut cfg = PipelineConfig::default();
        small_code(&mut cfg);
        cfg.byte_budget = Some(1500);
        let mut s = Session::open(cfg).unwrap();
        let item = gradient(64, 64);
        s.calibrate(std::slice::from_ref(&item)).unwrap();
        let tx = s.transmit(&item, 1).unwrap();
        assert!(tx.accounting.payload_bytes <= 1500);
        assert!(tx.plan.streams.iter().any(|p| p.kind == StreamKind::Perceptual && p.rank < 64));
    }

    #[test]
    fn deep_noise_flags_streams_without_panicking() {
        let mut cfg = PipelineConfig::default();
        small_code(&mut cfg);
        cfg.channel = ChannelConfig::new(Snr::Db(-10.0), Default::default(), 4);
        let mut s = Session::open(cfg).unwrap();
        let item = gradient(64, 64);
        s.calibrate(std::slice::from_ref(&item)).unwrap();
        let tx = s.transmit(&item, 1).unwrap();
        let rec = s.receive(&s.channel(&tx.frame, 1), &tx.side).unwrap();
        assert!(!rec.all_valid());
        assert_eq!(rec.stream_valid.len(), tx.side.stream_count);
        assert!(rec.stream_valid.iter().any(|v| !v));
    }

    #[test]
    fn tosc_degeneracy_sends_only_task_streams() {
        let mut cfg = PipelineConfig::default();
        small_code(&mut cfg);
        cfg.perceptual_enabled = false;
        cfg.channel = ChannelConfig::noiseless();
        let mut s = Session::open(cfg).unwrap();
        let item = gradient(64, 64);
        s.calibrate(std::slice::from_ref(&item)).unwrap();
        let tx = s.transmit(&item, 1).unwrap();
        assert_eq!(tx.payload.vector_streams(StreamKind::Perceptual).count(), 0);
        assert_eq!(tx.payload.vector_streams(StreamKind::Task).count(), 1);
        let r = s.run_end_to_end(&item, 0).unwrap();
        assert!(r.semantic_nmse.is_some());
    }

    #[test]
    fn self_contained_counts_bases() {
        let mut shared = PipelineConfig::default();
        small_code(&mut shared);
        shared.channel = ChannelConfig::noiseless();
        let mut own = shared.clone();
        own.basis_mode = BasisMode::SelfContained;
        let item = gradient(64, 64);
        let mut a = Session::open(shared).unwrap();
        let mut b = Session::open(own).unwrap();
        a.calibrate(std::slice::from_ref(&item)).unwrap();
        b.calibrate(std::slice::from_ref(&item)).unwrap();
        let ta = a.transmit(&item, 1).unwrap();
        let tb = b.transmit(&item, 1).unwrap();
        assert!(tb.accounting.payload_bytes > ta.accounting.payload_bytes);
        assert_eq!(tb.payload.bases().count(), 2);
        gsc_core::payload::deserialize_payload(&serialize_payload(&tb.payload)).unwrap();
        b.set_codebook(Codebook::new());
        let rec = b.receive(&b.channel(&tb.frame, 1), &tb.side).unwrap();
        assert!(rec.all_valid(), "{:?} {}", rec.stream_valid, rec.payload_intact);
        assert_eq!(rec.task.len(), 1);
    }

    #[test]
    fn road_monitoring_sends_caption_text() {
        let mut cfg = PipelineConfig::for_scenario(Scenario::RoadMonitoring);
        small_code(&mut cfg);
        cfg.channel = ChannelConfig::noiseless();
        let mut s = Session::open(cfg).unwrap();
        let mut item = gradient(64, 64);
        item.metadata.insert("objects".into(), "a bus".into());
        let r = s.run_end_to_end(&item, 0).unwrap();
        assert_eq!(r.cer, Some(0.0));
        assert_eq!(r.semantic_nmse, None);
        let tx = s.transmit(&item, 0).unwrap();
        let caption = "a bus observed at unknown location (unknown time)";
        assert_eq!(tx.payload.text_segments().next().unwrap(), caption.as_bytes());
    }
}
