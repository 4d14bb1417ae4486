//! Metrics for one source/destination pair.

use gsc_core::image::Image;
use gsc_core::metrics::{
    character_error_rate, kl_divergence_hist, nmse, semantic_nmse_from_features, MetricReport, DEFAULT_KL_EPSILON,
};
use gsc_core::piqe::piqe;
use serde::{Deserialize, Serialize};

use super::{adapter_err, PipelineError};
use crate::adapter::{open_adapter, AdapterClient, AdapterSpec, Extraction};
use crate::item::Item;

/// Histogram bins for the KL term.
pub const KL_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub semantic_nmse_max: Option<f64>,
    #[serde(default)]
    pub piqe_max: Option<f64>,
}

/// Optional adapters used only for evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluators {
    /// Replaces the extractor's task tensors as `q(·)` in semantic NMSE.
    pub embedder: Option<AdapterSpec>,
    /// Supplies NRQM as the first element of its `embed` output.
    pub nrqm: Option<AdapterSpec>,
}

pub struct EvaluatorClients {
    embedder: Option<AdapterClient>,
    nrqm: Option<AdapterClient>,
}

impl EvaluatorClients {
    pub fn open(e: &Evaluators) -> Result<Self, PipelineError> {
        let open = |s: &Option<AdapterSpec>| -> Result<Option<AdapterClient>, PipelineError> {
            s.as_ref()
                .map(|s| open_adapter(s).map_err(adapter_err(&s.label())))
                .transpose()
        };
        Ok(EvaluatorClients {
            embedder: open(&e.embedder)?,
            nrqm: open(&e.nrqm)?,
        })
    }

    pub fn none() -> Self {
        EvaluatorClients {
            embedder: None,
            nrqm: None,
        }
    }

    pub fn close(self) {
        for c in [self.embedder, self.nrqm].into_iter().flatten() {
            let _ = c.shutdown();
        }
    }
}

pub struct Evaluation<'a> {
    pub source: &'a Item,
    /// Extractor output for the source.
    pub source_features: &'a Extraction,
    pub destination: &'a Image,
    pub received_text: Option<&'a str>,
    pub seed: u64,
}

fn embed(client: &mut AdapterClient, item: &Item) -> Result<Vec<f64>, PipelineError> {
    let label = client.label().to_string();
    client.embed(item).map(|(v, _)| v).map_err(adapter_err(&label))
}

impl Evaluation<'_> {
    /// Semantic NMSE, PIQE, NRQM, KL and CER into `report`.
    pub fn fill(
        &self,
        report: &mut MetricReport,
        extractor: &mut AdapterClient,
        evaluators: &mut EvaluatorClients,
    ) -> Result<(), PipelineError> {
        let dest_item = Item {
            name: self.source.name.clone(),
            image: self.destination.clone(),
            metadata: self.source.metadata.clone(),
        };
        report.semantic_nmse = if let Some(e) = evaluators.embedder.as_mut() {
            let a = embed(e, self.source)?;
            let b = embed(e, &dest_item)?;
            if a.len() != b.len() {
                return Err(PipelineError::Shape(format!("embeddings of length {} and {}", a.len(), b.len())));
            }
            Some(nmse(&a, &b)?)
        } else if !self.source_features.task.is_empty() {
            let label = extractor.label().to_string();
            let dest = extractor.extract(&dest_item, Some(self.seed)).map_err(adapter_err(&label))?;
            let feats = |ts: &[gsc_core::tensor::Tensor]| ts.iter().map(|t| t.to_f64()).collect::<Vec<_>>();
            Some(semantic_nmse_from_features(
                &feats(&self.source_features.task),
                &feats(&dest.task),
            )?)
        } else {
            None
        };
        let luma = self.destination.luma();
        report.piqe = piqe(&luma).ok();
        report.kl_divergence = Some(kl_divergence_hist(
            &self.source.image.luma().data,
            &luma.data,
            KL_BINS,
            DEFAULT_KL_EPSILON,
        )?);
        report.cer = self
            .source_features
            .text
            .as_deref()
            .filter(|t| !t.is_empty())
            .map(|t| character_error_rate(t, self.received_text.unwrap_or("")));
        if let Some(n) = evaluators.nrqm.as_mut() {
            report.nrqm = embed(n, &dest_item)?.first().copied();
        }
        Ok(())
    }
}
