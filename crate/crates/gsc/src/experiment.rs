//! Sweeps over methods × budgets × seeds × items.

use std::time::{SystemTime, UNIX_EPOCH};

use gsc_core::metrics::MetricReport;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::BaselineSession;
use crate::config::{ExperimentConfig, MethodRun};
use crate::item::Item;
use crate::pipeline::{PipelineError, Session};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the echoed configuration.
    pub config_sha256: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// One item evaluated in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub item: String,
    /// `None` on success, otherwise why the item failed.
    pub error: Option<String>,
    pub report: MetricReport,
}

impl RawRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    /// Mean over items per (method, budget, seed), in emission order.
    pub aggregates: Vec<MetricReport>,
    /// Per item, in emission order.
    pub raw: Vec<RawRow>,
    pub provenance: Provenance,
}

impl ResultSet {
    pub fn failed_rows(&self) -> usize {
        self.raw.iter().filter(|r| !r.ok()).count()
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.echo().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn mean_u64(values: impl Iterator<Item = u64>) -> u64 {
    let v: Vec<u64> = values.collect();
    if v.is_empty() {
        0
    } else {
        let sum: u128 = v.iter().map(|&x| u128::from(x)).sum();
        ((sum + v.len() as u128 / 2) / v.len() as u128) as u64
    }
}

fn all_flag(values: impl Iterator<Item = Option<bool>>) -> Option<bool> {
    let v: Vec<bool> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().all(|b| *b))
}

/// Mean of the successful rows of one cell; `template` supplies the labels.
pub fn aggregate(template: &MetricReport, rows: &[&RawRow]) -> MetricReport {
    let ok: Vec<&MetricReport> = rows.iter().filter(|r| r.ok()).map(|r| &r.report).collect();
    let flops = if !ok.is_empty() && ok.iter().all(|r| r.flops_estimate.is_some()) {
        Some(mean_u64(ok.iter().map(|r| r.flops_estimate.unwrap_or(0))))
    } else {
        None
    };
    MetricReport {
        semantic_nmse: mean_opt(ok.iter().map(|r| r.semantic_nmse)),
        piqe: mean_opt(ok.iter().map(|r| r.piqe)),
        nrqm: mean_opt(ok.iter().map(|r| r.nrqm)),
        kl_divergence: mean_opt(ok.iter().map(|r| r.kl_divergence)),
        cer: mean_opt(ok.iter().map(|r| r.cer)),
        bytes_transmitted: mean_u64(ok.iter().map(|r| r.bytes_transmitted)),
        coded_bits: mean_u64(ok.iter().map(|r| r.coded_bits)),
        flops_estimate: flops,
        task_constraint_ok: all_flag(ok.iter().map(|r| r.task_constraint_ok)),
        perceptual_constraint_ok: all_flag(ok.iter().map(|r| r.perceptual_constraint_ok)),
        ..template.clone()
    }
}

enum Runner {
    Pipeline(Box<Session>),
    Baseline(Box<BaselineSession>),
}

impl Runner {
    fn open(run: &MethodRun, items: &[Item]) -> Result<Runner, PipelineError> {
        Ok(match run {
            MethodRun::Pipeline(p) => {
                let mut s = Session::open(p.clone())?;
                s.calibrate(items)?;
                Runner::Pipeline(Box::new(s))
            }
            MethodRun::Baseline(b) => Runner::Baseline(Box::new(BaselineSession::open(b.clone())?)),
        })
    }

    fn run(&mut self, item: &Item, index: u64) -> Result<MetricReport, PipelineError> {
        match self {
            Runner::Pipeline(s) => s.run_end_to_end(item, index),
            Runner::Baseline(s) => s.run_end_to_end(item, index),
        }
    }

    fn close(self) {
        match self {
            Runner::Pipeline(s) => s.close(),
            Runner::Baseline(s) => s.close(),
        }
    }
}

struct Cell {
    method: usize,
    budget: u64,
    seed: u64,
}

fn template(cfg: &ExperimentConfig, cell: &Cell, run: &MethodRun) -> MetricReport {
    let basis_mode = match run {
        MethodRun::Pipeline(p) => p.basis_mode.name().to_string(),
        MethodRun::Baseline(_) => String::new(),
    };
    MetricReport {
        scenario: run.scenario().name().to_string(),
        method: cfg.methods[cell.method].label.clone(),
        budget_bytes: Some(cell.budget),
        seed: cell.seed,
        basis_mode,
        ..MetricReport::default()
    }
}

fn run_cell(cfg: &ExperimentConfig, items: &[Item], cell: &Cell) -> Vec<RawRow> {
    let run = cfg.method_run(&cfg.methods[cell.method], cell.budget, cell.seed);
    let base = template(cfg, cell, &run);
    let failed = |item: &Item, e: String| RawRow {
        item: item.name.clone(),
        error: Some(e),
        report: base.clone(),
    };
    let mut runner = match Runner::open(&run, items) {
        Ok(r) => r,
        Err(e) => return items.iter().map(|it| failed(it, e.to_string())).collect(),
    };
    let rows = items
        .iter()
        .enumerate()
        .map(|(i, item)| match runner.run(item, i as u64) {
            Ok(report) => RawRow {
                item: item.name.clone(),
                error: None,
                report: MetricReport {
                    method: base.method.clone(),
                    budget_bytes: base.budget_bytes,
                    ..report
                },
            },
            Err(e) => failed(item, e.to_string()),
        })
        .collect();
    runner.close();
    rows
}

/// Runs every cell of the grid; failures are recorded, never fatal.
pub fn run_experiment(cfg: &ExperimentConfig, items: &[Item]) -> ResultSet {
    let started = now();
    let mut cells = Vec::new();
    for method in 0..cfg.methods.len() {
        let mut budgets = cfg.budgets.clone();
        budgets.sort_unstable();
        budgets.dedup();
        let mut seeds = cfg.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        for &budget in &budgets {
            for &seed in &seeds {
                cells.push(Cell { method, budget, seed });
            }
        }
    }
    let results: Vec<(usize, Vec<RawRow>)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| (i, run_cell(cfg, items, c)))
        .collect();
    let mut aggregates = Vec::with_capacity(cells.len());
    let mut raw = Vec::new();
    for (i, mut rows) in results {
        let cell = &cells[i];
        rows.sort_by(|a, b| a.item.cmp(&b.item));
        let run = cfg.method_run(&cfg.methods[cell.method], cell.budget, cell.seed);
        let refs: Vec<&RawRow> = rows.iter().collect();
        aggregates.push(aggregate(&template(cfg, cell, &run), &refs));
        raw.extend(rows);
    }
    ResultSet {
        aggregates,
        raw,
        provenance: Provenance {
            config_sha256: config_hash(cfg),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: now(),
        },
    }
}

/// The configuration restricted to its first budget and first seed.
pub fn single_cell(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        budgets: cfg.budgets[..1].to_vec(),
        seeds: cfg.seeds[..1].to_vec(),
        ..cfg.clone()
    }
}
