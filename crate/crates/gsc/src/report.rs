//! Results directory: CSV tables, echoed config, provenance and SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gsc_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::experiment::{Provenance, RawRow, ResultSet};

pub const RESULTS_CSV: &str = "results.csv";
pub const RAW_DIR: &str = "raw";
pub const RAW_CSV: &str = "rows.csv";
pub const CONFIG_ECHO: &str = "config.echo.json";
pub const PROVENANCE: &str = "provenance.json";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub budget_bytes: Option<u64>,
    pub semantic_nmse: Option<f64>,
    pub piqe: Option<f64>,
    pub nrqm: Option<f64>,
    pub kl: Option<f64>,
    pub cer: Option<f64>,
    pub flops: Option<u64>,
    pub seed: u64,
}

impl From<&MetricReport> for ResultRow {
    fn from(r: &MetricReport) -> Self {
        ResultRow {
            scenario: r.scenario.clone(),
            method: r.method.clone(),
            budget_bytes: r.budget_bytes,
            semantic_nmse: r.semantic_nmse,
            piqe: r.piqe,
            nrqm: r.nrqm,
            kl: r.kl_divergence,
            cer: r.cer,
            flops: r.flops_estimate,
            seed: r.seed,
        }
    }
}

impl ResultRow {
    pub fn to_report(&self) -> MetricReport {
        MetricReport {
            scenario: self.scenario.clone(),
            method: self.method.clone(),
            budget_bytes: self.budget_bytes,
            semantic_nmse: self.semantic_nmse,
            piqe: self.piqe,
            nrqm: self.nrqm,
            kl_divergence: self.kl,
            cer: self.cer,
            flops_estimate: self.flops,
            seed: self.seed,
            ..MetricReport::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawCsvRow {
    scenario: String,
    method: String,
    budget_bytes: Option<u64>,
    seed: u64,
    item: String,
    status: String,
    semantic_nmse: Option<f64>,
    piqe: Option<f64>,
    nrqm: Option<f64>,
    kl: Option<f64>,
    cer: Option<f64>,
    flops: Option<u64>,
    bytes: u64,
    coded_bits: u64,
    basis_mode: String,
    task_ok: Option<bool>,
    perceptual_ok: Option<bool>,
    error: String,
}

impl From<&RawRow> for RawCsvRow {
    fn from(r: &RawRow) -> Self {
        let m = &r.report;
        RawCsvRow {
            scenario: m.scenario.clone(),
            method: m.method.clone(),
            budget_bytes: m.budget_bytes,
            seed: m.seed,
            item: r.item.clone(),
            status: if r.ok() { "ok" } else { "failed" }.into(),
            semantic_nmse: m.semantic_nmse,
            piqe: m.piqe,
            nrqm: m.nrqm,
            kl: m.kl_divergence,
            cer: m.cer,
            flops: m.flops_estimate,
            bytes: m.bytes_transmitted,
            coded_bits: m.coded_bits,
            basis_mode: m.basis_mode.clone(),
            task_ok: m.task_constraint_ok,
            perceptual_ok: m.perceptual_constraint_ok,
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aggregate rows rendered in the `results.csv` schema.
pub fn results_csv(reports: &[MetricReport]) -> Result<String, csv::Error> {
    let rows: Vec<ResultRow> = reports.iter().map(ResultRow::from).collect();
    if rows.is_empty() {
        return Ok("scenario,method,budget_bytes,semantic_nmse,piqe,nrqm,kl,cer,flops,seed\n".into());
    }
    write_rows(rows)
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

pub fn emit_csv(results: &ResultSet, path: &Path) -> Result<(), ReportError> {
    let text = results_csv(&results.aggregates).map_err(|source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    write_file(path, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), ReportError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_results(dir: &Path) -> Result<Vec<ResultRow>, ReportError> {
    let path = dir.join(RESULTS_CSV);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_results_csv(&text).map_err(|source| ReportError::Csv { path, source })
}

/// Writes the complete results directory for one experiment.
pub fn write_results_dir(dir: &Path, cfg: &ExperimentConfig, results: &ResultSet) -> Result<(), ReportError> {
    emit_csv(results, &dir.join(RESULTS_CSV))?;
    let raw_path = dir.join(RAW_DIR).join(RAW_CSV);
    let raw = if results.raw.is_empty() {
        String::new()
    } else {
        write_rows(results.raw.iter().map(RawCsvRow::from)).map_err(|source| ReportError::Csv {
            path: raw_path.clone(),
            source,
        })?
    };
    write_file(&raw_path, &raw)?;
    write_file(&dir.join(CONFIG_ECHO), &cfg.echo())?;
    write_provenance(&dir.join(PROVENANCE), &results.provenance)?;
    let rows: Vec<ResultRow> = results.aggregates.iter().map(ResultRow::from).collect();
    emit_plots(&rows, &dir.join(PLOTS_DIR))
}

fn write_provenance(path: &Path, p: &Provenance) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(p).map_err(|source| ReportError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_file(path, &(text + "\n"))
}

/// `plots/semantic_nmse.svg` and `plots/piqe.svg`.
pub fn emit_plots(rows: &[ResultRow], dir: &Path) -> Result<(), ReportError> {
    write_file(&dir.join("semantic_nmse.svg"), &emit_plot(rows, Metric::SemanticNmse))?;
    write_file(&dir.join("piqe.svg"), &emit_plot(rows, Metric::Piqe))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SemanticNmse,
    Piqe,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::SemanticNmse => "semantic NMSE",
            Metric::Piqe => "PIQE",
        }
    }

    fn value(self, r: &ResultRow) -> Option<f64> {
        match self {
            Metric::SemanticNmse => r.semantic_nmse,
            Metric::Piqe => r.piqe,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Points per method label: budget against the mean over seeds.
pub fn series(rows: &[ResultRow], metric: Metric) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        if !order.contains(&r.method) {
            order.push(r.method.clone());
        }
        if let (Some(b), Some(v)) = (r.budget_bytes, metric.value(r)) {
            let e = acc.entry((r.method.clone(), b)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    order
        .into_iter()
        .map(|m| {
            let pts = acc
                .iter()
                .filter(|((name, _), _)| *name == m)
                .map(|((_, b), (s, n))| (*b as f64, s / *n as f64))
                .collect();
            (m, pts)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG line chart: byte budget on x, `metric` on y.
pub fn emit_plot(rows: &[ResultRow], metric: Metric) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 160.0, 30.0, 50.0);
    let data = series(rows, metric);
    let pts: Vec<(f64, f64)> = data.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5 * lo.abs().max(1e-3), hi + 0.5 * hi.abs().max(1e-3))
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle">{} vs byte budget</text>"#,
        left + pw / 2.0,
        metric.label()
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(xv),
            top + ph + 18.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.4}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">bytes</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    for (i, (name, p)) in data.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !p.is_empty() {
            let d: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(j, &(x, y))| format!("{}{:.1} {:.1}", if j == 0 { 'M' } else { 'L' }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
            for &(x, y) in p {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 12.0,
            ly - 4.0,
            left + pw + 30.0,
            ly,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Plain-text table: one line per method, one column per budget, cells
/// averaged over seeds.
pub fn summary_table(rows: &[ResultRow]) -> String {
    let mut budgets: Vec<u64> = rows.iter().filter_map(|r| r.budget_bytes).collect();
    budgets.sort_unstable();
    budgets.dedup();
    let mut out = String::new();
    for metric in [Metric::SemanticNmse, Metric::Piqe] {
        let _ = write!(out, "{:<24}", metric.label());
        for b in &budgets {
            let _ = write!(out, " {:>12}", format!("<= {b}"));
        }
        out.push('\n');
        for (name, pts) in series(rows, metric) {
            let _ = write!(out, "{:<24}", name);
            for b in &budgets {
                let v = pts.iter().find(|p| p.0 == *b as f64).map(|p| p.1);
                let _ = write!(out, " {:>12}", cell(v));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ResultRow> {
        let mut v = Vec::new();
        for (m, base) in [("gsc", 0.013), ("dct", 0.05)] {
            for (i, b) in [78600u64, 236000, 393000].into_iter().enumerate() {
                v.push(ResultRow {
                    scenario: "online-meeting".into(),
                    method: m.into(),
                    budget_bytes: Some(b),
                    semantic_nmse: Some(base / (i + 1) as f64),
                    piqe: Some(30.0 + i as f64),
                    nrqm: None,
                    kl: Some(0.1),
                    cer: None,
                    flops: Some(1000 * (i as u64 + 1)),
                    seed: 1,
                });
            }
        }
        v
    }

    #[test]
    fn csv_round_trip_keeps_empty_cells() {
        let reports: Vec<MetricReport> = rows().iter().map(ResultRow::to_report).collect();
        let text = results_csv(&reports).unwrap();
        assert!(text.starts_with("scenario,method,budget_bytes,semantic_nmse,piqe,nrqm,kl,cer,flops,seed\n"));
        assert!(text.contains(",,0.1,,1000,1\n"));
        assert_eq!(parse_results_csv(&text).unwrap(), rows());
    }

    #[test]
    fn empty_results_still_have_header() {
        let text = results_csv(&[]).unwrap();
        assert_eq!(parse_results_csv(&text).unwrap(), vec![]);
    }

    #[test]
    fn plot_has_one_series_per_method() {
        let svg = emit_plot(&rows(), Metric::SemanticNmse);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("stroke-width=\"2\"").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains(">dct</text>"));
    }

    #[test]
    fn summary_lists_budgets() {
        let t = summary_table(&rows());
        assert!(t.contains("<= 78600"));
        assert!(t.lines().any(|l| l.starts_with("gsc") && l.contains("0.0130")));
    }
}
