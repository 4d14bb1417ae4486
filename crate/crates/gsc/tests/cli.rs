use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gsc::item::write_pnm;
use gsc::report::parse_results_csv;
use gsc_core::image::Image;

fn gsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel).display().to_string()
}

fn small_dataset(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    for (n, phase) in [("a", 0usize), ("b", 7)] {
        let px = (0..48 * 40 * 3).map(|i| ((i / 3 % 48) * 4 + (i / 144) * 3 + phase) as f32 % 256.0).collect();
        write_pnm(&data.join(format!("{n}.ppm")), &Image::new(48, 40, 3, px).unwrap()).unwrap();
    }
    data
}

fn write_config(dir: &Path, methods: &str) -> PathBuf {
    let data = small_dataset(dir);
    let path = dir.join("exp.json");
    let text = format!(
        r#"{{"name": "cli", "dataset": {:?}, "output": "out", "methods": {methods},
            "budgets": [3000, 6000], "seeds": [1, 2]}}"#,
        data.display().to_string()
    );
    std::fs::write(&path, text).unwrap();
    path
}

const METHODS: &str = r#"[
    {"label": "gsc", "pipeline": {"code": "qc-z16-4x8"}},
    {"label": "dct", "baseline": {"code": "qc-z16-4x8"}}
]"#;

#[test]
fn sweep_writes_results_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), METHODS);
    let o = gsc(&["sweep", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["results.csv", "raw/rows.csv", "config.echo.json", "provenance.json", "plots/semantic_nmse.svg", "plots/piqe.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let rows = parse_results_csv(&std::fs::read_to_string(out.join("results.csv")).unwrap()).unwrap();
    let keys: Vec<(String, Option<u64>, u64)> = rows.iter().map(|r| (r.method.clone(), r.budget_bytes, r.seed)).collect();
    let want: Vec<(String, Option<u64>, u64)> = [("gsc", 3000, 1), ("gsc", 3000, 2), ("gsc", 6000, 1), ("gsc", 6000, 2), ("dct", 3000, 1), ("dct", 3000, 2), ("dct", 6000, 1), ("dct", 6000, 2)]
        .iter()
        .map(|&(m, b, s)| (m.to_string(), Some(b), s))
        .collect();
    assert_eq!(keys, want);
    let raw = std::fs::read_to_string(out.join("raw/rows.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 8 * 2);

    let again = gsc(&["sweep", cfg.to_str().unwrap(), "--output", dir.path().join("again").to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(out.join("results.csv")).unwrap(),
        std::fs::read(dir.path().join("again/results.csv")).unwrap()
    );

    let report = gsc(&["report", out.to_str().unwrap()]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("<= 3000"));
    let csv = gsc(&["report", out.to_str().unwrap(), "--csv"]);
    assert_eq!(csv.stdout, std::fs::read(out.join("results.csv")).unwrap());
    std::fs::remove_dir_all(out.join("plots")).unwrap();
    assert!(gsc(&["report", out.to_str().unwrap(), "--svg"]).status.success());
    assert!(out.join("plots/piqe.svg").is_file());
}

#[test]
fn run_uses_first_budget_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), METHODS);
    let o = gsc(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_results_csv(&std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.budget_bytes == Some(3000) && r.seed == 1));
}

#[test]
fn failed_cells_are_recorded_and_set_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let methods = r#"[
        {"label": "broken", "pipeline": {"code": "qc-z16-4x8",
            "extractor": {"kind": "external", "command": ["/nonexistent/extractor"]}}},
        {"label": "dct", "baseline": {"code": "qc-z16-4x8"}}
    ]"#;
    let cfg = write_config(dir.path(), methods);
    let o = gsc(&["sweep", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let raw = std::fs::read_to_string(dir.path().join("out/raw/rows.csv")).unwrap();
    assert!(raw.lines().any(|l| l.contains("broken") && l.contains("failed")));
    assert!(raw.lines().any(|l| l.contains("dct") && l.contains(",ok,")));
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"[{"label": "x", "pipeline": {"task": {"bits": 40}}}]"#);
    let o = gsc(&["sweep", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("methods[0].pipeline.task.bits"));
}

#[test]
fn ber_prints_csv() {
    let o = gsc(&["ber", "--code", "qc-z16-4x8", "--snr", "-10,0,10", "--bits", "2048", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,code_id,modulation,info_bits,bit_errors,ber,bler"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "-10");
    assert_eq!(rows[2][1], "qc-z16-4x8-s1");
    let bers: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(bers[0] >= bers[1] && bers[1] >= bers[2]);
    assert_eq!(gsc(&["ber", "--code", "qc-z16-4x8", "--snr", "-10,0,10", "--bits", "2048", "--seed", "3"]).stdout, o.stdout);
}

#[test]
fn ber_accepts_alist_files() {
    let o = gsc(&["ber", "--code", &fixture("codes/hamming7.alist"), "--snr", "noiseless", "--bits", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().nth(1), Some("noiseless,hamming7,BPSK,40,0,0,0"));
}

#[test]
fn adapters_list_and_check() {
    let list = stdout(&gsc(&["adapters", "list"]));
    assert!(list.lines().any(|l| l.starts_with("captioner") && l.contains("extract")));
    let ok = gsc(&["adapters", "check", "depth-proxy"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("ok depth-proxy"));
    let ext = format!("{} adapters serve sobel-edge", env!("CARGO_BIN_EXE_gsc"));
    assert!(gsc(&["adapters", "check", &ext]).status.success());
}

#[test]
fn adapter_check_honours_timeout() {
    let o = Command::new(env!("CARGO_BIN_EXE_gsc"))
        .args(["adapters", "check", "sleep 5"])
        .env("GSC_ADAPTER_TIMEOUT_MS", "300")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("300 ms"));
}

#[test]
fn graph_validation() {
    let good = gsc(&["graph", "validate", &fixture("graphs/meeting.json")]);
    assert!(good.status.success());
    let bad = gsc(&["graph", "validate", &fixture("graphs/broken.json")]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.contains("self-loop on a"));
    assert!(text.contains("relation references unknown node x"));
    assert!(text.contains("colour"));
}
