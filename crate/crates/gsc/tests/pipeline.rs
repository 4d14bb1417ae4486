use std::path::Path;

use gsc::adapter::AdapterSpec;
use gsc::item::{load_dataset, Item};
use gsc::pipeline::evaluate::Thresholds;
use gsc::pipeline::{PipelineConfig, Scenario, Session, StreamSettings};
use gsc_core::channel::ChannelConfig;
use gsc_core::metrics::MetricReport;

fn items() -> Vec<Item> {
    load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/images")).unwrap()
}

fn depth_proxy(rank: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::for_scenario(Scenario::Custom);
    cfg.extractor = AdapterSpec::builtin("depth-proxy");
    cfg.generator = AdapterSpec::builtin("upsample");
    cfg.task = StreamSettings { rank: Some(rank), bits: 8 };
    cfg.channel = ChannelConfig::noiseless();
    cfg
}

fn run(cfg: PipelineConfig, items: &[Item]) -> Vec<MetricReport> {
    let mut s = Session::open(cfg).unwrap();
    s.calibrate(items).unwrap();
    let out = items.iter().enumerate().map(|(i, it)| s.run_end_to_end(it, i as u64).unwrap()).collect();
    s.close();
    out
}

fn mean_nmse(r: &[MetricReport]) -> f64 {
    r.iter().map(|x| x.semantic_nmse.unwrap()).sum::<f64>() / r.len() as f64
}

#[test]
fn higher_rank_does_not_hurt_depth_proxy() {
    let items = items();
    let k = mean_nmse(&run(depth_proxy(16), &items));
    let half = mean_nmse(&run(depth_proxy(8), &items));
    assert!(k <= half, "rank 16 {k} vs rank 8 {half}");
}

#[test]
fn generated_items_keep_source_dimensions() {
    let items = items();
    let mut s = Session::open(depth_proxy(16)).unwrap();
    s.calibrate(&items).unwrap();
    for (i, item) in items.iter().enumerate() {
        let tx = s.transmit(item, i as u64).unwrap();
        let rec = s.receive(&s.channel(&tx.frame, i as u64), &tx.side).unwrap();
        let (img, _) = s.generate(&rec, &tx.side, i as u64).unwrap();
        assert_eq!((img.width(), img.height()), (item.image.width(), item.image.height()));
    }
}

#[test]
fn unreachable_thresholds_are_flagged() {
    let items = items();
    let mut cfg = depth_proxy(16);
    cfg.thresholds = Thresholds {
        semantic_nmse_max: Some(1e-12),
        piqe_max: Some(100.0),
    };
    for r in run(cfg, &items) {
        assert_eq!(r.task_constraint_ok, Some(false));
        assert_eq!(r.perceptual_constraint_ok, Some(true));
    }
}

#[test]
fn budget_caps_payload_for_every_fixture() {
    let items = items();
    let cfg = PipelineConfig {
        byte_budget: Some(78_600),
        ..PipelineConfig::default()
    };
    for r in run(cfg, &items) {
        assert!(r.bytes_transmitted <= 78_600, "{}", r.bytes_transmitted);
    }
}
