use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use arbor_cli::{run, sweep, synth, BenchConfig, BenchReport, SweepAxis, SynthConfig};
use arbor_core::dataflow::PlanKind;
use arbor_core::model::parse_model;
use arbor_core::EngineKind;

struct Workload {
    dir: tempfile::TempDir,
}

impl Workload {
    fn new(trees: usize, depth: usize, rows: usize, missing_rate: f64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SynthConfig::new(trees, depth, 6, rows, dir.path().join("model.json"));
        cfg.missing_rate = missing_rate;
        cfg.csv_out = Some(dir.path().join("data.csv"));
        cfg.native_out = Some(dir.path().join("data.blk"));
        synth(&cfg).unwrap();
        Workload { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self) -> BenchConfig {
        BenchConfig::new(self.path("model.json"), self.path("data.csv"), self.path("pred.csv")).unwrap()
    }
}

#[test]
fn tiny_run_has_three_nonzero_phases() {
    let w = Workload::new(3, 3, 10, 0.0);
    let r = run(&w.config()).unwrap();
    assert_eq!(r.repeats.len(), 1);
    let t = &r.repeats[0];
    assert!(t.load_ms > 0.0 && t.infer_ms > 0.0 && t.write_ms > 0.0);
    assert!(t.end_to_end_ms >= t.load_ms + t.infer_ms + t.write_ms - 0.05);
    assert_eq!(r.environment.rows, 10);
}

#[test]
fn warmups_are_excluded_from_aggregates() {
    let w = Workload::new(3, 3, 50, 0.0);
    let mut cfg = w.config();
    cfg.repeats = 5;
    cfg.warmups = 1;
    let r = run(&cfg).unwrap();
    assert_eq!(r.repeats.len(), 5);
    let mut e2e: Vec<f64> = r.repeats.iter().map(|t| t.end_to_end_ms).collect();
    e2e.sort_by(f64::total_cmp);
    assert_eq!(r.aggregate.end_to_end_ms.median, e2e[2]);
    assert_eq!(r.aggregate.end_to_end_ms.min, e2e[0]);
    assert_eq!(r.aggregate.end_to_end_ms.max, e2e[4]);
}

#[test]
fn repeated_runs_write_identical_predictions() {
    let w = Workload::new(8, 6, 300, 0.1);
    let cfg = w.config();
    run(&cfg).unwrap();
    let first = fs::read(&cfg.output).unwrap();
    run(&cfg).unwrap();
    assert_eq!(fs::read(&cfg.output).unwrap(), first);
}

#[test]
fn report_file_matches_schema() {
    let w = Workload::new(4, 4, 100, 0.0);
    let mut cfg = w.config();
    cfg.report = Some(w.path("report.json"));
    cfg.engine = EngineKind::Compiled;
    let r = run(&cfg).unwrap();
    let text = fs::read_to_string(w.path("report.json")).unwrap();
    let back: BenchReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["config", "environment", "one_time_costs", "repeats", "aggregate", "rows_per_second", "prediction_hash"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(r.one_time_costs.compile_ms.is_some());
    assert_eq!(r.prediction_hash.len(), 16);
}

fn hashes(reports: &[BenchReport]) -> Vec<&str> {
    reports.iter().map(|r| r.prediction_hash.as_str()).collect()
}

fn values(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn worker_sweep_keeps_hash() {
    let w = Workload::new(12, 6, 2000, 0.05);
    let out = sweep(&w.config(), SweepAxis::Workers, &values(&["1", "2", "4"]), Some(&w.path("table.csv"))).unwrap();
    assert_eq!(out.reports.len(), 3);
    let h = hashes(&out.reports);
    assert!(h.iter().all(|x| *x == h[0]));
    let table = fs::read_to_string(w.path("table.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("axis_value,load_ms,infer_ms,write_ms,end_to_end_ms,prediction_hash"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn block_row_sweep_keeps_hash() {
    let w = Workload::new(6, 5, 500, 0.05);
    let out = sweep(&w.config(), SweepAxis::BlockRows, &values(&["1", "256"]), None).unwrap();
    let h = hashes(&out.reports);
    assert_eq!(h[0], h[1]);
}

#[test]
fn engine_sweep_agrees_on_dense_shallow_model() {
    let w = Workload::new(10, 6, 1000, 0.0);
    let all: Vec<String> = EngineKind::ALL.iter().map(|k| k.as_str().to_owned()).collect();
    let out = sweep(&w.config(), SweepAxis::Engine, &all, None).unwrap();
    let h = hashes(&out.reports);
    assert!(h.iter().all(|x| *x == h[0]), "{h:?}");
}

#[test]
fn plans_and_formats_agree() {
    let w = Workload::new(10, 8, 1500, 0.1);
    let mut cfg = w.config();
    cfg.workers = 3;
    cfg.batch_blocks = Some(2);
    let mut seen = Vec::new();
    for dataset in ["data.csv", "data.blk"] {
        cfg.dataset = w.path(dataset);
        cfg.format = arbor_core::io::SourceFormat::from_path(&cfg.dataset).unwrap();
        cfg.store = Some(w.path(&format!("{dataset}.store")));
        for plan in PlanKind::ALL {
            cfg.plan = plan;
            let r = run(&cfg).unwrap();
            if plan == PlanKind::RelationCentricReused {
                // The relation-centric run already filled this store.
                assert!(r.one_time_costs.materialize_ms.is_none());
                assert!(r.repeats.iter().all(|t| t.partition_stage_runs == 0));
            }
            seen.push(r.prediction_hash);
        }
    }
    assert!(seen.iter().all(|h| *h == seen[0]));

    cfg.store = Some(w.path("fresh.store"));
    let r = run(&cfg).unwrap();
    assert!(r.one_time_costs.materialize_ms.is_some());
    assert_eq!(r.prediction_hash, seen[0]);
}

#[test]
fn synth_is_reproducible_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = |tag: &str| {
        let mut cfg = SynthConfig::new(10, 8, 30, 10_000, dir.path().join(format!("{tag}.json")));
        cfg.missing_rate = 0.1;
        cfg.sparsity = 0.2;
        cfg.csv_out = Some(dir.path().join(format!("{tag}.csv")));
        cfg.libsvm_out = Some(dir.path().join(format!("{tag}.svm")));
        let out = synth(&cfg).unwrap();
        let frac = out.missing_cells as f64 / out.cells as f64;
        assert!((0.09..=0.11).contains(&frac), "{frac}");
        ["json", "csv", "svm"].map(|ext| fs::read(dir.path().join(format!("{tag}.{ext}"))).unwrap())
    };
    assert_eq!(outputs("a"), outputs("b"));
    let forest = parse_model(&fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(forest.trees.len(), 10);
    assert!(forest.trees.iter().all(|t| t.depth() <= 8));
}

#[test]
fn bad_configs_are_rejected() {
    let w = Workload::new(2, 2, 10, 0.0);
    let mut cfg = w.config();
    cfg.repeats = 0;
    assert!(matches!(run(&cfg), Err(arbor_core::Error::Config(_))));
    let mut cfg = w.config();
    cfg.engine = EngineKind::QuickScorer;
    cfg.plan = PlanKind::RelationCentric;
    assert!(matches!(run(&cfg), Err(arbor_core::Error::UnsupportedEngineForPlan { .. })));
    assert!(sweep(&w.config(), SweepAxis::Workers, &[], None).is_err());
}

fn arbor(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_arbor")).current_dir(dir).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let w = Workload::new(2, 2, 10, 0.0);
    let dir = w.dir.path();
    let ok = arbor(dir, &["run", "--model", "model.json", "--dataset", "data.csv", "--report", "r.json"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(serde_json::from_slice::<BenchReport>(&ok.stdout).is_ok());
    assert!(dir.join("r.json").exists());
    let zero = arbor(dir, &["run", "--model", "model.json", "--dataset", "data.csv", "--repeats", "0"]);
    assert_eq!(zero.status.code(), Some(2));
    let engine = arbor(dir, &["run", "--model", "model.json", "--dataset", "data.csv", "--engine", "gpu"]);
    assert_eq!(engine.status.code(), Some(2));
    let missing = arbor(dir, &["run", "--model", "absent.json", "--dataset", "data.csv"]);
    assert_eq!(missing.status.code(), Some(1));
    let compile = arbor(dir, &["compile", "model.json"]);
    assert_eq!(compile.status.code(), Some(0));
    assert!(fs::read_to_string(dir.join("model.dfp")).unwrap().contains("emit"));
    let inspect = arbor(dir, &["inspect-model", "model.json"]);
    assert_eq!(inspect.status.code(), Some(0));
    fs::write(dir.join("bad.json"), "{\"format_version\": 1}").unwrap();
    assert_eq!(arbor(dir, &["inspect-model", "bad.json"]).status.code(), Some(1));
}
