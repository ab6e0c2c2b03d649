use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use arbor_core::dataflow::store::sha256_hex;
use arbor_core::dataflow::{execute, plan, ExecInputs, ExecutionOutput, PartitionStore, PlanKind, PlanConfig};
use arbor_core::engine::compiled::{compile_forest, CompiledEngine, DEFAULT_UNIT_SIZE};
use arbor_core::io::{write_predictions, DatasetHandle};
use arbor_core::{lower, parse_model, Engine, EngineKind, Error, Forest, Result};

use crate::config::{BenchConfig, SweepAxis};
use crate::report::{BenchReport, ConfigSummary, Environment, OneTimeCosts, RepeatTiming, StageReport, Summary};

pub const SWEEP_COLUMNS: [&str; 7] =
    ["axis_value", "load_ms", "infer_ms", "write_ms", "end_to_end_ms", "prediction_hash", "rows_per_second"];

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// First 64 bits of the file's SHA-256, as 16 hex digits.
pub fn prediction_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes)[..16].to_owned())
}

struct Prepared {
    forest: Forest,
    engine: Option<Box<dyn Engine>>,
    costs: OneTimeCosts,
}

fn prepare(cfg: &BenchConfig) -> Result<Prepared> {
    let start = Instant::now();
    let bytes = fs::read(&cfg.model).map_err(|e| Error::io(&cfg.model, e))?;
    let forest = parse_model(&bytes)?;
    let model_parse_ms = ms(start.elapsed());

    let mut compile_ms = None;
    let mut lowering_ms = 0.0;
    let mut engine = None;
    // Relation-centric plans lower each partition inside the partition stage.
    if cfg.plan == PlanKind::UdfCentric {
        let start = Instant::now();
        let lowered: Box<dyn Engine> = if cfg.engine == EngineKind::Compiled {
            let program = compile_forest(&forest, DEFAULT_UNIT_SIZE);
            compile_ms = Some(ms(start.elapsed()));
            let start = Instant::now();
            let e = CompiledEngine::from_program(program)?;
            lowering_ms = ms(start.elapsed());
            Box::new(e)
        } else {
            let e = lower(cfg.engine, &forest)?;
            lowering_ms = ms(start.elapsed());
            e
        };
        engine = Some(lowered);
    }
    Ok(Prepared { forest, engine, costs: OneTimeCosts { model_parse_ms, lowering_ms, compile_ms, materialize_ms: None } })
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.check()?;
    let mut prepared = prepare(cfg)?;
    let forest = &prepared.forest;
    let num_features = cfg.num_features.unwrap_or(forest.num_features);
    if num_features != forest.num_features {
        return Err(Error::DimensionMismatch { expected: forest.num_features, actual: num_features });
    }
    let plan_config =
        PlanConfig { workers: cfg.workers, batch_blocks: cfg.batch_blocks, block_rows: cfg.block_rows, engine: cfg.engine };
    let exec_plan = plan(forest, cfg.plan, plan_config)?;
    let handle = DatasetHandle::new(cfg.format, &cfg.dataset, num_features, cfg.block_rows)?;

    let store = cfg.plan.is_relation_centric().then(|| PartitionStore::new(cfg.store_dir()));
    if cfg.plan == PlanKind::RelationCentricReused {
        let store = store.as_ref().expect("store");
        let hash = arbor_core::dataflow::store::forest_hash(forest);
        if store.load_partitions(&hash).is_err() {
            let start = Instant::now();
            let priming = plan(forest, PlanKind::RelationCentric, plan_config)?;
            execute(&priming, &ExecInputs { store: Some(store), ..ExecInputs::new(forest, &[]) })?;
            prepared.costs.materialize_ms = Some(ms(start.elapsed()));
        }
    }

    let mut repeats = Vec::with_capacity(cfg.repeats);
    let mut rows = 0;
    for i in 0..cfg.warmups + cfg.repeats {
        let start = Instant::now();
        let data = handle.load()?;
        let load = start.elapsed();

        let infer_start = Instant::now();
        let inputs = ExecInputs { engine: prepared.engine.as_deref(), store: store.as_ref(), ..ExecInputs::new(forest, &data.blocks) };
        let out = execute(&exec_plan, &inputs)?;
        let infer = infer_start.elapsed();

        let write_start = Instant::now();
        rows = write_predictions(&out.predictions, &cfg.output)?;
        let write = write_start.elapsed();
        let end_to_end = start.elapsed();

        if i >= cfg.warmups {
            repeats.push(timing(&out, load, infer, write, end_to_end));
        }
    }

    let aggregate = Summary::of(&repeats);
    let report = BenchReport {
        config: summary(cfg),
        environment: Environment {
            workers: cfg.workers,
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            rows,
            features: num_features,
            trees: forest.trees.len(),
            max_depth: forest.max_depth(),
        },
        one_time_costs: prepared.costs,
        repeats,
        rows_per_second: rows as f64 / (aggregate.end_to_end_ms.median / 1e3),
        aggregate,
        prediction_hash: prediction_hash(&cfg.output)?,
    };
    if let Some(path) = &cfg.report {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}

fn timing(out: &ExecutionOutput, load: Duration, infer: Duration, write: Duration, end_to_end: Duration) -> RepeatTiming {
    RepeatTiming {
        load_ms: ms(load),
        infer_ms: ms(infer),
        write_ms: ms(write),
        end_to_end_ms: ms(end_to_end),
        partition_stage_runs: out.partition_stage_runs,
        stages: out
            .stages
            .iter()
            .map(|s| StageReport { name: s.name.to_owned(), wall_ms: ms(s.wall), rows: s.rows, workers: s.workers, runs: s.runs })
            .collect(),
    }
}

fn summary(cfg: &BenchConfig) -> ConfigSummary {
    ConfigSummary {
        model: cfg.model.display().to_string(),
        dataset: cfg.dataset.display().to_string(),
        format: cfg.format.as_str().to_owned(),
        engine: cfg.engine.as_str().to_owned(),
        plan: cfg.plan.as_str().to_owned(),
        workers: cfg.workers,
        block_rows: cfg.block_rows,
        batch_blocks: cfg.batch_blocks,
        repeats: cfg.repeats,
        warmups: cfg.warmups,
        output: cfg.output.display().to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub reports: Vec<BenchReport>,
    /// The combined table, header included.
    pub table: String,
}

/// `base.output` and `base.report` gain a `.{value}` suffix per point.
pub fn sweep(base: &BenchConfig, axis: SweepAxis, values: &[String], table_path: Option<&Path>) -> Result<SweepOutput> {
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    let mut reports = Vec::with_capacity(values.len());
    let mut table = SWEEP_COLUMNS.join(",");
    table.push('\n');
    for value in values {
        let mut cfg = axis.apply(base, value)?;
        cfg.output = suffixed(&base.output, value);
        cfg.report = base.report.as_ref().map(|p| suffixed(p, value));
        if base.store.is_none() {
            cfg.store = Some(suffixed(&base.output, &format!("{value}.partitions")));
        }
        let r = run(&cfg)?;
        let a = &r.aggregate;
        table.push_str(&format!(
            "{value},{},{},{},{},{},{}\n",
            a.load_ms.median, a.infer_ms.median, a.write_ms.median, a.end_to_end_ms.median, r.prediction_hash, r.rows_per_second
        ));
        reports.push(r);
    }
    if let Some(path) = table_path {
        fs::write(path, &table).map_err(|e| Error::io(path, e))?;
    }
    Ok(SweepOutput { axis, values: values.to_vec(), reports, table })
}

fn suffixed(path: &Path, value: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{value}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{value}"),
    };
    path.with_file_name(name)
}
