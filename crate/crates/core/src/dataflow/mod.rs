//! Execution plans over sample blocks.
//!
//! - [`PlanKind::UdfCentric`]: one pipeline stage in which workers own
//!   disjoint runs of blocks and apply the whole-forest engine (data
//!   parallelism).
//! - [`PlanKind::RelationCentric`]: partition the model, cross-product
//!   partitions with blocks (one worker per partition, model parallelism),
//!   aggregate partials per row, post-process and write.
//! - [`PlanKind::RelationCentricReused`]: the same without the partition
//!   stage; partitions are loaded from a [`PartitionStore`].
//!
//! All three produce bitwise-identical predictions: partial results keep
//! per-tree exit values and aggregation sums them in original tree order.

pub mod partition;
pub mod store;

use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use partition::{
    aggregate, cross_product, partition_model, LoweredPartition, ModelPartition, PartialPredictionBlock, RawBlock,
};
pub use store::{forest_hash, PartitionStore};

use crate::block::{Prediction, PredictionBlock, SampleBlock};
use crate::engine::{lower, Engine, EngineKind};
use crate::error::{Error, Result};
use crate::model::Forest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanKind {
    UdfCentric,
    RelationCentric,
    RelationCentricReused,
}

impl PlanKind {
    pub const ALL: [PlanKind; 3] = [PlanKind::UdfCentric, PlanKind::RelationCentric, PlanKind::RelationCentricReused];

    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::UdfCentric => "udf",
            PlanKind::RelationCentric => "relation",
            PlanKind::RelationCentricReused => "relation-reused",
        }
    }

    pub fn is_relation_centric(self) -> bool {
        !matches!(self, PlanKind::UdfCentric)
    }
}

impl std::fmt::Display for PlanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PlanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlanKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown plan {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanConfig {
    pub workers: usize,
    /// Sample blocks per batch; `None` puts every block in one batch.
    pub batch_blocks: Option<usize>,
    pub block_rows: usize,
    pub engine: EngineKind,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { workers: 1, batch_blocks: None, block_rows: crate::io::DEFAULT_BLOCK_ROWS, engine: EngineKind::Naive }
    }
}

/// A chain of operators whose last one is a pipeline breaker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineStage {
    pub name: &'static str,
    pub operators: Vec<&'static str>,
}

impl PipelineStage {
    fn new(name: &'static str, operators: &[&'static str]) -> Self {
        PipelineStage { name, operators: operators.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    pub kind: PlanKind,
    pub stages: Vec<PipelineStage>,
    pub config: PlanConfig,
    pub num_features: usize,
}

pub const STAGE_INFERENCE: &str = "inference";
pub const STAGE_PARTITION: &str = "partition-model";
pub const STAGE_LOAD_PARTITIONS: &str = "load-materialized-partitions";
pub const STAGE_CROSS_PRODUCT: &str = "cross-product";
pub const STAGE_AGGREGATE: &str = "aggregate";
pub const STAGE_POST_PROCESS: &str = "post-process";

pub fn plan(forest: &Forest, kind: PlanKind, config: PlanConfig) -> Result<ExecutionPlan> {
    if config.workers == 0 {
        return Err(Error::Config("workers must be positive".into()));
    }
    if config.block_rows == 0 || config.batch_blocks == Some(0) {
        return Err(Error::Config("block_rows and batch_blocks must be positive".into()));
    }
    if kind.is_relation_centric() && config.engine == EngineKind::QuickScorer {
        // Feature groups do not split evenly by tree.
        return Err(Error::UnsupportedEngineForPlan { engine: config.engine.as_str(), plan: kind.as_str() });
    }
    let tail = [
        PipelineStage::new(STAGE_AGGREGATE, &["aggregate"]),
        PipelineStage::new(STAGE_POST_PROCESS, &["sigmoid", "write"]),
    ];
    let stages = match kind {
        PlanKind::UdfCentric => vec![PipelineStage::new(STAGE_INFERENCE, &["scan", "transform(predict)", "write"])],
        PlanKind::RelationCentric => {
            let mut stages = vec![
                PipelineStage::new(STAGE_PARTITION, &["scan-model", "partition"]),
                PipelineStage::new(STAGE_CROSS_PRODUCT, &["scan", "cross-product", "predict-partial", "hash"]),
            ];
            stages.extend(tail);
            stages
        }
        PlanKind::RelationCentricReused => {
            let mut stages = vec![PipelineStage::new(
                STAGE_LOAD_PARTITIONS,
                &["load-partitions", "scan", "cross-product", "predict-partial", "hash"],
            )];
            stages.extend(tail);
            stages
        }
    };
    Ok(ExecutionPlan { kind, stages, config, num_features: forest.num_features })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMetrics {
    pub name: &'static str,
    pub wall: Duration,
    pub rows: usize,
    pub workers: usize,
    /// Times the stage ran (once per batch for per-batch stages).
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct ExecutionOutput {
    pub predictions: Vec<PredictionBlock>,
    pub stages: Vec<StageMetrics>,
    /// Times model partitioning ran during this execution.
    pub partition_stage_runs: usize,
}

impl ExecutionOutput {
    pub fn num_rows(&self) -> usize {
        self.predictions.iter().map(PredictionBlock::len).sum()
    }
}

/// Everything a plan reads while it runs.
pub struct ExecInputs<'a> {
    pub forest: &'a Forest,
    pub blocks: &'a [SampleBlock],
    /// Pre-lowered whole-forest engine for UDF plans; lowered on demand if absent.
    pub engine: Option<&'a dyn Engine>,
    /// Where relation-centric plans materialize (and reused plans load) partitions.
    pub store: Option<&'a PartitionStore>,
}

impl<'a> ExecInputs<'a> {
    pub fn new(forest: &'a Forest, blocks: &'a [SampleBlock]) -> Self {
        ExecInputs { forest, blocks, engine: None, store: None }
    }
}

struct Timer {
    metrics: Vec<StageMetrics>,
}

impl Timer {
    fn new(plan: &ExecutionPlan) -> Self {
        let metrics = plan
            .stages
            .iter()
            .map(|s| StageMetrics { name: s.name, wall: Duration::ZERO, rows: 0, workers: plan.config.workers, runs: 0 })
            .collect();
        Timer { metrics }
    }

    fn time<T>(&mut self, stage: usize, rows: usize, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        let m = &mut self.metrics[stage];
        m.wall += start.elapsed();
        m.rows += rows;
        m.runs += 1;
        Ok(out)
    }
}

pub fn execute(plan: &ExecutionPlan, inputs: &ExecInputs<'_>) -> Result<ExecutionOutput> {
    if inputs.forest.num_features != plan.num_features {
        return Err(Error::DimensionMismatch { expected: plan.num_features, actual: inputs.forest.num_features });
    }
    if let Some(b) = inputs.blocks.iter().find(|b| b.num_features() != plan.num_features) {
        return Err(Error::DimensionMismatch { expected: plan.num_features, actual: b.num_features() });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let batch = plan.config.batch_blocks.unwrap_or(inputs.blocks.len()).max(1);
    let mut timer = Timer::new(plan);
    let mut predictions = Vec::with_capacity(inputs.blocks.len());
    let mut partition_stage_runs = 0;

    match plan.kind {
        PlanKind::UdfCentric => {
            let owned;
            let engine: &dyn Engine = match inputs.engine {
                Some(e) => e,
                None => {
                    owned = lower(plan.config.engine, inputs.forest)?;
                    owned.as_ref()
                }
            };
            let workers = plan.config.workers;
            for batch in inputs.blocks.chunks(batch) {
                let rows = batch.iter().map(SampleBlock::num_rows).sum();
                let out = timer.time(0, rows, || {
                    // Each worker owns one contiguous run of blocks.
                    let per_worker = batch.len().div_ceil(workers).max(1);
                    pool.install(|| {
                        batch
                            .par_chunks(per_worker)
                            .map(|run| run.iter().map(|b| engine.predict_block(b)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()
                    })
                })?;
                predictions.extend(out.into_iter().flatten());
            }
        }
        PlanKind::RelationCentric | PlanKind::RelationCentricReused => {
            let partitions = if plan.kind == PlanKind::RelationCentric {
                partition_stage_runs += 1;
                timer.time(0, 0, || {
                    let parts = partition_model(inputs.forest, plan.config.workers);
                    if let Some(store) = inputs.store {
                        store.materialize_partitions(&parts, &forest_hash(inputs.forest))?;
                    }
                    lower_partitions(&pool, parts, plan.config.engine)
                })?
            } else {
                let store = inputs
                    .store
                    .ok_or_else(|| Error::Config("a reused plan needs a partition store".into()))?;
                timer.time(0, 0, || {
                    let parts = store.load_partitions(&forest_hash(inputs.forest))?;
                    lower_partitions(&pool, parts, plan.config.engine)
                })?
            };
            let cross = if plan.kind == PlanKind::RelationCentric { 1 } else { 0 };
            let agg = inputs.forest.aggregation();
            for batch in inputs.blocks.chunks(batch) {
                let rows = batch.iter().map(SampleBlock::num_rows).sum();
                let partials = timer.time(cross, rows, || pool.install(|| cross_product(&partitions, batch)))?;
                let raw = timer.time(cross + 1, rows, || aggregate(&partials, partitions.len(), agg))?;
                let out = timer.time(cross + 2, rows, || Ok(post_process(raw)))?;
                predictions.extend(out);
            }
        }
    }
    Ok(ExecutionOutput { predictions, stages: timer.metrics, partition_stage_runs })
}

fn lower_partitions(
    pool: &rayon::ThreadPool,
    parts: Vec<ModelPartition>,
    engine: EngineKind,
) -> Result<Vec<LoweredPartition>> {
    pool.install(|| parts.into_par_iter().map(|p| LoweredPartition::new(p, engine)).collect())
}

fn post_process(raw: Vec<RawBlock>) -> Vec<PredictionBlock> {
    raw.into_iter()
        .map(|b| PredictionBlock {
            block_id: b.block_id,
            row_offset: b.row_offset,
            predictions: b.raw.into_iter().map(Prediction::from_raw).collect(),
        })
        .collect()
}
