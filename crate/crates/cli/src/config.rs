use std::path::PathBuf;
use std::str::FromStr;

use arbor_core::dataflow::PlanKind;
use arbor_core::io::{SourceFormat, DEFAULT_BLOCK_ROWS};
use arbor_core::{EngineKind, Error, Result};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub format: SourceFormat,
    /// Defaults to the model's feature count.
    pub num_features: Option<usize>,
    pub engine: EngineKind,
    pub plan: PlanKind,
    pub workers: usize,
    pub block_rows: usize,
    pub batch_blocks: Option<usize>,
    pub repeats: usize,
    pub warmups: usize,
    /// Where the JSON report goes; not written if `None`.
    pub report: Option<PathBuf>,
    /// Prediction output file, rewritten by every repeat.
    pub output: PathBuf,
    /// Partition store directory for relation-centric plans.
    pub store: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(model: impl Into<PathBuf>, dataset: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Result<Self> {
        let dataset = dataset.into();
        let format = SourceFormat::from_path(&dataset)
            .ok_or_else(|| Error::Config(format!("cannot infer dataset format of {}", dataset.display())))?;
        Ok(BenchConfig {
            model: model.into(),
            dataset,
            format,
            num_features: None,
            engine: EngineKind::Naive,
            plan: PlanKind::UdfCentric,
            workers: 1,
            block_rows: DEFAULT_BLOCK_ROWS,
            batch_blocks: None,
            repeats: 1,
            warmups: 0,
            report: None,
            output: output.into(),
            store: None,
        })
    }

    pub fn check(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.workers == 0 || self.block_rows == 0 || self.batch_blocks == Some(0) || self.num_features == Some(0) {
            return Err(Error::Config("workers, block_rows, batch_blocks and num_features must be positive".into()));
        }
        Ok(())
    }

    pub fn store_dir(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| self.output.with_extension("partitions"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    BatchBlocks,
    BlockRows,
    Workers,
    Engine,
    Plan,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::BatchBlocks => "batch_blocks",
            SweepAxis::BlockRows => "block_rows",
            SweepAxis::Workers => "workers",
            SweepAxis::Engine => "engine",
            SweepAxis::Plan => "plan",
        }
    }

    /// Returns `base` with this axis set to `value`.
    pub fn apply(self, base: &BenchConfig, value: &str) -> Result<BenchConfig> {
        let mut cfg = base.clone();
        let count = || value.parse::<usize>().map_err(|_| Error::Config(format!("{value:?} is not a count")));
        match self {
            SweepAxis::BatchBlocks => cfg.batch_blocks = Some(count()?),
            SweepAxis::BlockRows => cfg.block_rows = count()?,
            SweepAxis::Workers => cfg.workers = count()?,
            SweepAxis::Engine => cfg.engine = value.parse()?,
            SweepAxis::Plan => cfg.plan = value.parse()?,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::BatchBlocks, SweepAxis::BlockRows, SweepAxis::Workers, SweepAxis::Engine, SweepAxis::Plan]
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis {s:?}")))
    }
}
