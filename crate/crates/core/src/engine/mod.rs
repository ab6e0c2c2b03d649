//! Inference engines over the forest IR.
//!
//! All engines implement [`Engine`] and agree with
//! [`crate::model::predict_naive`]: same comparison convention
//! (left iff `value <= threshold`), same exit leaves, and the same
//! ascending-tree summation order.

pub mod compiled;
pub mod predicated;
pub mod quickscorer;
pub mod tensor;

use std::str::FromStr;

use crate::block::{PredictionBlock, RowRef, SampleBlock};
use crate::error::{Error, Result};
use crate::model::{Aggregation, Forest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Naive,
    Predicated,
    QuickScorer,
    Tensor,
    Compiled,
}

impl EngineKind {
    pub const ALL: [EngineKind; 5] = [
        EngineKind::Naive,
        EngineKind::Predicated,
        EngineKind::QuickScorer,
        EngineKind::Tensor,
        EngineKind::Compiled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Naive => "naive",
            EngineKind::Predicated => "predicated",
            EngineKind::QuickScorer => "quickscorer",
            EngineKind::Tensor => "tensor",
            EngineKind::Compiled => "compiled",
        }
    }

    /// Whether the engine can follow default branches for missing values.
    pub fn supports_missing(self) -> bool {
        !matches!(self, EngineKind::QuickScorer | EngineKind::Tensor)
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine {s:?}")))
    }
}

/// A lowered, immutable forest that scores sample blocks.
pub trait Engine: Send + Sync {
    fn kind(&self) -> EngineKind;

    fn num_features(&self) -> usize;

    fn num_trees(&self) -> usize;

    fn aggregation(&self) -> Aggregation;

    /// Writes the exit value of every (row, tree) pair into `out`,
    /// row-major with `num_trees` entries per row. `out` is cleared first.
    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()>;

    fn predict_block(&self, block: &SampleBlock) -> Result<PredictionBlock> {
        let mut exits = Vec::new();
        self.exit_values(block, &mut exits)?;
        let agg = self.aggregation();
        let trees = self.num_trees();
        let predictions = exits
            .chunks(trees.max(1))
            .take(block.num_rows())
            .map(|row| agg.predict(row.iter().fold(0.0, |acc, v| acc + v)))
            .collect();
        Ok(PredictionBlock { block_id: block.block_id, row_offset: block.row_offset, predictions })
    }
}

pub(crate) fn check_block(engine: &(impl Engine + ?Sized), block: &SampleBlock) -> Result<()> {
    if block.num_features() != engine.num_features() {
        return Err(Error::DimensionMismatch { expected: engine.num_features(), actual: block.num_features() });
    }
    if block.has_missing() && !engine.kind().supports_missing() {
        return Err(Error::MissingValueUnsupported { engine: engine.kind().as_str() });
    }
    Ok(())
}

pub(crate) fn check_row(kind: EngineKind, num_features: usize, row: RowRef<'_>) -> Result<()> {
    if row.len() != num_features {
        return Err(Error::DimensionMismatch { expected: num_features, actual: row.len() });
    }
    if !kind.supports_missing() && row.has_missing() {
        return Err(Error::MissingValueUnsupported { engine: kind.as_str() });
    }
    Ok(())
}

/// Lowers `forest` into the requested engine.
pub fn lower(kind: EngineKind, forest: &Forest) -> Result<Box<dyn Engine>> {
    Ok(match kind {
        EngineKind::Naive => Box::new(NaiveEngine::new(forest.clone())),
        EngineKind::Predicated => Box::new(predicated::PredicatedEngine::new(forest)),
        EngineKind::QuickScorer => Box::new(quickscorer::lower_quickscorer(forest)?),
        EngineKind::Tensor => Box::new(tensor::lower_tensor(forest)),
        EngineKind::Compiled => Box::new(compiled::CompiledEngine::from_forest(forest)?),
    })
}

/// Root-to-leaf traversal of the IR itself.
#[derive(Debug, Clone)]
pub struct NaiveEngine {
    forest: Forest,
}

impl NaiveEngine {
    pub fn new(forest: Forest) -> Self {
        NaiveEngine { forest }
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }
}

impl Engine for NaiveEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Naive
    }

    fn num_features(&self) -> usize {
        self.forest.num_features
    }

    fn num_trees(&self) -> usize {
        self.forest.trees.len()
    }

    fn aggregation(&self) -> Aggregation {
        self.forest.aggregation()
    }

    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()> {
        check_block(self, block)?;
        out.clear();
        out.reserve(block.num_rows() * self.forest.trees.len());
        for row in block.rows() {
            out.extend(self.forest.trees.iter().map(|t| t.exit_value(row)));
        }
        Ok(())
    }

    fn predict_block(&self, block: &SampleBlock) -> Result<PredictionBlock> {
        check_block(self, block)?;
        let agg = self.forest.aggregation();
        let predictions = block
            .rows()
            .map(|row| agg.predict(self.forest.trees.iter().fold(0.0, |acc, t| acc + t.exit_value(row))))
            .collect();
        Ok(PredictionBlock { block_id: block.block_id, row_offset: block.row_offset, predictions })
    }
}
