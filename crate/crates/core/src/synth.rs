//! Seeded synthetic forests and datasets.

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{MissingBits, SampleBlock};
use crate::error::Result;
use crate::model::{Direction, Forest, ModelKind, Node, Tree};

#[derive(Debug, Clone)]
pub struct ForestSpec {
    pub trees: usize,
    pub max_depth: usize,
    pub num_features: usize,
    pub kind: ModelKind,
    /// Probability that a non-root node above `max_depth` splits.
    pub split_probability: f64,
    /// Quantize thresholds to multiples of `1/levels` so that ties with
    /// equally quantized data actually occur.
    pub threshold_levels: Option<u32>,
    pub seed: u64,
}

impl Default for ForestSpec {
    fn default() -> Self {
        ForestSpec {
            trees: 10,
            max_depth: 8,
            num_features: 28,
            kind: ModelKind::GradientBoosting,
            split_probability: 0.8,
            threshold_levels: None,
            seed: 42,
        }
    }
}

pub fn random_forest(spec: &ForestSpec) -> Forest {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let trees = (0..spec.trees).map(|_| random_tree(spec, &mut rng)).collect();
    let base_score = match spec.kind {
        ModelKind::GradientBoosting => spec_value(&mut rng) * 0.5,
        ModelKind::RandomForest => 0.0,
    };
    Forest { trees, num_features: spec.num_features, kind: spec.kind, base_score }
}

fn spec_value(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

fn random_tree(spec: &ForestSpec, rng: &mut ChaCha8Rng) -> Tree {
    let mut nodes = Vec::new();
    grow(spec, rng, 0, &mut nodes);
    Tree::new(nodes)
}

// Pre-order numbering: the right child follows the whole left subtree, so
// generated layouts are generally not sibling-adjacent.
fn grow(spec: &ForestSpec, rng: &mut ChaCha8Rng, depth: usize, nodes: &mut Vec<Node>) -> usize {
    let index = nodes.len();
    let split = depth < spec.max_depth && (depth == 0 || rng.gen_bool(spec.split_probability));
    if !split {
        nodes.push(Node::leaf(spec_value(rng)));
        return index;
    }
    let feature = rng.gen_range(0..spec.num_features);
    let threshold = match spec.threshold_levels {
        Some(levels) => rng.gen_range(0..=levels) as f64 / levels as f64,
        None => rng.gen::<f64>(),
    };
    let default = if rng.gen_bool(0.5) { Direction::Left } else { Direction::Right };
    nodes.push(Node::internal(feature, threshold, 0, 0, default));
    let left = grow(spec, rng, depth + 1, nodes);
    let right = grow(spec, rng, depth + 1, nodes);
    nodes[index] = Node::internal(feature, threshold, left, right, default);
    index
}

#[derive(Debug, Clone)]
pub struct DataSpec {
    pub rows: usize,
    pub num_features: usize,
    /// Fraction of cells that are exactly zero.
    pub sparsity: f64,
    /// Fraction of cells marked missing.
    pub missing_rate: f64,
    pub value_levels: Option<u32>,
    pub seed: u64,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec { rows: 1000, num_features: 28, sparsity: 0.0, missing_rate: 0.0, value_levels: None, seed: 7 }
    }
}

/// A dense row-major dataset held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub num_features: usize,
    pub values: Vec<f64>,
    pub missing: MissingBits,
    pub labels: Vec<f64>,
}

impl SyntheticData {
    pub fn num_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row_options(&self, i: usize) -> Vec<Option<f64>> {
        let start = i * self.num_features;
        (start..start + self.num_features)
            .map(|c| (!self.missing[c]).then(|| self.values[c]))
            .collect()
    }

    /// Chops the rows into blocks of at most `block_rows`.
    pub fn blocks(&self, block_rows: usize) -> Result<Vec<SampleBlock>> {
        let block_rows = block_rows.max(1);
        let width = self.num_features;
        (0..self.num_rows())
            .step_by(block_rows)
            .enumerate()
            .map(|(id, start)| {
                let end = (start + block_rows).min(self.num_rows());
                SampleBlock::new(
                    id,
                    start,
                    width,
                    self.values[start * width..end * width].to_vec(),
                    self.missing[start * width..end * width].to_bitvec(),
                )
            })
            .collect()
    }
}

pub fn random_data(spec: &DataSpec) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cells = spec.rows * spec.num_features;
    let mut values = Vec::with_capacity(cells);
    let mut missing = bitvec![u64, Lsb0; 0; cells];
    for c in 0..cells {
        let value = match spec.value_levels {
            Some(levels) => rng.gen_range(0..=levels) as f64 / levels as f64,
            None => rng.gen::<f64>(),
        };
        let zero = spec.sparsity > 0.0 && rng.gen_bool(spec.sparsity.min(1.0));
        let absent = spec.missing_rate > 0.0 && rng.gen_bool(spec.missing_rate.min(1.0));
        values.push(if zero || absent { 0.0 } else { value });
        missing.set(c, absent);
    }
    let labels = (0..spec.rows).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect();
    SyntheticData { num_features: spec.num_features, values, missing, labels }
}
