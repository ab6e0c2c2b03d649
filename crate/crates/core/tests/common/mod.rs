#![allow(dead_code)]

use arbor_core::model::{Direction, Forest, ModelKind, Node, Tree};
use arbor_core::synth::{random_data, random_forest, DataSpec, ForestSpec};
use arbor_core::RowRef;

/// One root-to-leaf path: the tests along it and the leaf value.
struct Path {
    steps: Vec<(usize, f64, Direction, bool)>, // feature, threshold, default, went_right
    value: f64,
}

fn enumerate(tree: &Tree, node: usize, prefix: &mut Vec<(usize, f64, Direction, bool)>, out: &mut Vec<Path>) {
    match tree.nodes[node] {
        Node::Leaf { value } => out.push(Path { steps: prefix.clone(), value }),
        Node::Internal(s) => {
            prefix.push((s.feature, s.threshold, s.default, false));
            enumerate(tree, s.left, prefix, out);
            prefix.pop();
            prefix.push((s.feature, s.threshold, s.default, true));
            enumerate(tree, s.right, prefix, out);
            prefix.pop();
        }
    }
}

/// Brute-force exit value: the unique path whose every step is consistent
/// with the row. Panics unless exactly one path matches.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn brute_force_exit(tree: &Tree, row: RowRef<'_>) -> f64 {
    let mut paths = Vec::new();
    enumerate(tree, 0, &mut Vec::new(), &mut paths);
    let matching: Vec<f64> = paths
        .iter()
        .filter(|p| {
            p.steps.iter().all(|&(f, t, default, right)| match row.get(f) {
                None => right == (default == Direction::Right),
                Some(v) => right == !(v <= t),
            })
        })
        .map(|p| p.value)
        .collect();
    assert_eq!(matching.len(), 1, "exactly one path must match");
    matching[0]
}

/// Reference raw score: brute-force exits summed in tree order.
pub fn brute_force_raw(forest: &Forest, row: RowRef<'_>) -> f64 {
    let sum = forest.trees.iter().fold(0.0, |acc, t| acc + brute_force_exit(t, row));
    match forest.kind {
        ModelKind::RandomForest => sum / forest.trees.len() as f64,
        ModelKind::GradientBoosting => forest.base_score + sum,
    }
}

/// The standard seeded sweep: `count` forests with 1..=64 trees and depth
/// up to `max_depth`, alternating kinds; every third uses quantized
/// thresholds so ties with quantized data occur.
pub fn sweep_forests(count: usize, max_depth: usize, max_trees: usize) -> Vec<Forest> {
    (0..count)
        .map(|i| {
            let seed = 1000 + i as u64;
            random_forest(&ForestSpec {
                trees: 1 + (seed as usize * 7919) % max_trees,
                max_depth: 1 + i % max_depth,
                num_features: 1 + i % 12,
                kind: if i % 2 == 0 { ModelKind::GradientBoosting } else { ModelKind::RandomForest },
                split_probability: 0.6 + 0.4 * ((i % 5) as f64 / 4.0),
                threshold_levels: (i % 3 == 0).then_some(8),
                seed,
            })
        })
        .collect()
}

pub fn sweep_data(forest: &Forest, index: usize, rows: usize, missing_rate: f64) -> arbor_core::synth::SyntheticData {
    random_data(&DataSpec {
        rows,
        num_features: forest.num_features,
        sparsity: 0.1,
        missing_rate,
        value_levels: index.is_multiple_of(3).then_some(8),
        seed: 5000 + index as u64,
    })
}
