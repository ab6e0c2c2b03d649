//! Bit-vector scoring.
//!
//! Internal nodes from every tree are grouped by feature and sorted by
//! threshold. Each node carries a mask over its tree's leaves with zeros at
//! the leaves of its left subtree: those leaves are unreachable when the
//! node tests false (`value > threshold`). For a sample, a binary search per
//! feature finds all false nodes, their masks are ANDed into per-tree
//! results, and the exit leaf is the leftmost leaf that survives.
//!
//! Leaf `p` (in-order position) lives at bit `63 - p`, so the leftmost
//! surviving leaf is `leading_zeros` of the result. One 64-bit word per
//! tree limits trees to 64 leaves. Missing values are rejected: a false-node
//! test has no notion of a default branch.

use crate::block::{Prediction, RowRef, SampleBlock};
use crate::engine::{check_block, check_row, Engine, EngineKind};
use crate::error::{Error, Result};
use crate::model::{Aggregation, Forest, Node};

pub const MAX_LEAVES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsNodeEntry {
    pub tree_index: u32,
    pub threshold: f64,
    pub mask: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuickScorerModel {
    /// Indexed by feature; each list ascending by threshold.
    groups: Vec<Vec<QsNodeEntry>>,
    /// Per tree, leaf values in left-to-right order.
    leaf_values: Vec<Vec<f64>>,
    agg: Aggregation,
}

/// Mask with zeros at in-order leaf positions `lo..hi`.
fn clear_leaves(lo: usize, hi: usize) -> u64 {
    let width = hi - lo;
    let ones = if width == 64 { u64::MAX } else { ((1u64 << width) - 1) << (64 - hi) };
    !ones
}

pub fn lower_quickscorer(forest: &Forest) -> Result<QuickScorerModel> {
    let mut groups: Vec<Vec<QsNodeEntry>> = vec![Vec::new(); forest.num_features];
    let mut leaf_values = Vec::with_capacity(forest.trees.len());
    for (t, tree) in forest.trees.iter().enumerate() {
        let leaves = tree.num_leaves();
        if leaves > MAX_LEAVES {
            return Err(Error::TooManyLeaves { tree: t, leaves });
        }
        let spans = tree.leaf_spans();
        for node in &tree.nodes {
            if let Node::Internal(s) = node {
                let (lo, hi) = spans[s.left];
                groups[s.feature].push(QsNodeEntry {
                    tree_index: t as u32,
                    threshold: s.threshold,
                    mask: clear_leaves(lo, hi),
                });
            }
        }
        leaf_values.push(
            tree.leaves_in_order()
                .into_iter()
                .map(|i| match tree.nodes[i] {
                    Node::Leaf { value } => value,
                    Node::Internal(_) => unreachable!(),
                })
                .collect(),
        );
    }
    for group in &mut groups {
        group.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    }
    Ok(QuickScorerModel { groups, leaf_values, agg: forest.aggregation() })
}

impl QuickScorerModel {
    pub fn groups(&self) -> &[Vec<QsNodeEntry>] {
        &self.groups
    }

    pub fn group_mut(&mut self, feature: usize) -> &mut Vec<QsNodeEntry> {
        &mut self.groups[feature]
    }

    pub fn leaf_values(&self) -> &[Vec<f64>] {
        &self.leaf_values
    }

    pub fn num_entries(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Per-tree result masks for one dense row.
    pub fn tree_masks(&self, row: RowRef<'_>, masks: &mut Vec<u64>) {
        masks.clear();
        masks.resize(self.leaf_values.len(), u64::MAX);
        for (feature, group) in self.groups.iter().enumerate() {
            let value = row.value(feature);
            // First entry with threshold >= value; everything before it is false.
            let false_nodes = group.partition_point(|e| e.threshold < value);
            for entry in &group[..false_nodes] {
                masks[entry.tree_index as usize] &= entry.mask;
            }
        }
    }

    fn exits_into(&self, row: RowRef<'_>, masks: &mut Vec<u64>, out: &mut Vec<f64>) {
        self.tree_masks(row, masks);
        out.extend(
            masks
                .iter()
                .zip(&self.leaf_values)
                .map(|(mask, leaves)| leaves[mask.leading_zeros() as usize]),
        );
    }

    pub fn score(&self, row: RowRef<'_>) -> Result<Prediction> {
        check_row(EngineKind::QuickScorer, self.groups.len(), row)?;
        let mut masks = Vec::new();
        let mut exits = Vec::with_capacity(self.leaf_values.len());
        self.exits_into(row, &mut masks, &mut exits);
        Ok(self.agg.predict(exits.iter().fold(0.0, |acc, v| acc + v)))
    }
}

impl Engine for QuickScorerModel {
    fn kind(&self) -> EngineKind {
        EngineKind::QuickScorer
    }

    fn num_features(&self) -> usize {
        self.groups.len()
    }

    fn num_trees(&self) -> usize {
        self.leaf_values.len()
    }

    fn aggregation(&self) -> Aggregation {
        self.agg
    }

    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()> {
        check_block(self, block)?;
        out.clear();
        out.reserve(block.num_rows() * self.leaf_values.len());
        let mut masks = Vec::with_capacity(self.leaf_values.len());
        for row in block.rows() {
            self.exits_into(row, &mut masks, out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Sample;
    use crate::model::{predict_naive, Direction, ModelKind, Tree};
    use crate::synth::{random_data, random_forest, DataSpec, ForestSpec};

    fn forest(trees: Vec<Tree>, num_features: usize) -> Forest {
        Forest { trees, num_features, kind: ModelKind::GradientBoosting, base_score: 0.0 }
    }

    fn stump() -> Forest {
        forest(
            vec![Tree::new(vec![Node::internal(0, 2.0, 1, 2, Direction::Left), Node::leaf(0.3), Node::leaf(-0.1)])],
            1,
        )
    }

    #[test]
    fn single_leaf_tree() {
        let model = lower_quickscorer(&forest(vec![Tree::new(vec![Node::leaf(0.9)])], 1)).unwrap();
        assert_eq!(model.groups(), &[Vec::<QsNodeEntry>::new()]);
        assert_eq!(model.leaf_values(), &[vec![0.9]]);
        assert_eq!(model.score(Sample::dense(vec![3.0]).row()).unwrap().raw_score, 0.9);
    }

    #[test]
    fn stump_mask_kills_left_leaf() {
        let model = lower_quickscorer(&stump()).unwrap();
        let entry = model.groups()[0][0];
        assert_eq!(entry.mask, !(1u64 << 63));
        assert_eq!(model.score(Sample::dense(vec![5.0]).row()).unwrap().raw_score, -0.1);
        // Equal to the threshold: not a false node.
        assert_eq!(model.score(Sample::dense(vec![2.0]).row()).unwrap().raw_score, 0.3);
    }

    #[test]
    fn rejects_missing_and_wide_trees() {
        let model = lower_quickscorer(&stump()).unwrap();
        assert!(matches!(
            model.score(Sample::from_options(&[None]).row()),
            Err(Error::MissingValueUnsupported { .. })
        ));
        assert!(matches!(
            model.score(Sample::dense(vec![1.0, 2.0]).row()),
            Err(Error::DimensionMismatch { .. })
        ));
        let deep = random_forest(&ForestSpec { trees: 3, max_depth: 8, split_probability: 1.0, ..Default::default() });
        assert!(matches!(lower_quickscorer(&deep), Err(Error::TooManyLeaves { tree: 0, leaves: 256 })));
    }

    #[test]
    fn exactly_sixty_four_leaves_fit() {
        let full = random_forest(&ForestSpec { trees: 2, max_depth: 6, split_probability: 1.0, ..Default::default() });
        assert_eq!(full.max_leaves(), 64);
        let model = lower_quickscorer(&full).unwrap();
        let data = random_data(&DataSpec { rows: 300, ..Default::default() });
        for block in data.blocks(300).unwrap() {
            for row in block.rows() {
                assert_eq!(model.score(row).unwrap(), predict_naive(&full, row).unwrap());
            }
        }
    }

    #[test]
    fn masks_clear_exactly_the_left_subtree() {
        let f = random_forest(&ForestSpec { trees: 8, max_depth: 6, ..Default::default() });
        let model = lower_quickscorer(&f).unwrap();
        assert_eq!(model.num_entries(), f.trees.iter().map(Tree::num_internal).sum::<usize>());
        for group in model.groups() {
            assert!(group.windows(2).all(|w| w[0].threshold <= w[1].threshold));
            for e in group {
                let tree = &f.trees[e.tree_index as usize];
                let leaves = tree.num_leaves();
                assert_ne!(e.mask, u64::MAX);
                let in_tree = if leaves == 64 { u64::MAX } else { !(u64::MAX >> leaves) };
                assert_eq!(e.mask | in_tree, u64::MAX, "bits past the last leaf stay set");
                let cleared = (!e.mask & in_tree).count_ones() as usize;
                let left_leaf_counts: Vec<usize> = tree
                    .nodes
                    .iter()
                    .filter_map(|n| match n {
                        Node::Internal(s) if s.threshold == e.threshold => {
                            let (lo, hi) = tree.leaf_spans()[s.left];
                            Some(hi - lo)
                        }
                        _ => None,
                    })
                    .collect();
                assert!(left_leaf_counts.contains(&cleared));
            }
        }
    }
}
