//! Branchless traversal over sibling-adjacent node arrays.
//!
//! After breadth-first renumbering the right child of every internal node
//! sits at `left + 1`, so one descent step is
//! `index = left[index] + go_right`, with `go_right` computed as an integer
//! from the comparison (and folded with the default branch when the value
//! is missing). Leaves point at themselves, which lets the loop run exactly
//! `depth` iterations with no data-dependent exit.

use std::collections::VecDeque;

use crate::block::{Prediction, PredictionBlock, RowRef, SampleBlock};
use crate::engine::{check_block, check_row, Engine, EngineKind};
use crate::error::Result;
use crate::model::{Aggregation, Direction, Forest, Node, Tree};

/// Struct-of-arrays tree with `right == left + 1` for every internal node.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicatedTree {
    pub feature: Vec<u32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub is_leaf: Vec<bool>,
    pub leaf_value: Vec<f64>,
    pub default_is_right: Vec<bool>,
    depth: usize,
}

impl PredicatedTree {
    /// Renumbers `tree` breadth-first.
    pub fn from_tree(tree: &Tree) -> Self {
        let n = tree.nodes.len();
        let mut out = PredicatedTree {
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            is_leaf: Vec::with_capacity(n),
            leaf_value: Vec::with_capacity(n),
            default_is_right: Vec::with_capacity(n),
            depth: tree.depth(),
        };
        // Queue order is the new numbering: children are enqueued as a pair.
        let mut queue = VecDeque::from([0usize]);
        let mut next_free = 1u32;
        while let Some(old) = queue.pop_front() {
            let new_index = out.feature.len() as u32;
            match tree.nodes[old] {
                Node::Leaf { value } => {
                    out.feature.push(0);
                    out.threshold.push(0.0);
                    out.left.push(new_index);
                    out.is_leaf.push(true);
                    out.leaf_value.push(value);
                    out.default_is_right.push(false);
                }
                Node::Internal(s) => {
                    out.feature.push(s.feature as u32);
                    out.threshold.push(s.threshold);
                    out.left.push(next_free);
                    out.is_leaf.push(false);
                    out.leaf_value.push(0.0);
                    out.default_is_right.push(s.default == Direction::Right);
                    next_free += 2;
                    queue.push_back(s.left);
                    queue.push_back(s.right);
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.feature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn exit_leaf(&self, row: RowRef<'_>) -> usize {
        let mut index = 0usize;
        for _ in 0..self.depth {
            let feature = self.feature[index] as usize;
            let missing = row.is_missing(feature) as usize;
            let greater = (row.value(feature) > self.threshold[index]) as usize;
            let go_right = ((1 - missing) & greater) | (missing & self.default_is_right[index] as usize);
            let internal = !self.is_leaf[index] as usize;
            index = self.left[index] as usize + (go_right & internal);
        }
        index
    }

    #[inline]
    pub fn exit_value(&self, row: RowRef<'_>) -> f64 {
        self.leaf_value[self.exit_leaf(row)]
    }
}

pub fn lower_predicated(forest: &Forest) -> Vec<PredicatedTree> {
    forest.trees.iter().map(PredicatedTree::from_tree).collect()
}

pub fn predict_predicated(trees: &[PredicatedTree], agg: Aggregation, num_features: usize, row: RowRef<'_>) -> Result<Prediction> {
    check_row(EngineKind::Predicated, num_features, row)?;
    Ok(agg.predict(trees.iter().fold(0.0, |acc, t| acc + t.exit_value(row))))
}

#[derive(Debug, Clone)]
pub struct PredicatedEngine {
    trees: Vec<PredicatedTree>,
    agg: Aggregation,
    num_features: usize,
}

impl PredicatedEngine {
    pub fn new(forest: &Forest) -> Self {
        PredicatedEngine { trees: lower_predicated(forest), agg: forest.aggregation(), num_features: forest.num_features }
    }

    pub fn trees(&self) -> &[PredicatedTree] {
        &self.trees
    }

    pub fn predict(&self, row: RowRef<'_>) -> Result<Prediction> {
        predict_predicated(&self.trees, self.agg, self.num_features, row)
    }
}

impl Engine for PredicatedEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Predicated
    }

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn num_trees(&self) -> usize {
        self.trees.len()
    }

    fn aggregation(&self) -> Aggregation {
        self.agg
    }

    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()> {
        check_block(self, block)?;
        out.clear();
        out.reserve(block.num_rows() * self.trees.len());
        for row in block.rows() {
            out.extend(self.trees.iter().map(|t| t.exit_value(row)));
        }
        Ok(())
    }

    fn predict_block(&self, block: &SampleBlock) -> Result<PredictionBlock> {
        check_block(self, block)?;
        let predictions = block
            .rows()
            .map(|row| self.agg.predict(self.trees.iter().fold(0.0, |acc, t| acc + t.exit_value(row))))
            .collect();
        Ok(PredictionBlock { block_id: block.block_id, row_offset: block.row_offset, predictions })
    }
}
