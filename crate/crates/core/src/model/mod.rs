//! The forest IR: flat per-tree node arrays, aggregation rules and the
//! reference traversal every other engine is checked against.
//!
//! Comparison convention, shared by all engines: a sample goes LEFT iff
//! `value <= threshold`, so ties go left. A missing value follows the
//! node's default branch.

mod json;
mod validate;

pub use json::{parse_model, parse_model_with, to_json};
pub use validate::{validate, validate_with, Limits, Rule, Violation};

use crate::block::{Prediction, RowRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub default: Direction,
}

impl Split {
    /// Child index taken by `row` at this node.
    #[inline]
    pub fn next(&self, row: RowRef<'_>) -> usize {
        let go_right = if row.is_missing(self.feature) {
            self.default == Direction::Right
        } else {
            row.value(self.feature) > self.threshold
        };
        if go_right {
            self.right
        } else {
            self.left
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Internal(Split),
    Leaf { value: f64 },
}

impl Node {
    pub fn leaf(value: f64) -> Self {
        Node::Leaf { value }
    }

    pub fn internal(feature: usize, threshold: f64, left: usize, right: usize, default: Direction) -> Self {
        Node::Internal(Split { feature, threshold, left, right, default })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// One decision tree stored as a flat node array rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// `right == left + 1` for every internal node.
    pub sibling_adjacent: bool,
}

impl Tree {
    /// Builds a tree and derives the layout flag from the nodes.
    pub fn new(nodes: Vec<Node>) -> Self {
        let sibling_adjacent = Self::compute_sibling_adjacent(&nodes);
        Tree { nodes, sibling_adjacent }
    }

    pub fn compute_sibling_adjacent(nodes: &[Node]) -> bool {
        nodes.iter().all(|n| match n {
            Node::Internal(s) => s.right == s.left + 1,
            Node::Leaf { .. } => true,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len() - self.num_leaves()
    }

    /// Edges on the longest root-to-leaf path; a lone leaf has depth 0.
    /// Assumes the forward-only layout (children after parents).
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    pub fn node_depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Internal(s) = node {
                depth[s.left] = depth[i] + 1;
                depth[s.right] = depth[i] + 1;
            }
        }
        depth
    }

    /// Leaf node indices in left-to-right (in-order) order.
    pub fn leaves_in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_leaves());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { .. } => out.push(i),
                Node::Internal(s) => {
                    stack.push(s.right);
                    stack.push(s.left);
                }
            }
        }
        out
    }

    /// For every node, the half-open range of in-order leaf positions its
    /// subtree covers.
    pub fn leaf_spans(&self) -> Vec<(usize, usize)> {
        let mut spans = vec![(0, 0); self.nodes.len()];
        let mut next_leaf = 0;
        self.fill_spans(0, &mut next_leaf, &mut spans);
        spans
    }

    fn fill_spans(&self, node: usize, next_leaf: &mut usize, spans: &mut [(usize, usize)]) {
        let start = *next_leaf;
        match &self.nodes[node] {
            Node::Leaf { .. } => *next_leaf += 1,
            Node::Internal(s) => {
                self.fill_spans(s.left, next_leaf, spans);
                self.fill_spans(s.right, next_leaf, spans);
            }
        }
        spans[node] = (start, *next_leaf);
    }

    /// Index of the leaf `row` exits at.
    #[inline]
    pub fn exit_leaf(&self, row: RowRef<'_>) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Internal(s) => i = s.next(row),
            }
        }
    }

    #[inline]
    pub fn exit_value(&self, row: RowRef<'_>) -> f64 {
        match self.nodes[self.exit_leaf(row)] {
            Node::Leaf { value } => value,
            Node::Internal(_) => unreachable!("exit_leaf always stops at a leaf"),
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Internal(_) => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    RandomForest,
    GradientBoosting,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "random_forest" => Some(ModelKind::RandomForest),
            "gradient_boosting" => Some(ModelKind::GradientBoosting),
            _ => None,
        }
    }
}

/// How per-tree exit values combine into one raw score.
///
/// Every engine sums exit values in ascending tree order starting from
/// `0.0` and hands the sum to [`Aggregation::raw`]; that fixed order is what
/// makes scores bitwise comparable across engines and plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregation {
    pub kind: ModelKind,
    pub base_score: f64,
    pub num_trees: usize,
}

impl Aggregation {
    #[inline]
    pub fn raw(&self, sum: f64) -> f64 {
        match self.kind {
            ModelKind::RandomForest => sum / self.num_trees as f64,
            ModelKind::GradientBoosting => self.base_score + sum,
        }
    }

    #[inline]
    pub fn predict(&self, sum: f64) -> Prediction {
        Prediction::from_raw(self.raw(sum))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub num_features: usize,
    pub kind: ModelKind,
    /// Additive offset for boosting; always 0.0 for random forests.
    pub base_score: f64,
}

impl Forest {
    pub fn aggregation(&self) -> Aggregation {
        Aggregation { kind: self.kind, base_score: self.base_score, num_trees: self.trees.len() }
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn max_leaves(&self) -> usize {
        self.trees.iter().map(Tree::num_leaves).max().unwrap_or(0)
    }

    /// A forest holding clones of the selected trees, in the given order.
    /// The aggregation header (kind, base score) is carried over unchanged.
    pub fn subset(&self, tree_indices: &[usize]) -> Forest {
        Forest {
            trees: tree_indices.iter().map(|&t| self.trees[t].clone()).collect(),
            num_features: self.num_features,
            kind: self.kind,
            base_score: self.base_score,
        }
    }

    pub(crate) fn check_width(&self, width: usize) -> Result<()> {
        if width != self.num_features {
            return Err(Error::DimensionMismatch { expected: self.num_features, actual: width });
        }
        Ok(())
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Reference predictor: walk every tree from the root, then aggregate.
pub fn predict_naive(forest: &Forest, row: RowRef<'_>) -> Result<Prediction> {
    forest.check_width(row.len())?;
    let sum = forest.trees.iter().fold(0.0, |acc, tree| acc + tree.exit_value(row));
    Ok(forest.aggregation().predict(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Sample;

    fn stump(feature: usize, threshold: f64, left: f64, right: f64, default: Direction) -> Tree {
        Tree::new(vec![
            Node::internal(feature, threshold, 1, 2, default),
            Node::leaf(left),
            Node::leaf(right),
        ])
    }

    fn two_tree_forest(kind: ModelKind) -> Forest {
        Forest {
            trees: vec![stump(0, 1.0, 0.3, -0.2, Direction::Left), Tree::new(vec![Node::leaf(0.5)])],
            num_features: 1,
            kind,
            base_score: 0.0,
        }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1000.0), 1.0);
        let tiny = sigmoid(-1000.0);
        assert!((0.0..1e-300).contains(&tiny));
        assert!((sigmoid(1.0) - 0.7310585786300049).abs() <= 1e-15);
        assert!((sigmoid(-1.0) - (1.0 - 0.7310585786300049)).abs() <= 1e-15);
    }

    #[test]
    fn zero_leaf_gives_half() {
        let forest = Forest {
            trees: vec![Tree::new(vec![Node::leaf(0.0)])],
            num_features: 3,
            kind: ModelKind::GradientBoosting,
            base_score: 0.0,
        };
        let p = predict_naive(&forest, Sample::dense(vec![7.0, -1.0, 2.0]).row()).unwrap();
        assert_eq!(p.raw_score, 0.0);
        assert_eq!(p.probability, 0.5);
    }

    #[test]
    fn ties_go_left_and_aggregation_follows_kind() {
        let sample = Sample::dense(vec![1.0]);
        let boosted = predict_naive(&two_tree_forest(ModelKind::GradientBoosting), sample.row()).unwrap();
        assert_eq!(boosted.raw_score, 0.3 + 0.5);
        let averaged = predict_naive(&two_tree_forest(ModelKind::RandomForest), sample.row()).unwrap();
        assert_eq!(averaged.raw_score, (0.3 + 0.5) / 2.0);
        assert!((averaged.raw_score - 0.4).abs() < 1e-15);
    }

    #[test]
    fn missing_takes_default() {
        let mut forest = two_tree_forest(ModelKind::GradientBoosting);
        forest.trees[0] = stump(0, 1.0, 0.3, -0.2, Direction::Right);
        let p = predict_naive(&forest, Sample::from_options(&[None]).row()).unwrap();
        assert_eq!(p.raw_score, -0.2 + 0.5);
    }

    #[test]
    fn wrong_width_rejected() {
        let forest = two_tree_forest(ModelKind::GradientBoosting);
        let err = predict_naive(&forest, Sample::dense(vec![1.0, 2.0]).row()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, actual: 2 }));
    }

    #[test]
    fn spans_cover_left_subtrees() {
        // root(f0) -> [ n1(f1) -> [L, L], L ]
        let tree = Tree::new(vec![
            Node::internal(0, 0.0, 1, 2, Direction::Left),
            Node::internal(1, 0.0, 3, 4, Direction::Left),
            Node::leaf(3.0),
            Node::leaf(1.0),
            Node::leaf(2.0),
        ]);
        assert_eq!(tree.leaves_in_order(), vec![3, 4, 2]);
        let spans = tree.leaf_spans();
        assert_eq!(spans[0], (0, 3));
        assert_eq!(spans[1], (0, 2));
        assert_eq!(spans[2], (2, 3));
        assert_eq!(tree.depth(), 2);
    }
}
