use super::{Forest, ModelKind, Node, Tree};
use crate::error::Location;

/// Structural limits a forest must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_depth: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    EmptyForest,
    ZeroFeatures,
    BaseScoreOnRandomForest,
    EmptyTree,
    ChildOutOfBounds,
    BackwardChild,
    MultipleParents,
    Unreachable,
    FeatureOutOfRange,
    NonFiniteThreshold,
    DepthExceeded,
    LayoutFlagMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    /// `None` for forest-level rules.
    pub at: Option<Location>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.at {
            Some(at) => write!(f, "{:?}@{at}", self.rule),
            None => write!(f, "{:?}", self.rule),
        }
    }
}

pub fn validate(forest: &Forest) -> Vec<Violation> {
    validate_with(forest, Limits::default())
}

pub fn validate_with(forest: &Forest, limits: Limits) -> Vec<Violation> {
    let mut out = Vec::new();
    if forest.trees.is_empty() {
        out.push(Violation { rule: Rule::EmptyForest, at: None });
    }
    if forest.num_features == 0 {
        out.push(Violation { rule: Rule::ZeroFeatures, at: None });
    }
    if forest.kind == ModelKind::RandomForest && forest.base_score != 0.0 {
        out.push(Violation { rule: Rule::BaseScoreOnRandomForest, at: None });
    }
    for (t, tree) in forest.trees.iter().enumerate() {
        validate_tree(t, tree, forest.num_features, limits, &mut out);
    }
    out
}

fn validate_tree(t: usize, tree: &Tree, num_features: usize, limits: Limits, out: &mut Vec<Violation>) {
    let at_node = |node: usize| Some(Location { tree: t, node: Some(node) });
    let n = tree.nodes.len();
    if n == 0 {
        out.push(Violation { rule: Rule::EmptyTree, at: Some(Location { tree: t, node: None }) });
        return;
    }
    let before = out.len();
    let mut parents = vec![0u32; n];
    for (i, node) in tree.nodes.iter().enumerate() {
        let Node::Internal(s) = node else { continue };
        if s.feature >= num_features {
            out.push(Violation { rule: Rule::FeatureOutOfRange, at: at_node(i) });
        }
        if !s.threshold.is_finite() {
            out.push(Violation { rule: Rule::NonFiniteThreshold, at: at_node(i) });
        }
        for child in [s.left, s.right] {
            if child >= n {
                out.push(Violation { rule: Rule::ChildOutOfBounds, at: at_node(i) });
            } else if child <= i {
                out.push(Violation { rule: Rule::BackwardChild, at: at_node(i) });
            } else {
                parents[child] += 1;
            }
        }
    }
    for (i, &count) in parents.iter().enumerate().skip(1) {
        match count {
            0 => out.push(Violation { rule: Rule::Unreachable, at: at_node(i) }),
            1 => {}
            _ => out.push(Violation { rule: Rule::MultipleParents, at: at_node(i) }),
        }
    }
    if out.len() > before {
        // Depth and layout are only meaningful on a well-formed tree.
        return;
    }
    if tree.depth() > limits.max_depth {
        out.push(Violation { rule: Rule::DepthExceeded, at: Some(Location { tree: t, node: None }) });
    }
    if tree.sibling_adjacent != Tree::compute_sibling_adjacent(&tree.nodes) {
        out.push(Violation { rule: Rule::LayoutFlagMismatch, at: Some(Location { tree: t, node: None }) });
    }
}
