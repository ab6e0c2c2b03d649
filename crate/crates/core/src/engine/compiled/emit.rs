use std::fmt::Write;

use rayon::prelude::*;

use super::{CompilationUnit, DecisionProgram};
use crate::hexfloat;
use crate::model::{Direction, Forest, Node, Tree};

/// Trees per compilation unit when the caller does not choose.
pub const DEFAULT_UNIT_SIZE: usize = 8;

/// Emits `forest` with units of `unit_size` trees, in tree order.
pub fn compile_forest(forest: &Forest, unit_size: usize) -> DecisionProgram {
    compile_forest_with(forest, unit_size, false)
}

/// Like [`compile_forest`]; with `parallel` set, units are emitted on the
/// current rayon pool. The output is identical either way.
pub fn compile_forest_with(forest: &Forest, unit_size: usize, parallel: bool) -> DecisionProgram {
    assert!(unit_size >= 1, "unit_size must be positive");
    let indices: Vec<usize> = (0..forest.trees.len()).collect();
    let chunks: Vec<(usize, &[usize])> = indices.chunks(unit_size).enumerate().collect();
    let render = |&(unit_index, trees): &(usize, &[usize])| emit_unit(forest, unit_index, trees);
    let units = if parallel {
        chunks.par_iter().map(render).collect()
    } else {
        chunks.iter().map(render).collect()
    };
    DecisionProgram { kind: forest.kind, base_score: forest.base_score, num_features: forest.num_features, units }
}

fn emit_unit(forest: &Forest, unit_index: usize, trees: &[usize]) -> CompilationUnit {
    let mut text = String::new();
    let _ = writeln!(text, "unit {unit_index} {{");
    for &t in trees {
        let _ = writeln!(text, "  tree {t} {{");
        emit_node(&forest.trees[t], 0, 2, &mut text);
        text.push_str("  }\n");
    }
    text.push_str("}\n");
    CompilationUnit { unit_index, tree_indices: trees.to_vec(), program_text: text }
}

fn emit_node(tree: &Tree, node: usize, indent: usize, out: &mut String) {
    let pad = indent * 2;
    match &tree.nodes[node] {
        Node::Leaf { value } => {
            let _ = writeln!(out, "{:pad$}emit {}", "", hexfloat::format(*value));
        }
        Node::Internal(s) => {
            let default = match s.default {
                Direction::Left => "left",
                Direction::Right => "right",
            };
            let _ = writeln!(
                out,
                "{:pad$}if f{} <= {} missing {default} {{",
                "",
                s.feature,
                hexfloat::format(s.threshold)
            );
            emit_node(tree, s.left, indent + 1, out);
            let _ = writeln!(out, "{:pad$}}} else {{", "");
            emit_node(tree, s.right, indent + 1, out);
            let _ = writeln!(out, "{:pad$}}}", "");
        }
    }
}
