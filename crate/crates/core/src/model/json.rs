//! Model interchange JSON.
//!
//! ```json
//! {"format_version":1,"model_kind":"gradient_boosting","num_features":4,"base_score":0.0,
//!  "trees":[{"nodes":[{"kind":"internal","feature":2,"threshold":0.5,"left":1,"right":2,"default":"left"},
//!                     {"kind":"leaf","value":0.3},{"kind":"leaf","value":-0.1}]}]}
//! ```

use serde::{Deserialize, Serialize};

use super::{validate_with, Direction, Forest, Limits, ModelKind, Node, Split, Tree};
use crate::error::{Error, Location, Result};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestDoc<N> {
    format_version: u32,
    model_kind: String,
    num_features: usize,
    #[serde(default)]
    base_score: f64,
    trees: Vec<TreeDoc<N>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc<N> {
    nodes: Vec<N>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeDoc {
    Leaf {
        value: f64,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default: DirectionDoc,
    },
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum DirectionDoc {
    Left,
    Right,
}

fn classify(err: serde_json::Error, at: Option<Location>) -> Error {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => Error::SchemaViolation { at, message: err.to_string() },
        Category::Syntax | Category::Eof | Category::Io => Error::MalformedDocument(err.to_string()),
    }
}

/// Parses and validates a model document with the default [`Limits`].
pub fn parse_model(bytes: &[u8]) -> Result<Forest> {
    parse_model_with(bytes, Limits::default())
}

pub fn parse_model_with(bytes: &[u8], limits: Limits) -> Result<Forest> {
    // Syntax first, then schema; nodes are decoded one at a time so schema
    // errors can name their position.
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| classify(e, None))?;
    let doc: ForestDoc<serde_json::Value> = serde_json::from_value(value).map_err(|e| classify(e, None))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::SchemaViolation {
            at: None,
            message: format!("unsupported format_version {}", doc.format_version),
        });
    }
    let kind = ModelKind::parse(&doc.model_kind).ok_or_else(|| Error::SchemaViolation {
        at: None,
        message: format!("unknown model_kind {:?}", doc.model_kind),
    })?;
    let mut trees = Vec::with_capacity(doc.trees.len());
    for (t, tree) in doc.trees.into_iter().enumerate() {
        let mut nodes = Vec::with_capacity(tree.nodes.len());
        for (n, value) in tree.nodes.into_iter().enumerate() {
            let at = Some(Location { tree: t, node: Some(n) });
            let node: NodeDoc = serde_json::from_value(value).map_err(|e| classify(e, at))?;
            nodes.push(match node {
                NodeDoc::Leaf { value } => Node::Leaf { value },
                NodeDoc::Internal { feature, threshold, left, right, default } => Node::Internal(Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default: match default {
                        DirectionDoc::Left => Direction::Left,
                        DirectionDoc::Right => Direction::Right,
                    },
                }),
            });
        }
        trees.push(Tree::new(nodes));
    }
    let forest = Forest { trees, num_features: doc.num_features, kind, base_score: doc.base_score };
    let violations = validate_with(&forest, limits);
    if !violations.is_empty() {
        return Err(Error::InvariantViolation(violations));
    }
    Ok(forest)
}

/// Serializes a forest. Floats are written in shortest round-trip decimal
/// form, so parsing the output reproduces every threshold and leaf exactly.
pub fn to_json(forest: &Forest) -> String {
    let doc = ForestDoc {
        format_version: FORMAT_VERSION,
        model_kind: forest.kind.as_str().to_owned(),
        num_features: forest.num_features,
        base_score: forest.base_score,
        trees: forest
            .trees
            .iter()
            .map(|tree| TreeDoc {
                nodes: tree
                    .nodes
                    .iter()
                    .map(|node| match *node {
                        Node::Leaf { value } => NodeDoc::Leaf { value },
                        Node::Internal(s) => NodeDoc::Internal {
                            feature: s.feature,
                            threshold: s.threshold,
                            left: s.left,
                            right: s.right,
                            default: match s.default {
                                Direction::Left => DirectionDoc::Left,
                                Direction::Right => DirectionDoc::Right,
                            },
                        },
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("forest documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;

    #[test]
    fn minimal_model() {
        let doc = br#"{"format_version":1,"model_kind":"gradient_boosting","num_features":1,
                       "trees":[{"nodes":[{"kind":"leaf","value":0.7}]}]}"#;
        let forest = parse_model(doc).unwrap();
        assert_eq!(forest.trees.len(), 1);
        assert_eq!(forest.trees[0].nodes, vec![Node::leaf(0.7)]);
        assert_eq!(forest.base_score, 0.0);
    }

    #[test]
    fn self_reference_is_invariant_violation() {
        let doc = br#"{"format_version":1,"model_kind":"gradient_boosting","num_features":1,"base_score":0,
            "trees":[{"nodes":[{"kind":"internal","feature":0,"threshold":1.0,"left":0,"right":1,"default":"left"},
                               {"kind":"leaf","value":1}]}]}"#;
        match parse_model(doc) {
            Err(Error::InvariantViolation(v)) => {
                assert_eq!(v[0].rule, Rule::BackwardChild);
                assert_eq!(v[0].at, Some(Location { tree: 0, node: Some(0) }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_categories() {
        assert!(matches!(parse_model(b"{\"format_version\":"), Err(Error::MalformedDocument(_))));
        assert!(matches!(parse_model(b"[1,2"), Err(Error::MalformedDocument(_))));

        let extra_top = br#"{"format_version":1,"model_kind":"random_forest","num_features":1,"trees":[],"x":1}"#;
        assert!(matches!(parse_model(extra_top), Err(Error::SchemaViolation { at: None, .. })));

        let missing = br#"{"format_version":1,"num_features":1,"trees":[]}"#;
        assert!(matches!(parse_model(missing), Err(Error::SchemaViolation { .. })));

        let extra_node = br#"{"format_version":1,"model_kind":"random_forest","num_features":1,
            "trees":[{"nodes":[{"kind":"leaf","value":1}]},{"nodes":[{"kind":"leaf","value":1,"depth":0}]}]}"#;
        match parse_model(extra_node) {
            Err(Error::SchemaViolation { at, .. }) => assert_eq!(at, Some(Location { tree: 1, node: Some(0) })),
            other => panic!("unexpected {other:?}"),
        }

        let bad_kind = br#"{"format_version":1,"model_kind":"linear","num_features":1,"trees":[]}"#;
        assert!(matches!(parse_model(bad_kind), Err(Error::SchemaViolation { .. })));

        let bad_version = br#"{"format_version":2,"model_kind":"random_forest","num_features":1,"trees":[]}"#;
        assert!(matches!(parse_model(bad_version), Err(Error::SchemaViolation { .. })));
    }

    #[test]
    fn layout_flag_is_derived() {
        let doc = br#"{"format_version":1,"model_kind":"gradient_boosting","num_features":1,
            "trees":[{"nodes":[{"kind":"internal","feature":0,"threshold":1.0,"left":2,"right":1,"default":"right"},
                               {"kind":"leaf","value":1},{"kind":"leaf","value":2}]}]}"#;
        let forest = parse_model(doc).unwrap();
        assert!(!forest.trees[0].sibling_adjacent);
    }
}
