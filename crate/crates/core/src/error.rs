use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in a forest a problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub tree: usize,
    pub node: Option<usize>,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.node {
            Some(node) => write!(f, "tree{}/node{}", self.tree, node),
            None => write!(f, "tree{}", self.tree),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed model document: {0}")]
    MalformedDocument(String),

    #[error("schema violation{}: {message}", at.map(|l| format!(" at {l}")).unwrap_or_default())]
    SchemaViolation { at: Option<Location>, message: String },

    #[error("invalid forest: {}", join_violations(.0))]
    InvariantViolation(Vec<crate::model::Violation>),

    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("engine {engine} does not accept missing feature values")]
    MissingValueUnsupported { engine: &'static str },

    #[error("tree {tree} has {leaves} leaves; at most 64 fit one leaf mask")]
    TooManyLeaves { tree: usize, leaves: usize },

    #[error("decision program parse error at token {position}: {message}")]
    ParseError { position: usize, message: String },

    #[error("engine {engine} cannot run inside a {plan} plan")]
    UnsupportedEngineForPlan { engine: &'static str, plan: &'static str },

    #[error("no partial result for block {block} from partition {partition}")]
    MissingPartial { block: usize, partition: usize },

    #[error("store {} is corrupt: {reason}", path.display())]
    StoreCorrupt { path: PathBuf, reason: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RowWidthMismatch { line: usize, expected: usize, found: usize },

    #[error("line {line}, field {field}: {text:?} is not a number")]
    NonNumericField { line: usize, field: usize, text: String },

    #[error("line {line}: column index {index} outside 1..={num_features}")]
    IndexOutOfRange { line: usize, index: usize, num_features: usize },

    #[error("line {line}: column indices must be strictly increasing")]
    NonMonotonicIndices { line: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o failure on {}: {source}", path.display())]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure { path: path.into(), source }
    }
}

fn join_violations(violations: &[crate::model::Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}
