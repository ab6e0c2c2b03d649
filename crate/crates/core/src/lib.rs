//! Decision-forest inference.
//!
//! The crate is organized around one forest IR ([`model::Forest`]) and a set
//! of interchangeable engines that all compute the same scores:
//!
//! - [`model::predict_naive`]: root-to-leaf traversal, the reference predictor
//! - [`engine::predicated`]: branchless descent over sibling-adjacent arrays
//! - [`engine::quickscorer`]: feature-grouped threshold lists and leaf bit masks
//! - [`engine::tensor`]: traversal lowered to dense matrix products
//! - [`engine::compiled`]: nested if/else decision programs and their interpreter
//!
//! [`dataflow`] runs any engine over batches of [`block::SampleBlock`]s either
//! as a single data-parallel UDF stage or as a model-parallel
//! cross-product/aggregate plan. [`io`] covers CSV, LIBSVM, the native paged
//! block store and the prediction output format.
//!
//! Every engine sends a sample LEFT iff `value <= threshold`; missing values
//! follow the node's default branch.

pub mod block;
pub mod dataflow;
pub mod engine;
mod error;
pub mod hexfloat;
pub mod io;
pub mod model;
pub mod synth;

pub use block::{Prediction, PredictionBlock, RowRef, Sample, SampleBlock};
pub use engine::{lower, Engine, EngineKind};
pub use error::{Error, Result};
pub use model::{
    parse_model, predict_naive, sigmoid, validate, Direction, Forest, ModelKind, Node, Split, Tree,
};
