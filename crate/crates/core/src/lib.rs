//! Per-user behavioural baselines for access logs, built on an isolation
//! forest that treats categorical fields through a fixed value ordering.
//!
//! Pipeline: [`ingest`] parses logs and groups them per user, [`schema`]
//! turns records into feature vectors, [`forest`] fits and scores isolation
//! forests, [`model`] wraps a forest into a per-user baseline with a
//! decision threshold, and [`eval`] runs the train/test comparison of the
//! seven feature systems. [`synth`] generates synthetic corpora.

pub mod error;
pub mod eval;
pub mod forest;
pub mod ingest;
pub mod model;
pub mod scalar;
pub mod schema;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision forest; the pipeline default.
pub type Forest64 = forest::Forest<f64>;
/// Single-precision forest.
pub type Forest32 = forest::Forest<f32>;
pub type FeatureVector64 = forest::FeatureVector<f64>;
pub type FeatureVector32 = forest::FeatureVector<f32>;
pub type AnomalyScore64 = forest::AnomalyScore<f64>;
pub type TreeNode64 = forest::TreeNode<f64>;
