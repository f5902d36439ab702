//! Analysis of lexical rating norms.
//!
//! The pipeline filters rated targets, correlates their mean ratings with
//! perceptual, emotional, lexical and associative characteristics, trains
//! random forests to separate mid-scale from extreme targets, attributes
//! predictions to features with Shapley values, and clusters per-target
//! rating distributions with k-means.

pub mod classify;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod select;
pub mod stats;

pub use error::{Error, Result};
