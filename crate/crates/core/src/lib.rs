//! Kernel regression and classification for functional data on finite
//! metric spaces.
//!
//! Curves are sampled on a shared grid of `[0, 1]` and compared under the
//! supremum or an `L_p` metric. On top of that the crate provides exact and
//! greedy covering/packing numbers with entropy-exponent fits, the truncated
//! Nadaraya–Watson estimator and the kernel plug-in classifier, discrete
//! divergences, hypercube-indexed hard instances, and a seeded Monte Carlo
//! risk harness.

// NaN must fail validation, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod divergences;
pub mod entropy;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod hard_instances;
pub mod instance;
pub mod metric;
pub mod models;
pub mod risk;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;
pub use metric::{distance, Grid, MetricSpec, PointSet, SampledFunction};
