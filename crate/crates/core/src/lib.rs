//! Self-similar Gaussian processes: covariance kernels, Gram matrices,
//! Markov classification, path sampling and p-variation.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod format;
pub mod cli;
pub mod gram;
pub mod kernels;
pub mod linalg;
pub mod markov;
pub mod quad;
pub mod rng;
pub mod samplers;
pub mod variation;

pub use error::{Result, SsgmError};

/// Version tag embedded in every JSON report.
pub const REPORT_SCHEMA_VERSION: &str = "1";

pub fn report_schema_version() -> &'static str {
    REPORT_SCHEMA_VERSION
}
