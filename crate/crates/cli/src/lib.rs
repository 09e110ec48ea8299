//! Experiment driver: config ingestion, the experiment pipelines, slope
//! fitting and report files.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fit;
pub mod pipeline;
pub mod report;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult};
pub use fit::{fit_slope, SlopeFit};
pub use pipeline::{execute, run_experiment, Outcome, RunSettings};
pub use report::{Check, ErrorReport};
