//! File formats, reference oracles, self-checks and experiment commands for
//! constrained multi-objective gradient aggregation.
//!
//! The numerical routines live in `comoga-core`; this crate reads and writes
//! model, archive, report and trajectory files, runs the experiment
//! commands behind the `comoga` binary, and cross-checks the core against
//! independent nalgebra and LP solvers.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod oracle;
pub mod selftest;

pub use error::{CliError, Result};
