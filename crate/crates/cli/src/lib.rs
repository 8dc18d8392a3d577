//! Experiment driver around the simulation library: JSON configs with a
//! versioned schema, named presets, parallel replica dispatch, and CSV/JSON
//! artifacts that are byte-identical for a given (config, seed) regardless
//! of worker-thread count.

// Negated comparisons are NaN guards: `!(x > 0.0)` must reject NaN where
// `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod runner;
pub mod writers;

/// Every failure is one of two buckets with fixed exit codes: bad input
/// (exit 1) or a config-requested acceptance check that failed (exit 2).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failure: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

pub(crate) fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}
