//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by estimators, samplers and the simulation harness.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration value was structurally invalid.
    #[error("config error: {0}")]
    Config(String),
    /// A numeric procedure failed (underflow, non-convergence).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Input data could not be parsed.
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        CoreError::Numeric(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        CoreError::Input(msg.into())
    }
}
