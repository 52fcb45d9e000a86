//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the screening toolkit.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Invalid argument or malformed data.
    #[error("input error: {0}")]
    Input(String),

    /// Too few observations for the requested operation.
    #[error("size error: need at least {min} observations, got {got}")]
    Size { min: usize, got: usize },

    /// An iterative fit failed to converge or was handed degenerate data.
    #[error("fit error in {stage}: {message}")]
    Fit {
        stage: &'static str,
        message: String,
    },

    /// No grid threshold met the detection tolerance. Carries the full
    /// (threshold, detection fraction) table so callers can inspect it.
    #[error("calibration failed: no grid threshold reached detection tolerance {tolerance}")]
    CalibrationFailed {
        tolerance: f64,
        table: Vec<(f64, f64)>,
    },
}

impl CoreError {
    pub fn input(msg: impl Into<String>) -> Self {
        CoreError::Input(msg.into())
    }

    pub fn fit(stage: &'static str, msg: impl Into<String>) -> Self {
        CoreError::Fit {
            stage,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
