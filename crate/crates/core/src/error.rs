use thiserror::Error;

use crate::controller::StepRecord;
use crate::lqr::PolicyGain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Schur stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("gradient step left the stabilizing set after {iterations} iterations")]
    Divergence {
        iterations: usize,
        last_stabilizing: Box<PolicyGain>,
    },

    #[error("run aborted at t = {t}: state norm {norm:e} exceeded the blow-up threshold")]
    Aborted {
        t: i64,
        norm: f64,
        partial: Box<Vec<StepRecord>>,
    },

    #[error("run aborted at t = {t} (state norm {norm:e}); no certificate")]
    RunAborted { t: i64, norm: f64 },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("log does not match schedule: {0}")]
    LogMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
