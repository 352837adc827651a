use thiserror::Error;

use crate::linalg::Matrix5;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the model or formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t} (h = {h:e} < h_min)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("state component {component} went negative ({value:e}) at t = {t}; step too coarse")]
    NegativeState {
        t: f64,
        component: usize,
        value: f64,
    },

    #[error("no endemic equilibrium: {0}")]
    NoEndemicEquilibrium(String),

    #[error("Newton iteration converged to the disease-free equilibrium")]
    DfeCoincident,

    #[error("eigenvalue iteration did not converge for matrix {matrix:?}")]
    EigenNonConvergence { matrix: Box<Matrix5> },

    #[error("threshold-degenerate: {0}")]
    ThresholdDegenerate(String),

    #[error("degenerate bifurcation: {0}")]
    DegenerateBifurcation(String),

    #[error("cannot normalize sensitivity index: {0}")]
    Normalization(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
