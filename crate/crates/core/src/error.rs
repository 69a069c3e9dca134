use thiserror::Error;

use crate::propagate::RunReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("out of range: {0}")]
    Range(String),

    /// Quadrature or iteration stopped short of the requested tolerance.
    #[error("accuracy not reached: {message} (best estimate {best_estimate:e})")]
    Accuracy { message: String, best_estimate: f64 },

    #[error("eigenvector {index} leaks to the domain edge (edge/max = {ratio:e})")]
    BoundaryLeakage { index: usize, ratio: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The packet reached a Dirichlet wall. The report covers the run up to the
    /// step where the loss was detected.
    #[error("norm loss {norm_loss:e} at t = {time}: packet hit the boundary")]
    Boundary {
        norm_loss: f64,
        time: f64,
        report: Box<RunReport>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. }
                | Error::BoundaryLeakage { .. }
                | Error::Convergence(_)
                | Error::Boundary { .. }
        )
    }
}
