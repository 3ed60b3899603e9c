use thiserror::Error;

/// Failures surfaced by the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {value} at index {index}")]
    Domain { index: usize, value: f64 },

    #[error("value {value} at index {index} is outside the open range of the nonlinearity")]
    Range { index: usize, value: f64 },

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("state diverged at step {step}")]
    Divergence { step: usize },

    #[error("fixed-point solve did not converge: best residual {best_residual:e} after {iterations} iterations")]
    NonConvergence { best_residual: f64, iterations: usize },

    #[error("singular Newton system (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("gain at index {index} is too close to zero ({value:e})")]
    NearZeroGain { index: usize, value: f64 },

    #[error("probe input is the zero vector")]
    ZeroProbe,

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::NonConvergence { .. }
                | Error::SingularJacobian { .. }
                | Error::NearZeroGain { .. }
                | Error::Eigen(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { what, expected, got })
    }
}
