use thiserror::Error;

/// Errors raised by the speed-limit engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QslError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0} (need 2 <= d <= 64)")]
    InvalidDimension(usize),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("basis is not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state is stationary with respect to the reference basis")]
    Stationary,

    #[error("an unsupported basis state carries generator weight {0:e}")]
    SupportBoundary(f64),

    #[error("time step too coarse: consecutive overlap {overlap} at step {step}")]
    StepResolution { step: usize, overlap: f64 },

    #[error("target not reached within {t_max} (closest angle {closest_angle:e})")]
    NotReached { t_max: f64, closest_angle: f64 },

    #[error("survival probability is not monotonically decreasing")]
    NonMonotonicSurvival,

    #[error("evolution leaves the two-dimensional subspace (leakage {0:e})")]
    NotEffectively2D(f64),

    #[error("degenerate evolution: {0}")]
    Degenerate(&'static str),

    #[error("operation requires a time-independent Hamiltonian")]
    TimeDependent,

    #[error("Hamiltonian is not self-inverse (max |H^2 - I| = {0:e})")]
    NotSelfInverse(f64),

    #[error("optimizer found no Hamiltonian reaching the target")]
    NoImprovement,

    #[error("grid refinement did not converge after {steps} steps (last relative change {change:e})")]
    NoConvergence { steps: usize, change: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QslError>;
