use thiserror::Error;

/// Failure modes of the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at grid point {index}")]
    NonFinite { index: usize },

    #[error("phase value {value} outside the admissible interval (|s| <= 1 - {floor:e})")]
    PhaseOutOfRange { value: f64, floor: f64 },

    #[error("field is not divergence free (relative divergence {relative:e})")]
    NotDivergenceFree { relative: f64 },

    #[error("field has nonzero mean {mean:e}")]
    NonzeroMean { mean: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("pressure iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PressureIterationDivergence { iterations: usize, residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
