use thiserror::Error;

/// Errors shared across all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on operation inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid displacement was requested that does not land on a whole cell.
    #[error("misaligned grid displacement: {amount} is not an integer multiple of dq = {dq}")]
    MisalignedDisplacement { amount: f64, dq: f64 },

    /// A grid window was too small to hold the state it was asked to hold.
    #[error("grid window too small: estimated lost mass {lost_mass:.3e}")]
    Truncation { lost_mass: f64 },

    /// A measurement selected a branch or outcome with no probability mass.
    #[error("degenerate measurement: selected outcome has zero weight")]
    DegenerateMeasurement,

    /// Two grids that must share a sampling layout do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A pulse schedule failed structural validation.
    #[error("schedule failed validation: {0}")]
    InvalidSchedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
