use thiserror::Error;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied parameters outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The requested energy lies strictly inside a continuous band.
    #[error("z = {z} lies inside the band ({lower}, {upper})")]
    InsideBand { z: f64, lower: f64, upper: f64 },
    /// A precondition on the sign of the fiber determinant failed.
    #[error("determinant has the wrong sign at a node: {0}")]
    WrongSign(String),
    /// Numerical routine did not converge or produced non-finite output.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A structural property that must always hold was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Coupling is not at the critical value required by the operation.
    #[error("coupling {mu} is not critical (expected {critical})")]
    NotCritical { mu: f64, critical: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
