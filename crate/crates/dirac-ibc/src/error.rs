use thiserror::Error;

/// Errors produced by boundary-condition construction and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary between the given mode spaces (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("incoming and outgoing mode spaces have different dimensions ({plus} vs {minus})")]
    UnbalancedModes { plus: usize, minus: usize },

    #[error("subspace is not a complete Lagrangian subspace: {0}")]
    NotLagrangian(String),

    #[error("vector is not in the required eigenspace (residual {residual:.3e})")]
    NotInEigenspace { residual: f64 },

    #[error("linear system is singular (pivot/singular value {value:.3e})")]
    SingularSystem { value: f64 },

    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
