use thiserror::Error;

/// Errors surfaced by the simulation and verification layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix dimensions do not conform for the requested operation.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter lies outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical contract was violated (non-Hermitian input, imaginary
    /// residual above tolerance, broken normalization, ...).
    #[error("contract violated: {0}")]
    Contract(String),

    /// The matrix has an eigenvalue below the PSD tolerance floor.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    /// The operation is not defined for the given configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
