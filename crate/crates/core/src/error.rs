use thiserror::Error;

/// Errors raised by the numerical routines and the front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("non-finite kernel value at r = {r}")]
    Evaluation { r: f64 },
    #[error("quadrature did not converge ({context}): estimated relative error {rel_err:.3e}")]
    Quadrature { context: String, rel_err: f64 },
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
