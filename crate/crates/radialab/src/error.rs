pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
///
/// Variants split into configuration problems (bad parameters, bad files)
/// and numerical failures (divergence, bracketing, convergence). The CLI
/// maps the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("no bracket found: {0}")]
    BracketFailure(String),

    #[error("empty sample")]
    EmptySample,

    #[error("{0}")]
    Domain(String),

    #[error("shape declares no boundary tail")]
    MissingTail,

    #[error("regularity check failed: {0}")]
    RegularityFailure(String),

    #[error("ambient dimension must be an integer, got d = {0}")]
    NonIntegerDimension(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration and I/O
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
