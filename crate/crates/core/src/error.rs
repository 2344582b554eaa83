use thiserror::Error;

/// Errors raised by the spectral, dissipator, expansion and engine layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate spectrum: gap {gap:.3e} below tolerance {tol:.3e}")]
    DegenerateSpectrum { gap: f64, tol: f64 },

    #[error("eigenbasis path discontinuity: best overlap {overlap:.3e} for level {level}")]
    PathDiscontinuity { level: usize, overlap: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("rate requested at |eps| = {eps:.6} outside tabulated range [0, {max:.6}]")]
    OutOfRange { eps: f64, max: f64 },

    #[error("invalid rate table: {0}")]
    InvalidRateTable(String),

    #[error("rate matrix kernel is not simple ({count} eigenvalues below the zero threshold)")]
    NonSimpleKernel { count: usize },

    #[error("rate matrix violates detailed balance (residual {residual:.3e})")]
    NotDetailedBalance { residual: f64 },

    #[error("coherence block is numerically singular (min singular value {min_singular:.3e})")]
    SingularCoherenceBlock { min_singular: f64 },

    #[error("population relaxation rate vanishes while the gap is time dependent")]
    ZeroRate,

    #[error("step-halving did not converge below {max_steps} steps per period")]
    StepsizeUnderflow { max_steps: usize },

    #[error("positivity violated at t = {t:.6}: min eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidRateTable(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
