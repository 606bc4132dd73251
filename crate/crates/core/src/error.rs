use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index ({row}, {col}) outside {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("singular value iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported exponent p = {0}: {1}")]
    UnsupportedExponent(f64, String),
    #[error("the chosen parameters give a zero gap (|gap| = {gap:e} <= {tolerance:e})")]
    ZeroGap { gap: f64, tolerance: f64 },
    #[error("integer overflow computing {0}")]
    Overflow(String),
    #[error("corrupt sketch encoding: {0}")]
    Decode(String),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
