use thiserror::Error;

#[derive(Debug, Error)]
pub enum HtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value while evaluating component {component}: {detail}")]
    NumericOverflow { component: usize, detail: String },

    #[error("solver diverged at iteration {iteration} ({passes:.3} passes) with step size {step_size:e}")]
    Divergence {
        iteration: u64,
        passes: f64,
        step_size: f64,
    },

    #[error(
        "SVD did not converge for a {rows}x{cols} matrix (off-diagonal residual {residual:e}, max |entry| {max_abs:e})"
    )]
    SvdNoConvergence {
        rows: usize,
        cols: usize,
        residual: f64,
        max_abs: f64,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HtError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(HtError::InvalidArgument(msg.into()))
}
