use sparse_ht::HtError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] HtError),
    /// Some sweep cells diverged; outputs were still written.
    #[error("{0}")]
    SweepDiverged(String),
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T, BenchError> {
    Err(BenchError::Usage(msg.into()))
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl BenchError {
    /// Process exit status: 2 for bad arguments, 3 for divergence or other
    /// numerical failure, 4 for unreadable or malformed files.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Usage(_) => EXIT_USAGE,
            BenchError::Io(_) => EXIT_IO,
            BenchError::SweepDiverged(_) => EXIT_DIVERGED,
            BenchError::Core(e) => match e {
                HtError::InvalidArgument(_) => EXIT_USAGE,
                HtError::Divergence { .. } | HtError::NumericOverflow { .. } | HtError::SvdNoConvergence { .. } => {
                    EXIT_DIVERGED
                }
                HtError::Parse { .. } | HtError::Format(_) | HtError::Io(_) | HtError::Json(_) => EXIT_IO,
            },
        }
    }
}
