use thiserror::Error;

/// Errors reported by this crate.
///
/// The command-line tool maps every variant to an exit code: input and usage
/// problems exit with 2, numerical failures (non-convergence, rank
/// degeneracy) exit with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The point set spans too few directions for the requested subspace
    /// dimension: the sensitivity ratio is only defined when some
    /// complement direction meets the row space.
    #[error("rank {rank} is too small for k = {k}: need rank >= k + 1")]
    DegenerateQuery { rank: usize, k: usize },

    #[error("matrix is identically zero (rank 0)")]
    RankZero,

    #[error("trace-ratio iteration did not converge within {max_iterations} iterations (last value {last:.6e})")]
    NonConvergence { max_iterations: usize, last: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("row {index}: {source}")]
    Row {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("stream holds no rows; push data before finalizing")]
    EmptyStream,
}

impl Error {
    /// Exit code used by the CLI: 2 for input errors, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateInput(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidParam(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::EmptyStream => 2,
            Error::DegenerateQuery { .. }
            | Error::RankZero
            | Error::NonConvergence { .. }
            | Error::Numerical(_) => 3,
            Error::Row { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn at_row(index: usize, source: Error) -> Error {
        Error::Row {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
