use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are split into validation failures (bad arguments or
/// configuration, exit code 2 in the CLI) and runtime failures
/// (numerical breakdown, I/O, exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("search space too large: {count} subsets exceed the exhaustive limit of {limit}")]
    TooManySubsets { count: u128, limit: u128 },

    #[error("undefined for fewer than two codewords")]
    TooFewCodewords,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("checksum mismatch: {0}")]
    Checksum(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than runtime conditions.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
                | Error::RankDeficient(_)
                | Error::TooManySubsets { .. }
                | Error::TooFewCodewords
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
