use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot read dataset `{path}`: {message}")]
    Dataset { path: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(nystrom_core::Error),

    #[error("i/o error on `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Parameter errors raised by the core library point at a config value that
/// does not fit the data; everything else is a numerical failure.
impl From<nystrom_core::Error> for BenchError {
    fn from(e: nystrom_core::Error) -> Self {
        match e {
            nystrom_core::Error::InvalidParameter { name, reason } => BenchError::Config {
                field: name.to_string(),
                message: reason,
            },
            other => BenchError::Numerical(other),
        }
    }
}

pub type BenchResult<T> = Result<T, BenchError>;

impl BenchError {
    /// Process exit status: 1 for configuration and input problems, 2 for
    /// failures inside the numerical pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        BenchError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }
}
