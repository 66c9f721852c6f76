use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Input data violates an operation precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// An index or buffer was paired with the wrong data.
    #[error("usage error: {0}")]
    Usage(String),

    /// A file does not follow its on-disk format.
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// Parsed data that is well formed but numerically unusable.
    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("frame {frame_id}: {source}")]
    Frame {
        frame_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by the data being processed rather than by
    /// caller-supplied parameters.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Param(_) | Error::Usage(_) => false,
            Error::Frame { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
