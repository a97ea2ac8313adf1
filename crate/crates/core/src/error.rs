use std::io;
use std::path::Path;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value was rejected at construction because it breaks a type invariant.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    /// Malformed file content. `line` is 1-based when the format is line oriented.
    #[error("{context}{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Format {
        context: String,
        line: Option<usize>,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format {
            context: String::new(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Attach a file path to I/O and format errors raised by stream-level readers and writers.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            Error::Io { source, .. } => Error::Io {
                context: path.display().to_string(),
                source,
            },
            Error::Format { line, message, .. } => Error::Format {
                context: path.display().to_string(),
                line,
                message,
            },
            other => other,
        }
    }

    /// Whether the error stems from bad configuration rather than bad data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Invalid { field, .. } if field.starts_with("config."))
            || matches!(self, Error::UnknownStrategy { .. })
    }
}
