use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric precondition was violated (non-positive box area, bad anchors, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input text or bytes, with the 1-based line number when known.
    #[error("{}", format_parse(.source_name, *.line, .message))]
    Parse {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The external tracker command failed for one sequence.
    #[error("tracker failed on sequence {sequence}: {message}")]
    Driver { sequence: String, message: String },
}

fn format_parse(source_name: &str, line: Option<usize>, message: &str) -> String {
    match line {
        Some(line) => format!("{source_name}:{line}: {message}"),
        None => format!("{source_name}: {message}"),
    }
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
