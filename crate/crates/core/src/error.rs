use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("synthetic page generation failed: {0}")]
    Generation(String),
    #[error("empty ground truth text")]
    EmptyGroundTruth,
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("page {page}: {source}")]
    Page {
        page: String,
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

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Wraps the error with the id of the page being processed.
    pub fn in_page(self, page: &str) -> Self {
        match self {
            e @ Error::Page { .. } => e,
            e => Error::Page {
                page: page.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by malformed or missing input files rather
    /// than by a processing stage.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Page { source, .. } => source.is_input_error(),
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Image { .. }
            | Error::Record { .. }
            | Error::InvalidBox(_)
            | Error::InvalidSequence(_)
            | Error::Config(_) => true,
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
