use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GolError> = std::result::Result<T, E>;

/// Errors produced anywhere in the generation / optimization pipeline.
#[derive(Debug, Error)]
pub enum GolError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter {name} (index {index}) = {value} is outside bounds [{lower}, {upper}]")]
    ParameterOutOfBounds {
        index: usize,
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("{what} {index} is a zero vector (mean 0)")]
    ZeroVector { what: &'static str, index: usize },

    #[error("class {0} has no samples")]
    MissingClass(usize),

    #[error("class {class} has {count} sample(s); at least 2 are required to split")]
    ClassTooSmall { class: usize, count: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("classifier has not been trained")]
    Untrained,

    #[error("episode {episode}, candidate {candidate} failed: {source}")]
    Candidate {
        episode: usize,
        candidate: usize,
        #[source]
        source: Box<GolError>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl GolError {
    /// True for errors caused by invalid configuration or input files rather
    /// than a failure while running.
    pub fn is_usage(&self) -> bool {
        match self {
            GolError::Config(_)
            | GolError::ParameterOutOfBounds { .. }
            | GolError::DimensionMismatch { .. }
            | GolError::Parse { .. } => true,
            GolError::Candidate { source, .. } => source.is_usage(),
            _ => false,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        GolError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GolError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        GolError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
