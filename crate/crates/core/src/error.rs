use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty image")]
    EmptyImage,

    #[error("image too small for gradient ({width}x{height}, need at least 3x3)")]
    ImageTooSmall { width: usize, height: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("no vessel region")]
    NoVessel,

    #[error("invalid vessel region: {0}")]
    Vessel(String),

    #[error("curve unsampleable")]
    Unsampleable,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("image id mismatch (report `{report}`, truth `{truth}`)")]
    IdMismatch { report: String, truth: String },

    #[error("malformed corpus: {0}")]
    Corpus(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bad configuration or parameter rather
    /// than by unreadable input.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Param(_) | Error::Config(_))
    }
}
