use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid HTM id {0}")]
    InvalidId(u64),

    #[error("level {level} exceeds limit {limit}")]
    LevelOverflow { level: u32, limit: u32 },

    #[error("depth mismatch: expected level {expected}, found {found}")]
    DepthMismatch { expected: u32, found: u32 },

    #[error("corrupt cover: {0}")]
    CorruptCover(String),

    #[error("missing clip for region {region_id}, trixel {trixel_id}")]
    MissingClip { region_id: u32, trixel_id: u64 },

    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },

    #[error("malformed cover file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// True for errors caused by bad user input rather than a broken invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::CorruptCover(_) | Error::MissingClip { .. }
        )
    }
}
