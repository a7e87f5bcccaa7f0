use thiserror::Error;

use crate::game::ValidationReport;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("game failed validation:\n{0}")]
    Invalid(ValidationReport),

    #[error("profile space has {count} pure profiles, above the cap of {cap}; flatten fewer constituents or prune the game by message first")]
    TooLarge { count: u128, cap: u128 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{0}")]
    Discourse(String),

    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> GameError {
    GameError::InvalidArgument(msg.into())
}
