use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented constraint.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A tag file is corrupt or truncated.
    #[error("malformed tag data at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    /// In-memory tag data breaks a stream invariant.
    #[error("invalid tag data: {0}")]
    Data(String),

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn analysis(reason: impl Into<String>) -> Self {
        Error::Analysis(reason.into())
    }
}
