use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Error, Debug)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),

    #[error("at least one ranking is required")]
    EmptyRankings,

    /// Without smoothing the MLE puts zero mass on a class that never wins a choice.
    #[error("class {class} never wins a choice event; the unsmoothed MLE does not exist")]
    NoWins { class: usize },

    #[error("{what} supports at most {max} classes, got {n}")]
    TooManyClasses {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("feature dimension mismatch: model expects {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("instance `{0}` has no reference rankings")]
    MissingReferences(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least {needed} objects to split, found {found}")]
    TooFewObjects { needed: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
