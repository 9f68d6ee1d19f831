//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by networks, environments, buffers, trainers, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input had the wrong dimension or shape.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// A forward or backward pass produced a non-finite value.
    #[error("numeric overflow in layer {layer}: {detail}")]
    NumericOverflow { layer: usize, detail: String },

    /// The scripted expert could not produce enough successful episodes.
    #[error("demo generation failed: {got} successes after {attempts} attempts (wanted {wanted})")]
    GenerationFailure {
        wanted: usize,
        got: usize,
        attempts: usize,
    },

    /// An expert buffer was used before Monte-Carlo annotation.
    #[error("expert buffer is missing Monte-Carlo annotations (transition {index})")]
    MissingAnnotation { index: usize },

    /// Rewards in the expert and agent data did not share a common sign.
    #[error("reward sign violation: {summary}")]
    SignViolation {
        summary: String,
        /// (source, transition index, reward) for each offender.
        offenders: Vec<(String, usize, f64)>,
    },

    /// A batch was requested from an empty buffer.
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,

    /// The termination threshold needs at least two expert trajectories.
    #[error("insufficient corpus: DTW threshold needs at least 2 trajectories, got {got}")]
    InsufficientCorpus { got: usize },

    /// Both paired samples were identical; the signed-rank test is undefined.
    #[error("undefined test: all paired differences are zero")]
    UndefinedTest,

    /// Metrics files cover different evaluation grids and cannot be merged.
    #[error("curve alignment error: {0}")]
    Alignment(String),

    /// A config, dataset, or checkpoint file could not be parsed.
    #[error("parse error in {path}:{line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::RejectedInput(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }
}
