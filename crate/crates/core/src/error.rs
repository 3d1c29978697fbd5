use crate::transcript::SubtestId;
use thiserror::Error;

/// Unified error type for the scoring engine.
///
/// The variants map to the stable exit-code classes of the CLI: data errors
/// (`Parse`, `Structural`), configuration errors (`Config`), and contract
/// violations (`Contract`). `SpanNotPresent` and `Unscorable` are expected
/// per-subtest outcomes that batch drivers turn into "unscored" entries
/// rather than failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("structural error: {0}")]
    Structural(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("no span labeled for subtest {subtest}")]
    SpanNotPresent { subtest: SubtestId },
    #[error("subtest {subtest} unscorable: {reason}")]
    Unscorable { subtest: SubtestId, reason: String },
    #[error("undefined value: {0}")]
    Undefined(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    /// True for the outcomes a batch driver reports as "unscored" instead of
    /// aborting: a missing span or insufficient speech evidence.
    pub fn is_unscored_outcome(&self) -> bool {
        matches!(
            self,
            Error::SpanNotPresent { .. } | Error::Unscorable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
