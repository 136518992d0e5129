use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Singular or ill-conditioned input. `condition` is the ratio
    /// `sigma_min / sigma_max` (or the smallest eigenvalue for moment matrices).
    #[error("degenerate configuration: {what} (condition estimate {condition:e})")]
    Degenerate { what: String, condition: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(what: impl Into<String>, condition: f64) -> Self {
        Error::Degenerate {
            what: what.into(),
            condition,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Short machine-readable kind name.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidState(_) => "invalid-state",
            Error::Degenerate { .. } => "degenerate-configuration",
            Error::NumericalFailure(_) => "numerical-failure",
            Error::NotSupported(_) => "not-supported",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Stage { .. } => unreachable!(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::invalid(format!(
            "{what}: dimension mismatch (expected {expected}, got {got})"
        )));
    }
    Ok(())
}
