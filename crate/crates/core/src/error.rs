use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument or an emitted value is outside its admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// Vector, tree or sequence lengths disagree.
    #[error("shape error: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("function class is empty")]
    EmptyClass,

    #[error("covariate {0} is outside the domain")]
    UnknownCovariate(usize),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A relaxation or entropy evaluation produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An exhaustive search would exceed its configured limits.
    #[error("resource limit exceeded: {what} (reached {reached})")]
    Resource { what: String, reached: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
