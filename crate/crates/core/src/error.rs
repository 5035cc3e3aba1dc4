use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (negative time, ε ≤ 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    /// Operands built on incompatible meshes or bases.
    #[error("shape error: {0}")]
    Shape(String),

    /// An operation was requested on a space it is not defined for.
    #[error("logic error: {0}")]
    Logic(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("non-finite state at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("decay rate undefined: {0}")]
    UndefinedRate(String),

    #[error("history lift failed: {0}")]
    Lift(String),

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("invalid study spec: {0}")]
    Spec(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-provided configuration or files rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::UnknownKey(_) | Error::Spec(_) | Error::Io(_)
        )
    }
}
