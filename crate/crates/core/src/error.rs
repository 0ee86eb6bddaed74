use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LrbError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series, quadrature or sampler failed to reach its tolerance.
    #[error("numeric failure: {msg} (partial value {partial})")]
    Numeric { msg: String, partial: f64 },
    /// The requested regime is recognised but not supported by the model.
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    /// The terminal law and the increment family are inconsistent.
    #[error("model inconsistency: {0}")]
    Model(String),
    /// Malformed configuration or input data.
    #[error("configuration error: {0}")]
    Config(String),
}

impl LrbError {
    pub fn domain(msg: impl Into<String>) -> Self {
        LrbError::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, partial: f64) -> Self {
        LrbError::Numeric { msg: msg.into(), partial }
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        LrbError::Unsupported(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        LrbError::Model(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        LrbError::Config(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LrbError::Domain(_) | LrbError::Config(_) | LrbError::Model(_) => 2,
            LrbError::Unsupported(_) => 3,
            LrbError::Numeric { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, LrbError>;
