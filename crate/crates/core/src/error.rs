use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("empty interior: {nodes} nodes (need at least {required})")]
    EmptyInterior { nodes: usize, required: usize },
    #[error("disconnected interior: {components} components")]
    Disconnected { components: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("point outside domain: {0:?}")]
    OutsideDomain(Vec<f64>),
    #[error("hyperplane does not meet the domain")]
    HyperplaneMissesDomain,
    #[error("mask straddles the hyperplane")]
    StraddlesHyperplane,
    #[error("solver did not converge in {stage}: {detail}")]
    NotConverged { stage: String, detail: String },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("root bracket failure: {0}")]
    Bracket(String),
    #[error("basis incomplete: {0}")]
    BasisIncomplete(String),
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn not_converged(stage: &str, detail: impl Into<String>) -> Self {
        Error::NotConverged { stage: stage.to_string(), detail: detail.into() }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
