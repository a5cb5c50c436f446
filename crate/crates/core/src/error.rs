use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or quadrature that did not reach its accuracy target.
    #[error("evaluation error in {what}: {detail}")]
    Evaluation { what: &'static str, detail: String },

    #[error("simulation error at event {event}: {detail}")]
    Simulation { event: u64, detail: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A checked invariant failed; this indicates a bug rather than bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag, used in structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Evaluation { .. } => "evaluation",
            Error::Simulation { .. } => "simulation",
            Error::Resource(_) => "resource",
            Error::Config(_) => "config",
            Error::Invariant(_) => "invariant",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
