use thiserror::Error;

/// Errors shared across the simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A spec or config field violates an invariant. `field` is the dotted
    /// path of the offending field (e.g. `system.mass`).
    #[error("{field}: {message}")]
    InvalidSpec { field: String, message: String },

    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },

    #[error("incompatible grids: {message}")]
    GridMismatch { message: String },

    #[error(
        "circulant embedding clipped {clipped:.3e} of total spectral mass (budget {budget:.1e})"
    )]
    EmbeddingClip { clipped: f64, budget: f64 },

    #[error("integration overflow: non-finite state at step {step}")]
    StepOverflow { step: usize },

    #[error("dimension mismatch: {message}")]
    DimensionMismatch { message: String },

    #[error("unsupported system: {message}")]
    Unsupported { message: String },

    #[error("mode grid under-resolved: {message}")]
    UnderResolved { message: String },

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),
}

impl Error {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
