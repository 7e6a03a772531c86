use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum SsdError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("schedule construction failed: {0}")]
    Construction(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("chain failed at t={t}: {source}")]
    Chain {
        t: usize,
        #[source]
        source: Box<SsdError>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SsdError>;

impl SsdError {
    /// Wraps an error with the timestep at which a sampling chain failed.
    pub fn at_step(self, t: usize) -> SsdError {
        SsdError::Chain {
            t,
            source: Box::new(self),
        }
    }
}
