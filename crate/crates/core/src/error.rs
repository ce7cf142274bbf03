use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Run configuration problems: bad schema, invalid field values,
    /// missing input files. These abort before any tracing starts.
    #[error("config error: {0}")]
    Config(String),

    /// Scene file problems: parse failures, unknown material references,
    /// degenerate geometry.
    #[error("scene error: {0}")]
    Scene(String),

    /// Route file problems.
    #[error("route error: {0}")]
    Routes(String),

    /// Violation of a physical or structural invariant detected at run time.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Dataset integrity or format problems.
    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/input errors,
    /// 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Scene(_) | Error::Routes(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
