use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The terminal state vanishes; the quantitative estimate is vacuous and
    /// the backward-uniqueness branch applies instead.
    #[error("terminal state vanishes: apply the backward-uniqueness branch")]
    VanishingTerminal,
}

pub type Result<T> = std::result::Result<T, Error>;
