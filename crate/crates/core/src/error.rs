use thiserror::Error;

/// Errors raised by the solver, the data builders and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("null form not admissible in {mode} mode")]
    NotAdmissible { mode: &'static str },

    #[error("unsupported mode: {0}")]
    Mode(String),

    #[error("breakdown at u = {u}, ubar = {ubar}: |psi| = {value:e} exceeds {threshold:e}")]
    Breakdown {
        u: f64,
        ubar: f64,
        value: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
