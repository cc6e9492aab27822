use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The exact solution is not negligible at the box edge, so periodic
    /// truncation would contaminate the check.
    #[error("domain too small: boundary/peak = {ratio:.3e} (limit {limit:.1e})")]
    DomainTooSmall { ratio: f64, limit: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("branch tracking failed at node {node}: jump {jump:.3}")]
    Branch { node: usize, jump: f64 },

    #[error("blow-up: non-finite state after t = {last_good_t}")]
    BlowUp { last_good_t: f64 },

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("no clear peak: {0}")]
    NoPeak(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
