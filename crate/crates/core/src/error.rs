use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },
}

/// Reasons a [`SystemConfig`](crate::SystemConfig) fails validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("`{0}` must be at least 1")]
    ZeroCount(&'static str),

    #[error("m_partial = {0} is not a power of two (repetition counts must be 2^q)")]
    NotPowerOfTwo(u32),

    #[error("m_partial = {m_partial} does not divide m_base = {m_base}")]
    NotDivisor { m_partial: u32, m_base: u32 },

    #[error("`{0}` must be a number, got NaN")]
    NotANumber(&'static str),

    #[error("snr_db must not be +inf")]
    InfiniteSnr,

    #[error("preamble index {index} out of range for {count} available")]
    PreambleOutOfRange { index: usize, count: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
