use thiserror::Error;

use crate::config::ConfigError;
use crate::gl::Rule;

/// Errors produced by the numerical routines and the run driver.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("n_terms must be at least 1")]
    NoTerms,

    #[error("input sequence is empty")]
    EmptySignal,

    #[error("sample_period must be positive")]
    InvalidSamplePeriod,

    #[error("memory_length {length} is shorter than sample_period {sample_period}")]
    MemoryTooShort { length: f64, sample_period: f64 },

    #[error("operation requires the {expected} rule, got {found}")]
    WrongRule { expected: Rule, found: Rule },

    #[error("invalid order {value} for {what}: must be finite and non-negative")]
    InvalidOrder { what: &'static str, value: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("degenerate implicit step: sum of a_i * T^-beta_i is zero")]
    DegenerateStep,

    #[error("degenerate algebraic loop: 1 + g_p * g_c is zero")]
    DegenerateLoop,

    #[error("frequency {omega} rad/s outside (0, pi/T] = (0, {nyquist}]")]
    FrequencyOutOfRange { omega: f64, nyquist: f64 },

    #[error("transfer function has a pole at omega = {omega} rad/s")]
    Pole { omega: f64 },

    #[error("length mismatch: {what} has {found} samples, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("n_steps must be at least {min}, got {found}")]
    TooFewSteps { min: usize, found: usize },

    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("expectation failed: {0}")]
    Expectation(String),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
