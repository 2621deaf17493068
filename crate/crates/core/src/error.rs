use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time must be nonnegative, got t = {0}")]
    NegativeTime(f64),

    #[error("kernel is not in class K: {0}")]
    NotInClassK(String),

    #[error("class-K certification failed at t = {t}: |nu''(t)| = {value:e} exceeds bound {bound:e}")]
    CertificationFailed { t: f64, value: f64, bound: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("Laplace transform is not available at lambda = {re} + {im}i: {reason}")]
    UnsupportedPoint { re: f64, im: f64, reason: &'static str },

    #[error("no decay exponent: {0}")]
    NoExponent(String),

    #[error("operation requires a strictly passive medium")]
    NotStrictlyPassive,

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("sampled kernels have no finite memory closure")]
    UnsupportedKernel,

    #[error("history horizon exceeded: t = {t} > s_max = {s_max}")]
    HistoryTruncated { t: f64, s_max: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unusable trace: {0}")]
    UnusableTrace(String),
}
