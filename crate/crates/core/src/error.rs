use thiserror::Error;

use crate::numeric::Domain;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mixed scalar domains: {0} and {1}")]
    MixedDomain(Domain, Domain),

    /// A doubled accumulator that should be even was odd. Over integers this
    /// cannot happen unless the square-based pipeline itself is broken.
    #[error("odd doubled result {0}")]
    OddDoubledResult(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape {rows}x{cols}")]
    InvalidShape { rows: usize, cols: usize },

    #[error("kernel ({kernel}) does not fit inside signal ({signal})")]
    KernelTooLong { kernel: String, signal: String },

    #[error("stale corrections: operand fingerprint {found:016x} does not match {expected:016x}")]
    StaleCorrections { expected: u64, found: u64 },

    #[error("wrong correction set: expected {expected}, got {found}")]
    WrongCorrectionKind { expected: String, found: String },

    #[error("dimensions must be at least 1")]
    ZeroDimension,

    #[error("variant {variant} is not defined for architecture {arch}")]
    IllegalVariant { arch: String, variant: String },

    #[error(
        "width violation at cycle {cycle}: {unit}.{signal} needs {bits} bits, plan allows {limit}"
    )]
    WidthViolation {
        cycle: u64,
        unit: String,
        signal: String,
        bits: u64,
        limit: u32,
    },

    #[error("tile shape mismatch: {0}")]
    TileShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
