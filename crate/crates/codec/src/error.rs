use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("payload of {bits} bits exceeds capacity of {capacity} bits")]
    CapacityExceeded { bits: usize, capacity: usize },
    #[error("symbol {value} at index {index} does not fit in {q} bits")]
    MalformedSymbol { index: usize, value: u32, q: u32 },
    #[error("stream declares {payload_len_bits} payload bits but holds only {available}")]
    MalformedStream { payload_len_bits: usize, available: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bits per component must be in 1..=16, got {0}")]
    InvalidCapacity(u32),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("stored sigma {stored} differs from recomputed {recomputed}")]
    SigmaMismatch { stored: f64, recomputed: f64 },
    #[error("non-finite value at component {0}")]
    NonFinite(usize),
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("malformed tensor file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
