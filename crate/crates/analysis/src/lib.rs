//! Evaluation metrics: payload bit accuracy, residual fields and
//! histograms against a clean baseline, and radial power spectra.

mod residual;
mod spectrum;

pub use residual::{residual_stats, wasserstein1, Histogram, ResidualStats, RESIDUAL_BINS};
pub use spectrum::{radial_power_spectrum, RadialSpectrum, MAX_PLANE};

use gsteg_codec::SymbolStream;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 3], right: [usize; 3] },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("plane {height}x{width} exceeds the direct transform limit of {max}x{max}")]
    PlaneTooLarge { height: usize, width: usize, max: usize },
    #[error("histograms use different bin grids")]
    GridMismatch,
    #[error("payload of {bits} bits needs {needed} symbols of {q} bits, stream has {found}")]
    PayloadTooLong { bits: usize, q: u32, needed: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Matching payload bits and payload bit count. Symbols expand to Q bits
/// big-endian; bits past `orig.payload_len_bits` are padding and skipped.
pub fn bit_matches(orig: &SymbolStream, hat: &SymbolStream, q: u32) -> Result<(usize, usize)> {
    if orig.len() != hat.len() {
        return Err(AnalysisError::LengthMismatch { left: orig.len(), right: hat.len() });
    }
    let bits = orig.payload_len_bits;
    let q_us = q as usize;
    let needed = bits.div_ceil(q_us.max(1));
    if q == 0 || needed > orig.len() {
        return Err(AnalysisError::PayloadTooLong { bits, q, needed, found: orig.len() });
    }
    let mut matches = 0;
    for i in 0..bits {
        let (sym, off) = (i / q_us, i % q_us);
        let shift = q - 1 - off as u32;
        if (orig.symbols[sym] >> shift) & 1 == (hat.symbols[sym] >> shift) & 1 {
            matches += 1;
        }
    }
    Ok((matches, bits))
}

/// Bit accuracy rate over payload bits.
pub fn bit_accuracy(orig: &SymbolStream, hat: &SymbolStream, q: u32) -> Result<f64> {
    let (m, n) = bit_matches(orig, hat, q)?;
    if n == 0 {
        return Err(AnalysisError::Empty("payload"));
    }
    Ok(m as f64 / n as f64)
}

/// Fraction of exactly matching symbols.
pub fn symbol_accuracy(orig: &[u32], hat: &[u32]) -> Result<f64> {
    if orig.len() != hat.len() {
        return Err(AnalysisError::LengthMismatch { left: orig.len(), right: hat.len() });
    }
    if orig.is_empty() {
        return Err(AnalysisError::Empty("symbols"));
    }
    Ok(orig.iter().zip(hat).filter(|(a, b)| a == b).count() as f64 / orig.len() as f64)
}
