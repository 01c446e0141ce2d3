//! Distortion channels on tensors in the pixel domain [−1, 1], and a linear
//! encoder/decoder pair with orthonormal rows standing in for a VAE.

mod autoencoder;
mod dct;
mod spec;

pub use autoencoder::{ae_decode, ae_encode, manifold_distance, ToyAutoencoder};
pub use dct::{quality_table, LUMINANCE_TABLE};
pub use spec::{apply_channel, apply_in_place, ChannelSpec};

use gsteg_codec::CodecError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse channel spec {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("plane {height}x{width} too small for {what}")]
    ShapeTooSmall { height: usize, width: usize, what: String },
    #[error("expected {expected} components, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input at component {0}")]
    NonFinite(usize),
    #[error("encoder rows are not orthonormal (max |WWᵀ − I| = {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid autoencoder: {0}")]
    InvalidAutoencoder(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Affine map of [−1, 1] onto `levels` uniform levels and back. Inputs
/// outside the domain are clamped first.
pub fn quantize_value(x: f64, levels: u64) -> f64 {
    let top = (levels - 1) as f64;
    let k = ((x.clamp(-1.0, 1.0) + 1.0) * 0.5 * top).round();
    k / top * 2.0 - 1.0
}
