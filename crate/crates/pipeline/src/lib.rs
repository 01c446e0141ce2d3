//! End-to-end hide/extract: codec → probability-flow generation →
//! (latent decode) and back.

mod batch;
mod config;
mod diagnostics;
mod manifest;

pub use batch::{
    analysis_batches, demap_batch, initial_noise, recover, roundtrip, synthesize, trial_batch, AnalysisBatches, RoundTrip, Trial,
};
pub use config::{
    reference_latent, reference_pixel, Mode, PipelineConfig, LATENT_RHO, LATENT_STD, LATENT_WIDE_INDICES, LATENT_WIDE_STD, PIXEL_SHAPE,
    PIXEL_VAR, REFERENCE_ORDER, REFERENCE_STEPS,
};
pub use diagnostics::{manifold_reduction_fraction, residual_shift, ResidualShift};
pub use manifest::Manifest;

use gsteg_analysis::AnalysisError;
use gsteg_channels::ChannelError;
use gsteg_codec::{pack_message, unpack_message, CodecError, NoiseTensor, SymbolStream};
use gsteg_diffusion::DiffusionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("{what} mismatch: stego carries {found}, config gives {expected}")]
    FingerprintMismatch { what: &'static str, expected: String, found: String },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// A pixel-domain stego sample and its public manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Stego {
    pub sample: NoiseTensor,
    pub manifest: Manifest,
}

/// Recovered payload plus the symbol-level view.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub bits: Vec<bool>,
    pub symbols: SymbolStream,
    /// Pre-rounding symbol estimates.
    pub continuous: Vec<f64>,
}

pub fn hide(payload: &[bool], cfg: &PipelineConfig) -> Result<Stego> {
    cfg.validate()?;
    let codec = &cfg.codec;
    let stream = pack_message(payload, codec.q(), codec.dims(), codec.key())?;
    let trial = Trial { key: codec.key().clone(), stream };
    let (x_t, _) = initial_noise(cfg, std::slice::from_ref(&trial))?;
    let pixels = synthesize(cfg, &x_t, &[trial.decoder_seed()])?;
    Ok(Stego { sample: NoiseTensor::new(cfg.pixel_shape(), pixels)?, manifest: Manifest::for_config(cfg, payload.len()) })
}

pub fn extract(stego: &Stego, cfg: &PipelineConfig) -> Result<Extracted> {
    cfg.validate()?;
    stego.manifest.verify(cfg)?;
    if stego.sample.dims() != cfg.pixel_dim() {
        return Err(CodecError::DimensionMismatch { expected: cfg.pixel_dim(), found: stego.sample.dims() }.into());
    }
    let x_hat = recover(cfg, stego.sample.values())?;
    let trial = Trial { key: cfg.codec.key().clone(), stream: SymbolStream::new(vec![], stego.manifest.payload_bits) };
    let (continuous, symbols) = demap_batch(cfg, &x_hat, std::slice::from_ref(&trial), None)?;
    let symbols = SymbolStream::new(symbols, stego.manifest.payload_bits);
    let bits = unpack_message(&symbols, cfg.codec.q())?;
    Ok(Extracted { bits, symbols, continuous })
}
