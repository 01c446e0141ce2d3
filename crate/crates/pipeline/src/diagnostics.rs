//! Latent-geometry and residual diagnostics over a batch.

use gsteg_analysis::{residual_stats, wasserstein1, ResidualStats};
use gsteg_channels::{apply_in_place, manifold_distance, ChannelSpec};

use crate::{analysis_batches, initial_noise, synthesize, Mode, PipelineConfig, PipelineError, Result, Trial};

/// Fraction of samples whose re-encoded latent moves closer to the prior
/// center under AWGN of std `sigma` on the emitted pixels. Both the clean
/// and the attacked image are clamped to [−1, 1] before encoding.
pub fn manifold_reduction_fraction(cfg: &PipelineConfig, trials: &[Trial], sigma: f64, seed: u64) -> Result<f64> {
    cfg.validate()?;
    let ae = match (cfg.mode, &cfg.autoencoder) {
        (Mode::Latent, Some(ae)) => ae,
        _ => return Err(PipelineError::InvalidConfig("manifold distance needs latent mode".into())),
    };
    let (x_t, _) = initial_noise(cfg, trials)?;
    let seeds: Vec<u64> = trials.iter().map(Trial::decoder_seed).collect();
    let pixels = synthesize(cfg, &x_t, &seeds)?;
    let spec = ChannelSpec::Awgn { sigma };
    let shape = cfg.pixel_shape();
    let mut closer = 0usize;
    for (i, x) in pixels.chunks_exact(cfg.pixel_dim()).enumerate() {
        let clean: Vec<f64> = x.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let d0 = manifold_distance(&ae.encode_slice(&clean)?);
        let mut attacked = x.to_vec();
        apply_in_place(&spec, shape, &mut attacked, seed.wrapping_add(i as u64))?;
        attacked.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        if manifold_distance(&ae.encode_slice(&attacked)?) < d0 {
            closer += 1;
        }
    }
    Ok(closer as f64 / trials.len().max(1) as f64)
}

/// Stego and control residual statistics plus their W1 shift divided by the
/// mean control residual magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualShift {
    pub stego: ResidualStats,
    pub control: ResidualStats,
    pub w1: f64,
    pub normalized: f64,
}

pub fn residual_shift(cfg: &PipelineConfig, trials: &[Trial]) -> Result<ResidualShift> {
    let b = analysis_batches(cfg, trials)?;
    let (stego, control) = residual_stats(&b.stego, &b.baseline, &b.control)?;
    let w1 = wasserstein1(&stego.histogram, &control.histogram)?;
    let normalized = if control.mean_magnitude > 0.0 { w1 / control.mean_magnitude } else { 0.0 };
    Ok(ResidualShift { stego, control, w1, normalized })
}
