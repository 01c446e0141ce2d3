use crate::{GaussianityError, Result};

pub const MIN_SAMPLES: usize = 100_000;
pub const MIN_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalKlConfig {
    pub bins: usize,
    /// Histogram support is `[−half_width, half_width]`; tails fold into the edge bins.
    pub half_width: f64,
    /// Added to every bin count before normalizing.
    pub epsilon: f64,
    /// Returned for degenerate (zero-variance) input.
    pub cap: f64,
}

impl Default for EmpiricalKlConfig {
    fn default() -> Self {
        EmpiricalKlConfig { bins: 64, half_width: 8.0, epsilon: 1e-12, cap: 1e3 }
    }
}

/// Histogram estimate of D_KL(p̂ ‖ N(0,1)).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalKl {
    pub estimate: f64,
    /// Leading-order plug-in bias (bins − 1)/(2n) (Miller–Madow).
    pub bias: f64,
    pub samples: usize,
    pub bins: usize,
    pub degenerate: bool,
}

impl EmpiricalKl {
    pub fn bias_corrected(&self) -> f64 {
        (self.estimate - self.bias).max(0.0)
    }

    pub fn bias_note(&self) -> String {
        format!(
            "plug-in histogram estimator over {} bins on {} samples; expected upward bias ≈ {:.3e} (Miller–Madow)",
            self.bins, self.samples, self.bias
        )
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn empirical_kl(samples: &[f64], cfg: &EmpiricalKlConfig) -> Result<EmpiricalKl> {
    if samples.len() < MIN_SAMPLES {
        return Err(GaussianityError::InsufficientSamples { found: samples.len(), required: MIN_SAMPLES });
    }
    if cfg.bins < MIN_BINS {
        return Err(GaussianityError::TooFewBins { found: cfg.bins, required: MIN_BINS });
    }
    let n = samples.len() as f64;
    let bias = (cfg.bins as f64 - 1.0) / (2.0 * n);
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Ok(EmpiricalKl { estimate: cfg.cap, bias, samples: samples.len(), bins: cfg.bins, degenerate: true });
    }

    let width = 2.0 * cfg.half_width / cfg.bins as f64;
    let mut counts = vec![0.0f64; cfg.bins];
    for &x in samples {
        let j = ((x + cfg.half_width) / width).floor();
        let j = if j.is_nan() { 0 } else { j.clamp(0.0, (cfg.bins - 1) as f64) as usize };
        counts[j] += 1.0;
    }
    let total = n + cfg.epsilon * cfg.bins as f64;
    let mut kl = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        let lo = if j == 0 { f64::NEG_INFINITY } else { -cfg.half_width + j as f64 * width };
        let hi = if j + 1 == cfg.bins { f64::INFINITY } else { -cfg.half_width + (j + 1) as f64 * width };
        let q = normal_cdf(hi) - normal_cdf(lo);
        let p = (c + cfg.epsilon) / total;
        kl += p * (p / q).ln();
    }
    let estimate = kl.min(cfg.cap);
    Ok(EmpiricalKl { estimate, bias, samples: samples.len(), bins: cfg.bins, degenerate: false })
}
