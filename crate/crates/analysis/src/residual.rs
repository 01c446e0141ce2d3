use gsteg_codec::NoiseTensor;

use crate::{AnalysisError, Result};

pub const RESIDUAL_BINS: usize = 128;

/// Normalized histogram on `[0, upper]` with equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub upper: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    fn build(values: impl Iterator<Item = f64>, upper: f64, bins: usize) -> Self {
        let mut mass = vec![0.0; bins];
        let mut n = 0usize;
        for v in values {
            let j = if upper > 0.0 { ((v / upper) * bins as f64) as usize } else { 0 };
            mass[j.min(bins - 1)] += 1.0;
            n += 1;
        }
        mass.iter_mut().for_each(|m| *m /= n as f64);
        Histogram { upper, mass }
    }

    pub fn width(&self) -> f64 {
        self.upper / self.mass.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.mass.len()).map(|j| (j as f64 + 0.5) * w).collect()
    }

    /// Mass divided by bin width.
    pub fn density(&self) -> Vec<f64> {
        let w = self.width();
        self.mass.iter().map(|m| if w > 0.0 { m / w } else { *m }).collect()
    }
}

/// Residual of a batch against its baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    /// Per-component mean of |sample − baseline| over the batch.
    pub mean_abs: Vec<f64>,
    pub shape: [usize; 3],
    /// Distribution of every per-component residual magnitude in the batch.
    pub histogram: Histogram,
    pub batch: usize,
    /// Mean over samples of ‖sample − baseline‖².
    pub mean_energy: f64,
    /// Mean residual magnitude over all components and samples.
    pub mean_magnitude: f64,
}

fn check(a: &[NoiseTensor], b: &[NoiseTensor]) -> Result<()> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch { left: a.len(), right: b.len() });
    }
    for (x, y) in a.iter().zip(b) {
        if x.shape() != y.shape() {
            return Err(AnalysisError::ShapeMismatch { left: x.shape(), right: y.shape() });
        }
    }
    Ok(())
}

fn stats(group: &[NoiseTensor], baseline: &[NoiseTensor], upper: f64) -> ResidualStats {
    let shape = group[0].shape();
    let d = group[0].dims();
    let mut mean_abs = vec![0.0; d];
    let mut energy = 0.0;
    for (s, b) in group.iter().zip(baseline) {
        for (i, (x, y)) in s.values().iter().zip(b.values()).enumerate() {
            let r = (x - y).abs();
            mean_abs[i] += r;
            energy += r * r;
        }
    }
    let n = group.len() as f64;
    mean_abs.iter_mut().for_each(|m| *m /= n);
    let mean_magnitude = mean_abs.iter().sum::<f64>() / d as f64;
    let residuals = group.iter().zip(baseline).flat_map(|(s, b)| s.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()));
    ResidualStats {
        mean_abs,
        shape,
        histogram: Histogram::build(residuals, upper, RESIDUAL_BINS),
        batch: group.len(),
        mean_energy: energy / n,
        mean_magnitude,
    }
}

fn max_residual(group: &[NoiseTensor], baseline: &[NoiseTensor]) -> f64 {
    group
        .iter()
        .zip(baseline)
        .flat_map(|(s, b)| s.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Residual fields of the stego and control batches against the baseline,
/// histogrammed on a shared grid `[0, max residual of both groups]`.
pub fn residual_stats(stego: &[NoiseTensor], baseline: &[NoiseTensor], control: &[NoiseTensor]) -> Result<(ResidualStats, ResidualStats)> {
    check(stego, baseline)?;
    check(control, baseline)?;
    if stego.is_empty() {
        return Err(AnalysisError::Empty("batch"));
    }
    let upper = max_residual(stego, baseline).max(max_residual(control, baseline));
    Ok((stats(stego, baseline, upper), stats(control, baseline, upper)))
}

/// Wasserstein-1 distance between two histograms on the same grid.
pub fn wasserstein1(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.mass.len() != b.mass.len() || a.upper != b.upper {
        return Err(AnalysisError::GridMismatch);
    }
    let mut cdf = 0.0;
    let mut total = 0.0;
    for (p, q) in a.mass.iter().zip(&b.mass) {
        cdf += p - q;
        total += cdf.abs();
    }
    Ok(total * a.width())
}
