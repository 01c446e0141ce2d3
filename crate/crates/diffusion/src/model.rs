use crate::{DiffusionError, Result, ScheduleParams};

/// Closed-form noise predictor ε(x, t) of a data distribution whose
/// diffused marginals stay Gaussian (or a Gaussian mixture).
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreModel {
    /// Data ~ N(0, I): every marginal is N(0, I).
    UnitGaussian { dims: usize },
    /// Data ~ N(mean, diag(var)).
    Gaussian { mean: Vec<f64>, var: Vec<f64> },
    /// Data ~ Σ_k w_k N(means[k], diag(var)).
    Mixture { weights: Vec<f64>, means: Vec<Vec<f64>>, var: Vec<f64> },
}

impl ScoreModel {
    pub fn unit(dims: usize) -> Self {
        ScoreModel::UnitGaussian { dims }
    }

    pub fn gaussian(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        let m = ScoreModel::Gaussian { mean, var };
        m.validate()?;
        Ok(m)
    }

    /// Isotropic Gaussian with scalar mean and variance.
    pub fn isotropic(dims: usize, mean: f64, var: f64) -> Result<Self> {
        Self::gaussian(vec![mean; dims], vec![var; dims])
    }

    pub fn mixture(weights: Vec<f64>, means: Vec<Vec<f64>>, var: Vec<f64>) -> Result<Self> {
        let m = ScoreModel::Mixture { weights, means, var };
        m.validate()?;
        Ok(m)
    }

    pub fn dims(&self) -> usize {
        match self {
            ScoreModel::UnitGaussian { dims } => *dims,
            ScoreModel::Gaussian { mean, .. } => mean.len(),
            ScoreModel::Mixture { var, .. } => var.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DiffusionError::InvalidModel(msg.to_string()));
        let check_var = |var: &[f64]| var.iter().all(|v| v.is_finite() && *v >= 0.0);
        match self {
            ScoreModel::UnitGaussian { dims } if *dims == 0 => bad("zero dimensions"),
            ScoreModel::UnitGaussian { .. } => Ok(()),
            ScoreModel::Gaussian { mean, var } => {
                if mean.is_empty() || mean.len() != var.len() {
                    return bad("mean and variance lengths differ or are empty");
                }
                if !check_var(var) || !mean.iter().all(|m| m.is_finite()) {
                    return bad("non-finite mean or negative variance");
                }
                Ok(())
            }
            ScoreModel::Mixture { weights, means, var } => {
                if weights.is_empty() || weights.len() != means.len() {
                    return bad("weights and means differ in count");
                }
                if weights.iter().any(|w| w.is_nan() || *w <= 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return bad("weights must be positive and sum to 1");
                }
                if var.is_empty() || means.iter().any(|m| m.len() != var.len() || !m.iter().all(|v| v.is_finite())) {
                    return bad("component mean length differs from variance length");
                }
                if !check_var(var) || var.contains(&0.0) {
                    return bad("mixture variances must be positive");
                }
                Ok(())
            }
        }
    }

    /// Data prediction D(x) at noise level (α, σ), written into `out`.
    /// `x` may hold several samples back to back.
    pub fn data_pred_into(&self, x: &[f64], alpha: f64, sigma: f64, out: &mut [f64]) {
        let d = self.dims();
        match self {
            ScoreModel::UnitGaussian { .. } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = alpha * xi;
                }
            }
            ScoreModel::Gaussian { mean, var } => {
                // D = mean + g·(x − α·mean), g = α·var/(α²var + σ²); affine per component.
                let (a2, s2) = (alpha * alpha, sigma * sigma);
                let gain: Vec<f64> = var.iter().map(|v| alpha * v / (a2 * v + s2)).collect();
                let offset: Vec<f64> = mean.iter().zip(&gain).map(|(m, g)| m - g * alpha * m).collect();
                for (xs, os) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                    for i in 0..d {
                        os[i] = offset[i] + gain[i] * xs[i];
                    }
                }
            }
            ScoreModel::Mixture { weights, means, var } => {
                let (a2, s2) = (alpha * alpha, sigma * sigma);
                let v: Vec<f64> = var.iter().map(|vi| a2 * vi + s2).collect();
                let log_norm: f64 = -0.5 * v.iter().map(|vi| vi.ln()).sum::<f64>();
                let mut logr = vec![0.0; weights.len()];
                for (xs, os) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                    for (k, (w, mu)) in weights.iter().zip(means).enumerate() {
                        let q: f64 = (0..d).map(|i| (xs[i] - alpha * mu[i]).powi(2) / v[i]).sum();
                        logr[k] = w.ln() + log_norm - 0.5 * q;
                    }
                    let top = logr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = logr.iter().map(|l| (l - top).exp()).sum();
                    os.iter_mut().for_each(|o| *o = 0.0);
                    for (k, mu) in means.iter().enumerate() {
                        let r = (logr[k] - top).exp() / z;
                        for i in 0..d {
                            os[i] += r * (mu[i] + alpha * var[i] * (xs[i] - alpha * mu[i]) / v[i]);
                        }
                    }
                }
            }
        }
    }

    /// Noise prediction ε = (x − α·D)/σ.
    pub fn eps(&self, x: &[f64], alpha: f64, sigma: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        match self {
            ScoreModel::UnitGaussian { .. } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = sigma * xi;
                }
            }
            ScoreModel::Gaussian { mean, var } => {
                let d = self.dims();
                let (a2, s2) = (alpha * alpha, sigma * sigma);
                for (xs, os) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                    for i in 0..d {
                        os[i] = sigma * (xs[i] - alpha * mean[i]) / (a2 * var[i] + s2);
                    }
                }
            }
            ScoreModel::Mixture { .. } => {
                self.data_pred_into(x, alpha, sigma, &mut out);
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = (xi - alpha * *o) / sigma;
                }
            }
        }
        out
    }

    /// ε at grid index `k` of the schedule.
    pub fn eps_at(&self, x: &[f64], k: usize, sched: &ScheduleParams) -> Vec<f64> {
        self.eps(x, sched.alpha[k], sched.sigma[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_gaussian_eps_is_sigma_x() {
        let m = ScoreModel::unit(3);
        let x = [0.5, -1.0, 2.0];
        assert_eq!(m.eps(&x, 0.6, 0.8), vec![0.4, -0.8, 1.6]);
    }

    #[test]
    fn score_vanishes_at_mode() {
        let alpha: f64 = 0.6;
        let x = [1.2, -0.3];
        let mean: Vec<f64> = x.iter().map(|v| v / alpha).collect();
        let m = ScoreModel::gaussian(mean, vec![0.0, 0.0]).unwrap();
        assert!(m.eps(&x, alpha, 0.8).iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn single_component_mixture_matches_gaussian() {
        let mean = vec![0.3, -1.0, 2.0];
        let var = vec![0.25, 1.5, 0.7];
        let g = ScoreModel::gaussian(mean.clone(), var.clone()).unwrap();
        let mix = ScoreModel::mixture(vec![1.0], vec![mean], var).unwrap();
        let x = [0.9, 0.1, -0.4, 1.0, 2.0, 3.0];
        for (a, s) in [(0.1, 0.995), (0.6, 0.8), (0.99, 0.141)] {
            let (ea, eb) = (g.eps(&x, a, s), mix.eps(&x, a, s));
            assert!(ea.iter().zip(&eb).all(|(p, q)| (p - q).abs() < 1e-14));
        }
    }

    #[test]
    fn validation() {
        assert!(ScoreModel::gaussian(vec![0.0], vec![-1.0]).is_err());
        assert!(ScoreModel::mixture(vec![0.5, 0.6], vec![vec![0.0], vec![1.0]], vec![1.0]).is_err());
        assert!(ScoreModel::mixture(vec![0.5, 0.5], vec![vec![0.0], vec![1.0, 2.0]], vec![1.0]).is_err());
        assert!(ScoreModel::UnitGaussian { dims: 0 }.validate().is_err());
    }
}
