use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::{alpha_of_lambda, sigma_of_lambda, DiffusionError, Result};

/// Number of discrete steps in the underlying training schedule.
pub const BASE_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// β linear in [1e−4, 0.02].
    LinearBeta,
    /// Squared-cosine ᾱ with offset s = 0.008, β clipped at 0.999.
    Cosine,
}

impl ScheduleKind {
    pub fn label(self) -> &'static str {
        match self {
            ScheduleKind::LinearBeta => "linear-beta",
            ScheduleKind::Cosine => "cosine",
        }
    }

    /// ᾱ after each of the base steps.
    fn base_alpha_bar(self) -> Vec<f64> {
        let betas: Vec<f64> = match self {
            ScheduleKind::LinearBeta => (0..BASE_STEPS)
                .map(|i| 1e-4 + (0.02 - 1e-4) * i as f64 / (BASE_STEPS - 1) as f64)
                .collect(),
            ScheduleKind::Cosine => {
                let s = 0.008;
                let f = |t: f64| ((t / BASE_STEPS as f64 + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2).cos().powi(2);
                (0..BASE_STEPS).map(|i| (1.0 - f(i as f64 + 1.0) / f(i as f64)).min(0.999)).collect()
            }
        };
        betas
            .iter()
            .scan(1.0, |acc, b| {
                *acc *= 1.0 - b;
                Some(*acc)
            })
            .collect()
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScheduleKind {
    type Err = DiffusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-beta" => Ok(ScheduleKind::LinearBeta),
            "cosine" => Ok(ScheduleKind::Cosine),
            other => Err(DiffusionError::InvalidKind(other.to_string())),
        }
    }
}

/// Solver grid, uniform in λ, stored in generation order (t = T first).
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub kind: ScheduleKind,
    pub steps: usize,
    /// Normalized time in (0, 1], decreasing along the grid.
    pub t_grid: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
}

pub fn make_schedule(kind: ScheduleKind, steps: usize) -> Result<ScheduleParams> {
    if steps < 2 {
        return Err(DiffusionError::InvalidSteps(steps));
    }
    let base: Vec<f64> = kind.base_alpha_bar().iter().map(|&ab| 0.5 * (ab / (1.0 - ab)).ln()).collect();
    let lam_t = base[BASE_STEPS - 1];
    let lam_0 = base[0];
    let lambda: Vec<f64> = (0..=steps)
        .map(|k| if k == steps { lam_0 } else { lam_t + (lam_0 - lam_t) * k as f64 / steps as f64 })
        .collect();
    let t_grid = lambda.iter().map(|&l| time_of_lambda(&base, l)).collect();
    let alpha: Vec<f64> = lambda.iter().map(|&l| alpha_of_lambda(l)).collect();
    let sigma = lambda.iter().map(|&l| sigma_of_lambda(l)).collect();
    let alpha_bar = alpha.iter().map(|a| a * a).collect();
    Ok(ScheduleParams { kind, steps, t_grid, alpha_bar, alpha, sigma, lambda })
}

/// Inverts the piecewise-linear λ(t) of the base table; base index i sits at
/// t = (i + 1)/BASE_STEPS.
fn time_of_lambda(base: &[f64], l: f64) -> f64 {
    let n = base.len();
    if l >= base[0] {
        return 1.0 / n as f64;
    }
    if l <= base[n - 1] {
        return 1.0;
    }
    let i = base.partition_point(|&b| b > l).max(1) - 1;
    let frac = (base[i] - l) / (base[i] - base[i + 1]);
    (i as f64 + 1.0 + frac) / n as f64
}

impl ScheduleParams {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Hex SHA-256 over the kind, step count and all tables.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"gsteg/schedule/v1");
        h.update(self.kind.label().as_bytes());
        h.update((self.steps as u64).to_le_bytes());
        for table in [&self.t_grid, &self.alpha_bar, &self.sigma, &self.lambda] {
            for v in table.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn check_fingerprint(&self, expected: &str) -> Result<()> {
        let found = self.fingerprint();
        if found == expected {
            Ok(())
        } else {
            Err(DiffusionError::ScheduleMismatch { expected: expected.to_string(), found })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_beta_reaches_low_snr() {
        let ab = ScheduleKind::LinearBeta.base_alpha_bar();
        assert!(ab[BASE_STEPS - 1] < 1e-4);
        assert!(ab[BASE_STEPS - 1] > 1e-5);
        assert!((ab[0] - (1.0 - 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn cosine_is_monotone() {
        let ab = ScheduleKind::Cosine.base_alpha_bar();
        assert!(ab.windows(2).all(|w| w[1] < w[0]));
        assert!(ab[BASE_STEPS - 1] < 1e-4);
    }

    #[test]
    fn too_few_steps() {
        assert!(matches!(make_schedule(ScheduleKind::LinearBeta, 1), Err(DiffusionError::InvalidSteps(1))));
        assert!("ddpm".parse::<ScheduleKind>().is_err());
        assert_eq!("cosine".parse::<ScheduleKind>().unwrap(), ScheduleKind::Cosine);
    }

    #[test]
    fn time_inversion_hits_endpoints() {
        let s = make_schedule(ScheduleKind::LinearBeta, 10).unwrap();
        assert_eq!(s.t_grid[0], 1.0);
        assert_eq!(s.t_grid[10], 1.0 / BASE_STEPS as f64);
        assert!(s.t_grid.windows(2).all(|w| w[1] < w[0]));
    }
}
