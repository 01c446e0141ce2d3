//! Analytic Gaussianity proxy for the mapped noise `x = (u + n)/σ`.
//!
//! Every cumulant of order ≥ 3 of `u + n` equals that of `u` (Gaussian
//! cumulants vanish), and `κ_r(x) = κ_r(u)/σ^r`. The divergence from N(0,1)
//! is approximated by the truncated Gram–Charlier sum over κ4..κ10.

mod empirical;

pub use empirical::{empirical_kl, EmpiricalKl, EmpiricalKlConfig};

use thiserror::Error;

pub const MAX_Q: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum GaussianityError {
    #[error("bits per component must be in 1..={MAX_Q}, got {0}")]
    InvalidCapacity(u32),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("security loss needs 0 < dkl < 1, got {0}")]
    Domain(f64),
    #[error("empirical KL needs at least {required} samples, got {found}")]
    InsufficientSamples { found: usize, required: usize },
    #[error("empirical KL needs at least {required} bins, got {found}")]
    TooFewBins { found: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, GaussianityError>;

fn check_q(q: u32) -> Result<f64> {
    if (1..=MAX_Q).contains(&q) {
        Ok(f64::from(1u32 << q))
    } else {
        Err(GaussianityError::InvalidCapacity(q))
    }
}

fn check_s(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(GaussianityError::InvalidScale(s))
    }
}

/// Central moments of the discrete uniform distribution on {0, …, N−1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub n: f64,
    pub mu2: f64,
    pub mu4: f64,
    pub mu6: f64,
    pub mu8: f64,
    pub mu10: f64,
}

pub fn uniform_moments(q: u32) -> Result<MomentSet> {
    let n = check_q(q)?;
    let n2 = n * n;
    let a = n2 - 1.0;
    Ok(MomentSet {
        n,
        mu2: a / 12.0,
        mu4: a * (3.0 * n2 - 7.0) / 240.0,
        mu6: a * ((3.0 * n2 - 18.0) * n2 + 31.0) / 1344.0,
        mu8: a * (((5.0 * n2 - 55.0) * n2 + 239.0) * n2 - 381.0) / 11520.0,
        mu10: a * (n2 - 5.0) * (((3.0 * n2 - 37.0) * n2 + 225.0) * n2 - 511.0) / 33792.0,
    })
}

/// Var(u) = S²(2^Q+1)/(12(2^Q−1)).
pub fn message_variance(s: f64, q: u32) -> f64 {
    let n = f64::from(1u32 << q.clamp(1, MAX_Q));
    s * s * (n + 1.0) / (12.0 * (n - 1.0))
}

/// Even cumulants κ4..κ10 of the normalized mapped noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    pub kappa4: f64,
    pub kappa6: f64,
    pub kappa8: f64,
    pub kappa10: f64,
}

impl CumulantSet {
    /// The four Gram–Charlier KL contributions ½κ_r²/r!.
    pub fn kl_terms(&self) -> [f64; 4] {
        [
            0.5 * self.kappa4 * self.kappa4 / 24.0,
            0.5 * self.kappa6 * self.kappa6 / 720.0,
            0.5 * self.kappa8 * self.kappa8 / 40_320.0,
            0.5 * self.kappa10 * self.kappa10 / 3_628_800.0,
        ]
    }

    pub fn kl(&self) -> f64 {
        self.kl_terms().iter().sum()
    }

    /// Fraction of the truncated KL carried by the κ4 term.
    pub fn k4_share(&self) -> f64 {
        let t = self.kl_terms();
        let total: f64 = t.iter().sum();
        if total > 0.0 {
            t[0] / total
        } else {
            1.0
        }
    }

    /// True outside the small-S regime: a κ8 or κ10 term exceeds the κ4 term.
    pub fn beyond_validity(&self) -> bool {
        let t = self.kl_terms();
        t[2] > t[0] || t[3] > t[0]
    }
}

/// Closed-form cumulants. All four share the base `12(N−1) + S²(N+1)`.
pub fn cumulants(s: f64, q: u32) -> Result<CumulantSet> {
    let n = check_q(q)?;
    check_s(s)?;
    let m1 = n - 1.0;
    let s2 = s * s;
    // (S²/((N−1)·base)) per power of two; keeps large N from overflowing.
    let r = s2 / (m1 * (12.0 * m1 + s2 * (n + 1.0)));
    let n2 = n * n;
    let n4 = n2 * n2;
    Ok(CumulantSet {
        kappa4: -6.0 / 5.0 * r * r * m1 * (n + 1.0) * (n2 + 1.0),
        kappa6: 48.0 / 7.0 * r * r * r * (n4 * n2 - 1.0),
        kappa8: -432.0 / 5.0 * r * r * r * r * (n4 * n4 - 1.0),
        kappa10: 20_736.0 / 11.0 * r.powi(5) * (n4 * n4 * n2 - 1.0),
    })
}

/// ½(κ4²/4! + κ6²/6! + κ8²/8! + κ10²/10!).
pub fn analytic_kl(s: f64, q: u32) -> Result<f64> {
    Ok(cumulants(s, q)?.kl())
}

/// `−1/ln(dkl)`, defined on the open interval (0, 1).
pub fn security_loss(dkl: f64) -> Result<f64> {
    if dkl > 0.0 && dkl < 1.0 {
        Ok(-1.0 / dkl.ln())
    } else {
        Err(GaussianityError::Domain(dkl))
    }
}

/// Clamp into `[1e−300, 1 − 1e−12]` so the security loss stays defined.
pub fn clamp_dkl(dkl: f64) -> f64 {
    if dkl.is_nan() {
        return 1.0 - 1e-12;
    }
    dkl.clamp(1e-300, 1.0 - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn low_order_moments() {
        let m = uniform_moments(1).unwrap();
        assert_eq!(m.mu2, 0.25);
        assert_eq!(m.mu4, 0.0625);
        assert_eq!(m.mu10, 0.5f64.powi(10));
        assert_eq!(uniform_moments(4).unwrap().mu2, 21.25);
        assert!(uniform_moments(0).is_err());
        assert!(uniform_moments(17).is_err());
    }

    #[test]
    fn moments_match_enumeration() {
        for q in 1..=8 {
            let m = uniform_moments(q).unwrap();
            let n = 1u32 << q;
            let c = f64::from(n - 1) / 2.0;
            let mu = |r: i32| (0..n).map(|k| (f64::from(k) - c).powi(r)).sum::<f64>() / f64::from(n);
            for (r, v) in [(2, m.mu2), (4, m.mu4), (6, m.mu6), (8, m.mu8), (10, m.mu10)] {
                assert!(rel(v, mu(r)) < 1e-12, "q={q} r={r}");
            }
        }
    }

    #[test]
    fn variance_examples() {
        assert_eq!(message_variance(0.0, 3), 0.0);
        assert!((message_variance(0.8, 1) - 0.16).abs() < 1e-16);
        assert!((message_variance(0.5768, 4) - 0.031_421_6).abs() < 1e-7);
    }

    #[test]
    fn kappa4_small_scale_anchor() {
        let k = cumulants(0.0938, 1).unwrap();
        assert!(rel(k.kappa4, -9.633e-6) < 1e-3, "{}", k.kappa4);
    }

    #[test]
    fn security_loss_examples() {
        assert!((security_loss((-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((security_loss(2.63e-8).unwrap() - 0.05729).abs() < 1e-5);
        assert_eq!(security_loss(1.5), Err(GaussianityError::Domain(1.5)));
        assert!(security_loss(0.0).is_err());
        assert_eq!(clamp_dkl(0.0), 1e-300);
        assert_eq!(clamp_dkl(2.0), 1.0 - 1e-12);
    }

    #[test]
    fn vanishing_scale_limit() {
        let k = cumulants(1e-8, 4).unwrap();
        assert!(k.kappa4.abs() < 1e-30 && k.kappa6.abs() < 1e-40);
        assert!(cumulants(0.0, 1).is_err());
    }
}
