use sha2::{Digest, Sha256};

use crate::keyed::{ICDF_VERSION, PRNG_ALGORITHM};
use crate::{CodecError, Key, Result};

pub const MAX_Q: u32 = 16;

/// Shared secret state of the codec: capacity, scale, normalization and key.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecParams {
    q: u32,
    s: f64,
    sigma: f64,
    key: Key,
    dims: usize,
}

impl CodecParams {
    pub fn new(q: u32, s: f64, key: Key, dims: usize) -> Result<Self> {
        check_q(q)?;
        if !(s.is_finite() && s > 0.0) {
            return Err(CodecError::InvalidScale(s));
        }
        Ok(CodecParams { q, s, sigma: sigma_for(q, s), key, dims })
    }

    /// Rebuilds params from stored parts, rejecting a sigma that drifted by
    /// more than one ulp from its recomputed value.
    pub fn from_parts(q: u32, s: f64, sigma: f64, key: Key, dims: usize) -> Result<Self> {
        let p = Self::new(q, s, key, dims)?;
        let ulp = f64::EPSILON * p.sigma;
        if (sigma - p.sigma).abs() > ulp {
            return Err(CodecError::SigmaMismatch { stored: sigma, recomputed: p.sigma });
        }
        Ok(p)
    }

    /// Same key and capacity at a different scale.
    pub fn with_scale(&self, s: f64) -> Result<Self> {
        Self::new(self.q, s, self.key.clone(), self.dims)
    }

    pub fn with_key(&self, key: Key) -> Self {
        CodecParams { key, ..self.clone() }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Alphabet size 2^Q.
    pub fn levels(&self) -> u32 {
        1 << self.q
    }

    /// Largest per-component error of the recovered noise that leaves every
    /// symbol unchanged: S/(2σ(2^Q−1)).
    pub fn decision_margin(&self) -> f64 {
        self.s / (2.0 * self.sigma * f64::from(self.levels() - 1))
    }

    /// Variance of the message offset u.
    pub fn message_variance(&self) -> f64 {
        message_variance(self.q, self.s)
    }

    /// Hash of the public parameters (capacity, dims, generator identifiers).
    /// Neither the key nor S enters the hash.
    pub fn public_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"gsteg/codec/v1");
        h.update(self.q.to_le_bytes());
        h.update((self.dims as u64).to_le_bytes());
        h.update(PRNG_ALGORITHM.as_bytes());
        h.update(ICDF_VERSION.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn check_q(q: u32) -> Result<()> {
    if (1..=MAX_Q).contains(&q) {
        Ok(())
    } else {
        Err(CodecError::InvalidCapacity(q))
    }
}

fn message_variance(q: u32, s: f64) -> f64 {
    let n = f64::from(1u32 << q);
    s * s * (n + 1.0) / (12.0 * (n - 1.0))
}

fn sigma_for(q: u32, s: f64) -> f64 {
    (1.0 + message_variance(q, s)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_matches_closed_form() {
        let p = CodecParams::new(1, 2.0, Key::from_seed(0), 4).unwrap();
        assert_eq!(p.sigma(), 2f64.sqrt());
        let p = CodecParams::new(4, 0.5768, Key::from_seed(0), 4).unwrap();
        assert!((p.message_variance() - 0.031_421_6).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = Key::from_seed(0);
        assert!(matches!(CodecParams::new(0, 1.0, k.clone(), 1), Err(CodecError::InvalidCapacity(0))));
        assert!(matches!(CodecParams::new(17, 1.0, k.clone(), 1), Err(CodecError::InvalidCapacity(17))));
        assert!(CodecParams::new(1, 0.0, k.clone(), 1).is_err());
        assert!(CodecParams::new(1, f64::NAN, k, 1).is_err());
    }

    #[test]
    fn stored_sigma_drift_is_detected() {
        let k = Key::from_seed(0);
        let p = CodecParams::new(2, 0.3, k.clone(), 8).unwrap();
        assert!(CodecParams::from_parts(2, 0.3, p.sigma(), k.clone(), 8).is_ok());
        let drifted = p.sigma() * (1.0 + 4.0 * f64::EPSILON);
        assert!(matches!(
            CodecParams::from_parts(2, 0.3, drifted, k, 8),
            Err(CodecError::SigmaMismatch { .. })
        ));
    }

    #[test]
    fn public_hash_ignores_key_and_scale() {
        let a = CodecParams::new(2, 0.3, Key::from_seed(1), 8).unwrap();
        let b = CodecParams::new(2, 0.9, Key::from_seed(2), 8).unwrap();
        let c = CodecParams::new(3, 0.3, Key::from_seed(1), 8).unwrap();
        assert_eq!(a.public_hash(), b.public_hash());
        assert_ne!(a.public_hash(), c.public_hash());
    }
}
