use gsteg_codec::NoiseTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{ChannelError, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Linear encoder `z = W x` with orthonormal rows; the decoder is `Wᵀ z`
/// plus seeded Gaussian noise of std `rho`, optionally clamped to [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ToyAutoencoder {
    pixel_shape: [usize; 3],
    latent_shape: [usize; 3],
    /// Nonzero entries of each row of W as (column, value).
    rows: Vec<Vec<(usize, f64)>>,
    rho: f64,
    clamp: bool,
}

impl ToyAutoencoder {
    /// From a dense row-major k×D matrix.
    pub fn from_rows(pixel_shape: [usize; 3], latent_shape: [usize; 3], w: &[f64], rho: f64, clamp: bool) -> Result<Self> {
        let d: usize = pixel_shape.iter().product();
        let k: usize = latent_shape.iter().product();
        if k == 0 || k > d {
            return Err(ChannelError::InvalidAutoencoder(format!("latent dim {k} must be in 1..={d}")));
        }
        if w.len() != k * d {
            return Err(ChannelError::DimensionMismatch { expected: k * d, found: w.len() });
        }
        let rows = w
            .chunks_exact(d)
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        Self::build(pixel_shape, latent_shape, rows, rho, clamp)
    }

    /// Per-channel `block`×`block` pooling with entries 1/block, which has
    /// orthonormal rows. Latent shape is (C, H/block, W/block).
    pub fn block_pool(pixel_shape: [usize; 3], block: usize, rho: f64, clamp: bool) -> Result<Self> {
        let [c, h, w] = pixel_shape;
        if block == 0 || h % block != 0 || w % block != 0 {
            return Err(ChannelError::InvalidAutoencoder(format!("block {block} does not tile {h}x{w}")));
        }
        let (lh, lw) = (h / block, w / block);
        let v = 1.0 / block as f64;
        let mut rows = Vec::with_capacity(c * lh * lw);
        for ch in 0..c {
            for by in 0..lh {
                for bx in 0..lw {
                    let mut r = Vec::with_capacity(block * block);
                    for dy in 0..block {
                        for dx in 0..block {
                            r.push((ch * h * w + (by * block + dy) * w + bx * block + dx, v));
                        }
                    }
                    rows.push(r);
                }
            }
        }
        Self::build(pixel_shape, [c, lh, lw], rows, rho, clamp)
    }

    fn build(pixel_shape: [usize; 3], latent_shape: [usize; 3], rows: Vec<Vec<(usize, f64)>>, rho: f64, clamp: bool) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(ChannelError::InvalidAutoencoder(format!("decoder noise std must be ≥ 0, got {rho}")));
        }
        let ae = ToyAutoencoder { pixel_shape, latent_shape, rows, rho, clamp };
        let dev = ae.orthonormality_error();
        if dev > ORTHO_TOL {
            return Err(ChannelError::NotOrthonormal(dev));
        }
        Ok(ae)
    }

    /// max |W Wᵀ − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.pixel_dim();
        let mut dense = vec![0.0; d];
        let mut worst: f64 = 0.0;
        for (a, ra) in self.rows.iter().enumerate() {
            for &(j, v) in ra {
                dense[j] = v;
            }
            for (b, rb) in self.rows.iter().enumerate().skip(a) {
                let dot: f64 = rb.iter().map(|&(j, v)| dense[j] * v).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
            for &(j, _) in ra {
                dense[j] = 0.0;
            }
        }
        worst
    }

    pub fn pixel_shape(&self) -> [usize; 3] {
        self.pixel_shape
    }

    pub fn latent_shape(&self) -> [usize; 3] {
        self.latent_shape
    }

    pub fn pixel_dim(&self) -> usize {
        self.pixel_shape.iter().product()
    }

    pub fn latent_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn clamps(&self) -> bool {
        self.clamp
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::build(self.pixel_shape, self.latent_shape, self.rows.clone(), rho, self.clamp)
    }

    /// `z = W x` on one sample.
    pub fn encode_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.pixel_dim() {
            return Err(ChannelError::DimensionMismatch { expected: self.pixel_dim(), found: x.len() });
        }
        Ok(self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect())
    }

    /// `x = Wᵀ z + ν` on one sample.
    pub fn decode_slice(&self, z: &[f64], seed: u64) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim() {
            return Err(ChannelError::DimensionMismatch { expected: self.latent_dim(), found: z.len() });
        }
        let mut x = vec![0.0; self.pixel_dim()];
        for (r, &zi) in self.rows.iter().zip(z) {
            for &(j, v) in r {
                x[j] += v * zi;
            }
        }
        if self.rho > 0.0 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for xi in x.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *xi += self.rho * n;
            }
        }
        if self.clamp {
            x.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        }
        Ok(x)
    }
}

pub fn ae_encode(ae: &ToyAutoencoder, x: &NoiseTensor) -> Result<NoiseTensor> {
    let z = ae.encode_slice(x.values())?;
    Ok(NoiseTensor::new(ae.latent_shape, z)?)
}

pub fn ae_decode(ae: &ToyAutoencoder, z: &NoiseTensor, seed: u64) -> Result<NoiseTensor> {
    let x = ae.decode_slice(z.values(), seed)?;
    Ok(NoiseTensor::new(ae.pixel_shape, x)?)
}

/// ‖z‖₂ / √k: distance from the latent prior center, per unit dimension.
pub fn manifold_distance(z: &[f64]) -> f64 {
    if z.is_empty() {
        return 0.0;
    }
    (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt()
}
