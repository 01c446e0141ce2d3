use std::fmt;
use std::sync::Arc;

use gsteg_codec::NoiseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dct::{compress_plane, quality_table};
use crate::{quantize_value, ChannelError, Result, ToyAutoencoder};

#[derive(Debug, Clone)]
pub enum ChannelSpec {
    /// Additive N(0, sigma²) noise.
    Awgn { sigma: f64 },
    /// Each component independently set to −1 or +1 with probability `rate`.
    SaltPepper { rate: f64 },
    GaussianBlur { kernel_size: usize, kernel_sigma: f64 },
    Quantize { levels: u64 },
    DctCompress { block: usize, quality: u32 },
    /// Latent → decode → (8-bit quantize) → encode.
    AutoencoderCycle { ae: Arc<ToyAutoencoder>, with_quantize: bool },
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ChannelError::InvalidSpec(m));
        match *self {
            ChannelSpec::Awgn { sigma } if !(sigma.is_finite() && sigma >= 0.0) => bad(format!("awgn sigma {sigma} must be ≥ 0")),
            ChannelSpec::SaltPepper { rate } if !(0.0..=1.0).contains(&rate) => bad(format!("salt_pepper rate {rate} outside [0, 1]")),
            ChannelSpec::GaussianBlur { kernel_size, .. } if kernel_size % 2 == 0 => {
                bad(format!("blur kernel size {kernel_size} must be odd and ≥ 1"))
            }
            ChannelSpec::GaussianBlur { kernel_size, kernel_sigma } if kernel_size > 1 && !(kernel_sigma.is_finite() && kernel_sigma > 0.0) => {
                bad(format!("blur sigma {kernel_sigma} must be positive"))
            }
            ChannelSpec::Quantize { levels } if !(2..=1u64 << 53).contains(&levels) => bad(format!("quantize levels {levels} outside 2..=2^53")),
            ChannelSpec::DctCompress { block, .. } if block != 4 && block != 8 => bad(format!("dct block {block} must be 4 or 8")),
            ChannelSpec::DctCompress { quality, .. } if !(1..=100).contains(&quality) => bad(format!("dct quality {quality} outside 1..=100")),
            _ => Ok(()),
        }
    }

    /// Parses `kind:p1,p2`, e.g. `awgn:0.01`, `gaussian_blur:3,0.8`,
    /// `dct_compress:8,75`, `autoencoder_cycle:quantize`. The cycle needs `ae`.
    pub fn parse(input: &str, ae: Option<Arc<ToyAutoencoder>>) -> Result<Self> {
        let err = |reason: &str| ChannelError::Parse { input: input.to_string(), reason: reason.to_string() };
        let (kind, rest) = input.split_once(':').unwrap_or((input, ""));
        let args: Vec<&str> = if rest.is_empty() { vec![] } else { rest.split(',').map(str::trim).collect() };
        let num = |i: usize| -> Result<f64> {
            args.get(i).ok_or_else(|| err("missing parameter"))?.parse::<f64>().map_err(|_| err("parameter is not a number"))
        };
        let int = |i: usize| -> Result<u64> {
            args.get(i).ok_or_else(|| err("missing parameter"))?.parse::<u64>().map_err(|_| err("parameter is not an integer"))
        };
        let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(err(&format!("expected {n} parameter(s)"))) };
        let spec = match kind.trim() {
            "awgn" => {
                arity(1)?;
                ChannelSpec::Awgn { sigma: num(0)? }
            }
            "salt_pepper" => {
                arity(1)?;
                ChannelSpec::SaltPepper { rate: num(0)? }
            }
            "gaussian_blur" => {
                arity(2)?;
                ChannelSpec::GaussianBlur { kernel_size: int(0)? as usize, kernel_sigma: num(1)? }
            }
            "quantize" => {
                arity(1)?;
                ChannelSpec::Quantize { levels: int(0)? }
            }
            "dct_compress" => {
                arity(2)?;
                ChannelSpec::DctCompress { block: int(0)? as usize, quality: int(1)?.min(u64::from(u32::MAX)) as u32 }
            }
            "autoencoder_cycle" => {
                let with_quantize = match args.as_slice() {
                    [] | ["quantize"] => true,
                    ["raw"] => false,
                    _ => return Err(err("expected `quantize` or `raw`")),
                };
                let ae = ae.ok_or_else(|| err("autoencoder_cycle needs an autoencoder"))?;
                ChannelSpec::AutoencoderCycle { ae, with_quantize }
            }
            _ => return Err(err("unknown channel kind")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Awgn { sigma } => write!(f, "awgn:{sigma}"),
            ChannelSpec::SaltPepper { rate } => write!(f, "salt_pepper:{rate}"),
            ChannelSpec::GaussianBlur { kernel_size, kernel_sigma } => write!(f, "gaussian_blur:{kernel_size},{kernel_sigma}"),
            ChannelSpec::Quantize { levels } => write!(f, "quantize:{levels}"),
            ChannelSpec::DctCompress { block, quality } => write!(f, "dct_compress:{block},{quality}"),
            ChannelSpec::AutoencoderCycle { with_quantize, .. } => {
                write!(f, "autoencoder_cycle:{}", if *with_quantize { "quantize" } else { "raw" })
            }
        }
    }
}

pub fn apply_channel(spec: &ChannelSpec, x: &NoiseTensor, seed: u64) -> Result<NoiseTensor> {
    let mut values = x.values().to_vec();
    apply_in_place(spec, x.shape(), &mut values, seed)?;
    Ok(NoiseTensor::new(x.shape(), values)?)
}

/// Applies `spec` to one sample of shape (C, H, W) stored in `values`.
pub fn apply_in_place(spec: &ChannelSpec, shape: [usize; 3], values: &mut [f64], seed: u64) -> Result<()> {
    spec.validate()?;
    let expected: usize = shape.iter().product();
    if values.len() != expected {
        return Err(ChannelError::DimensionMismatch { expected, found: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ChannelError::NonFinite(i));
    }
    let [_, h, w] = shape;
    match spec {
        ChannelSpec::Awgn { sigma } => {
            if *sigma > 0.0 {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                for v in values.iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *v += sigma * n;
                }
            }
        }
        ChannelSpec::SaltPepper { rate } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for v in values.iter_mut() {
                let hit = rng.gen::<f64>() < *rate;
                let salt = rng.gen::<bool>();
                if hit {
                    *v = if salt { 1.0 } else { -1.0 };
                }
            }
        }
        ChannelSpec::GaussianBlur { kernel_size, kernel_sigma } => {
            let half = kernel_size / 2;
            if half == 0 {
                return Ok(());
            }
            if h <= half || w <= half {
                return Err(ChannelError::ShapeTooSmall { height: h, width: w, what: format!("blur kernel {kernel_size}") });
            }
            let mut kernel: Vec<f64> =
                (0..*kernel_size).map(|i| (-((i as f64 - half as f64).powi(2)) / (2.0 * kernel_sigma * kernel_sigma)).exp()).collect();
            let total: f64 = kernel.iter().sum();
            kernel.iter_mut().for_each(|k| *k /= total);
            for plane in values.chunks_exact_mut(h * w) {
                blur_plane(plane, h, w, &kernel);
            }
        }
        ChannelSpec::Quantize { levels } => values.iter_mut().for_each(|v| *v = quantize_value(*v, *levels)),
        ChannelSpec::DctCompress { block, quality } => {
            if h % block != 0 || w % block != 0 {
                return Err(ChannelError::ShapeTooSmall { height: h, width: w, what: format!("{block}x{block} DCT blocks") });
            }
            let table = quality_table(*block, *quality);
            for plane in values.chunks_exact_mut(h * w) {
                compress_plane(plane, w, *block, &table);
            }
        }
        ChannelSpec::AutoencoderCycle { ae, with_quantize } => {
            let mut pixels = ae.decode_slice(values, seed)?;
            if *with_quantize {
                pixels.iter_mut().for_each(|v| *v = quantize_value(*v, 256));
            }
            values.copy_from_slice(&ae.encode_slice(&pixels)?);
        }
    }
    Ok(())
}

/// Mirror index without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
    r as usize
}

fn blur_plane(plane: &mut [f64], h: usize, w: usize, kernel: &[f64]) {
    let half = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel.iter().enumerate().map(|(k, c)| c * plane[y * w + reflect(x as isize + k as isize - half, w)]).sum();
        }
    }
    for y in 0..h {
        for x in 0..w {
            plane[y * w + x] = kernel.iter().enumerate().map(|(k, c)| c * tmp[reflect(y as isize + k as isize - half, h) * w + x]).sum();
        }
    }
}
