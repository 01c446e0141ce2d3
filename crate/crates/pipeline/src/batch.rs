//! Batched round trips on flat buffers: sample `i` occupies
//! `[i·d, (i+1)·d)` of each buffer.

use gsteg_analysis::bit_matches;
use gsteg_channels::{apply_in_place, quantize_value, ChannelSpec};
use gsteg_codec::{demap_continuous, keyed_noise, map_with_noise, pack_message, quantize_symbols, DomainTag, Key, KeyedStream, NoiseTensor, SymbolStream};
use gsteg_diffusion::{generate_batch, invert_batch, Direction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::{Mode, PipelineConfig, PipelineError, Result};

/// One message with its own key.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub key: Key,
    pub stream: SymbolStream,
}

impl Trial {
    /// Seed of the decoder noise for this trial's sample.
    pub fn decoder_seed(&self) -> u64 {
        KeyedStream::new(&self.key, DomainTag::Decoder).word(0)
    }
}

/// `batch` full-capacity uniform messages with independent keys, all drawn
/// from `seed`. The same seed gives the same trials whatever the scale.
pub fn trial_batch(q: u32, dims: usize, batch: usize, seed: u64) -> Result<Vec<Trial>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..batch)
        .map(|_| {
            let key = Key::from_bytes(rng.gen());
            let bits: Vec<bool> = (0..dims * q as usize).map(|_| rng.gen()).collect();
            let stream = pack_message(&bits, q, dims, &key)?;
            Ok(Trial { key, stream })
        })
        .collect()
}

/// Mapped initial noise for every trial, and the auxiliary keyed noise.
pub fn initial_noise(cfg: &PipelineConfig, trials: &[Trial]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = cfg.embed_dim();
    let mut x_t = Vec::with_capacity(d * trials.len());
    let mut noises = Vec::with_capacity(trials.len());
    for t in trials {
        let params = cfg.codec.with_key(t.key.clone());
        let noise = keyed_noise(&params);
        x_t.extend_from_slice(map_with_noise(&t.stream, &params, &noise)?.values());
        noises.push(noise);
    }
    Ok((x_t, noises))
}

/// Generation and, in latent mode, decoding; returns pixel samples.
pub fn synthesize(cfg: &PipelineConfig, x_t: &[f64], decoder_seeds: &[u64]) -> Result<Vec<f64>> {
    let d = cfg.embed_dim();
    if x_t.len() != d * decoder_seeds.len() {
        return Err(PipelineError::InvalidConfig(format!("batch buffer of {} values for {} samples of {d}", x_t.len(), decoder_seeds.len())));
    }
    let x0 = generate_batch(&cfg.model, &cfg.schedule, x_t, &cfg.solver)?;
    let mut pixels = match (cfg.mode, &cfg.autoencoder) {
        (Mode::Latent, Some(ae)) => {
            let mut out = Vec::with_capacity(cfg.pixel_dim() * decoder_seeds.len());
            for (z, &seed) in x0.chunks_exact(d).zip(decoder_seeds) {
                out.extend(ae.decode_slice(z, seed)?);
            }
            out
        }
        _ => x0,
    };
    if let Some(levels) = cfg.export_quantize {
        pixels.iter_mut().for_each(|v| *v = quantize_value(*v, levels));
    }
    Ok(pixels)
}

/// Estimated initial noise for each pixel sample.
pub fn recover(cfg: &PipelineConfig, pixels: &[f64]) -> Result<Vec<f64>> {
    let inv = cfg.solver.with_direction(Direction::Invert);
    let z = match (cfg.mode, &cfg.autoencoder) {
        (Mode::Latent, Some(ae)) => {
            let mut z = Vec::with_capacity(pixels.len() / cfg.pixel_dim() * cfg.embed_dim());
            let mut buf = vec![0.0; cfg.pixel_dim()];
            for x in pixels.chunks_exact(cfg.pixel_dim()) {
                buf.iter_mut().zip(x).for_each(|(b, v)| *b = v.clamp(-1.0, 1.0));
                z.extend(ae.encode_slice(&buf)?);
            }
            z
        }
        _ => pixels.to_vec(),
    };
    Ok(invert_batch(&cfg.model, &cfg.schedule, &z, &inv)?)
}

/// Continuous symbol estimates and rounded symbols. `noises` may hold the
/// keyed noise from [`initial_noise`]; it is regenerated when absent.
pub fn demap_batch(cfg: &PipelineConfig, x_hat: &[f64], trials: &[Trial], noises: Option<&[Vec<f64>]>) -> Result<(Vec<f64>, Vec<u32>)> {
    let d = cfg.embed_dim();
    let mut cont = Vec::with_capacity(x_hat.len());
    let mut symbols = Vec::with_capacity(x_hat.len());
    for (i, (x, t)) in x_hat.chunks_exact(d).zip(trials).enumerate() {
        let params = cfg.codec.with_key(t.key.clone());
        let fresh;
        let noise = match noises {
            Some(n) => &n[i],
            None => {
                fresh = keyed_noise(&params);
                &fresh
            }
        };
        let c = demap_continuous(x, &params, noise)?;
        symbols.extend(quantize_symbols(&c, &params, 0).symbols);
        cont.extend(c);
    }
    Ok((cont, symbols))
}

/// Outcome of a batched hide → (channel) → extract pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub pixels: Vec<f64>,
    pub continuous: Vec<f64>,
    pub symbols: Vec<u32>,
}

impl RoundTrip {
    pub fn symbol_accuracy(&self, trials: &[Trial]) -> f64 {
        let orig = trials.iter().flat_map(|t| t.stream.symbols.iter());
        let hits = orig.zip(&self.symbols).filter(|(a, b)| a == b).count();
        hits as f64 / self.symbols.len().max(1) as f64
    }

    /// Payload bit accuracy pooled over the batch.
    pub fn bit_accuracy(&self, trials: &[Trial], q: u32) -> Result<f64> {
        let (mut hits, mut total) = (0, 0);
        let mut offset = 0;
        for t in trials {
            let n = t.stream.len();
            let hat = SymbolStream::new(self.symbols[offset..offset + n].to_vec(), t.stream.payload_len_bits);
            let (m, b) = bit_matches(&t.stream, &hat, q)?;
            hits += m;
            total += b;
            offset += n;
        }
        Ok(hits as f64 / total.max(1) as f64)
    }

    /// Mean |m̃ − m| over all symbols.
    pub fn retrieval_loss(&self, trials: &[Trial]) -> f64 {
        let orig = trials.iter().flat_map(|t| t.stream.symbols.iter());
        let total: f64 = orig.zip(&self.continuous).map(|(m, c)| (c - f64::from(*m)).abs()).sum();
        total / self.continuous.len().max(1) as f64
    }
}

/// Per-sample channel seed derived from a run seed.
fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Full round trip for a batch. The channel, if any, acts on the emitted
/// pixel samples; sample `i` uses a seed derived from `(channel_seed, i)`.
pub fn roundtrip(cfg: &PipelineConfig, trials: &[Trial], channel: Option<&ChannelSpec>, channel_seed: u64) -> Result<RoundTrip> {
    cfg.validate()?;
    let (x_t, noises) = initial_noise(cfg, trials)?;
    let seeds: Vec<u64> = trials.iter().map(Trial::decoder_seed).collect();
    let mut pixels = synthesize(cfg, &x_t, &seeds)?;
    if let Some(spec) = channel {
        let shape = cfg.pixel_shape();
        for (i, x) in pixels.chunks_exact_mut(cfg.pixel_dim()).enumerate() {
            apply_in_place(spec, shape, x, sample_seed(channel_seed, i))?;
        }
    }
    let x_hat = recover(cfg, &pixels)?;
    let (continuous, symbols) = demap_batch(cfg, &x_hat, trials, Some(&noises))?;
    Ok(RoundTrip { pixels, continuous, symbols })
}

/// Pixel outputs of the stego, cover and energy-matched control runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBatches {
    pub stego: Vec<NoiseTensor>,
    /// Generated from the keyed noise alone.
    pub baseline: Vec<NoiseTensor>,
    /// Message signal replaced by a keyed Gaussian of variance Var(u).
    pub control: Vec<NoiseTensor>,
}

pub fn analysis_batches(cfg: &PipelineConfig, trials: &[Trial]) -> Result<AnalysisBatches> {
    cfg.validate()?;
    let d = cfg.embed_dim();
    let (stego_t, noises) = initial_noise(cfg, trials)?;
    let mut control_t = Vec::with_capacity(stego_t.len());
    let sd = cfg.codec.message_variance().sqrt();
    for (t, n) in trials.iter().zip(&noises) {
        let g = KeyedStream::new(&t.key, DomainTag::Control).normals(0, d);
        control_t.extend(g.iter().zip(n).map(|(g, n)| (sd * g + n) / cfg.codec.sigma()));
    }
    let baseline_t: Vec<f64> = noises.concat();
    let seeds: Vec<u64> = trials.iter().map(Trial::decoder_seed).collect();
    let shape = cfg.pixel_shape();
    let to_tensors = |flat: Vec<f64>| -> Result<Vec<NoiseTensor>> {
        flat.chunks_exact(cfg.pixel_dim()).map(|c| Ok(NoiseTensor::new(shape, c.to_vec())?)).collect()
    };
    Ok(AnalysisBatches {
        stego: to_tensors(synthesize(cfg, &stego_t, &seeds)?)?,
        baseline: to_tensors(synthesize(cfg, &baseline_t, &seeds)?)?,
        control: to_tensors(synthesize(cfg, &control_t, &seeds)?)?,
    })
}
