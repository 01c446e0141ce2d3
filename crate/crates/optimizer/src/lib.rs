//! Offline search for the scale factor S at fixed Q: gradient steps in
//! log S on `L_retr + β_eff · L_sec`, with β_eff chosen by how far the
//! current accuracy is from its target.

use std::collections::VecDeque;

use gsteg_channels::ChannelSpec;
use gsteg_codec::SymbolStream;
use gsteg_gaussianity::{analytic_kl, clamp_dkl, security_loss, GaussianityError};
use gsteg_pipeline::{roundtrip, trial_batch, Mode, PipelineConfig, PipelineError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {left} symbols vs {right} estimates")]
    LengthMismatch { left: usize, right: usize },
    #[error("no feasible scale: {0}")]
    Infeasible(Box<Infeasible>),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Gaussianity(#[from] GaussianityError),
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

/// Diagnostic for a run whose final S fails validation.
#[derive(Debug, Clone)]
pub struct Infeasible {
    pub s_last: f64,
    pub validation_acc: f64,
    pub required: f64,
    pub trace: Vec<OptState>,
}

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation accuracy {:.6} at S = {:.6e} is below the required {:.6}", self.validation_acc, self.s_last, self.required)
    }
}

/// β multipliers for the three accuracy stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageWeights {
    pub deficit: f64,
    pub approaching: f64,
    pub achieved: f64,
}

impl Default for StageWeights {
    fn default() -> Self {
        StageWeights { deficit: 0.01, approaching: 1.0, achieved: 100.0 }
    }
}

/// Accuracy targets per Q (1, 2, 4, 8); other Q take the nearest lower entry.
pub fn default_acc_target(mode: Mode, q: u32) -> f64 {
    let table = match mode {
        Mode::Pixel => [0.9999, 0.99, 0.97, 0.95],
        Mode::Latent => [0.9999, 0.98, 0.96, 0.90],
    };
    match q {
        0 | 1 => table[0],
        2 | 3 => table[1],
        4..=7 => table[2],
        _ => table[3],
    }
}

#[derive(Debug, Clone)]
pub struct OptConfig {
    pub acc_target: f64,
    pub beta_base: f64,
    pub gamma: StageWeights,
    pub delta1: f64,
    pub eta: f64,
    pub batch: usize,
    pub max_iters: usize,
    pub converge_window: usize,
    pub s0: f64,
    pub s_max: f64,
    /// Central-difference half step in log S.
    pub fd_step: f64,
    pub seed: u64,
    /// Q, key-independent settings and the model; its S is ignored.
    pub pipeline: PipelineConfig,
    /// Optional distortion between hiding and extraction.
    pub channel: Option<ChannelSpec>,
    /// Overrides the stage weighting with a constant β_eff.
    pub freeze_beta: Option<f64>,
}

impl OptConfig {
    pub fn new(pipeline: PipelineConfig) -> Self {
        OptConfig {
            acc_target: default_acc_target(pipeline.mode, pipeline.codec.q()),
            beta_base: 1.0,
            gamma: StageWeights::default(),
            delta1: 0.01,
            eta: 0.05,
            batch: 64,
            max_iters: 300,
            converge_window: 20,
            s0: 1.0,
            s_max: 64.0,
            fd_step: 1e-2,
            seed: 0,
            pipeline,
            channel: None,
            freeze_beta: None,
        }
    }

    pub fn q(&self) -> u32 {
        self.pipeline.codec.q()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OptimizeError::InvalidConfig(m));
        let g = self.gamma;
        if !(self.acc_target > 0.0 && self.acc_target <= 1.0) {
            return bad(format!("acc_target {} outside (0, 1]", self.acc_target));
        }
        if !(g.deficit > 0.0 && g.deficit < g.approaching && g.approaching < g.achieved) {
            return bad(format!("stage weights must satisfy 0 < deficit < approaching < achieved, got {g:?}"));
        }
        if !(self.delta1 > 0.0 && self.delta1 < self.acc_target) {
            return bad(format!("delta1 {} must lie in (0, acc_target)", self.delta1));
        }
        if !(self.beta_base > 0.0 && self.eta > 0.0 && self.fd_step > 0.0) {
            return bad("beta_base, eta and fd_step must be positive".into());
        }
        if self.batch == 0 || self.max_iters == 0 || self.converge_window == 0 {
            return bad("batch, max_iters and converge_window must be positive".into());
        }
        if !(self.s0 > 0.0 && self.s0 <= self.s_max && self.s_max.is_finite()) {
            return bad(format!("need 0 < s0 ≤ s_max, got s0 = {}, s_max = {}", self.s0, self.s_max));
        }
        if let Some(b) = self.freeze_beta {
            if !(b.is_finite() && b >= 0.0) {
                return bad(format!("frozen beta {b} must be finite and ≥ 0"));
            }
        }
        self.pipeline.validate()?;
        if let Some(ch) = &self.channel {
            ch.validate().map_err(PipelineError::from)?;
        }
        Ok(())
    }
}

/// One logged iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptState {
    pub iter: usize,
    pub s: f64,
    pub acc_curr: f64,
    pub l_retr: f64,
    pub dkl: f64,
    pub beta_eff: f64,
    /// Finite-difference estimate of dL_total/d log S.
    pub grad: f64,
}

/// Mean absolute difference between original symbols and continuous estimates.
pub fn retrieval_loss(m_orig: &SymbolStream, m_cont: &[f64]) -> Result<f64> {
    if m_orig.len() != m_cont.len() {
        return Err(OptimizeError::LengthMismatch { left: m_orig.len(), right: m_cont.len() });
    }
    if m_cont.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = m_orig.symbols.iter().zip(m_cont).map(|(m, c)| (c - f64::from(*m)).abs()).sum();
    Ok(total / m_cont.len() as f64)
}

/// Stage weight: deficit below `target − delta1`, approaching on
/// `[target − delta1, target)`, achieved from `target` up.
pub fn adapt_weight(acc_curr: f64, acc_target: f64, delta1: f64, beta_base: f64, gamma: StageWeights) -> f64 {
    if acc_curr >= acc_target {
        beta_base * gamma.achieved
    } else if acc_curr >= acc_target - delta1 {
        beta_base * gamma.approaching
    } else {
        beta_base * gamma.deficit
    }
}

/// `L_retr + β_eff · L_sec(dkl)`.
pub fn total_loss(l_retr: f64, dkl: f64, beta_eff: f64) -> Result<f64> {
    if beta_eff == 0.0 {
        return Ok(l_retr);
    }
    Ok(l_retr + beta_eff * security_loss(dkl)?)
}

/// Summary of one batched round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTripEval {
    pub acc: f64,
    pub bar: f64,
    pub l_retr: f64,
    /// Mean and standard deviation of m̃ − m.
    pub err_mean: f64,
    pub err_std: f64,
}

/// `batch` uniform messages drawn from `seed` (identical for every S),
/// passed through the pipeline and the optional channel.
pub fn roundtrip_eval(s: f64, cfg: &OptConfig, seed: u64) -> Result<RoundTripEval> {
    let pipe = cfg.pipeline.with_scale(s)?;
    let q = cfg.q();
    let trials = trial_batch(q, pipe.embed_dim(), cfg.batch, seed)?;
    let rt = roundtrip(&pipe, &trials, cfg.channel.as_ref(), seed)?;
    let errs: Vec<f64> = trials.iter().flat_map(|t| t.stream.symbols.iter()).zip(&rt.continuous).map(|(m, c)| c - f64::from(*m)).collect();
    let n = errs.len() as f64;
    let err_mean = errs.iter().sum::<f64>() / n;
    let err_std = (errs.iter().map(|e| (e - err_mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RoundTripEval {
        acc: rt.symbol_accuracy(&trials),
        bar: rt.bit_accuracy(&trials, q)?,
        l_retr: rt.retrieval_loss(&trials),
        err_mean,
        err_std,
    })
}

fn security_term(s: f64, q: u32) -> Result<f64> {
    Ok(security_loss(clamp_dkl(analytic_kl(s, q)?))?)
}

/// Central difference of `L_retr + β_eff·L_sec` in log S. The two sides
/// draw their batches from `seeds`; equal seeds give common random numbers.
pub fn fd_gradient(cfg: &OptConfig, s: f64, beta_eff: f64, seeds: (u64, u64)) -> Result<f64> {
    let q = cfg.q();
    let h = cfg.fd_step;
    let (s_up, s_dn) = (s * h.exp(), s * (-h).exp());
    let up = roundtrip_eval(s_up, cfg, seeds.0)?.l_retr + beta_eff * security_term(s_up, q)?;
    let dn = roundtrip_eval(s_dn, cfg, seeds.1)?.l_retr + beta_eff * security_term(s_dn, q)?;
    Ok((up - dn) / (2.0 * h))
}

fn iteration_seed(seed: u64, iter: usize) -> u64 {
    seed ^ (iter as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Seed of the held-out validation batch.
pub fn validation_seed(seed: u64) -> u64 {
    seed ^ 0x005E_ED0F_0A11_DA7E
}

#[derive(Debug, Clone)]
pub struct OptOutcome {
    pub s_star: f64,
    pub trace: Vec<OptState>,
    pub converged: bool,
    pub validation: RoundTripEval,
    /// Analytic KL at S*.
    pub dkl: f64,
}

pub fn optimize_scale(cfg: &OptConfig) -> Result<OptOutcome> {
    cfg.validate()?;
    let q = cfg.q();
    let mut log_s = cfg.s0.ln();
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(cfg.converge_window + 1);
    let mut converged = false;
    for iter in 0..cfg.max_iters {
        let s = log_s.exp();
        let seed = iteration_seed(cfg.seed, iter);
        let here = roundtrip_eval(s, cfg, seed)?;
        let dkl = clamp_dkl(analytic_kl(s, q)?);
        let beta_eff = cfg.freeze_beta.unwrap_or_else(|| adapt_weight(here.acc, cfg.acc_target, cfg.delta1, cfg.beta_base, cfg.gamma));
        let grad = fd_gradient(cfg, s, beta_eff, (seed, seed))?;
        trace.push(OptState { iter, s, acc_curr: here.acc, l_retr: here.l_retr, dkl, beta_eff, grad });

        log_s = (log_s - cfg.eta * grad).min(cfg.s_max.ln());
        recent.push_back(log_s.exp());
        if recent.len() > cfg.converge_window {
            let old = recent.pop_front().unwrap_or(f64::NAN);
            let now = log_s.exp();
            if ((now - old) / now).abs() < 1e-3 {
                converged = true;
                break;
            }
        }
    }
    let s_star = log_s.exp();
    let validation = roundtrip_eval(s_star, cfg, validation_seed(cfg.seed))?;
    let required = cfg.acc_target - cfg.delta1;
    if validation.acc < required {
        return Err(OptimizeError::Infeasible(Box::new(Infeasible { s_last: s_star, validation_acc: validation.acc, required, trace })));
    }
    Ok(OptOutcome { s_star, trace, converged, validation, dkl: analytic_kl(s_star, q)? })
}
