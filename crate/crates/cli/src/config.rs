use std::path::{Path, PathBuf};
use std::sync::Arc;

use gsteg_channels::{ChannelSpec, ToyAutoencoder};
use gsteg_codec::{CodecParams, Key, ICDF_VERSION, PRNG_ALGORITHM};
use gsteg_diffusion::{make_schedule, Direction, ScheduleKind, ScoreModel, SolverConfig};
use gsteg_optimizer::{default_acc_target, OptConfig, StageWeights};
use gsteg_pipeline::{Mode, PipelineConfig, LATENT_RHO, LATENT_STD, LATENT_WIDE_INDICES, LATENT_WIDE_STD, PIXEL_SHAPE};
use serde::Deserialize;

use crate::CliError;

/// Whole experiment document. Every section may be omitted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub prng_algorithm: String,
    pub icdf_version: String,
    pub pipeline: PipelineSection,
    pub autoencoder: Option<AutoencoderSection>,
    pub codec: CodecSection,
    pub schedule: ScheduleSection,
    pub optimizer: OptimizerSection,
    pub attacks: AttackSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            prng_algorithm: PRNG_ALGORITHM.to_string(),
            icdf_version: ICDF_VERSION.to_string(),
            pipeline: PipelineSection::default(),
            autoencoder: None,
            codec: CodecSection::default(),
            schedule: ScheduleSection::default(),
            optimizer: OptimizerSection::default(),
            attacks: AttackSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Pixel,
    Latent,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Mode {
        match m {
            ModeName::Pixel => Mode::Pixel,
            ModeName::Latent => Mode::Latent,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub mode: ModeName,
    /// Pixel sample shape (channels, height, width).
    pub shape: [usize; 3],
    /// Pixel-mode data prior N(model_mean, model_std²).
    pub model_mean: f64,
    pub model_std: f64,
    /// Latent-mode prior: std per component, with a few wide components.
    pub latent_std: f64,
    pub latent_wide_std: f64,
    pub latent_wide_indices: Vec<usize>,
    /// Levels of the export quantizer; 0 disables it. Absent: off in pixel
    /// mode, 256 in latent mode.
    pub export_quantize: Option<u64>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            mode: ModeName::Pixel,
            shape: PIXEL_SHAPE,
            model_mean: 0.0,
            model_std: 0.5,
            latent_std: LATENT_STD,
            latent_wide_std: LATENT_WIDE_STD,
            latent_wide_indices: LATENT_WIDE_INDICES.to_vec(),
            export_quantize: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutoencoderSection {
    pub block: usize,
    pub rho: f64,
    pub clamp: bool,
}

impl Default for AutoencoderSection {
    fn default() -> Self {
        AutoencoderSection { block: 2, rho: LATENT_RHO, clamp: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecSection {
    pub q: u32,
    /// Needed by hide, extract and robustness; optimize-s finds it.
    pub s: Option<f64>,
    /// 64 hex digits; takes precedence over `key_seed`.
    pub key: Option<String>,
    pub key_seed: u64,
}

impl Default for CodecSection {
    fn default() -> Self {
        CodecSection { q: 1, s: None, key: None, key_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    LinearBeta,
    Cosine,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub kind: ScheduleName,
    pub steps: usize,
    pub order: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { kind: ScheduleName::LinearBeta, steps: 50, order: 3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    /// Absent: the per-mode, per-Q default.
    pub acc_target: Option<f64>,
    pub beta_base: f64,
    /// Stage multipliers (deficit, approaching, achieved).
    pub gamma: [f64; 3],
    pub delta1: f64,
    pub eta: f64,
    pub batch: usize,
    pub max_iters: usize,
    pub converge_window: usize,
    pub s0: f64,
    pub s_max: f64,
    pub fd_step: f64,
    pub seed: u64,
    /// Channel applied inside the loop, `kind:params`.
    pub channel: Option<String>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let g = StageWeights::default();
        OptimizerSection {
            acc_target: None,
            beta_base: 1.0,
            gamma: [g.deficit, g.approaching, g.achieved],
            delta1: 0.01,
            eta: 0.05,
            batch: 64,
            max_iters: 300,
            converge_window: 20,
            s0: 1.0,
            s_max: 64.0,
            fd_step: 1e-2,
            seed: 0,
            channel: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub specs: Vec<String>,
    pub seeds: usize,
    /// Messages per seed.
    pub batch: usize,
    /// Capacities swept by `robustness`.
    pub q: Vec<u32>,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection {
            specs: ["awgn:0.01", "awgn:0.1", "salt_pepper:0.01", "gaussian_blur:3,0.8", "quantize:256", "dct_compress:8,90"]
                .map(String::from)
                .to_vec(),
            seeds: 32,
            batch: 8,
            q: vec![1, 2, 4],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from(".") }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses and validates; errors name the offending key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path.is_empty() || path == "." {
            CliError::Config(msg)
        } else {
            CliError::Config(format!("{path}: {msg}"))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn mode(&self) -> Mode {
        self.pipeline.mode.into()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.prng_algorithm != PRNG_ALGORITHM {
            return Err(invalid("prng_algorithm", format!("unsupported {:?}, expected {PRNG_ALGORITHM:?}", self.prng_algorithm)));
        }
        if self.icdf_version != ICDF_VERSION {
            return Err(invalid("icdf_version", format!("unsupported {:?}, expected {ICDF_VERSION:?}", self.icdf_version)));
        }
        if self.mode() == Mode::Latent && self.autoencoder.is_none() {
            return Err(invalid("autoencoder", "section is required when pipeline.mode = \"latent\""));
        }
        self.key()?;
        if let Some(s) = self.codec.s {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("codec.s", format!("must be positive, got {s}")));
            }
        }
        if self.attacks.seeds == 0 || self.attacks.batch == 0 {
            return Err(invalid("attacks", "seeds and batch must be positive"));
        }
        for (i, s) in self.attacks.specs.iter().enumerate() {
            ChannelSpec::parse(s, Some(self.autoencoder_or_default()?)).map_err(|e| invalid(&format!("attacks.specs[{i}]"), e))?;
        }
        if let Some(c) = &self.optimizer.channel {
            ChannelSpec::parse(c, Some(self.autoencoder_or_default()?)).map_err(|e| invalid("optimizer.channel", e))?;
        }
        // Builds every derived object once so errors surface before any run.
        let q = self.codec.q;
        let cfg = self.pipeline_config(self.mode(), q, self.codec.s.unwrap_or(1.0))?;
        self.opt_config(cfg)?.validate().map_err(|e| invalid("optimizer", e))?;
        for &q in &self.attacks.q {
            CodecParams::new(q, 1.0, Key::from_seed(0), 1).map_err(|e| invalid("attacks.q", e))?;
        }
        Ok(())
    }

    pub fn key(&self) -> Result<Key, CliError> {
        match &self.codec.key {
            Some(hex) => Key::from_hex(hex).map_err(|e| invalid("codec.key", e)),
            None => Ok(Key::from_seed(self.codec.key_seed)),
        }
    }

    pub fn autoencoder_or_default(&self) -> Result<Arc<ToyAutoencoder>, CliError> {
        let sec = self.autoencoder.clone().unwrap_or_default();
        let ae = ToyAutoencoder::block_pool(self.pipeline.shape, sec.block, sec.rho, sec.clamp).map_err(|e| invalid("autoencoder", e))?;
        Ok(Arc::new(ae))
    }

    /// Pipeline for `mode` at (q, s). Latent mode falls back to the default
    /// autoencoder when the section is absent.
    pub fn pipeline_config(&self, mode: Mode, q: u32, s: f64) -> Result<PipelineConfig, CliError> {
        let p = &self.pipeline;
        let kind = match self.schedule.kind {
            ScheduleName::LinearBeta => ScheduleKind::LinearBeta,
            ScheduleName::Cosine => ScheduleKind::Cosine,
        };
        let schedule = make_schedule(kind, self.schedule.steps).map_err(|e| invalid("schedule", e))?;
        let solver = SolverConfig::new(self.schedule.order, self.schedule.steps, Direction::Generate).map_err(|e| invalid("schedule", e))?;
        let key = self.key()?;
        let (autoencoder, shape, model, default_quant) = match mode {
            Mode::Pixel => {
                let d: usize = p.shape.iter().product();
                let model = ScoreModel::isotropic(d, p.model_mean, p.model_std * p.model_std).map_err(|e| invalid("pipeline.model_std", e))?;
                (None, p.shape, model, None)
            }
            Mode::Latent => {
                let ae = self.autoencoder_or_default()?;
                let k = ae.latent_dim();
                let mut var = vec![p.latent_std * p.latent_std; k];
                for &i in &p.latent_wide_indices {
                    *var.get_mut(i).ok_or_else(|| invalid("pipeline.latent_wide_indices", format!("index {i} ≥ latent dim {k}")))? =
                        p.latent_wide_std * p.latent_wide_std;
                }
                let model = ScoreModel::gaussian(vec![0.0; k], var).map_err(|e| invalid("pipeline.latent_std", e))?;
                (Some(ae.clone()), ae.latent_shape(), model, Some(256))
            }
        };
        let dims = model.dims();
        let codec = CodecParams::new(q, s, key, dims).map_err(|e| invalid("codec", e))?;
        let export_quantize = match p.export_quantize {
            Some(0) => None,
            Some(l) => Some(l),
            None => default_quant,
        };
        let cfg = PipelineConfig { mode, codec, schedule, model, solver, autoencoder, export_quantize, shape };
        cfg.validate().map_err(|e| invalid("pipeline", e))?;
        Ok(cfg)
    }

    pub fn opt_config(&self, pipeline: PipelineConfig) -> Result<OptConfig, CliError> {
        let o = &self.optimizer;
        let mut cfg = OptConfig::new(pipeline);
        cfg.acc_target = o.acc_target.unwrap_or_else(|| default_acc_target(cfg.pipeline.mode, cfg.q()));
        cfg.beta_base = o.beta_base;
        cfg.gamma = StageWeights { deficit: o.gamma[0], approaching: o.gamma[1], achieved: o.gamma[2] };
        cfg.delta1 = o.delta1;
        cfg.eta = o.eta;
        cfg.batch = o.batch;
        cfg.max_iters = o.max_iters;
        cfg.converge_window = o.converge_window;
        cfg.s0 = o.s0;
        cfg.s_max = o.s_max;
        cfg.fd_step = o.fd_step;
        cfg.seed = o.seed;
        cfg.channel = match &o.channel {
            Some(c) => Some(ChannelSpec::parse(c, Some(self.autoencoder_or_default()?)).map_err(|e| invalid("optimizer.channel", e))?),
            None => None,
        };
        Ok(cfg)
    }

    pub fn attack_specs(&self) -> Result<Vec<ChannelSpec>, CliError> {
        let ae = self.autoencoder_or_default()?;
        self.attacks
            .specs
            .iter()
            .enumerate()
            .map(|(i, s)| ChannelSpec::parse(s, Some(ae.clone())).map_err(|e| invalid(&format!("attacks.specs[{i}]"), e)))
            .collect()
    }
}
