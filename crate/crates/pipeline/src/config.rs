use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use gsteg_channels::ToyAutoencoder;
use gsteg_codec::{CodecParams, Key};
use gsteg_diffusion::{make_schedule, Direction, ScheduleKind, ScheduleParams, ScoreModel, SolverConfig};

use crate::{PipelineError, Result};

pub const PIXEL_SHAPE: [usize; 3] = [3, 16, 16];
pub const PIXEL_VAR: f64 = 0.25;
pub const REFERENCE_STEPS: usize = 50;
pub const REFERENCE_ORDER: usize = 3;
pub const LATENT_STD: f64 = 0.15;
pub const LATENT_WIDE_STD: f64 = 2.5;
/// Latent components with the wide prior; their decoded pixels saturate.
pub const LATENT_WIDE_INDICES: [usize; 2] = [0, 96];
pub const LATENT_RHO: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pixel,
    Latent,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Pixel => "pixel",
            Mode::Latent => "latent",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel" => Ok(Mode::Pixel),
            "latent" => Ok(Mode::Latent),
            _ => Err(PipelineError::InvalidConfig(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub codec: CodecParams,
    pub schedule: ScheduleParams,
    pub model: ScoreModel,
    pub solver: SolverConfig,
    /// Required in latent mode, ignored otherwise.
    pub autoencoder: Option<Arc<ToyAutoencoder>>,
    /// Levels of the quantizer applied to the emitted pixel sample.
    pub export_quantize: Option<u64>,
    /// Sample shape in pixel mode; taken from the autoencoder in latent mode.
    pub shape: [usize; 3],
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        self.model.validate()?;
        self.solver.validate()?;
        if self.solver.direction != Direction::Generate {
            return bad("solver direction must be generate; inversion reverses it".into());
        }
        if self.solver.steps != self.schedule.steps {
            return bad(format!("solver steps {} differ from schedule steps {}", self.solver.steps, self.schedule.steps));
        }
        if let Some(l) = self.export_quantize {
            if l < 2 {
                return bad(format!("export quantization needs ≥ 2 levels, got {l}"));
            }
        }
        let space = match (self.mode, &self.autoencoder) {
            (Mode::Latent, None) => return bad("latent mode requires an autoencoder".into()),
            (Mode::Latent, Some(ae)) => ae.latent_dim(),
            (Mode::Pixel, _) => self.shape.iter().product(),
        };
        if self.codec.dims() != space || self.model.dims() != space {
            return bad(format!(
                "codec dims {}, model dims {} and {} dims {space} must agree",
                self.codec.dims(),
                self.model.dims(),
                self.mode
            ));
        }
        Ok(())
    }

    pub fn pixel_shape(&self) -> [usize; 3] {
        match (&self.autoencoder, self.mode) {
            (Some(ae), Mode::Latent) => ae.pixel_shape(),
            _ => self.shape,
        }
    }

    pub fn pixel_dim(&self) -> usize {
        self.pixel_shape().iter().product()
    }

    /// Dimension of the space the message is embedded in.
    pub fn embed_dim(&self) -> usize {
        self.codec.dims()
    }

    pub fn with_scale(&self, s: f64) -> Result<Self> {
        Ok(PipelineConfig { codec: self.codec.with_scale(s)?, ..self.clone() })
    }

    pub fn with_key(&self, key: Key) -> Self {
        PipelineConfig { codec: self.codec.with_key(key), ..self.clone() }
    }
}

fn reference_solver() -> Result<(ScheduleParams, SolverConfig)> {
    let schedule = make_schedule(ScheduleKind::LinearBeta, REFERENCE_STEPS)?;
    let solver = SolverConfig::new(REFERENCE_ORDER, REFERENCE_STEPS, Direction::Generate)?;
    Ok((schedule, solver))
}

/// Pixel pipeline on 3×16×16 samples with data ~ N(0, 0.25 I).
pub fn reference_pixel(q: u32, s: f64, key: Key) -> Result<PipelineConfig> {
    let dims = PIXEL_SHAPE.iter().product();
    let (schedule, solver) = reference_solver()?;
    let cfg = PipelineConfig {
        mode: Mode::Pixel,
        codec: CodecParams::new(q, s, key, dims)?,
        schedule,
        model: ScoreModel::isotropic(dims, 0.0, PIXEL_VAR)?,
        solver,
        autoencoder: None,
        export_quantize: None,
        shape: PIXEL_SHAPE,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Latent pipeline: 2×2 pooling encoder (k = D/4), decoder noise 0.02,
/// clamped decode and 8-bit export.
pub fn reference_latent(q: u32, s: f64, key: Key) -> Result<PipelineConfig> {
    let ae = ToyAutoencoder::block_pool(PIXEL_SHAPE, 2, LATENT_RHO, true)?;
    let k = ae.latent_dim();
    let mut var = vec![LATENT_STD * LATENT_STD; k];
    for &i in &LATENT_WIDE_INDICES {
        var[i] = LATENT_WIDE_STD * LATENT_WIDE_STD;
    }
    let (schedule, solver) = reference_solver()?;
    let cfg = PipelineConfig {
        mode: Mode::Latent,
        codec: CodecParams::new(q, s, key, k)?,
        schedule,
        model: ScoreModel::gaussian(vec![0.0; k], var)?,
        solver,
        shape: ae.latent_shape(),
        autoencoder: Some(Arc::new(ae)),
        export_quantize: Some(256),
    };
    cfg.validate()?;
    Ok(cfg)
}
