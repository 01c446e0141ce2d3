//! Public header stored with a stego sample. Never holds the key or S.

use gsteg_codec::{ICDF_VERSION, PRNG_ALGORITHM};

use crate::{PipelineConfig, PipelineError, Result};

const FORMAT: &str = "gsteg-manifest-v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub mode: String,
    pub schedule: String,
    pub steps: usize,
    pub order: usize,
    pub schedule_fingerprint: String,
    pub codec_hash: String,
    pub q: u32,
    pub payload_bits: usize,
    pub prng: String,
    pub icdf: String,
}

impl Manifest {
    pub fn for_config(cfg: &PipelineConfig, payload_bits: usize) -> Self {
        Manifest {
            mode: cfg.mode.label().to_string(),
            schedule: cfg.schedule.kind.label().to_string(),
            steps: cfg.schedule.steps,
            order: cfg.solver.order,
            schedule_fingerprint: cfg.schedule.fingerprint(),
            codec_hash: cfg.codec.public_hash(),
            q: cfg.codec.q(),
            payload_bits,
            prng: PRNG_ALGORITHM.to_string(),
            icdf: ICDF_VERSION.to_string(),
        }
    }

    /// Checks that `cfg` reproduces the hiding side.
    pub fn verify(&self, cfg: &PipelineConfig) -> Result<()> {
        let own = Manifest::for_config(cfg, self.payload_bits);
        let checks: [(&'static str, &str, &str); 5] = [
            ("mode", &own.mode, &self.mode),
            ("schedule fingerprint", &own.schedule_fingerprint, &self.schedule_fingerprint),
            ("codec hash", &own.codec_hash, &self.codec_hash),
            ("prng algorithm", &own.prng, &self.prng),
            ("icdf version", &own.icdf, &self.icdf),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(PipelineError::FingerprintMismatch { what, expected: expected.to_string(), found: found.to_string() });
            }
        }
        if own.order != self.order {
            return Err(PipelineError::FingerprintMismatch { what: "solver order", expected: own.order.to_string(), found: self.order.to_string() });
        }
        let capacity = cfg.codec.dims() * cfg.codec.q() as usize;
        if self.payload_bits > capacity {
            return Err(PipelineError::Manifest(format!("payload of {} bits exceeds capacity {capacity}", self.payload_bits)));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "format={FORMAT}\nmode={}\nschedule={}\nsteps={}\norder={}\nschedule_fingerprint={}\ncodec_hash={}\nq={}\npayload_bits={}\nprng={}\nicdf={}\n",
            self.mode, self.schedule, self.steps, self.order, self.schedule_fingerprint, self.codec_hash, self.q, self.payload_bits, self.prng, self.icdf
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| PipelineError::Manifest(format!("line without '=': {line:?}")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| PipelineError::Manifest(format!("missing field {k:?}")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| PipelineError::Manifest(format!("field {k:?} is not an integer"))) };
        if get("format")? != FORMAT {
            return Err(PipelineError::Manifest(format!("unsupported format {:?}", get("format")?)));
        }
        Ok(Manifest {
            mode: get("mode")?.to_string(),
            schedule: get("schedule")?.to_string(),
            steps: num("steps")?,
            order: num("order")?,
            schedule_fingerprint: get("schedule_fingerprint")?.to_string(),
            codec_hash: get("codec_hash")?.to_string(),
            q: num("q")? as u32,
            payload_bits: num("payload_bits")?,
            prng: get("prng")?.to_string(),
            icdf: get("icdf")?.to_string(),
        })
    }
}
