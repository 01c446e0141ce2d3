use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::{CodecError, Result};

/// Identifier of the counter-based generator, recorded in experiment configs.
pub const PRNG_ALGORITHM: &str = "chacha20-ctr-v1";
/// Identifier of the inverse normal CDF approximation (Wichura AS241).
pub const ICDF_VERSION: &str = "as241-v1";

/// 256-bit shared secret.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Key([u8; 32]);

impl Key {
    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        Key(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Parses 64 hex digits.
    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 64 {
            return Err(CodecError::InvalidKey(format!("expected 64 hex digits, got {}", s.len())));
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let pair = std::str::from_utf8(chunk).map_err(|e| CodecError::InvalidKey(e.to_string()))?;
            out[i] = u8::from_str_radix(pair, 16)
                .map_err(|_| CodecError::InvalidKey(format!("bad hex digit pair {pair:?}")))?;
        }
        Ok(Key(out))
    }

    /// Deterministic key for tests and examples: SHA-256 of the seed.
    pub fn from_seed(seed: u64) -> Self {
        Key(Sha256::digest(seed.to_le_bytes()).into())
    }

    /// Copy of this key with one bit flipped.
    pub fn with_bit_flipped(&self, bit: usize) -> Self {
        let mut out = self.0;
        out[(bit / 8) % 32] ^= 1 << (bit % 8);
        Key(out)
    }

    /// Sub-key for one domain: SHA-256(label ‖ key).
    fn derive(&self, tag: DomainTag) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(tag.label().as_bytes());
        h.update([0u8]);
        h.update(self.0);
        h.finalize().into()
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Key(<redacted>)")
    }
}

/// Domain separation for the keyed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    /// Auxiliary Gaussian noise `n_i` of the mapping.
    Noise,
    /// Padding bits appended to short payloads.
    Padding,
    /// Energy-matched control signal for residual analysis.
    Control,
    /// Seeds for decoder-side noise in the latent pipeline.
    Decoder,
}

impl DomainTag {
    pub fn label(self) -> &'static str {
        match self {
            DomainTag::Noise => "gsteg/noise/v1",
            DomainTag::Padding => "gsteg/padding/v1",
            DomainTag::Control => "gsteg/control/v1",
            DomainTag::Decoder => "gsteg/decoder/v1",
        }
    }
}

/// Random-access keyed stream: value `i` depends only on (key, tag, i).
pub struct KeyedStream {
    rng: ChaCha20Rng,
}

impl KeyedStream {
    pub fn new(key: &Key, tag: DomainTag) -> Self {
        KeyedStream { rng: ChaCha20Rng::from_seed(key.derive(tag)) }
    }

    /// Raw 64-bit word at counter `i`.
    pub fn word(&mut self, i: u64) -> u64 {
        self.seek(i);
        self.rng.next_u64()
    }

    fn seek(&mut self, i: u64) {
        self.rng.set_word_pos(u128::from(i) * 2);
    }

    /// Uniforms in the open interval (0,1) for counters `start..start+out.len()`.
    pub fn fill_uniform(&mut self, start: u64, out: &mut [f64]) {
        self.seek(start);
        for v in out.iter_mut() {
            *v = word_to_open_unit(self.rng.next_u64());
        }
    }

    /// Standard normal draws `Φ⁻¹(u_i)` for counters `start..start+out.len()`.
    pub fn fill_normal(&mut self, start: u64, out: &mut [f64]) {
        self.fill_uniform(start, out);
        for v in out.iter_mut() {
            *v = inverse_normal_cdf(*v);
        }
    }

    pub fn normals(&mut self, start: u64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        self.fill_normal(start, &mut out);
        out
    }

    /// Bits for counters `start..start+count`, one bit (the MSB) per word.
    pub fn bits(&mut self, start: u64, count: usize) -> Vec<bool> {
        self.seek(start);
        (0..count).map(|_| self.rng.next_u64() >> 63 == 1).collect()
    }
}

fn word_to_open_unit(w: u64) -> f64 {
    ((w >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608_0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_90,
    5.769_497_221_460_691_405_50,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_40,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20,
    5.463_784_911_164_114_369_90,
    1.784_826_539_917_291_335_80,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Standard normal quantile, Wichura's AS241 (PPND16) rational approximation.
///
/// Returns ±∞ at the closed endpoints and NaN outside [0,1].
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
