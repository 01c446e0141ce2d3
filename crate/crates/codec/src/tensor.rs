//! Tensor container and its on-disk format.
//!
//! Layout (all integers little-endian):
//!
//! | bytes            | content                                  |
//! |------------------|------------------------------------------|
//! | 0..12            | magic `GSTEG_TENSOR`                     |
//! | 12..16           | format version (u32, currently 1)        |
//! | 16..28           | shape (channels, height, width) as u32   |
//! | 28..32           | extension length L (u32)                 |
//! | 32..32+L         | extension block (UTF-8 manifest)         |
//! | 32+L..           | values as f64, row-major                 |

use std::io::{Read, Write};

use crate::{CodecError, Result};

const MAGIC: &[u8; 12] = b"GSTEG_TENSOR";
const VERSION: u32 = 1;
const MAX_EXTENSION: u32 = 1 << 20;

/// Real tensor of shape (channels, height, width), finite values only.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTensor {
    shape: [usize; 3],
    values: Vec<f64>,
}

impl NoiseTensor {
    pub fn new(shape: [usize; 3], values: Vec<f64>) -> Result<Self> {
        let expected = shape.iter().product();
        if values.len() != expected {
            return Err(CodecError::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CodecError::NonFinite(i));
        }
        Ok(NoiseTensor { shape, values })
    }

    /// Single-row tensor of shape (1, 1, len).
    pub fn flat(values: Vec<f64>) -> Result<Self> {
        Self::new([1, 1, values.len()], values)
    }

    pub fn reshape(self, shape: [usize; 3]) -> Result<Self> {
        Self::new(shape, self.values)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// One (height × width) plane.
    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.shape[1] * self.shape[2];
        &self.values[channel * n..(channel + 1) * n]
    }
}

/// A tensor plus its header extension block.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub tensor: NoiseTensor,
    pub extension: Vec<u8>,
}

impl TensorFile {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let ext_len = u32::try_from(self.extension.len())
            .ok()
            .filter(|&l| l <= MAX_EXTENSION)
            .ok_or_else(|| CodecError::Format("extension block too large".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for d in self.tensor.shape {
            let d = u32::try_from(d).map_err(|_| CodecError::Format(format!("dimension {d} exceeds u32")))?;
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&ext_len.to_le_bytes())?;
        w.write_all(&self.extension)?;
        for v in &self.tensor.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(32 + self.extension.len() + 8 * self.tensor.dims());
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 12];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(CodecError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(CodecError::Format(format!("unsupported version {version}")));
        }
        let mut shape = [0usize; 3];
        for d in shape.iter_mut() {
            *d = read_u32(&mut r)? as usize;
        }
        let ext_len = read_u32(&mut r)?;
        if ext_len > MAX_EXTENSION {
            return Err(CodecError::Format("extension block too large".into()));
        }
        let mut extension = vec![0u8; ext_len as usize];
        r.read_exact(&mut extension).map_err(truncated)?;
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CodecError::Format("shape overflows".into()))?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() != count * 8 {
            return Err(CodecError::Format(format!("expected {} value bytes, found {}", count * 8, raw.len())));
        }
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(TensorFile { tensor: NoiseTensor::new(shape, values)?, extension })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> CodecError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        CodecError::Format("truncated header".into())
    } else {
        CodecError::Io(e)
    }
}
