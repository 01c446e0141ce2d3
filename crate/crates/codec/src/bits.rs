use crate::keyed::{DomainTag, KeyedStream};
use crate::params::check_q;
use crate::{CodecError, Key, Result};

/// Q-bit symbols filling the tensor components in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolStream {
    pub symbols: Vec<u32>,
    /// Number of payload bits before keyed padding.
    pub payload_len_bits: usize,
}

impl SymbolStream {
    pub fn new(symbols: Vec<u32>, payload_len_bits: usize) -> Self {
        SymbolStream { symbols, payload_len_bits }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Checks every symbol fits in `q` bits and the payload fits in the stream.
    pub fn validate(&self, q: u32) -> Result<()> {
        check_q(q)?;
        if let Some((index, &value)) = self.symbols.iter().enumerate().find(|(_, &m)| m >> q != 0) {
            return Err(CodecError::MalformedSymbol { index, value, q });
        }
        let available = self.symbols.len() * q as usize;
        if self.payload_len_bits > available {
            return Err(CodecError::MalformedStream { payload_len_bits: self.payload_len_bits, available });
        }
        Ok(())
    }
}

/// Groups bits big-endian into `dims` symbols of `q` bits; missing bits come
/// from the keyed padding stream so every symbol stays uniform.
pub fn pack_message(bits: &[bool], q: u32, dims: usize, key: &Key) -> Result<SymbolStream> {
    check_q(q)?;
    let capacity = dims * q as usize;
    if bits.len() > capacity {
        return Err(CodecError::CapacityExceeded { bits: bits.len(), capacity });
    }
    let padding = KeyedStream::new(key, DomainTag::Padding).bits(bits.len() as u64, capacity - bits.len());
    let symbols = bits
        .iter()
        .chain(padding.iter())
        .copied()
        .collect::<Vec<_>>()
        .chunks(q as usize)
        .map(|chunk| chunk.iter().fold(0u32, |m, &b| (m << 1) | u32::from(b)))
        .collect();
    Ok(SymbolStream { symbols, payload_len_bits: bits.len() })
}

/// First `payload_len_bits` bits of the big-endian expansion.
pub fn unpack_message(stream: &SymbolStream, q: u32) -> Result<Vec<bool>> {
    stream.validate(q)?;
    Ok(stream
        .symbols
        .iter()
        .flat_map(|&m| (0..q).rev().map(move |b| (m >> b) & 1 == 1))
        .take(stream.payload_len_bits)
        .collect())
}
