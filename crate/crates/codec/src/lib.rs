//! Payload packing and the approximate-Gaussian noise mapping.
//!
//! A payload is split into `Q`-bit symbols, each symbol is turned into a
//! bounded deterministic offset `u = S·(m/(2^Q−1) − 0.5)`, and the offset is
//! mixed with keyed auxiliary Gaussian noise before renormalizing to unit
//! variance. The receiver regenerates the same noise from the shared key and
//! inverts the affine map exactly.

mod bits;
mod error;
mod keyed;
mod mapping;
mod params;
mod tensor;

pub use bits::{pack_message, unpack_message, SymbolStream};
pub use error::CodecError;
pub use keyed::{inverse_normal_cdf, Key, KeyedStream, DomainTag, ICDF_VERSION, PRNG_ALGORITHM};
pub use mapping::{
    build_lut, demap_continuous, demap_noise, keyed_noise, map_message, map_message_lut, map_with_noise, quantize_symbols,
};
pub use params::CodecParams;
pub use tensor::{NoiseTensor, TensorFile};

pub type Result<T> = std::result::Result<T, CodecError>;
