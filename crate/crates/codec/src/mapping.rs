use crate::keyed::{DomainTag, KeyedStream};
use crate::{CodecError, CodecParams, NoiseTensor, Result, SymbolStream};

/// Keyed auxiliary noise `n_i`, i = 0..dims.
pub fn keyed_noise(params: &CodecParams) -> Vec<f64> {
    KeyedStream::new(params.key(), DomainTag::Noise).normals(0, params.dims())
}

fn offset(m: u32, params: &CodecParams) -> f64 {
    // S·(m/(N−1) − 0.5) written so that m and N−1−m give exactly opposite values.
    let top = f64::from(params.levels() - 1);
    params.s() * (2.0 * f64::from(m) - top) / (2.0 * top)
}

/// `LUT[m] = S·(m/(2^Q−1) − 0.5)/σ` for every symbol value.
pub fn build_lut(params: &CodecParams) -> Vec<f64> {
    (0..params.levels()).map(|m| offset(m, params) / params.sigma()).collect()
}

fn check_stream(stream: &SymbolStream, params: &CodecParams) -> Result<()> {
    if stream.len() != params.dims() {
        return Err(CodecError::DimensionMismatch { expected: params.dims(), found: stream.len() });
    }
    stream.validate(params.q())
}

/// `x_i = u_i/σ + n_i/σ` with the keyed noise regenerated from the key.
pub fn map_message(stream: &SymbolStream, params: &CodecParams) -> Result<NoiseTensor> {
    map_with_noise(stream, params, &keyed_noise(params))
}

/// Mapping with caller-supplied auxiliary noise (cached or forced in tests).
pub fn map_with_noise(stream: &SymbolStream, params: &CodecParams, noise: &[f64]) -> Result<NoiseTensor> {
    check_stream(stream, params)?;
    if noise.len() != params.dims() {
        return Err(CodecError::DimensionMismatch { expected: params.dims(), found: noise.len() });
    }
    let sigma = params.sigma();
    let values = stream
        .symbols
        .iter()
        .zip(noise)
        .map(|(&m, &n)| offset(m, params) / sigma + n / sigma)
        .collect();
    NoiseTensor::flat(values)
}

/// Table-driven mapping: one lookup and one addition per component.
pub fn map_message_lut(stream: &SymbolStream, params: &CodecParams) -> Result<NoiseTensor> {
    check_stream(stream, params)?;
    let lut = build_lut(params);
    let sigma = params.sigma();
    let values = stream
        .symbols
        .iter()
        .zip(keyed_noise(params))
        .map(|(&m, n)| lut[m as usize] + n / sigma)
        .collect();
    NoiseTensor::flat(values)
}

/// Continuous symbol estimate `((x̂σ − n)/S + 0.5)(2^Q−1)` before rounding.
pub fn demap_continuous(noise_est: &[f64], params: &CodecParams, noise: &[f64]) -> Result<Vec<f64>> {
    if noise_est.len() != params.dims() {
        return Err(CodecError::DimensionMismatch { expected: params.dims(), found: noise_est.len() });
    }
    if noise.len() != params.dims() {
        return Err(CodecError::DimensionMismatch { expected: params.dims(), found: noise.len() });
    }
    let (sigma, s, top) = (params.sigma(), params.s(), f64::from(params.levels() - 1));
    Ok(noise_est.iter().zip(noise).map(|(&x, &n)| ((x * sigma - n) / s + 0.5) * top).collect())
}

/// Rounds and clamps continuous estimates into `[0, 2^Q−1]`.
pub fn quantize_symbols(continuous: &[f64], params: &CodecParams, payload_len_bits: usize) -> SymbolStream {
    let top = f64::from(params.levels() - 1);
    let symbols = continuous
        .iter()
        .map(|&v| if v.is_nan() { 0 } else { v.round().clamp(0.0, top) as u32 })
        .collect();
    SymbolStream::new(symbols, payload_len_bits)
}

/// Recovers symbols from an estimate of the initial noise. The returned
/// stream claims the full `dims·Q` bits; callers that know the payload length
/// set `payload_len_bits` themselves.
pub fn demap_noise(noise_est: &NoiseTensor, params: &CodecParams) -> Result<SymbolStream> {
    let cont = demap_continuous(noise_est.values(), params, &keyed_noise(params))?;
    Ok(quantize_symbols(&cont, params, params.dims() * params.q() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{pack_message, Key};

    fn params(q: u32, s: f64, dims: usize) -> CodecParams {
        CodecParams::new(q, s, Key::from_seed(11), dims).unwrap()
    }

    #[test]
    fn forced_noise_example() {
        let p = params(1, 2.0, 1);
        let x = map_with_noise(&SymbolStream::new(vec![1], 1), &p, &[0.5]).unwrap();
        assert!((x.values()[0] - 1.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((x.values()[0] - 1.060_660_171_779_821).abs() < 1e-12);
    }

    #[test]
    fn endpoint_offsets_are_symmetric() {
        for s in [0.1, 1.0, 7.5] {
            let p = params(1, s, 1);
            assert_eq!(offset(1, &p), s / 2.0);
            assert_eq!(offset(0, &p), -s / 2.0);
        }
    }

    #[test]
    fn vanishing_scale_gives_pure_noise() {
        let p = params(2, 1e-300, 16);
        let stream = pack_message(&[], 2, 16, p.key()).unwrap();
        let x = map_message(&stream, &p).unwrap();
        assert_eq!(x.values(), &keyed_noise(&p)[..]);
    }

    #[test]
    fn lut_values_and_antisymmetry() {
        let lut = build_lut(&params(1, 2.0, 1));
        let h = 1.0 / 2f64.sqrt();
        assert!((lut[0] + h).abs() < 1e-15 && (lut[1] - h).abs() < 1e-15);
        let p = params(5, 0.7, 1);
        let lut = build_lut(&p);
        for m in 0..32 {
            assert_eq!(lut[m] + lut[31 - m], 0.0);
        }
    }

    #[test]
    fn demap_clamps_out_of_range() {
        let p = params(2, 1.0, 1);
        let noise = [0.3];
        let x = map_with_noise(&SymbolStream::new(vec![0], 2), &p, &noise).unwrap();
        // Pre-round value of −3 after the perturbation.
        let shift = -3.0 / 3.0 * p.s() / p.sigma();
        let cont = demap_continuous(&[x.values()[0] + shift], &p, &noise).unwrap();
        assert!((cont[0] + 3.0).abs() < 1e-12);
        assert_eq!(quantize_symbols(&cont, &p, 2).symbols, vec![0]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = params(1, 1.0, 4);
        assert!(matches!(
            map_message(&SymbolStream::new(vec![0; 3], 3), &p),
            Err(CodecError::DimensionMismatch { expected: 4, found: 3 })
        ));
        let x = NoiseTensor::flat(vec![0.0; 5]).unwrap();
        assert!(demap_noise(&x, &p).is_err());
    }
}
