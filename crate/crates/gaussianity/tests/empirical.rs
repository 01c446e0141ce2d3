use gsteg_codec::{map_message, pack_message, CodecParams, DomainTag, Key, KeyedStream};
use gsteg_gaussianity::{analytic_kl, empirical_kl, EmpiricalKlConfig};

#[test]
fn gaussian_input_stays_below_bias_floor() {
    let samples = KeyedStream::new(&Key::from_seed(21), DomainTag::Noise).normals(0, 1_000_000);
    let r = empirical_kl(&samples, &EmpiricalKlConfig::default()).unwrap();
    assert!(r.estimate < 5e-4, "{}", r.estimate);
    assert!(r.bias_note().contains("Miller"));
}

#[test]
fn mapped_noise_within_factor_three_of_analytic() {
    let dims = 1_000_000;
    let params = CodecParams::new(4, 1.5, Key::from_seed(22), dims).unwrap();
    let stream = pack_message(&[], 4, dims, params.key()).unwrap();
    let x = map_message(&stream, &params).unwrap();
    let r = empirical_kl(x.values(), &EmpiricalKlConfig::default()).unwrap();
    let analytic = analytic_kl(1.5, 4).unwrap();
    assert!((2.98e-5 - analytic).abs() / 2.98e-5 < 0.02);
    assert!(r.estimate < 3.0 * analytic && r.estimate > analytic / 3.0, "{} vs {analytic}", r.estimate);
}
