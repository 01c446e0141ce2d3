use gsteg_channels::ChannelSpec;
use gsteg_codec::{CodecParams, Key, KeyedStream, DomainTag, TensorFile};
use gsteg_diffusion::ScoreModel;
use gsteg_pipeline::{
    analysis_batches, extract, hide, manifold_reduction_fraction, reference_latent, reference_pixel, residual_shift, roundtrip, trial_batch,
    Manifest, PipelineConfig, PipelineError, Stego,
};

/// Scale returned by the default optimizer run on the pixel reference at Q = 1.
const PIXEL_S_STAR_Q1: f64 = 7.396e-4;
/// Same for the latent reference.
const LATENT_S_STAR_Q1: f64 = 1.032;

fn payload(seed: u64, len: usize) -> Vec<bool> {
    KeyedStream::new(&Key::from_seed(seed), DomainTag::Padding).bits(0, len)
}

#[test]
fn pixel_round_trip_is_exact_over_many_payloads() {
    for i in 0..1000u64 {
        let cfg = reference_pixel(1, PIXEL_S_STAR_Q1, Key::from_seed(i)).unwrap();
        let bits = payload(i, 1 + (i as usize * 37) % 768);
        let stego = hide(&bits, &cfg).unwrap();
        assert_eq!(extract(&stego, &cfg).unwrap().bits, bits, "payload {i}");
    }
}

#[test]
fn stationary_model_returns_initial_noise() {
    let base = reference_pixel(2, 0.3, Key::from_seed(1)).unwrap();
    let dims = base.codec.dims();
    let cfg = PipelineConfig { model: ScoreModel::unit(dims), ..base };
    let bits = payload(2, 100);
    let stego = hide(&bits, &cfg).unwrap();
    let stream = gsteg_codec::pack_message(&bits, 2, dims, cfg.codec.key()).unwrap();
    let x_t = gsteg_codec::map_message(&stream, &cfg.codec).unwrap();
    let err = stego.sample.values().iter().zip(x_t.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10);
}

#[test]
fn empty_payload_is_deterministic() {
    let cfg = reference_pixel(1, 0.01, Key::from_seed(3)).unwrap();
    let a = hide(&[], &cfg).unwrap();
    assert_eq!(a, hide(&[], &cfg).unwrap());
    assert!(extract(&a, &cfg).unwrap().bits.is_empty());
    let other = hide(&[], &cfg.with_key(Key::from_seed(4))).unwrap();
    assert_ne!(a.sample, other.sample);
}

#[test]
fn latent_stego_lies_in_decoder_range() {
    let mut cfg = reference_latent(1, 2.0, Key::from_seed(5)).unwrap();
    let ae = gsteg_channels::ToyAutoencoder::block_pool([3, 16, 16], 2, 0.02, false).unwrap();
    cfg.autoencoder = Some(std::sync::Arc::new(ae.clone()));
    cfg.export_quantize = None;
    let bits = payload(5, 192);
    let stego = hide(&bits, &cfg).unwrap();
    let trial_seed = KeyedStream::new(cfg.codec.key(), DomainTag::Decoder).word(0);
    let nu = ae.decode_slice(&vec![0.0; 192], trial_seed).unwrap();
    let y: Vec<f64> = stego.sample.values().iter().zip(&nu).map(|(x, n)| x - n).collect();
    let w = ae.with_rho(0.0).unwrap();
    let back0 = w.decode_slice(&w.encode_slice(&y).unwrap(), 0).unwrap();
    let resid = y.iter().zip(&back0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(resid < 1e-10, "{resid}");
}

#[test]
fn awgn_collapses_pixel_extraction() {
    let cfg = reference_pixel(1, PIXEL_S_STAR_Q1, Key::from_seed(0)).unwrap();
    let trials = trial_batch(1, cfg.embed_dim(), 64, 21).unwrap();
    let rt = roundtrip(&cfg, &trials, Some(&ChannelSpec::Awgn { sigma: 0.1 }), 4).unwrap();
    let bar = rt.bit_accuracy(&trials, 1).unwrap();
    assert!((0.48..=0.55).contains(&bar), "{bar}");
    let clean = roundtrip(&cfg, &trials, None, 4).unwrap();
    assert_eq!(clean.bit_accuracy(&trials, 1).unwrap(), 1.0);
}

#[test]
fn latent_survives_mild_noise() {
    let cfg = reference_latent(1, LATENT_S_STAR_Q1, Key::from_seed(0)).unwrap();
    let pix = reference_pixel(1, PIXEL_S_STAR_Q1, Key::from_seed(0)).unwrap();
    let ch = ChannelSpec::Awgn { sigma: 0.01 };
    let tl = trial_batch(1, cfg.embed_dim(), 64, 22).unwrap();
    let tp = trial_batch(1, pix.embed_dim(), 64, 22).unwrap();
    let lat = roundtrip(&cfg, &tl, Some(&ch), 6).unwrap().bit_accuracy(&tl, 1).unwrap();
    let px = roundtrip(&pix, &tp, Some(&ch), 6).unwrap().bit_accuracy(&tp, 1).unwrap();
    assert!(lat > 0.9 && px < 0.7, "latent {lat} pixel {px}");
}

#[test]
fn wrong_key_gives_chance_accuracy() {
    let cfg = reference_pixel(1, PIXEL_S_STAR_Q1, Key::from_seed(7)).unwrap();
    let bits = payload(8, 768);
    let stego = hide(&bits, &cfg).unwrap();
    let (mut hits, mut total) = (0usize, 0usize);
    for flip in 0..131 {
        let wrong = cfg.with_key(cfg.codec.key().with_bit_flipped(flip));
        let got = extract(&stego, &wrong).unwrap().bits;
        hits += got.iter().zip(&bits).filter(|(a, b)| a == b).count();
        total += bits.len();
    }
    let bar = hits as f64 / total as f64;
    assert!(total >= 100_000 && (bar - 0.5).abs() < 0.01, "{bar}");
}

#[test]
fn manifest_round_trips_and_guards_extraction() {
    let cfg = reference_pixel(2, 0.05, Key::from_seed(9)).unwrap();
    let stego = hide(&payload(9, 40), &cfg).unwrap();
    let text = stego.manifest.to_text();
    assert!(!text.contains("0.05"));
    assert_eq!(Manifest::parse(&text).unwrap(), stego.manifest);
    let file = TensorFile { tensor: stego.sample.clone(), extension: text.into_bytes() };
    let back = TensorFile::read_from(&file.to_bytes().unwrap()[..]).unwrap();
    let restored = Stego { sample: back.tensor, manifest: Manifest::parse(std::str::from_utf8(&back.extension).unwrap()).unwrap() };
    assert_eq!(extract(&restored, &cfg).unwrap().bits, payload(9, 40));

    let mut other = cfg.clone();
    other.schedule = gsteg_diffusion::make_schedule(gsteg_diffusion::ScheduleKind::Cosine, 50).unwrap();
    assert!(matches!(extract(&stego, &other), Err(PipelineError::FingerprintMismatch { what: "schedule fingerprint", .. })));
    let q4 = PipelineConfig { codec: CodecParams::new(4, 0.05, Key::from_seed(9), 768).unwrap(), ..cfg.clone() };
    assert!(matches!(extract(&stego, &q4), Err(PipelineError::FingerprintMismatch { what: "codec hash", .. })));
    assert!(Manifest::parse("format=other\n").is_err());
}

#[test]
fn config_validation() {
    let mut cfg = reference_latent(1, 1.0, Key::from_seed(0)).unwrap();
    cfg.autoencoder = None;
    assert!(matches!(cfg.validate(), Err(PipelineError::InvalidConfig(m)) if m.contains("autoencoder")));
    let mut cfg = reference_pixel(1, 1.0, Key::from_seed(0)).unwrap();
    cfg.model = ScoreModel::unit(10);
    assert!(cfg.validate().is_err());
    let cfg = reference_pixel(1, 1.0, Key::from_seed(0)).unwrap();
    assert!(hide(&vec![true; 769], &cfg).is_err());
}

#[test]
fn control_energy_matches_stego() {
    let cfg = reference_pixel(4, 0.5, Key::from_seed(0)).unwrap();
    let trials = trial_batch(4, cfg.embed_dim(), 64, 30).unwrap();
    let shift = residual_shift(&cfg, &trials).unwrap();
    let ratio = shift.control.mean_energy / shift.stego.mean_energy;
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    let b = analysis_batches(&cfg, &trials[..2]).unwrap();
    assert_eq!(b.stego.len(), 2);
    assert_ne!(b.stego[0], b.baseline[0]);
}

#[test]
fn encoder_pulls_lightly_noised_latents_inward() {
    let cfg = reference_latent(1, LATENT_S_STAR_Q1, Key::from_seed(0)).unwrap();
    let trials = trial_batch(1, cfg.embed_dim(), 256, 11).unwrap();
    let light = manifold_reduction_fraction(&cfg, &trials, 0.001, 5).unwrap();
    let heavy = manifold_reduction_fraction(&cfg, &trials, 0.1, 5).unwrap();
    assert!(light > 0.5 && heavy < 0.1, "{light} {heavy}");
    let pix = reference_pixel(1, 0.1, Key::from_seed(0)).unwrap();
    assert!(manifold_reduction_fraction(&pix, &trials, 0.01, 0).is_err());
}
