use gsteg_codec::{DomainTag, Key, KeyedStream};
use gsteg_diffusion::{
    alpha_of_lambda, generate_batch, invert_batch, make_schedule, reference_integrate, sigma_of_lambda, Direction,
    ScheduleKind, ScoreModel, SolverConfig,
};

fn start_noise(dims: usize) -> Vec<f64> {
    let mut x = KeyedStream::new(&Key::from_seed(1), DomainTag::Noise).normals(0, dims);
    x[0] = 4.5;
    x[1] = -4.5;
    x
}

/// Terminal state of the exact flow for diagonal Gaussian data: the
/// standardized coordinate (x − αμ)/√(α²v + σ²) is conserved.
fn analytic_flow(x: &[f64], mu: f64, var: f64, l_from: f64, l_to: f64) -> Vec<f64> {
    let (a1, s1) = (alpha_of_lambda(l_from), sigma_of_lambda(l_from));
    let (a2, s2) = (alpha_of_lambda(l_to), sigma_of_lambda(l_to));
    x.iter()
        .map(|v| {
            let z = (v - a1 * mu) / (a1 * a1 * var + s1 * s1).sqrt();
            a2 * mu + (a2 * a2 * var + s2 * s2).sqrt() * z
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn forward_error(model: &ScoreModel, mu: f64, var: f64, steps: usize, x: &[f64]) -> f64 {
    let s = make_schedule(ScheduleKind::LinearBeta, steps).unwrap();
    let cfg = SolverConfig::new(3, steps, Direction::Generate).unwrap();
    let got = generate_batch(model, &s, x, &cfg).unwrap();
    max_abs_diff(&got, &analytic_flow(x, mu, var, s.lambda[0], s.lambda[steps]))
}

#[test]
fn unit_gaussian_flow_is_identity() {
    let x = start_noise(300);
    let model = ScoreModel::unit(300);
    for kind in [ScheduleKind::LinearBeta, ScheduleKind::Cosine] {
        for steps in [3, 10, 50] {
            for order in 1..=3 {
                let s = make_schedule(kind, steps).unwrap();
                let cfg = SolverConfig::new(order, steps, Direction::Generate).unwrap();
                let g = generate_batch(&model, &s, &x, &cfg).unwrap();
                let i = invert_batch(&model, &s, &x, &cfg.with_direction(Direction::Invert)).unwrap();
                assert!(max_abs_diff(&g, &x) < 1e-10 && max_abs_diff(&i, &x) < 1e-10);
            }
        }
    }
}

#[test]
fn gaussian_fifty_steps_against_analytic_solution() {
    let x = start_noise(200);
    let model = ScoreModel::isotropic(200, 2.0, 0.25).unwrap();
    let err = forward_error(&model, 2.0, 0.25, 50, &x);
    // Measured 7.5e−5.
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn convergence_order_under_halving() {
    let x = start_noise(64);
    let model = ScoreModel::isotropic(64, 2.0, 0.25).unwrap();
    let errs: Vec<f64> = [20, 40, 80, 160, 320, 640].iter().map(|&n| forward_error(&model, 2.0, 0.25, n, &x)).collect();
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 8.0 * 0.7, "halving ratio {} ({errs:?})", w[0] / w[1]);
    }
    let order = (errs[0] / errs[5]).log2() / 5.0;
    assert!(order >= 2.1, "order {order}");
}

#[test]
fn round_trip_error_below_bound() {
    let x = start_noise(200);
    let model = ScoreModel::isotropic(200, 2.0, 0.25).unwrap();
    let s = make_schedule(ScheduleKind::LinearBeta, 50).unwrap();
    let cfg = SolverConfig::new(3, 50, Direction::Generate).unwrap();
    let x0 = generate_batch(&model, &s, &x, &cfg).unwrap();
    let back = invert_batch(&model, &s, &x0, &cfg.with_direction(Direction::Invert)).unwrap();
    let err = max_abs_diff(&back, &x);
    // Measured 6.9e−5.
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn mixture_flow_round_trips() {
    let dims = 16;
    let means = vec![vec![0.6; dims], vec![-0.4; dims]];
    let model = ScoreModel::mixture(vec![0.3, 0.7], means, vec![0.2; dims]).unwrap();
    let x = start_noise(dims * 4);
    let s = make_schedule(ScheduleKind::LinearBeta, 50).unwrap();
    let cfg = SolverConfig::new(3, 50, Direction::Generate).unwrap();
    let x0 = generate_batch(&model, &s, &x, &cfg).unwrap();
    let back = invert_batch(&model, &s, &x0, &cfg.with_direction(Direction::Invert)).unwrap();
    assert!(max_abs_diff(&back, &x) < 1e-3);
    let reference = reference_integrate(&model, &s, &x, Direction::Generate, 20_000).unwrap();
    assert!(max_abs_diff(&reference, &x0) < 1e-3);
}

#[test]
fn reference_integrator_is_first_order_oracle() {
    let x = start_noise(50);
    let model = ScoreModel::isotropic(50, 2.0, 0.25).unwrap();
    let s = make_schedule(ScheduleKind::LinearBeta, 50).unwrap();
    let exact = analytic_flow(&x, 2.0, 0.25, s.lambda[0], s.lambda[50]);
    let e1 = max_abs_diff(&reference_integrate(&model, &s, &x, Direction::Generate, 10_000).unwrap(), &exact);
    let e2 = max_abs_diff(&reference_integrate(&model, &s, &x, Direction::Generate, 20_000).unwrap(), &exact);
    assert!(e1 < 5e-4 && (e1 / e2 - 2.0).abs() < 0.2, "{e1:e} {e2:e}");
    let cfg = SolverConfig::new(3, 50, Direction::Generate).unwrap();
    let gen = generate_batch(&model, &s, &x, &cfg).unwrap();
    let r = reference_integrate(&model, &s, &x, Direction::Generate, 10_000).unwrap();
    assert!(max_abs_diff(&gen, &r) < 5e-4);
    assert!(reference_integrate(&model, &s, &x, Direction::Generate, 499).is_err());
    let unit = ScoreModel::unit(50);
    let id = reference_integrate(&unit, &s, &x, Direction::Invert, 500).unwrap();
    assert!(max_abs_diff(&id, &x) < 1e-12);
}

#[test]
fn divergence_reports_step() {
    let model = ScoreModel::isotropic(2, 0.0, 0.25).unwrap();
    let s = make_schedule(ScheduleKind::LinearBeta, 5).unwrap();
    let cfg = SolverConfig::new(2, 5, Direction::Generate).unwrap();
    let err = generate_batch(&model, &s, &[f64::NAN, 1.0], &cfg).unwrap_err();
    assert!(matches!(err, gsteg_diffusion::DiffusionError::Diverged { .. }), "{err}");
}

#[test]
fn mismatched_configs_rejected() {
    let model = ScoreModel::unit(4);
    let s = make_schedule(ScheduleKind::LinearBeta, 10).unwrap();
    let cfg = SolverConfig::new(3, 12, Direction::Generate).unwrap();
    assert!(generate_batch(&model, &s, &[0.0; 4], &cfg).is_err());
    let cfg = SolverConfig::new(3, 10, Direction::Invert).unwrap();
    assert!(generate_batch(&model, &s, &[0.0; 4], &cfg).is_err());
    let cfg = SolverConfig::new(3, 10, Direction::Generate).unwrap();
    assert!(generate_batch(&model, &s, &[0.0; 5], &cfg).is_err());
    let other = make_schedule(ScheduleKind::Cosine, 10).unwrap();
    assert!(s.check_fingerprint(&other.fingerprint()).is_err());
    assert!(s.check_fingerprint(&s.fingerprint()).is_ok());
}
