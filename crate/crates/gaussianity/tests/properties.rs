use gsteg_gaussianity::{analytic_kl, cumulants, security_loss};
use proptest::prelude::*;

#[test]
fn kappa4_dominates_small_scale() {
    for q in 1..=4 {
        let s_max = if q == 4 { 1.0 } else { 0.5 };
        for i in 1..=100 {
            let s = s_max * f64::from(i) / 100.0;
            let share = cumulants(s, q).unwrap().k4_share();
            assert!(share >= 0.99, "S={s} Q={q} share {share}");
        }
    }
}

#[test]
fn kappa6_erodes_dominance_at_unit_scale() {
    // κ4 share at S = 1 for Q = 1..4.
    let want = [0.9012, 0.9809, 0.9893, 0.9917];
    for (q, w) in (1..=4).zip(want) {
        let share = cumulants(1.0, q).unwrap().k4_share();
        assert!((share - w).abs() < 1e-4, "Q={q}: {share}");
    }
}

#[test]
fn strictly_increasing_on_grid() {
    for q in [1, 2, 4] {
        let vals: Vec<f64> = (1..=40).map(|i| analytic_kl(0.05 * f64::from(i), q).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "Q={q}");
    }
}

proptest! {
    #[test]
    fn sign_pattern(s in 1e-3f64..50.0, q in 1u32..=16) {
        let k = cumulants(s, q).unwrap();
        prop_assert!(k.kappa4 <= 0.0 && k.kappa6 >= 0.0 && k.kappa8 <= 0.0 && k.kappa10 >= 0.0);
        prop_assert!(analytic_kl(s, q).unwrap() > 0.0);
    }

    #[test]
    fn security_loss_increasing(a in 1e-300f64..0.999, b in 1e-300f64..0.999) {
        prop_assume!(a < b);
        prop_assert!(security_loss(a).unwrap() < security_loss(b).unwrap());
        prop_assert!(security_loss(a).unwrap() > 0.0);
    }
}
