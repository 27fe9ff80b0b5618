use flamefront::front::{arctan_bound_check, front_estimates, solve_front, speed_identity_residual, FrontConfig};
use flamefront::PeriodicField;
use proptest::prelude::*;

// Reference values from tests/oracle/front_oracle.py (adaptive DOP853 single shooting).
const C_MU1: f64 = 1.503_925_425_866_308;
const THETA0_MU1: f64 = 0.125_321_606_287_694;
const C_MU10: f64 = 1.500_039_064_432_632;
const C_MU100: f64 = 1.500_000_390_625_193;

fn two_layer() -> PeriodicField {
    PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap()
}

/// Dense single shooting: fixed-step RK4 with `n` steps over one period and a
/// finite-difference Newton iteration on `(c, θ(0))`.
fn dense_shooting(h: &PeriodicField, mu: f64, n: usize, guess: (f64, f64)) -> (f64, f64) {
    let period = h.period();
    let dy = period / n as f64;
    let shoot = |c: f64, th0: f64| -> (f64, f64) {
        let f = |hv: f64, th: f64| ((-c + hv / th.cos()) / mu, th.tan());
        let (mut th, mut q) = (th0, 0.0);
        for i in 0..n {
            let y = i as f64 * dy;
            let (hl, hm, hr) = (h.eval(y), h.eval(y + 0.5 * dy), h.eval_left(y + dy));
            let k1 = f(hl, th);
            let k2 = f(hm, th + 0.5 * dy * k1.0);
            let k3 = f(hm, th + 0.5 * dy * k2.0);
            let k4 = f(hr, th + dy * k3.0);
            th += dy / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            q += dy / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (th - th0, q)
    };
    let (mut c, mut t) = guess;
    for _ in 0..30 {
        let (r0, r1) = shoot(c, t);
        if r0.abs().max(r1.abs()) < 1e-14 {
            break;
        }
        let e = 1e-7;
        let (a0, a1) = shoot(c + e, t);
        let (b0, b1) = shoot(c, t + e);
        let (j00, j10) = ((a0 - r0) / e, (a1 - r1) / e);
        let (j01, j11) = ((b0 - r0) / e, (b1 - r1) / e);
        let det = j00 * j11 - j01 * j10;
        c -= (r0 * j11 - r1 * j01) / det;
        t -= (j00 * r1 - j10 * r0) / det;
    }
    (c, t)
}

#[test]
fn two_layer_speed_matches_independent_oracles() {
    let sol = solve_front(&two_layer(), 1.0, &FrontConfig::default()).unwrap();
    let (c_dense, th_dense) = dense_shooting(&two_layer(), 1.0, 100_000, (1.5, 0.1));
    assert!((c_dense - C_MU1).abs() < 1e-10, "dense {c_dense}");
    assert!((sol.speed - c_dense).abs() < 1e-10, "{} vs {c_dense}", sol.speed);
    assert!((sol.speed - C_MU1).abs() < 1e-10);
    assert!((sol.profile.theta[0] - th_dense).abs() < 1e-8);
    assert!((sol.profile.theta[0] - THETA0_MU1).abs() < 1e-8);
    assert!((1.0..=2.0).contains(&sol.speed));
    assert!(sol.profile.max_slope() <= 3f64.sqrt());
}

#[test]
fn large_mu_speeds_match_oracle() {
    let cfg = FrontConfig::default();
    let s10 = solve_front(&two_layer(), 10.0, &cfg).unwrap();
    let s100 = solve_front(&two_layer(), 100.0, &cfg).unwrap();
    assert!((s10.speed - C_MU10).abs() < 1e-11);
    assert!((s100.speed - C_MU100).abs() < 1e-11);
    assert!((s100.speed - 1.5).abs() < 1e-4);
    assert!(s10.profile.max_angle() <= 0.3);
    assert!(arctan_bound_check(&s10));
}

#[test]
fn speed_identity_and_arctan_bound_two_layer() {
    let sol = solve_front(&two_layer(), 1.0, &FrontConfig::default()).unwrap();
    assert!(speed_identity_residual(&sol) < 1e-8);
    assert!(arctan_bound_check(&sol));
}

#[test]
fn grid_refinement_converges_at_fourth_order() {
    let mut errs = Vec::new();
    for steps in [32, 64, 128] {
        let cfg = FrontConfig {
            steps,
            auto_refine: false,
            ..FrontConfig::default()
        };
        let s = solve_front(&two_layer(), 1.0, &cfg).unwrap();
        errs.push((s.speed - C_MU1).abs());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 3.5, "observed order {order}, errors {errs:?}");
    }
}

#[test]
fn thin_stiff_layer_has_zero_mean() {
    let h = PeriodicField::layered(&[0.05 / 0.51, 0.46 / 0.51], &[2.087094915339285, 0.9192580304428771]).unwrap();
    let cfg = FrontConfig {
        steps: 512,
        ..FrontConfig::default()
    };
    let s = solve_front(&h, 0.2, &cfg).unwrap();
    assert!(s.profile.mean().abs() < 1e-9, "{}", s.profile.mean());
}

fn layered_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.5f64..3.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_layered_fronts_meet_estimates((widths, values) in layered_strategy(), mu in 0.2f64..5.0) {
        let total: f64 = widths.iter().sum();
        let widths: Vec<f64> = widths.iter().map(|w| w / total).collect();
        let h = PeriodicField::layered(&widths, &values).unwrap();
        let cfg = FrontConfig { steps: 512, ..FrontConfig::default() };
        let s = solve_front(&h, mu, &cfg).unwrap();
        let est = front_estimates(&s, 1e-6);
        prop_assert!(est.speed_ok, "c={} range [{}, {}]", s.speed, est.h_min, est.h_max);
        prop_assert!(est.slope_ok);
        prop_assert!(arctan_bound_check(&s));
        prop_assert!(speed_identity_residual(&s) < 10.0 * cfg.tol);
        prop_assert!(s.profile.mean().abs() < 1e-9);
        prop_assert!(s.profile.theta.iter().all(|t| t.abs() < std::f64::consts::FRAC_PI_2));
        let n = s.profile.v.len();
        prop_assert_eq!(s.profile.v[0], s.profile.v[n - 1]);
    }
}
