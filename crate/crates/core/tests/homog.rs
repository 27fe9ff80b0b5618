use flamefront::homog::{
    homogenized_speed, rtilde_integral_check, second_order_profile, speed_derivative_formula, Corrector, Lambda,
};
use flamefront::temperature::solve_temperature;
use flamefront::{CombustionRate, FrontConfig, FrontProfile, MediumSpec, MeshConfig, PeriodicField, PeriodicGrid};
use proptest::prelude::*;

fn layered_medium() -> MediumSpec {
    let w = [0.3, 0.7];
    let rate = CombustionRate::arrhenius(
        PeriodicField::layered(&w, &[1.0, 2.0]).unwrap(),
        PeriodicField::layered(&w, &[0.5, 1.0]).unwrap(),
    )
    .unwrap();
    MediumSpec::new(
        PeriodicField::layered(&w, &[1.0, 3.0]).unwrap(),
        PeriodicField::layered(&w, &[2.0, 1.0]).unwrap(),
        PeriodicField::layered(&w, &[1.5, 0.5]).unwrap(),
        rate,
    )
    .unwrap()
}

#[test]
fn averaged_temperature_reproduces_u0() {
    let m = layered_medium();
    let hw = homogenized_speed(Lambda::Infinity, &m, &FrontConfig::default()).unwrap();
    assert!((hw.abar - 2.4).abs() < 1e-15 && (hw.bbar - 1.3).abs() < 1e-15 && (hw.gbar - 0.8).abs() < 1e-15);
    let hom = MediumSpec::constant(1.0, hw.abar, hw.bbar, hw.gbar, m.rate.clone()).unwrap();
    let grid = PeriodicGrid::uniform(1.0, 64).unwrap();
    let cfg = MeshConfig {
        n_xi: 256,
        n_y: 64,
        ..MeshConfig::default()
    };
    let u = solve_temperature(hw.speed, &FrontProfile::flat(grid), &hom, &cfg).unwrap();
    let mut err: f64 = 0.0;
    for (i, xi) in u.xi.iter().enumerate() {
        for j in 0..=u.ny() {
            err = err.max((u.value(i, j) - hw.u0(*xi)).abs());
        }
    }
    assert!(err < 1e-4, "nodal error {err}");
    // flux balance at the front: a u_x(0⁻) = c g
    assert!((hw.abar * hw.u0_x(0.0) - hw.speed * hw.gbar).abs() < 1e-14);
}

#[test]
fn second_order_closed_form_two_layer() {
    // Q solves μQ'' = ℛ − mean ℛ; for ℛ = (1, 2) on halves and μ = 1 the
    // zero-mean periodic solution is piecewise quadratic with Q(¼) = 1/64.
    let r = PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
    let q = second_order_profile(&r, 1.0).unwrap();
    assert!((q.eval(0.25) - 1.0 / 64.0).abs() < 1e-15);
    assert!((q.eval(0.75) + 1.0 / 64.0).abs() < 1e-15);
    assert!(q.mean().abs() < 1e-15);
    assert!((q.linear_discrepancy.abs() - 0.125).abs() < 1e-15);
}

#[test]
fn corrector_matches_second_order_for_large_lambda() {
    // for large λ the corrector is λ⁻¹ times the second-order profile
    let r = PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
    let lam = 100.0;
    let cor = Corrector::solve(&r, lam, &FrontConfig::default()).unwrap();
    let q = second_order_profile(&r, 1.0).unwrap();
    let mut err: f64 = 0.0;
    for k in 0..64 {
        let z = k as f64 / 64.0;
        err = err.max((lam * cor.eval(z) - q.eval(z)).abs());
    }
    assert!(err < 1e-3, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn corrector_invariants(values in prop::collection::vec(0.5f64..3.0, 6)) {
        let r = PeriodicField::layered(&[1.0 / 6.0; 6], &values).unwrap();
        let cor = Corrector::solve(&r, 0.5, &FrontConfig::default()).unwrap();
        let c = cor.speed();
        prop_assert!(rtilde_integral_check(&cor) < 1e-7);
        prop_assert!(c >= r.mean() - 1e-12 && c <= r.max() + 1e-12);
        let d = speed_derivative_formula(&cor);
        if r.is_constant() {
            prop_assert_eq!(d, 0.0);
        } else {
            prop_assert!(d < 0.0);
        }
    }
}
