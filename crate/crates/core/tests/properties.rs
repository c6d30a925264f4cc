use lifted_core::analysis::fmt_float;
use lifted_core::grids::{ExtendedGrid, SpatialGrid};
use lifted_core::lift_recover::{lift, recover_integrate, recover_point, RecoveryMode, RecoveryPlan, WarpedField, XLayout};
use lifted_core::problems::add_noise;
use lifted_core::profiles::{ExtensionProfile, MAX_HERMITE_ORDER};
use lifted_core::propagators::{
    evolve_crank_nicolson, evolve_exact, make_convection_symbol, make_heat_symbol, NyquistPolicy, TridiagonalOperator,
};
use lifted_core::transforms::{dft, idft};
use lifted_core::Complex64;
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn pow2_vec() -> impl Strategy<Value = Vec<Complex64>> {
    (1u32..8).prop_flat_map(|k| complex_vec(1 << k))
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn periodic_field(values: Vec<Complex64>, m: usize, n: usize) -> WarpedField {
    let x = XLayout::Periodic(SpatialGrid::new(0.0, 2.0, m).unwrap());
    let p = ExtendedGrid::from_half_width(5.0, n).unwrap();
    WarpedField::from_values(values, x, p, 1.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(v in pow2_vec()) {
        let back = idft(&dft(&v).unwrap()).unwrap();
        prop_assert!(max_diff(&back, &v) <= 1e-12 * (1.0 + norm(&v)));
    }

    #[test]
    fn transform_parseval(v in pow2_vec()) {
        let c = dft(&v).unwrap();
        let n = v.len() as f64;
        prop_assert!((norm(&v).powi(2) - n * norm(&c).powi(2)).abs() <= 1e-12 * (1.0 + norm(&v).powi(2)));
    }

    #[test]
    fn exact_propagator_is_unitary(v in complex_vec(8 * 16), delta in -3.0f64..3.0, heat in any::<bool>()) {
        let mut f = periodic_field(v, 8, 16);
        let grid = SpatialGrid::new(0.0, 2.0, 8).unwrap();
        let sym = if heat { make_heat_symbol(&grid.frequencies()) } else { make_convection_symbol(&grid.frequencies()) };
        let n0 = norm(f.values());
        let rep = evolve_exact(&mut f, &sym, 1.0 + delta, NyquistPolicy::OneSided).unwrap();
        prop_assert!((norm(f.values()) - n0).abs() <= 1e-12 * n0);
        prop_assert!(rep.drift() <= 1e-12);
    }

    #[test]
    fn crank_nicolson_is_reversible(v in complex_vec(7 * 16), steps in 1usize..40, frac in 0.0f64..1.0) {
        let x = XLayout::Dirichlet(SpatialGrid::new(0.0, 2.0, 8).unwrap());
        let p = ExtendedGrid::from_half_width(5.0, 16).unwrap();
        let mut f = WarpedField::from_values(v.clone(), x, p, 1.0, 1.0).unwrap();
        let op = TridiagonalOperator::second_difference(7, 0.25).unwrap().negated();
        let dt = 0.01;
        let target = 1.0 - dt * (steps as f64 + frac);
        evolve_crank_nicolson(&mut f, &op, target, dt, NyquistPolicy::OneSided).unwrap();
        evolve_crank_nicolson(&mut f, &op, 1.0, dt, NyquistPolicy::OneSided).unwrap();
        prop_assert!(max_diff(f.values(), &v) <= 1e-11 * (1.0 + norm(&v)));
    }

    #[test]
    fn evolution_is_linear(a in complex_vec(8 * 16), b in complex_vec(8 * 16), s in -2.0f64..2.0, delta in -1.0f64..0.0) {
        let grid = SpatialGrid::new(0.0, 2.0, 8).unwrap();
        let sym = make_heat_symbol(&grid.frequencies());
        let combo: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * s + y).collect();
        let mut fa = periodic_field(a, 8, 16);
        let mut fb = periodic_field(b, 8, 16);
        let mut fc = periodic_field(combo, 8, 16);
        for f in [&mut fa, &mut fb, &mut fc] {
            evolve_exact(f, &sym, 1.0 + delta, NyquistPolicy::Symmetric).unwrap();
        }
        let expect: Vec<Complex64> = fa.values().iter().zip(fb.values()).map(|(x, y)| x * s + y).collect();
        prop_assert!(max_diff(fc.values(), &expect) <= 1e-11 * (1.0 + norm(&expect)));
    }

    #[test]
    fn lift_then_recover_is_identity_at_horizon(u in complex_vec(16), k in 0usize..3, pd in 0.5f64..3.0) {
        let profile = if k == 0 { ExtensionProfile::exponential() } else { ExtensionProfile::hermite(k).unwrap() };
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 1.0, 16).unwrap());
        let p = ExtendedGrid::from_half_width(8.0, 256).unwrap();
        let field = lift(&u, &profile, x, p, 1.0).unwrap();
        let plan = RecoveryPlan::new(1.0, pd, RecoveryMode::Point, 2.0).unwrap();
        prop_assert!(max_diff(&recover_point(&field, &plan).unwrap(), &u) <= 1e-12 * (1.0 + norm(&u)));
        prop_assert!(max_diff(&recover_integrate(&field, &plan).unwrap(), &u) <= 1e-3 * (1.0 + norm(&u)));
    }

    #[test]
    fn noise_is_bounded_and_seeded(u in complex_vec(32), zeta in 0.0f64..0.1, seed in any::<u64>()) {
        let a = add_noise(&u, zeta, seed);
        prop_assert_eq!(&a, &add_noise(&u, zeta, seed));
        prop_assert!(a.iter().zip(&u).all(|(x, y)| (x - y).norm() <= zeta));
    }

    #[test]
    fn float_format_round_trips(v in prop::num::f64::NORMAL) {
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn profile_matches_exponential_outside(p in prop_oneof![-30.0f64..-1.0, 0.0f64..30.0], k in 0usize..=MAX_HERMITE_ORDER) {
        let g = ExtensionProfile::hermite(k).unwrap();
        prop_assert!((g.eval(p) - (-p.abs()).exp()).abs() <= 1e-15);
    }
}

#[test]
fn hermite_endpoint_conditions() {
    let e1 = (-1.0f64).exp();
    for k in 0..=MAX_HERMITE_ORDER {
        let g = ExtensionProfile::hermite(k).unwrap();
        for alpha in 0..=k {
            let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
            let d0 = g.endpoint_derivative(true, alpha).unwrap();
            let d1 = g.endpoint_derivative(false, alpha).unwrap();
            assert!((d0 - sign).abs() <= 1e-10, "k={k} alpha={alpha} at 0: {d0}");
            assert!((d1 - e1).abs() <= 1e-10, "k={k} alpha={alpha} at -1: {d1}");
        }
    }
}
