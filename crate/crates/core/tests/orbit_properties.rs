use multatlas_core::orbit::{
    exact_period_orbit_count, orbits_of_period, orbits_up_to, Iterate, iterate_map, OrbitFinderConfig,
};
use multatlas_core::ComplexParam;
use num_complex::Complex64;
use proptest::prelude::*;

fn param_in_disk() -> impl Strategy<Value = ComplexParam> {
    (0.0..2.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, t)| ComplexParam::from_complex(Complex64::from_polar(r, t)).unwrap())
}

fn iterate(c: ComplexParam, z: Complex64, n: usize) -> Complex64 {
    let mut w = z;
    for _ in 0..n {
        w = w * w + c.value();
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn root_count_and_residual(c in param_in_disk(), n in 1usize..=8) {
        let cfg = OrbitFinderConfig::default();
        let cat = orbits_up_to(c, n, &cfg, None).unwrap();
        prop_assume!(cat.incomplete_periods().is_empty());
        let mut total = 0;
        for (m, set) in &cat.by_period {
            if n % m != 0 {
                continue;
            }
            for orbit in &set.orbits {
                total += orbit.points.len();
                // |f^n(z) - z| is only meaningful to rounding times the
                // orbit's amplification |rho|
                let scale = orbit.multiplier.norm().powf(n as f64 / *m as f64).max(1.0);
                for &z in &orbit.points {
                    let r = (iterate(c, z, n) - z).norm();
                    prop_assert!(r < 10.0 * cfg.newton_tol * scale * z.norm().max(1.0),
                        "residual {r:e} at period {m}, |rho| {}", orbit.multiplier.norm());
                }
            }
        }
        prop_assert_eq!(total, 1usize << n);
    }

    #[test]
    fn orbits_are_exact_period(c in param_in_disk(), n in 2usize..=8) {
        let cfg = OrbitFinderConfig::default();
        let set = orbits_of_period(c, n, &cfg, None).unwrap();
        for orbit in &set.orbits {
            let z0 = orbit.points[0];
            for m in (1..n).filter(|m| n % m == 0) {
                prop_assert!((iterate(c, z0, m) - z0).norm() > cfg.tol_period);
            }
        }
    }

    #[test]
    fn warm_start_does_not_change_the_answer(c in param_in_disk(), n in 1usize..=7, dre in -0.02..0.02f64, dim in -0.02..0.02f64) {
        let cfg = OrbitFinderConfig::default();
        let cold = orbits_of_period(c, n, &cfg, None).unwrap();
        prop_assume!(cold.complete);
        let near = ComplexParam::new(c.re + dre, c.im + dim).unwrap();
        let seeds: Vec<Complex64> = orbits_of_period(near, n, &cfg, None).unwrap().points().collect();
        let warm = orbits_of_period(c, n, &cfg, Some(&seeds)).unwrap();
        prop_assert!(warm.complete);
        let a: Vec<Complex64> = cold.points().collect();
        let b: Vec<Complex64> = warm.points().collect();
        prop_assert_eq!(a.len(), b.len());
        for z in &a {
            let tol = cfg.dedupe_tol * z.norm().max(1.0);
            prop_assert!(b.iter().any(|w| (w - z).norm() <= tol));
        }
    }

    #[test]
    fn deterministic(c in param_in_disk(), n in 1usize..=7) {
        let cfg = OrbitFinderConfig::default();
        let a = orbits_of_period(c, n, &cfg, None).unwrap();
        let b = orbits_of_period(c, n, &cfg, None).unwrap();
        prop_assert_eq!(a.orbits, b.orbits);
        prop_assert_eq!(a.roots_found, b.roots_found);
    }
}

#[test]
fn orbit_count_table() {
    let expected = [2, 1, 2, 3, 6, 9, 18, 30];
    for (n, &count) in (1..=8).zip(&expected) {
        assert_eq!(exact_period_orbit_count(n), count);
    }
}

#[test]
fn iterate_map_matches_manual_iteration() {
    let c = ComplexParam::new(-0.4, 0.6).unwrap();
    let z = Complex64::new(0.3, -0.2);
    match iterate_map(c, z, 5).unwrap() {
        Iterate::Finite { value, .. } => assert_eq!(value, iterate(c, z, 5)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn large_parameter_catalog_is_complete() {
    // strongly repelling: distinct roots lie closer together than dedupe_tol
    let cfg = OrbitFinderConfig::default();
    let cat = orbits_up_to(ComplexParam::real(-1e4), 6, &cfg, None).unwrap();
    assert!(cat.incomplete_periods().is_empty());
    for n in 1..=6 {
        assert_eq!(cat.period(n).unwrap().orbits.len(), exact_period_orbit_count(n));
    }
}
