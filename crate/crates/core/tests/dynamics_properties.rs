use multatlas_core::dynamics::{critical_orbit_derivatives, mandelbrot_member, summation_identity_residual};
use multatlas_core::orbit::{orbits_up_to, OrbitFinderConfig};
use multatlas_core::{ComplexParam, Error};
use num_complex::Complex64;
use proptest::prelude::*;

fn param_in_disk() -> impl Strategy<Value = ComplexParam> {
    (0.0..2.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, t)| ComplexParam::from_complex(Complex64::from_polar(r, t)).unwrap())
}

fn critical_value(c: Complex64, k: usize) -> Complex64 {
    let mut w = c;
    for _ in 1..k {
        w = w * w + c;
    }
    w
}

proptest! {
    #[test]
    fn critical_derivative_matches_finite_differences(c in param_in_disk(), k in 1usize..=10) {
        const H: f64 = 1e-7;
        let f = critical_orbit_derivatives(c, k).unwrap();
        prop_assert_eq!(f.value, critical_value(c.value(), k));
        let fd = (critical_value(c.value() + H, k) - critical_value(c.value() - H, k)) / (2.0 * H);
        prop_assert!((fd - f.derivative).norm() <= 1e-5 * f.derivative.norm(), "k={} fd={} d={}", k, fd, f.derivative);
    }

    #[test]
    fn escape_is_monotone(c in param_in_disk(), budget in 1u32..500) {
        let short = mandelbrot_member(c, budget, 2.0).unwrap();
        if !short.in_mandelbrot {
            for longer in [budget + 1, 2 * budget, 10 * budget] {
                prop_assert!(!mandelbrot_member(c, longer, 2.0).unwrap().in_mandelbrot);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn summation_identity(c in param_in_disk(), k in 1usize..=8) {
        let cfg = OrbitFinderConfig::default();
        let cat = orbits_up_to(c, k, &cfg, None).unwrap();
        match summation_identity_residual(c, k, &cat) {
            Ok(r) => prop_assert!(r < 1e-8, "residual {r:e}"),
            Err(Error::CriticallyPeriodic { .. }) | Err(Error::IncompleteOrbits { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
