//! Forward dynamics of the critical point: escape-time membership in the
//! Mandelbrot set, and the critical-value iterates `F_k(c) = f_c^(k-1)(c)`
//! whose logarithmic derivative ties the `nu` values together.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{OrbitCatalog, OrbitFilter};
use crate::param::ComplexParam;

/// Iteration budget for rendering.
pub const RENDER_ESCAPE_BUDGET: u32 = 2000;
/// Iteration budget for single-point queries.
pub const POINT_ESCAPE_BUDGET: u32 = 50_000;
pub const DEFAULT_ESCAPE_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub in_mandelbrot: bool,
    /// First iterate whose modulus exceeded the escape radius.
    pub escape_iter: Option<u32>,
    pub final_modulus: f64,
}

/// Escape-time test: iterates `z <- z^2 + c` from `z = 0`.
pub fn mandelbrot_member(c: ComplexParam, max_iters: u32, escape_radius: f64) -> Result<EscapeResult> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    if !(escape_radius >= 2.0) {
        return Err(Error::InvalidArgument("escape_radius must be >= 2".into()));
    }
    let c = c.value();
    let r2 = escape_radius * escape_radius;
    let mut z = Complex64::new(0.0, 0.0);
    for k in 1..=max_iters {
        z = z * z + c;
        if z.norm_sqr() > r2 {
            return Ok(EscapeResult {
                in_mandelbrot: false,
                escape_iter: Some(k),
                final_modulus: z.norm(),
            });
        }
    }
    Ok(EscapeResult {
        in_mandelbrot: true,
        escape_iter: None,
        final_modulus: z.norm(),
    })
}

/// `F_k(c)` and `F_k'(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalOrbitDerivatives {
    pub value: Complex64,
    pub derivative: Complex64,
    pub k: usize,
}

/// `w_1 = c, u_1 = 1; w_{j+1} = w_j^2 + c, u_{j+1} = 2 w_j u_j + 1`.
/// Fails with `Escaped` once either value overflows.
pub fn critical_orbit_derivatives(c: ComplexParam, k: usize) -> Result<CriticalOrbitDerivatives> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let c = c.value();
    let mut w = c;
    let mut u = Complex64::new(1.0, 0.0);
    for step in 2..=k {
        u = 2.0 * w * u + 1.0;
        w = w * w + c;
        if !w.is_finite() || !u.is_finite() {
            return Err(Error::Escaped { step });
        }
    }
    Ok(CriticalOrbitDerivatives {
        value: w,
        derivative: u,
        k,
    })
}

fn divisors(k: usize) -> impl Iterator<Item = usize> {
    (1..=k).filter(move |m| k.is_multiple_of(*m))
}

/// Relative size below which `F_k(c)` counts as zero.
const CRITICAL_ZERO_TOL: f64 = 1e-12;

fn critical_value_nonzero(c: ComplexParam, k: usize) -> Result<CriticalOrbitDerivatives> {
    let f = critical_orbit_derivatives(c, k)?;
    if f.value.norm() <= CRITICAL_ZERO_TOL * c.value().norm().max(1.0) {
        return Err(Error::CriticallyPeriodic { k });
    }
    Ok(f)
}

fn complete_period(orbits: &OrbitCatalog, m: usize) -> Result<&crate::orbit::PeriodOrbits> {
    let set = orbits.period(m).ok_or(Error::MissingPeriod { period: m })?;
    if !set.complete {
        return Err(Error::IncompleteOrbits { period: m });
    }
    Ok(set)
}

/// `|F_k'/(k F_k) - sum_{m | k} sum_{O of period m} (m/k) nu_O|`, the sum
/// running over every orbit regardless of type.
pub fn summation_identity_residual(c: ComplexParam, k: usize, orbits: &OrbitCatalog) -> Result<f64> {
    let f = critical_value_nonzero(c, k)?;
    let lhs = f.derivative / (k as f64 * f.value);
    let mut rhs = Complex64::new(0.0, 0.0);
    for m in divisors(k) {
        let set = complete_period(orbits, m)?;
        for orbit in set.orbits.iter().filter(|o| OrbitFilter::All.admits(o)) {
            let nu = orbit.nu.ok_or(Error::Parabolic {
                distance: (orbit.multiplier - 1.0).norm(),
            })?;
            rhs += nu * (m as f64 / k as f64);
        }
    }
    Ok((lhs - rhs).norm())
}

/// `|F_k - 2^(-2^k) prod rho_O| / |F_k|` over all orbits of periods dividing `k`.
pub fn vieta_product_residual(c: ComplexParam, k: usize, orbits: &OrbitCatalog) -> Result<f64> {
    let f = critical_value_nonzero(c, k)?;
    let mut product = Complex64::new(1.0, 0.0);
    for m in divisors(k) {
        let set = complete_period(orbits, m)?;
        // each orbit of period m carries the factor 2^m of the 2^k total
        let scale = 0.5f64.powi(m as i32);
        for orbit in &set.orbits {
            product *= orbit.multiplier * scale;
        }
    }
    Ok((f.value - product).norm() / f.value.norm())
}
