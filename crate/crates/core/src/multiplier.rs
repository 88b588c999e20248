//! Multipliers of periodic orbits and their logarithmic derivatives.
//!
//! For a cycle `z_0 -> ... -> z_{n-1}` of `f_c` the multiplier is
//! `rho = prod 2 z_i`. Differentiating the cyclic relations
//! `z_{i+1} = z_i^2 + c` in `c` gives a linear system for `z_i'` whose only
//! singularity is `rho = 1`; `rho'` then follows in product form, so no orbit
//! point is ever divided by.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{orbits_of_period, OrbitFinderConfig, PeriodicOrbit, Stability};
use crate::param::ComplexParam;

/// Default refusal threshold for `|1 - rho|`.
pub const DEFAULT_EPS_PARAB: f64 = 1e-8;

/// `prod 2 z_i` over the cycle.
pub fn cycle_multiplier(points: &[Complex64]) -> Complex64 {
    points.iter().map(|z| 2.0 * z).product()
}

/// `rho'(c)` for a nonsingular cycle with multiplier `rho`.
pub(crate) fn cycle_multiplier_derivative(points: &[Complex64], rho: Complex64) -> Complex64 {
    let n = points.len();
    let a: Vec<Complex64> = points.iter().map(|z| 2.0 * z).collect();
    // suffix[k] = A_k ... A_{n-1}, suffix[n] = 1
    let mut suffix = vec![Complex64::new(1.0, 0.0); n + 1];
    for k in (0..n).rev() {
        suffix[k] = a[k] * suffix[k + 1];
    }
    let forced: Complex64 = suffix[1..].iter().sum();
    let mut dz = forced / (1.0 - rho);
    let mut prefix = Complex64::new(1.0, 0.0);
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        total += 2.0 * dz * prefix * suffix[i + 1];
        prefix *= a[i];
        dz = a[i] * dz + 1.0;
    }
    total
}

fn check_cycle(c: Complex64, points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty orbit".into()));
    }
    let n = points.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let z = points[i];
        let w = points[(i + 1) % n];
        let scale = (z.norm_sqr() + c.norm()).max(1.0);
        worst = worst.max((z * z + c - w).norm() / scale);
    }
    if worst > 1e-8 {
        return Err(Error::NotACycle { residual: worst });
    }
    Ok(())
}

/// `(rho, rho')` for a cycle of `f_c`.
pub fn orbit_multiplier_and_derivative(c: ComplexParam, points: &[Complex64]) -> Result<(Complex64, Complex64)> {
    multiplier_and_derivative_with(c, points, DEFAULT_EPS_PARAB)
}

pub fn multiplier_and_derivative_with(
    c: ComplexParam,
    points: &[Complex64],
    eps_parab: f64,
) -> Result<(Complex64, Complex64)> {
    check_cycle(c.value(), points)?;
    let rho = cycle_multiplier(points);
    let distance = (1.0 - rho).norm();
    if distance <= eps_parab {
        return Err(Error::Parabolic { distance });
    }
    Ok((rho, cycle_multiplier_derivative(points, rho)))
}

/// Why `nu` is undefined for an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuUndefined {
    Superattracting,
    Parabolic,
}

/// `nu_O(c) = rho'/(n rho)` for one orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub value: Option<Complex64>,
    pub orbit_period: usize,
    pub multiplier: Complex64,
    pub undefined: Option<NuUndefined>,
}

impl NuValue {
    pub fn well_defined(&self) -> bool {
        self.value.is_some()
    }
}

/// Recomputes `nu` for an orbit located at `c`.
pub fn nu_of_orbit(c: ComplexParam, orbit: &PeriodicOrbit, cfg: &OrbitFinderConfig) -> Result<NuValue> {
    let n = orbit.points.len();
    check_cycle(c.value(), &orbit.points)?;
    let rho = cycle_multiplier(&orbit.points);
    let undefined = if Stability::classify(rho, cfg.eps_class) == Stability::SuperattractingFlagged {
        Some(NuUndefined::Superattracting)
    } else if (rho - 1.0).norm() <= cfg.eps_parab {
        Some(NuUndefined::Parabolic)
    } else {
        None
    };
    let value = match undefined {
        Some(_) => None,
        None => Some(cycle_multiplier_derivative(&orbit.points, rho) / (n as f64 * rho)),
    };
    Ok(NuValue {
        value,
        orbit_period: n,
        multiplier: rho,
        undefined,
    })
}

/// The branch of `rho^(1/n)` with argument in `(-pi/n, pi/n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GOValue {
    pub value: Complex64,
    pub period: usize,
}

impl GOValue {
    /// Half-width of the argument sector, `pi / period`.
    pub fn branch_arg_bound(&self) -> f64 {
        PI / self.period as f64
    }
}

pub fn principal_root(rho: Complex64, period: usize) -> Result<GOValue> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    if rho.norm() == 0.0 {
        return Err(Error::Superattracting);
    }
    let mut arg = rho.arg();
    if arg <= -PI {
        arg = PI;
    }
    let n = period as f64;
    Ok(GOValue {
        value: Complex64::from_polar(rho.norm().powf(1.0 / n), arg / n),
        period,
    })
}

pub fn g_of_orbit(orbit: &PeriodicOrbit) -> Result<GOValue> {
    principal_root(orbit.multiplier, orbit.period)
}

/// Sign in front of the square root in the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn pole(c: Complex64) -> Error {
    Error::Pole { re: c.re, im: c.im }
}

/// Closed forms of `nu` for periods 1, 2 and 3. The square roots are
/// principal; `branch` selects the sign in front of them (ignored for
/// period 2, which has a single orbit).
pub fn nu_closed_form(c: ComplexParam, period: usize, branch: Branch) -> Result<Complex64> {
    let c = c.value();
    let sigma = branch.sign();
    let (num, den) = match period {
        1 => {
            let s = (1.0 - 4.0 * c).sqrt();
            (Complex64::new(2.0, 0.0), 4.0 * c - 1.0 - sigma * s)
        }
        2 => (Complex64::new(1.0, 0.0), 2.0 * c + 2.0),
        3 => {
            let c2 = c * c;
            let c3 = c2 * c;
            let s = (-4.0 * c - 7.0).sqrt();
            let num = 12.0 * c3 + 37.0 * c2 + 32.0 * c + 7.0 - sigma * (c2 + 6.0 * c + 7.0) * s;
            let den = 6.0 * (4.0 * c + 7.0) * (c3 + 2.0 * c2 + c + 1.0);
            (num, den)
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "closed forms exist for periods 1..=3, not {period}"
            )))
        }
    };
    let scale = 1.0 + c.norm().powi(period.min(3) as i32 + 1);
    if den.norm() <= 1e-12 * scale {
        return Err(pole(c));
    }
    let nu = num / den;
    if !nu.is_finite() {
        return Err(pole(c));
    }
    Ok(nu)
}

/// Large-parameter reference value `1/(2c)`.
pub fn asymptotic_nu(c: ComplexParam) -> Result<Complex64> {
    let c = c.value();
    if c.norm() == 0.0 {
        return Err(Error::InvalidArgument("asymptotic value undefined at c = 0".into()));
    }
    Ok((2.0 * c).inv())
}

/// `nu` values of the exact-period orbits at `c`, obtained as the mean of
/// `nu` over `samples` points of the circle `|c' - c| = radius`.
///
/// Each `nu_O` is analytic near `c` whenever the orbit continues there, so
/// the trapezoidal mean reproduces `nu_O(c)` even where a direct evaluation is
/// singular, for instance at a parabolic parameter where the cycle has
/// collapsed onto a cycle of lower period. Orbits are followed around the
/// circle by warm-started Newton and matched by nearest `nu`; an error is
/// returned if the tracks come back permuted.
pub fn nu_by_contour_mean(
    c: ComplexParam,
    period: usize,
    cfg: &OrbitFinderConfig,
    radius: f64,
    samples: usize,
) -> Result<Vec<Complex64>> {
    if !(radius > 0.0) || samples < 3 {
        return Err(Error::InvalidArgument("need radius > 0 and at least 3 samples".into()));
    }
    let center = c.value();
    let mut seeds: Option<Vec<Complex64>> = None;
    let mut tracks: Vec<Vec<Complex64>> = Vec::new();
    let mut first: Vec<Complex64> = Vec::new();
    for j in 0..samples {
        let theta = 2.0 * PI * (j as f64 + 0.5) / samples as f64;
        let cj = ComplexParam::from_complex(center + Complex64::from_polar(radius, theta))?;
        let set = orbits_of_period(cj, period, cfg, seeds.as_deref())?;
        if !set.complete {
            return Err(Error::IncompleteOrbits { period });
        }
        let nus: Vec<Complex64> = set
            .orbits
            .iter()
            .map(|o| o.nu.ok_or_else(|| Error::Tracking(format!("nu undefined at {cj}"))))
            .collect::<Result<_>>()?;
        if j == 0 {
            first = nus.clone();
            tracks = nus.iter().map(|&v| vec![v]).collect();
        } else {
            let previous: Vec<Complex64> = tracks.iter().map(|t| *t.last().unwrap()).collect();
            let order = match_nearest(&previous, &nus)?;
            for (track, idx) in tracks.iter_mut().zip(order) {
                track.push(nus[idx]);
            }
        }
        seeds = Some(set.points().collect());
    }
    let last: Vec<Complex64> = tracks.iter().map(|t| *t.last().unwrap()).collect();
    let closing = match_nearest(&last, &first)?;
    if closing.iter().enumerate().any(|(i, &k)| i != k) {
        return Err(Error::Tracking(format!(
            "period-{period} orbits permute around {c}; shrink the radius"
        )));
    }
    Ok(tracks
        .into_iter()
        .map(|t| t.iter().sum::<Complex64>() / t.len() as f64)
        .collect())
}

/// For each `previous[i]`, the index of its nearest unused partner in `next`.
fn match_nearest(previous: &[Complex64], next: &[Complex64]) -> Result<Vec<usize>> {
    if previous.len() != next.len() {
        return Err(Error::Tracking("orbit count changed along the contour".into()));
    }
    let mut used = vec![false; next.len()];
    let mut order = Vec::with_capacity(previous.len());
    for p in previous {
        let best = next
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .min_by(|a, b| (a.1 - p).norm().total_cmp(&(b.1 - p).norm()))
            .map(|(k, _)| k)
            .ok_or_else(|| Error::Tracking("no partner left".into()))?;
        used[best] = true;
        order.push(best);
    }
    Ok(order)
}
