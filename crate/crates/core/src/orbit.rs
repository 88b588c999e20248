//! Periodic orbits of `f_c(z) = z^2 + c`.
//!
//! All roots of `f_c^n(z) - z` are located by Newton's method applied to the
//! iterated map itself (the degree-`2^n` coefficients are never formed).
//! Starting points sit on a circle enclosing the filled Julia set, with a
//! second circle at radius one. Roots are deduplicated, then chained into
//! cycles by matching forward images against the root set.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiplier;
use crate::param::ComplexParam;

/// Modulus beyond which an orbit is treated as escaped.
pub const ESCAPE_GUARD: f64 = 1e150;

/// Largest period supported by the default configuration.
pub const DEFAULT_PERIOD_CAP: usize = 12;

/// Result of iterating the map: either the value of `f_c^n(z)` together with
/// `(f_c^n)'(z)`, or the step at which the orbit left the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Iterate {
    Finite {
        value: Complex64,
        z_derivative: Complex64,
    },
    Escaped {
        step: usize,
    },
}

/// Evaluates `f_c^n(z)` and its `z`-derivative by the recursions
/// `z <- z^2 + c`, `d <- 2 z d`.
pub fn iterate_map(c: ComplexParam, z: Complex64, n: usize) -> Result<Iterate> {
    if n == 0 {
        return Err(Error::InvalidArgument("iteration count must be >= 1".into()));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument("starting point must be finite".into()));
    }
    let c = c.value();
    let mut z = z;
    let mut d = Complex64::new(1.0, 0.0);
    for step in 1..=n {
        d = 2.0 * z * d;
        z = z * z + c;
        if !(z.norm() <= ESCAPE_GUARD) || !d.is_finite() {
            return Ok(Iterate::Escaped { step });
        }
    }
    Ok(Iterate::Finite {
        value: z,
        z_derivative: d,
    })
}

/// Beyond this modulus `c` is negligible against `z^2` and the remaining
/// squarings are accounted for analytically.
const FAR_FIELD: f64 = 1e30;

/// Roots where `|(f_c^n)'(z) - 1|` falls below this are treated as multiple.
const MULTIPLE_ROOT_TOL: f64 = 1e-7;

/// Newton correction for `g(z) = f_c^n(z) - z` at `z0`.
#[derive(Debug, Clone, Copy)]
struct NewtonEval {
    /// `g / g'`.
    step: Complex64,
    /// `ln |g|`.
    log_residual: f64,
    /// `|g'|`, or infinity in the far field.
    slope: f64,
}

#[inline]
fn newton_eval(c: Complex64, z0: Complex64, n: usize) -> Option<NewtonEval> {
    let mut z = z0;
    let mut d = Complex64::new(1.0, 0.0);
    for k in 0..n {
        if z.norm_sqr() > FAR_FIELD * FAR_FIELD {
            // z_n ~ z^(2^m) and d_n ~ d 2^m z^(2^m - 1)
            let m = (n - k) as i32;
            let step = z / (d * 2f64.powi(m));
            let log_residual = 2f64.powi(m) * z.norm().ln();
            return step.is_finite().then_some(NewtonEval {
                step,
                log_residual,
                slope: f64::INFINITY,
            });
        }
        d = 2.0 * z * d;
        z = z * z + c;
    }
    let g = z - z0;
    let dg = d - 1.0;
    if dg == Complex64::new(0.0, 0.0) || !g.is_finite() || !dg.is_finite() {
        return None;
    }
    Some(NewtonEval {
        step: g / dg,
        log_residual: 0.5 * g.norm_sqr().ln(),
        slope: dg.norm(),
    })
}

/// Tuning for the periodic-point finder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitFinderConfig {
    /// Newton stops once the step is below `newton_tol * max(1, |z|)`.
    pub newton_tol: f64,
    /// Base iteration budget; it is extended by `2^n` for period `n`, since
    /// Newton contracts only by a factor `1 - 2^-n` per step far from the roots.
    pub newton_max_iters: usize,
    /// Roots closer than `dedupe_tol * max(1, |z|)` are merged.
    pub dedupe_tol: f64,
    /// Number of starting points is `ceil(start_multiplier * 2^n)`.
    pub start_multiplier: f64,
    /// Minimum radius of the outer starting circle.
    pub start_radius: f64,
    /// Denser retries (doubling the starts) after a root-count shortfall.
    pub max_retries: usize,
    /// Largest period accepted.
    pub period_cap: usize,
    /// A cycle whose points come back within this distance after a proper
    /// divisor of its length is not accepted as exact-period.
    pub tol_period: f64,
    /// Width of the indifferent band `||rho| - 1| <= eps_class`; also the
    /// superattracting threshold `|rho| <= eps_class`.
    pub eps_class: f64,
    /// `nu` and `rho'` are refused when `|rho - 1| <= eps_parab`.
    pub eps_parab: f64,
}

impl Default for OrbitFinderConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-13,
            newton_max_iters: 200,
            dedupe_tol: 1e-8,
            start_multiplier: 1.0,
            start_radius: 2.5,
            max_retries: 3,
            period_cap: DEFAULT_PERIOD_CAP,
            tol_period: 1e-6,
            eps_class: 1e-9,
            eps_parab: 1e-8,
        }
    }
}

impl OrbitFinderConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.newton_tol > 0.0) {
            return fail("newton_tol must be > 0");
        }
        if !(self.dedupe_tol > self.newton_tol) {
            return fail("dedupe_tol must exceed newton_tol");
        }
        if !(self.start_multiplier >= 1.0) {
            return fail("start_multiplier must be >= 1");
        }
        if !(self.start_radius > 2.0) {
            return fail("start_radius must be > 2");
        }
        if self.newton_max_iters == 0 {
            return fail("newton_max_iters must be >= 1");
        }
        if self.period_cap == 0 || self.period_cap > 30 {
            return fail("period_cap must lie in 1..=30");
        }
        if !(self.tol_period > 0.0 && self.eps_class > 0.0 && self.eps_parab > 0.0) {
            return fail("classification tolerances must be > 0");
        }
        Ok(())
    }

    #[inline]
    fn dedupe_radius(&self, z: Complex64) -> f64 {
        self.dedupe_tol * z.norm().max(1.0)
    }

    fn check_period(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.period_cap {
            return Err(Error::InvalidArgument(format!(
                "period {n} outside 1..={}",
                self.period_cap
            )));
        }
        Ok(())
    }
}

/// Bound on the modulus of every point of the filled Julia set of `f_c`.
pub fn julia_radius(c: Complex64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * c.norm()).sqrt())
}

/// Roots of `f_c^n(z) - z`, sorted lexicographically by `(re, im)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub period: usize,
    pub points: Vec<Complex64>,
    /// `2^n`.
    pub expected: usize,
    /// False when fewer than `expected` distinct roots were found, as happens
    /// at parameters where roots collide.
    pub complete: bool,
}

impl RootSet {
    pub fn shortfall(&self) -> usize {
        self.expected.saturating_sub(self.points.len())
    }
}

fn lex_cmp(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Damped Newton on `f_c^n(z) - z`; the step is halved (up to 20 times)
/// while the residual fails to decrease. Multiple roots are rejected.
fn newton_root(c: Complex64, n: usize, start: Complex64, tol: f64, budget: usize) -> Option<Complex64> {
    let mut z = start;
    let mut eval = newton_eval(c, z, n)?;
    for _ in 0..budget {
        let step = eval.step;
        if step.norm() <= tol * z.norm().max(1.0) {
            let z_new = z - step;
            let simple = eval.slope > MULTIPLE_ROOT_TOL;
            return (simple && z_new.is_finite()).then_some(z_new);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=20 {
            let trial = z - step * t;
            if !(trial.norm() <= ESCAPE_GUARD) {
                return None;
            }
            let trial_eval = newton_eval(c, trial, n)?;
            if trial_eval.log_residual < eval.log_residual {
                z = trial;
                eval = trial_eval;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Newton with implicit deflation of the already known roots (Maehly).
fn deflated_newton(
    c: Complex64,
    n: usize,
    start: Complex64,
    known: &[Complex64],
    tol: f64,
    budget: usize,
) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..budget {
        let eval = newton_eval(c, z, n)?;
        if eval.step == Complex64::new(0.0, 0.0) {
            return Some(z);
        }
        let mut shift = Complex64::new(0.0, 0.0);
        for &r in known {
            shift += (z - r).inv();
        }
        let denom = eval.step.inv() - shift;
        if !denom.is_finite() || denom == Complex64::new(0.0, 0.0) {
            return None;
        }
        let step = denom.inv();
        z -= step;
        if !z.is_finite() || z.norm() > ESCAPE_GUARD {
            return None;
        }
        if step.norm() <= tol * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// Distance within which two converged Newton iterates are taken to be the
/// same root: `dedupe_tol * max(1, |z|)`, shrunk to a few hundred rounding
/// units when the root is well conditioned. Strongly repelling cycles (large
/// `|c|`, high period) have roots far closer together than `dedupe_tol`.
fn merge_radius(c: Complex64, n: usize, z: Complex64, cfg: &OrbitFinderConfig) -> f64 {
    let cap = cfg.dedupe_radius(z);
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        d = 2.0 * w * d;
        w = w * w + c;
    }
    let slope = (d - 1.0).norm();
    if !(slope > 0.0) || !d.is_finite() {
        return cap;
    }
    let scale = z.norm().max(c.norm().sqrt()).max(1.0);
    let conditioning = (d.norm() / slope).max(1.0);
    let precision = 100.0 * n as f64 * f64::EPSILON * scale * conditioning;
    precision.min(cap)
}

/// Sorts and merges points closer than their merge radius.
fn dedupe(points: &mut Vec<Complex64>, c: Complex64, n: usize, cfg: &OrbitFinderConfig) {
    points.sort_by(lex_cmp);
    let mut kept: Vec<(Complex64, f64)> = Vec::with_capacity(points.len());
    for &p in points.iter() {
        let window = cfg.dedupe_radius(p);
        let radius = merge_radius(c, n, p, cfg);
        let duplicate = kept
            .iter()
            .rev()
            .take_while(|(q, _)| q.re >= p.re - window)
            .any(|(q, rq)| (q - p).norm() <= radius.max(*rq));
        if !duplicate {
            kept.push((p, radius));
        }
    }
    *points = kept.into_iter().map(|(p, _)| p).collect();
}

fn start_circle(radius: f64, count: usize, phase: f64) -> impl Iterator<Item = Complex64> {
    (0..count).map(move |k| {
        let theta = 2.0 * PI * (k as f64 + phase) / count as f64;
        Complex64::from_polar(radius, theta)
    })
}

fn newton_budget(cfg: &OrbitFinderConfig, n: usize) -> usize {
    cfg.newton_max_iters + 2 * (1usize << n)
}

/// All roots of `f_c^n(z) - z`.
///
/// Seeds, when given, are polished first. A shortfall then triggers the start
/// grid and up to `max_retries` doublings of it; any roots still missing are
/// searched for by deflated Newton before the set is reported incomplete.
pub fn find_periodic_points(
    c: ComplexParam,
    n: usize,
    cfg: &OrbitFinderConfig,
    seeds: Option<&[Complex64]>,
) -> Result<RootSet> {
    cfg.validate()?;
    cfg.check_period(n)?;
    let cv = c.value();
    let expected = 1usize << n;
    let budget = newton_budget(cfg, n);
    let mut found: Vec<Complex64> = Vec::with_capacity(2 * expected);

    let finish = |mut points: Vec<Complex64>| {
        points.truncate(expected);
        let complete = points.len() == expected;
        RootSet {
            period: n,
            points,
            expected,
            complete,
        }
    };

    if let Some(seeds) = seeds {
        for &s in seeds {
            if s.is_finite() {
                found.extend(newton_root(cv, n, s, cfg.newton_tol, budget));
            }
        }
        dedupe(&mut found, cv, n, cfg);
        log::trace!("period {n}: {} seeds gave {} roots", seeds.len(), found.len());
        if found.len() >= expected {
            return Ok(finish(found));
        }
    }

    let outer = cfg.start_radius.max(1.1 * julia_radius(cv));
    for attempt in 0..=cfg.max_retries {
        let count = (cfg.start_multiplier * expected as f64).ceil() as usize * (1 << attempt);
        // golden-ratio phase so that retries do not revisit earlier starts
        let phase = (attempt as f64 * 0.618_033_988_749_895).fract();
        let inner_count = (count / 4).max(1);
        for z0 in start_circle(outer, count, phase).chain(start_circle(1.0, inner_count, phase + 0.5)) {
            found.extend(newton_root(cv, n, z0, cfg.newton_tol, budget));
        }
        dedupe(&mut found, cv, n, cfg);
        log::trace!("period {n}: attempt {attempt} with {count} starts, {} roots", found.len());
        if found.len() >= expected {
            return Ok(finish(found));
        }
    }

    let missing = expected - found.len();
    let starts: Vec<Complex64> = start_circle(outer, 4 * missing + 4, 0.25).collect();
    for z0 in starts {
        if found.len() >= expected {
            break;
        }
        if let Some(z) = deflated_newton(cv, n, z0, &found, cfg.newton_tol, budget) {
            if let Some(z) = newton_root(cv, n, z, cfg.newton_tol, cfg.newton_max_iters) {
                found.push(z);
                dedupe(&mut found, cv, n, cfg);
            }
        }
    }
    if found.len() < expected {
        log::debug!(
            "period {n} at c = {c}: {} of {expected} roots found",
            found.len()
        );
    }
    Ok(finish(found))
}

/// Dynamical type of a periodic orbit, decided from `|rho|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Repelling,
    Attracting,
    IndifferentParabolicFlagged,
    SuperattractingFlagged,
}

impl Stability {
    pub fn classify(rho: Complex64, eps_class: f64) -> Self {
        let modulus = rho.norm();
        if modulus <= eps_class {
            Stability::SuperattractingFlagged
        } else if (modulus - 1.0).abs() <= eps_class {
            Stability::IndifferentParabolicFlagged
        } else if modulus > 1.0 {
            Stability::Repelling
        } else {
            Stability::Attracting
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Repelling => "repelling",
            Stability::Attracting => "attracting",
            Stability::IndifferentParabolicFlagged => "indifferent_parabolic_flagged",
            Stability::SuperattractingFlagged => "superattracting_flagged",
        }
    }
}

/// A cycle `z_0 -> z_1 -> ... -> z_{n-1} -> z_0` of exact period `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub c: ComplexParam,
    pub points: Vec<Complex64>,
    pub period: usize,
    pub multiplier: Complex64,
    /// `d rho / dc`; absent when the cycle is (numerically) primitive parabolic.
    pub multiplier_derivative: Option<Complex64>,
    /// `rho' / (n rho)`; absent for superattracting and parabolic cycles.
    pub nu: Option<Complex64>,
    pub stability: Stability,
}

impl PeriodicOrbit {
    /// Builds the orbit record from cyclically ordered points.
    pub fn from_cycle(c: ComplexParam, points: Vec<Complex64>, cfg: &OrbitFinderConfig) -> Self {
        let period = points.len();
        let multiplier = multiplier::cycle_multiplier(&points);
        let stability = Stability::classify(multiplier, cfg.eps_class);
        let multiplier_derivative = if (multiplier - 1.0).norm() > cfg.eps_parab {
            Some(multiplier::cycle_multiplier_derivative(&points, multiplier))
        } else {
            None
        };
        let nu = match (stability, multiplier_derivative) {
            (Stability::SuperattractingFlagged, _) | (_, None) => None,
            (_, Some(d)) => Some(d / (period as f64 * multiplier)),
        };
        Self {
            c,
            points,
            period,
            multiplier,
            multiplier_derivative,
            nu,
            stability,
        }
    }

    pub fn is_repelling(&self) -> bool {
        self.stability == Stability::Repelling
    }
}

/// Output of [`group_into_orbits`].
#[derive(Debug, Clone, Default)]
pub struct OrbitGrouping {
    /// Orbits of exact period `n`, each listed once, sorted by first point.
    pub orbits: Vec<PeriodicOrbit>,
    /// Points whose exact period is a proper divisor of `n`.
    pub lower_period: Vec<Complex64>,
    /// Points whose forward image could not be matched even after polishing,
    /// or whose cycle nearly closes early.
    pub inconsistent: Vec<Complex64>,
}

/// Index of the point nearest to `w` within `tol`, on a lexicographically sorted slice.
fn nearest(points: &[Complex64], w: Complex64, tol: f64) -> Option<usize> {
    let lo = points.partition_point(|p| p.re < w.re - tol);
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate().skip(lo) {
        if p.re > w.re + tol {
            break;
        }
        let d = (p - w).norm();
        if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn proper_divisors(n: usize) -> impl Iterator<Item = usize> {
    (1..n).filter(move |d| n.is_multiple_of(*d))
}

/// Chains roots of `f_c^n(z) - z` into cycles and keeps those of exact period `n`.
pub fn group_into_orbits(
    c: ComplexParam,
    n: usize,
    points: &[Complex64],
    cfg: &OrbitFinderConfig,
) -> Result<OrbitGrouping> {
    cfg.validate()?;
    cfg.check_period(n)?;
    let cv = c.value();
    let mut sorted: Vec<Complex64> = points.to_vec();
    sorted.sort_by(lex_cmp);

    let image_of = |idx: usize| -> Option<usize> {
        let z = sorted[idx];
        let w = z * z + cv;
        let tol = cfg.dedupe_radius(w) * (2.0 * z.norm()).max(1.0);
        if let Some(j) = nearest(&sorted, w, tol) {
            return Some(j);
        }
        let polished = newton_root(cv, n, z, cfg.newton_tol, newton_budget(cfg, n))?;
        let w = polished * polished + cv;
        nearest(&sorted, w, tol)
    };

    let mut assigned = vec![false; sorted.len()];
    let mut out = OrbitGrouping::default();
    for start in 0..sorted.len() {
        if assigned[start] {
            continue;
        }
        let mut chain = vec![start];
        let mut closed = false;
        let mut broken = false;
        while chain.len() <= n {
            let cur = *chain.last().unwrap();
            match image_of(cur) {
                Some(next) if next == start => {
                    closed = true;
                    break;
                }
                Some(next) if assigned[next] || chain.contains(&next) => {
                    broken = true;
                    break;
                }
                Some(next) => chain.push(next),
                None => {
                    broken = true;
                    break;
                }
            }
        }
        let m = chain.len();
        if broken || !closed || !n.is_multiple_of(m) {
            assigned[start] = true;
            out.inconsistent.push(sorted[start]);
            continue;
        }
        for &i in &chain {
            assigned[i] = true;
        }
        let cycle: Vec<Complex64> = chain.iter().map(|&i| sorted[i]).collect();
        if m < n {
            out.lower_period.extend(cycle);
            continue;
        }
        let z0 = cycle[0];
        let early_return = proper_divisors(n)
            .any(|d| (cycle[d] - z0).norm() <= cfg.tol_period * z0.norm().max(1.0));
        if early_return {
            out.inconsistent.extend(cycle);
            continue;
        }
        out.orbits.push(PeriodicOrbit::from_cycle(c, cycle, cfg));
    }
    Ok(out)
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Number of points of exact period `n` for a generic parameter.
pub fn exact_period_point_count(n: usize) -> usize {
    let total: i64 = (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| mobius(n / d) * (1i64 << d))
        .sum();
    total as usize
}

/// Number of orbits of exact period `n` for a generic parameter.
pub fn exact_period_orbit_count(n: usize) -> usize {
    exact_period_point_count(n) / n
}

/// Orbits of one exact period plus bookkeeping on how they were obtained.
#[derive(Debug, Clone)]
pub struct PeriodOrbits {
    pub period: usize,
    pub orbits: Vec<PeriodicOrbit>,
    /// Distinct roots of `f_c^n(z) - z` located.
    pub roots_found: usize,
    pub inconsistent_points: usize,
    /// All `exact_period_orbit_count(n)` orbits are present.
    pub complete: bool,
}

impl PeriodOrbits {
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.orbits.iter().flat_map(|o| o.points.iter().copied())
    }
}

/// Finds and groups the orbits of exact period `n`.
pub fn orbits_of_period(
    c: ComplexParam,
    n: usize,
    cfg: &OrbitFinderConfig,
    seeds: Option<&[Complex64]>,
) -> Result<PeriodOrbits> {
    let roots = find_periodic_points(c, n, cfg, seeds)?;
    let grouping = group_into_orbits(c, n, &roots.points, cfg)?;
    let complete = grouping.orbits.len() == exact_period_orbit_count(n);
    Ok(PeriodOrbits {
        period: n,
        orbits: grouping.orbits,
        roots_found: roots.points.len(),
        inconsistent_points: grouping.inconsistent.len(),
        complete,
    })
}

/// Continues a cycle to the parameter `c` by Newton's method on the cyclic
/// system `z_{i+1} = z_i^2 + c`, which stays well conditioned for repelling
/// cycles where a single-point Newton on `f^n(z) - z` has tiny basins.
/// Returns `None` if the iteration does not settle.
pub fn track_cycle(c: ComplexParam, points: &[Complex64], cfg: &OrbitFinderConfig) -> Option<Vec<Complex64>> {
    const MAX_STEPS: usize = 30;
    let n = points.len();
    if n == 0 {
        return None;
    }
    let cv = c.value();
    let mut z = points.to_vec();
    let mut delta = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..MAX_STEPS {
        let residual = |i: usize| z[i] * z[i] + cv - z[(i + 1) % n];
        let rho: Complex64 = z.iter().map(|w| 2.0 * w).product();
        if rho.norm() > 1.0 && z.iter().all(|w| w.norm() > 0.0) {
            // backward sweep: d_i = (d_{i+1} + e_i) / (2 z_i), contracting
            let (mut p, mut q) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
            for i in (0..n).rev() {
                p /= 2.0 * z[i];
                q = (q + residual(i)) / (2.0 * z[i]);
            }
            delta[0] = q / (1.0 - p);
            for i in (1..n).rev() {
                let next = if i + 1 == n { delta[0] } else { delta[i + 1] };
                delta[i] = (next + residual(i)) / (2.0 * z[i]);
            }
        } else {
            // forward sweep: d_{i+1} = 2 z_i d_i - e_i
            let (mut a, mut b) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
            for (i, &zi) in z.iter().enumerate() {
                a *= 2.0 * zi;
                b = 2.0 * zi * b - residual(i);
            }
            delta[0] = b / (1.0 - a);
            for i in 0..n - 1 {
                delta[i + 1] = 2.0 * z[i] * delta[i] - residual(i);
            }
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return None;
        }
        let mut small = true;
        for (w, d) in z.iter_mut().zip(&delta) {
            small &= d.norm() <= cfg.newton_tol * w.norm().max(1.0);
            *w -= d;
        }
        if small {
            return Some(z);
        }
    }
    None
}

/// Seeds at `c` from orbits found at a nearby parameter: each cycle is
/// tracked to `c`; cycles that fail to track contribute their raw points.
pub fn continuation_seeds(c: ComplexParam, prior: &PeriodOrbits, cfg: &OrbitFinderConfig) -> Vec<Complex64> {
    let mut seeds = Vec::with_capacity(prior.period * prior.orbits.len());
    for orbit in &prior.orbits {
        match track_cycle(c, &orbit.points, cfg) {
            Some(points) => seeds.extend(points),
            None => seeds.extend(orbit.points.iter().copied()),
        }
    }
    seeds
}

/// Orbits of every exact period `1..=n_max` at one parameter.
#[derive(Debug, Clone)]
pub struct OrbitCatalog {
    pub c: ComplexParam,
    pub by_period: BTreeMap<usize, PeriodOrbits>,
}

/// Which orbits enter a sum or a hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitFilter {
    /// Every periodic orbit, whatever its type.
    All,
    /// Repelling orbits only.
    Repelling,
}

impl OrbitFilter {
    pub fn admits(self, orbit: &PeriodicOrbit) -> bool {
        match self {
            OrbitFilter::All => true,
            OrbitFilter::Repelling => orbit.is_repelling(),
        }
    }
}

impl OrbitCatalog {
    pub fn max_period(&self) -> usize {
        self.by_period.keys().next_back().copied().unwrap_or(0)
    }

    pub fn period(&self, n: usize) -> Option<&PeriodOrbits> {
        self.by_period.get(&n)
    }

    pub fn incomplete_periods(&self) -> Vec<usize> {
        self.by_period
            .values()
            .filter(|p| !p.complete)
            .map(|p| p.period)
            .collect()
    }

    pub fn orbits(&self, filter: OrbitFilter) -> impl Iterator<Item = &PeriodicOrbit> {
        self.by_period
            .values()
            .flat_map(|p| p.orbits.iter())
            .filter(move |o| filter.admits(o))
    }
}

/// Orbits of all exact periods up to `n_max`.
///
/// Points of lower exact period and, when given, the orbits of a previous
/// catalog (typically at a nearby parameter) seed each Newton search.
pub fn orbits_up_to(
    c: ComplexParam,
    n_max: usize,
    cfg: &OrbitFinderConfig,
    warm_start: Option<&OrbitCatalog>,
) -> Result<OrbitCatalog> {
    cfg.validate()?;
    cfg.check_period(n_max.max(1))?;
    let mut by_period: BTreeMap<usize, PeriodOrbits> = BTreeMap::new();
    for n in 1..=n_max {
        let mut seeds: Vec<Complex64> = proper_divisors(n)
            .filter_map(|d| by_period.get(&d))
            .flat_map(|p| p.points())
            .collect();
        if let Some(prior) = warm_start.and_then(|w| w.period(n)) {
            seeds.extend(continuation_seeds(c, prior, cfg));
        }
        let set = orbits_of_period(c, n, cfg, Some(&seeds))?;
        by_period.insert(n, set);
    }
    Ok(OrbitCatalog { c, by_period })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OrbitFinderConfig {
        OrbitFinderConfig::default()
    }

    fn contains(points: &[Complex64], z: Complex64, tol: f64) -> bool {
        points.iter().any(|p| (p - z).norm() < tol)
    }

    #[test]
    fn tracked_cycles_match_a_cold_search() {
        let c0 = ComplexParam::new(-1.2, 0.3).unwrap();
        let c1 = ComplexParam::new(-1.19, 0.31).unwrap();
        let before = orbits_of_period(c0, 6, &cfg(), None).unwrap();
        let after = orbits_of_period(c1, 6, &cfg(), None).unwrap();
        let targets: Vec<Complex64> = after.points().collect();
        for orbit in &before.orbits {
            let tracked = track_cycle(c1, &orbit.points, &cfg()).unwrap();
            for (z, w) in tracked.iter().zip(tracked.iter().cycle().skip(1)) {
                assert!((z * z + c1.value() - w).norm() < 1e-12);
                assert!(contains(&targets, *z, 1e-10));
            }
        }
        assert_eq!(continuation_seeds(c1, &before, &cfg()).len(), 64 - 10);
        assert!(track_cycle(c1, &[], &cfg()).is_none());
    }

    #[test]
    fn iterate_map_examples() {
        let one = Complex64::new(1.0, 0.0);
        match iterate_map(ComplexParam::real(0.0), one, 3).unwrap() {
            Iterate::Finite { value, z_derivative } => {
                assert_eq!(value, one);
                assert_eq!(z_derivative, Complex64::new(8.0, 0.0));
            }
            other => panic!("{other:?}"),
        }
        match iterate_map(ComplexParam::real(-2.0), Complex64::new(2.0, 0.0), 1).unwrap() {
            Iterate::Finite { value, z_derivative } => {
                assert_eq!(value, Complex64::new(2.0, 0.0));
                assert_eq!(z_derivative, Complex64::new(4.0, 0.0));
            }
            other => panic!("{other:?}"),
        }
        // 0 -> 1 -> 2 -> 5; the derivative picks up the factor 2*0
        match iterate_map(ComplexParam::real(1.0), Complex64::new(0.0, 0.0), 3).unwrap() {
            Iterate::Finite { value, z_derivative } => {
                assert_eq!(value, Complex64::new(5.0, 0.0));
                assert_eq!(z_derivative, Complex64::new(0.0, 0.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iterate_map_flags_escape() {
        let r = iterate_map(ComplexParam::real(1.0), Complex64::new(10.0, 0.0), 20).unwrap();
        assert!(matches!(r, Iterate::Escaped { step } if step < 20));
        assert!(iterate_map(ComplexParam::real(0.0), Complex64::new(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = OrbitFinderConfig {
            dedupe_tol: 1e-14,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = OrbitFinderConfig {
            start_radius: 1.5,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = OrbitFinderConfig {
            start_multiplier: 0.5,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn period_cap_enforced() {
        assert!(find_periodic_points(ComplexParam::real(0.0), 13, &cfg(), None).is_err());
        assert!(find_periodic_points(ComplexParam::real(0.0), 0, &cfg(), None).is_err());
    }

    #[test]
    fn roots_at_zero() {
        let roots = find_periodic_points(ComplexParam::real(0.0), 1, &cfg(), None).unwrap();
        assert!(roots.complete);
        assert!(contains(&roots.points, Complex64::new(0.0, 0.0), 1e-12));
        assert!(contains(&roots.points, Complex64::new(1.0, 0.0), 1e-12));

        let roots = find_periodic_points(ComplexParam::real(0.0), 2, &cfg(), None).unwrap();
        assert!(roots.complete);
        let h = 3f64.sqrt() / 2.0;
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.5, h),
            Complex64::new(-0.5, -h),
        ] {
            assert!(contains(&roots.points, z, 1e-12), "{z}");
        }
    }

    #[test]
    fn fixed_points_at_minus_two() {
        let roots = find_periodic_points(ComplexParam::real(-2.0), 1, &cfg(), None).unwrap();
        assert_eq!(roots.points.len(), 2);
        assert!(contains(&roots.points, Complex64::new(2.0, 0.0), 1e-12));
        assert!(contains(&roots.points, Complex64::new(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn grouping_at_zero() {
        let c = ComplexParam::real(0.0);
        let roots = find_periodic_points(c, 2, &cfg(), None).unwrap();
        let g = group_into_orbits(c, 2, &roots.points, &cfg()).unwrap();
        assert_eq!(g.orbits.len(), 1);
        assert_eq!(g.lower_period.len(), 2);
        assert!(g.inconsistent.is_empty());
        let orbit = &g.orbits[0];
        let h = 3f64.sqrt() / 2.0;
        assert!(contains(&orbit.points, Complex64::new(-0.5, h), 1e-12));
        assert!(contains(&orbit.points, Complex64::new(-0.5, -h), 1e-12));

        let roots = find_periodic_points(c, 1, &cfg(), None).unwrap();
        let g = group_into_orbits(c, 1, &roots.points, &cfg()).unwrap();
        assert_eq!(g.orbits.len(), 2);
    }

    #[test]
    fn generic_period_three_has_two_orbits() {
        let c = ComplexParam::new(0.3, 0.4).unwrap();
        let set = orbits_of_period(c, 3, &cfg(), None).unwrap();
        assert!(set.complete);
        assert_eq!(set.orbits.len(), 2);
        assert_eq!(set.roots_found, 8);
    }

    #[test]
    fn grouping_flags_foreign_points() {
        let c = ComplexParam::real(0.0);
        let pts = vec![Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.2)];
        let g = group_into_orbits(c, 1, &pts, &cfg()).unwrap();
        // 0.3+0.2i is not periodic: its image matches nothing in the set
        assert_eq!(g.orbits.len(), 1);
        assert_eq!(g.inconsistent, vec![Complex64::new(0.3, 0.2)]);
    }

    #[test]
    fn exact_period_counts() {
        let counts: Vec<usize> = (1..=8).map(exact_period_orbit_count).collect();
        assert_eq!(counts, vec![2, 1, 2, 3, 6, 9, 18, 30]);
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(4), 0);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(7), -1);
    }

    #[test]
    fn small_catalogs() {
        let cat = orbits_up_to(ComplexParam::real(0.0), 2, &cfg(), None).unwrap();
        assert_eq!(cat.period(1).unwrap().orbits.len(), 2);
        assert_eq!(cat.period(2).unwrap().orbits.len(), 1);

        let cat = orbits_up_to(ComplexParam::real(10.0), 3, &cfg(), None).unwrap();
        let counts: Vec<usize> = (1..=3).map(|n| cat.period(n).unwrap().orbits.len()).collect();
        assert_eq!(counts, vec![2, 1, 2]);
        assert!(cat.orbits(OrbitFilter::All).all(|o| o.is_repelling()));
    }

    #[test]
    fn tangency_parameter_flags_collision() {
        let c = ComplexParam::real(-0.75);
        let cat = orbits_up_to(c, 2, &cfg(), None).unwrap();
        let fixed = cat.period(1).unwrap();
        assert!(fixed.complete);
        let stabilities: Vec<Stability> = fixed.orbits.iter().map(|o| o.stability).collect();
        assert!(stabilities.contains(&Stability::IndifferentParabolicFlagged));
        assert!(stabilities.contains(&Stability::Repelling));
        // the period-2 cycle has collapsed onto the fixed point -1/2
        assert!(!cat.period(2).unwrap().complete);
    }

    #[test]
    fn superattracting_fixed_point_has_no_nu() {
        let cat = orbits_up_to(ComplexParam::real(0.0), 1, &cfg(), None).unwrap();
        let zero = cat
            .orbits(OrbitFilter::All)
            .find(|o| o.points[0].norm() < 1e-12)
            .unwrap();
        assert_eq!(zero.stability, Stability::SuperattractingFlagged);
        assert!(zero.nu.is_none());
    }
}
