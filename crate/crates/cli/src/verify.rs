//! The verification battery behind `multatlas verify`.

use std::fmt;

use multatlas_core::atlas::averaging_density_probe;
use multatlas_core::dynamics::{critical_orbit_derivatives, summation_identity_residual, vieta_product_residual};
use multatlas_core::hull::{convex_hull, Point2};
use multatlas_core::multiplier::{cycle_multiplier, g_of_orbit, nu_by_contour_mean, nu_closed_form, Branch};
use multatlas_core::orbit::{orbits_up_to, track_cycle, OrbitCatalog, OrbitFinderConfig};
use multatlas_core::{ComplexParam, Error};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const CHECK_NAMES: [&str; 7] = [
    "closed_form",
    "point_values",
    "summation",
    "vieta",
    "derivatives",
    "g_bounds",
    "averaging",
];

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    /// Largest residual seen (or the compared quantity for `averaging`).
    pub worst: f64,
    pub threshold: f64,
    pub cases: usize,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<13} worst={:.3e} threshold={:.1e} cases={} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.threshold,
            self.cases,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Empty means every check.
    pub only: Vec<String>,
    /// Restricts the summation and Vieta checks to this single `k`.
    pub k: Option<usize>,
}

pub fn unknown_checks(only: &[String]) -> Vec<String> {
    only.iter().filter(|n| !CHECK_NAMES.contains(&n.as_str())).cloned().collect()
}

pub fn run(opts: &VerifyOptions, finder: &OrbitFinderConfig) -> Vec<CheckReport> {
    CHECK_NAMES
        .iter()
        .enumerate()
        .filter(|(_, name)| opts.only.is_empty() || opts.only.iter().any(|o| o == *name))
        .map(|(i, &name)| {
            // one stream per check, so that --only reproduces the full run
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)));
            let mut acc = Acc::new(name, threshold(name));
            let outcome = match name {
                "closed_form" => closed_form(&mut rng, finder, &mut acc),
                "point_values" => point_values(finder, &mut acc),
                "summation" => identities(&mut rng, finder, opts.k, true, &mut acc),
                "vieta" => identities(&mut rng, finder, opts.k, false, &mut acc),
                "derivatives" => derivatives(&mut rng, finder, &mut acc),
                "g_bounds" => g_bounds(finder, &mut acc),
                "averaging" => averaging(finder, &mut acc),
                _ => unreachable!(),
            };
            if let Err(e) = outcome {
                acc.fail(format!("error: {e}"));
            }
            acc.finish()
        })
        .collect()
}

fn threshold(name: &str) -> f64 {
    match name {
        "closed_form" => 1e-9,
        "point_values" => 1e-10,
        "summation" => 1e-8,
        "vieta" => 1e-9,
        "derivatives" => 1e-5,
        "g_bounds" => 1e-6,
        _ => 0.0,
    }
}

struct Acc {
    name: &'static str,
    threshold: f64,
    worst: f64,
    cases: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Acc {
    fn new(name: &'static str, threshold: f64) -> Self {
        Self {
            name,
            threshold,
            worst: 0.0,
            cases: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn record(&mut self, residual: f64, threshold: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        if residual.is_nan() || residual > self.worst {
            self.worst = residual;
        }
        if !(residual < threshold) {
            self.failures.push(format!("{} = {residual:.3e}", what()));
        }
    }

    fn fail(&mut self, why: String) {
        self.failures.push(why);
    }

    fn finish(self) -> CheckReport {
        let mut detail: Vec<String> = self.notes;
        if !self.failures.is_empty() {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            detail.push(format!("failures={} [{}]", self.failures.len(), shown.join("; ")));
        }
        CheckReport {
            name: self.name,
            passed: self.failures.is_empty() && self.cases > 0,
            worst: self.worst,
            threshold: self.threshold,
            cases: self.cases,
            detail: detail.join(" "),
        }
    }
}

fn random_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius));
        if z.norm() <= radius {
            return z;
        }
    }
}

/// Branch points and poles of the period 1 to 3 closed forms.
fn closed_form_singularities() -> [Complex64; 7] {
    [
        Complex64::new(0.25, 0.0),
        Complex64::new(-1.75, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(-1.754_877_666_246_693, 0.0),
        Complex64::new(-0.122_561_166_876_653_6, 0.744_861_766_619_744_2),
        Complex64::new(-0.122_561_166_876_653_6, -0.744_861_766_619_744_2),
    ]
}

fn complete_catalog(c: ComplexParam, n: usize, finder: &OrbitFinderConfig) -> Result<OrbitCatalog, Error> {
    let cat = orbits_up_to(c, n, finder, None)?;
    match cat.incomplete_periods().first() {
        Some(&period) => Err(Error::IncompleteOrbits { period }),
        None => Ok(cat),
    }
}

fn closed_form(rng: &mut ChaCha8Rng, finder: &OrbitFinderConfig, acc: &mut Acc) -> Result<(), Error> {
    let singular = closed_form_singularities();
    let mut sampled = 0;
    while sampled < 100 {
        let z = random_in_disk(rng, 2.0);
        if singular.iter().any(|s| (z - s).norm() < 0.05) {
            continue;
        }
        sampled += 1;
        let c = ComplexParam::from_complex(z)?;
        let cat = complete_catalog(c, 3, finder)?;
        for period in 1..=3 {
            let oracle: Vec<Complex64> = Branch::BOTH
                .iter()
                .map(|&b| nu_closed_form(c, period, b))
                .collect::<Result<_, _>>()?;
            for orbit in &cat.period(period).unwrap().orbits {
                let Some(nu) = orbit.nu else {
                    acc.fail(format!("nu undefined at {c}, period {period}"));
                    continue;
                };
                let rel = oracle
                    .iter()
                    .map(|v| (nu - v).norm() / v.norm())
                    .fold(f64::INFINITY, f64::min);
                acc.record(rel, 1e-9, || format!("c={c} period {period}"));
            }
        }
    }
    acc.notes.push("100 parameters, periods 1-3".into());
    Ok(())
}

fn point_values(finder: &OrbitFinderConfig, acc: &mut Acc) -> Result<(), Error> {
    let c = ComplexParam::real(-2.0);
    let cat = orbits_up_to(c, 1, finder, None)?;
    let orbit = cat
        .period(1)
        .and_then(|p| p.orbits.iter().find(|o| (o.points[0] - 2.0).norm() < 1e-9))
        .ok_or(Error::MissingPeriod { period: 1 })?;
    let nu = orbit.nu.ok_or(Error::Superattracting)?;
    acc.record((nu + 1.0 / 6.0).norm(), 1e-12, || "nu of {2} at -2".into());

    let c = ComplexParam::real(-0.75);
    let cat = orbits_up_to(c, 3, finder, None)?;
    let mut values: Vec<Complex64> = Vec::new();
    for period in [1, 3] {
        let set = cat.period(period).ok_or(Error::MissingPeriod { period })?;
        if !set.complete {
            return Err(Error::IncompleteOrbits { period });
        }
        values.extend(set.orbits.iter().filter_map(|o| o.nu));
    }
    // the period-2 cycle has collapsed at -3/4; average nu around it instead
    values.extend(nu_by_contour_mean(c, 2, finder, 1e-2, 16)?);
    let expected = [
        Complex64::new(-1.0, 0.0),
        Complex64::new(-1.0 / 3.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(-10.0 / 183.0, 49.0 / 183.0),
        Complex64::new(-10.0 / 183.0, -49.0 / 183.0),
    ];
    if values.len() != expected.len() {
        acc.fail(format!("{} nu values at -3/4, expected 5", values.len()));
    }
    for e in expected {
        let d = values.iter().map(|v| (v - e).norm()).fold(f64::INFINITY, f64::min);
        acc.record(d, 1e-10, || format!("nu {e} at -3/4"));
    }
    let hull = convex_hull(&values.iter().map(|&v| Point2::from(v)).collect::<Vec<_>>());
    let depth = hull.signed_distance(Point2::ORIGIN)?;
    if !(depth < 0.0) {
        acc.fail(format!("origin not interior at -3/4 (signed distance {depth:.3e})"));
    }
    acc.notes.push(format!("origin_depth={depth:.6}"));
    Ok(())
}

fn identities(
    rng: &mut ChaCha8Rng,
    finder: &OrbitFinderConfig,
    k: Option<usize>,
    summation: bool,
    acc: &mut Acc,
) -> Result<(), Error> {
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None if summation => (1..=8).collect(),
        None => (1..=4).collect(),
    };
    let k_max = *ks.iter().max().unwrap();
    let tol = if summation { 1e-8 } else { 1e-9 };
    let mut accepted = 0;
    let mut rejected = 0;
    while accepted < 20 {
        let c = ComplexParam::from_complex(random_in_disk(rng, 2.0))?;
        let cat = match complete_catalog(c, k_max, finder) {
            Ok(cat) => cat,
            Err(Error::IncompleteOrbits { .. }) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let residuals: Result<Vec<f64>, Error> = ks
            .iter()
            .map(|&k| {
                if summation {
                    summation_identity_residual(c, k, &cat)
                } else {
                    vieta_product_residual(c, k, &cat)
                }
            })
            .collect();
        match residuals {
            Ok(rs) => {
                accepted += 1;
                for (&k, r) in ks.iter().zip(rs) {
                    acc.record(r, tol, || format!("c={c} k={k}"));
                }
            }
            Err(Error::CriticallyPeriodic { .. }) | Err(Error::Parabolic { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    acc.notes.push(format!("k={ks:?} parameters=20 resampled={rejected}"));
    Ok(())
}

fn derivatives(rng: &mut ChaCha8Rng, finder: &OrbitFinderConfig, acc: &mut Acc) -> Result<(), Error> {
    const H: f64 = 1e-6;
    let mut skipped_escape = 0;
    for _ in 0..10 {
        let z = random_in_disk(rng, 2.0);
        let c = ComplexParam::from_complex(z)?;
        let plus = ComplexParam::from_complex(z + H)?;
        let minus = ComplexParam::from_complex(z - H)?;
        let cat = complete_catalog(c, 8, finder)?;
        for orbit in cat.orbits(multatlas_core::orbit::OrbitFilter::All) {
            let Some(d) = orbit.multiplier_derivative else { continue };
            let (Some(p), Some(m)) = (
                track_cycle(plus, &orbit.points, finder),
                track_cycle(minus, &orbit.points, finder),
            ) else {
                acc.fail(format!("cycle of period {} at {c} did not track", orbit.period));
                continue;
            };
            let fd = (cycle_multiplier(&p) - cycle_multiplier(&m)) / (2.0 * H);
            acc.record((fd - d).norm() / d.norm(), 1e-5, || format!("rho' period {} at {c}", orbit.period));
        }
        for k in 1..=10 {
            let results = (
                critical_orbit_derivatives(c, k),
                critical_orbit_derivatives(plus, k),
                critical_orbit_derivatives(minus, k),
            );
            match results {
                (Ok(f), Ok(fp), Ok(fm)) => {
                    let fd = (fp.value - fm.value) / (2.0 * H);
                    acc.record((fd - f.derivative).norm() / f.derivative.norm(), 1e-5, || {
                        format!("F_{k}' at {c}")
                    });
                }
                (Err(Error::Escaped { .. }), _, _) | (_, Err(Error::Escaped { .. }), _) | (_, _, Err(Error::Escaped { .. })) => {
                    skipped_escape += 1
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
            }
        }
    }
    acc.notes.push(format!("h={H:e} F_k_skipped_beyond_range={skipped_escape}"));
    Ok(())
}

fn g_bounds(finder: &OrbitFinderConfig, acc: &mut Acc) -> Result<(), Error> {
    let c = ComplexParam::real(-1e4);
    let cat = complete_catalog(c, 6, finder)?;
    let reference = (2.0 * c.value()).inv();
    let centre = 2.0 * c.value().norm().sqrt();
    let mut g_min = f64::INFINITY;
    let mut g_max = 0.0f64;
    for orbit in cat.orbits(multatlas_core::orbit::OrbitFilter::All) {
        let nu = orbit.nu.ok_or(Error::Superattracting)?;
        acc.record((nu - reference).norm(), 1e-6, || format!("nu period {}", orbit.period));
        let g = g_of_orbit(orbit)?.value.norm();
        g_min = g_min.min(g);
        g_max = g_max.max(g);
        if !(g > centre - 2.0 && g < centre + 2.0) {
            acc.fail(format!("|g| = {g} outside ({}, {})", centre - 2.0, centre + 2.0));
        }
    }
    acc.notes.push(format!("c=-1e4 |g| in [{g_min:.6}, {g_max:.6}]"));
    Ok(())
}

fn averaging(finder: &OrbitFinderConfig, acc: &mut Acc) -> Result<(), Error> {
    let probe = averaging_density_probe(ComplexParam::real(0.0), Complex64::new(-0.25, 0.0), 3..=12, finder)?;
    let min_over = |lo: usize, hi: usize| {
        (lo..=hi)
            .filter_map(|n| probe[&n].distance)
            .fold(f64::INFINITY, f64::min)
    };
    if let Some((n, _)) = probe.iter().find(|(_, e)| !e.complete) {
        acc.fail(format!("period {n} incomplete"));
    }
    let low = min_over(3, 5);
    let high = min_over(9, 12);
    acc.cases = probe.len();
    acc.worst = high;
    acc.threshold = low;
    if !(high < low) {
        acc.fail(format!("min over 9..12 = {high:.3e} not below min over 3..5 = {low:.3e}"));
    }
    acc.notes.push("c=0 target=-1/4; worst=min over n=9..12, threshold=min over n=3..5".into());
    Ok(())
}
