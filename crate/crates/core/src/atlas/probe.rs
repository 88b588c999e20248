use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbit::{orbits_up_to, OrbitFinderConfig};
use crate::param::ComplexParam;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeEntry {
    /// Smallest `|nu_O - target|` over repelling orbits of exact period `n`.
    pub distance: Option<f64>,
    pub complete: bool,
}

/// Distance from `target` to the repelling `nu` values of each exact period.
pub fn averaging_density_probe(
    c: ComplexParam,
    target: Complex64,
    periods: RangeInclusive<usize>,
    cfg: &OrbitFinderConfig,
) -> Result<BTreeMap<usize, ProbeEntry>> {
    if *periods.start() == 0 || periods.is_empty() {
        return Err(Error::InvalidArgument("periods must be a nonempty range of positive integers".into()));
    }
    if !target.is_finite() {
        return Err(Error::InvalidArgument("target must be finite".into()));
    }
    let catalog = orbits_up_to(c, *periods.end(), cfg, None)?;
    let mut out = BTreeMap::new();
    for n in periods {
        let set = catalog.period(n).ok_or(Error::MissingPeriod { period: n })?;
        let distance = set
            .orbits
            .iter()
            .filter(|o| o.is_repelling())
            .filter_map(|o| o.nu)
            .map(|nu| (nu - target).norm())
            .min_by(f64::total_cmp);
        out.insert(
            n,
            ProbeEntry {
                distance,
                complete: set.complete,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_on_a_nu_value() {
        let cfg = OrbitFinderConfig::default();
        let probe = averaging_density_probe(ComplexParam::real(0.0), Complex64::new(0.5, 0.0), 1..=3, &cfg).unwrap();
        assert!(probe[&2].distance.unwrap() < 1e-12);
        assert!((probe[&1].distance.unwrap() - 1.5).abs() < 1e-12);
        assert!(probe.values().all(|e| e.complete));
    }

    #[test]
    fn rejects_empty_range() {
        let cfg = OrbitFinderConfig::default();
        assert!(averaging_density_probe(ComplexParam::real(0.0), Complex64::new(0.0, 0.0), 0..=2, &cfg).is_err());
    }
}
