use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hull::{convex_hull, HullPolygon, Point2};
use crate::orbit::{orbits_up_to, OrbitFinderConfig};
use crate::param::ComplexParam;

/// One orbit with a defined `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YcRow {
    pub period: usize,
    pub nu: Complex64,
    pub multiplier: Complex64,
    pub repelling: bool,
}

/// Finite approximation of `Y_c` from the repelling orbits of period at most
/// `max_period`.
#[derive(Debug, Clone, Serialize)]
pub struct YcDataset {
    pub c: ComplexParam,
    pub max_period: usize,
    /// `nu` of the repelling orbits, by period.
    pub nu_points: BTreeMap<usize, Vec<Complex64>>,
    pub hull: HullPolygon,
    /// Signed distance from the origin to the hull; `None` if the hull is empty.
    pub origin_signed_distance: Option<f64>,
    pub incomplete_periods: Vec<usize>,
    /// Every orbit whose `nu` is defined, repelling or not.
    pub rows: Vec<YcRow>,
}

impl YcDataset {
    pub fn all_nu_points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.nu_points.values().flatten().copied()
    }

    pub fn contains_origin(&self) -> bool {
        matches!(self.origin_signed_distance, Some(d) if d < 0.0)
    }
}

pub fn build_yc(c: ComplexParam, max_period: usize, cfg: &OrbitFinderConfig) -> Result<YcDataset> {
    if max_period == 0 {
        return Err(Error::InvalidArgument("max_period must be >= 1".into()));
    }
    let catalog = orbits_up_to(c, max_period, cfg, None)?;
    let mut nu_points: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mut rows = Vec::new();
    for (&period, set) in &catalog.by_period {
        let repelling: Vec<Complex64> = set
            .orbits
            .iter()
            .filter(|o| o.is_repelling())
            .filter_map(|o| o.nu)
            .collect();
        nu_points.insert(period, repelling);
        rows.extend(set.orbits.iter().filter_map(|o| {
            o.nu.map(|nu| YcRow {
                period,
                nu,
                multiplier: o.multiplier,
                repelling: o.is_repelling(),
            })
        }));
    }
    let points: Vec<Point2> = nu_points.values().flatten().map(|&z| Point2::from(z)).collect();
    let hull = convex_hull(&points);
    let origin_signed_distance = hull.signed_distance(Point2::ORIGIN).ok();
    let incomplete_periods = catalog.incomplete_periods();
    if !incomplete_periods.is_empty() {
        log::warn!("Y_c at {c}: incomplete orbit sets for periods {incomplete_periods:?}");
    }
    Ok(YcDataset {
        c,
        max_period,
        nu_points,
        hull,
        origin_signed_distance,
        incomplete_periods,
        rows,
    })
}

/// 17 significant digits.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn yc_csv_string(ds: &YcDataset) -> String {
    let mut out = String::from("period,nu_re,nu_im,rho_re,rho_im,repelling\n");
    for r in &ds.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.period,
            sig17(r.nu.re),
            sig17(r.nu.im),
            sig17(r.multiplier.re),
            sig17(r.multiplier.im),
            r.repelling
        );
    }
    out
}

pub fn emit_yc_csv(ds: &YcDataset, path: &Path) -> Result<()> {
    std::fs::write(path, yc_csv_string(ds)).map_err(|e| Error::io(path, e))
}

const PERIOD_COLORS: [&str; 12] = [
    "#1f3cc8", "#0096dc", "#00b478", "#8cc828", "#e6be1e", "#fa8c1e", "#dc321e", "#780000", "#8c4bb4",
    "#d25aa0", "#646464", "#2e2e2e",
];

pub(crate) fn yc_svg_string(ds: &YcDataset) -> String {
    const SIZE: f64 = 640.0;
    const PAD: f64 = 40.0;
    let mut lo = Complex64::new(0.0, 0.0);
    let mut hi = Complex64::new(0.0, 0.0);
    for z in ds.all_nu_points() {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-6) * 1.1;
    let mid = (lo + hi) / 2.0;
    let scale = (SIZE - 2.0 * PAD) / span;
    let to_px = |z: Complex64| {
        (
            SIZE / 2.0 + (z.re - mid.re) * scale,
            SIZE / 2.0 - (z.im - mid.im) * scale,
        )
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">c = {}, periods 1..{}</text>"#,
        ds.c, ds.max_period
    );
    let (ox, oy) = to_px(Complex64::new(0.0, 0.0));
    let _ = writeln!(
        s,
        r##"<g stroke="#bbbbbb" stroke-width="1"><line x1="0" y1="{oy:.3}" x2="{SIZE}" y2="{oy:.3}"/><line x1="{ox:.3}" y1="0" x2="{ox:.3}" y2="{SIZE}"/></g>"##
    );
    let verts = ds.hull.vertices();
    if verts.len() >= 2 {
        let pts: Vec<String> = verts
            .iter()
            .map(|v| {
                let (x, y) = to_px(Complex64::new(v.x, v.y));
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#e8eefc" stroke="#203080" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    for (&period, points) in &ds.nu_points {
        let color = PERIOD_COLORS[(period - 1) % PERIOD_COLORS.len()];
        let _ = writeln!(s, r#"<g fill="{color}">"#);
        for &z in points {
            let (x, y) = to_px(z);
            let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2.5"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r##"<g stroke="black" stroke-width="2"><line x1="{:.3}" y1="{oy:.3}" x2="{:.3}" y2="{oy:.3}"/><line x1="{ox:.3}" y1="{:.3}" x2="{ox:.3}" y2="{:.3}"/></g>"##,
        ox - 6.0,
        ox + 6.0,
        oy - 6.0,
        oy + 6.0
    );
    for (i, &period) in ds.nu_points.keys().enumerate() {
        let color = PERIOD_COLORS[(period - 1) % PERIOD_COLORS.len()];
        let y = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{y:.1}" r="4" fill="{color}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">period {period}</text>"#,
            SIZE - 90.0,
            SIZE - 80.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the SVG figure to `path`.
pub fn emit_yc_figure(ds: &YcDataset, path: &Path) -> Result<()> {
    std::fs::write(path, yc_svg_string(ds)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OrbitFinderConfig {
        OrbitFinderConfig::default()
    }

    #[test]
    fn dataset_at_zero() {
        let ds = build_yc(ComplexParam::real(0.0), 2, &cfg()).unwrap();
        assert_eq!(ds.nu_points[&1].len(), 1);
        assert!((ds.nu_points[&1][0] + 1.0).norm() < 1e-12);
        assert_eq!(ds.nu_points[&2].len(), 1);
        assert!((ds.nu_points[&2][0] - 0.5).norm() < 1e-12);
        assert_eq!(ds.hull.len(), 2);
        // the origin lies on the segment [-1, 1/2], not in an interior
        assert_eq!(ds.origin_signed_distance, Some(0.0));
        assert!(!ds.contains_origin());
        assert!(ds.incomplete_periods.is_empty());
    }

    #[test]
    fn csv_at_zero_has_four_rows() {
        let ds = build_yc(ComplexParam::real(0.0), 3, &cfg()).unwrap();
        let csv = yc_csv_string(&ds);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "period,nu_re,nu_im,rho_re,rho_im,repelling");
        assert_eq!(lines.len(), 5);
        assert!(!csv.contains('\r'));
        let periods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(periods, ["1", "2", "3", "3"]);
        let mantissa = lines[1].split(',').nth(1).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
    }

    #[test]
    fn near_tangency_hull_contains_origin() {
        let ds = build_yc(ComplexParam::new(-0.75, 0.02).unwrap(), 3, &cfg()).unwrap();
        assert!(ds.contains_origin(), "{:?}", ds.origin_signed_distance);
    }

    #[test]
    fn exceptional_point_appears_at_minus_two() {
        let ds = build_yc(ComplexParam::real(-2.0), 1, &cfg()).unwrap();
        let pts = &ds.nu_points[&1];
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().any(|z| (z + 1.0 / 6.0).norm() < 1e-12));
    }

    #[test]
    fn svg_mentions_every_point() {
        let ds = build_yc(ComplexParam::real(-1.0), 4, &cfg()).unwrap();
        let svg = yc_svg_string(&ds);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polygon"));
        let circles = svg.matches("<circle").count();
        assert_eq!(circles, ds.all_nu_points().count() + ds.nu_points.len());
    }
}
