use std::collections::BTreeMap;
use std::path::Path;

use image::{Rgb, RgbImage};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::mandelbrot_member;
use crate::error::{Error, Result};
use crate::hull::{HullPolygon, Point2};
use crate::orbit::{continuation_seeds, orbits_of_period, OrbitCatalog, OrbitFinderConfig};
use crate::param::ComplexParam;

/// Axis-aligned rectangle in the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Self {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || !(re_min < re_max) || !(im_min < im_max) {
            return Err(Error::InvalidArgument(format!("empty or non-finite bounds {b:?}")));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bounds: Bounds,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(bounds: Bounds, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("resolution must be at least 1x1".into()));
        }
        Ok(Self { bounds, width, height })
    }

    /// Center of pixel `(col, row)`; row 0 is the top edge (`im_max`).
    pub fn pixel_center(&self, col: usize, row: usize) -> Complex64 {
        let b = &self.bounds;
        let dx = (b.re_max - b.re_min) / self.width as f64;
        let dy = (b.im_max - b.im_min) / self.height as f64;
        Complex64::new(
            b.re_min + (col as f64 + 0.5) * dx,
            b.im_max - (row as f64 + 0.5) * dy,
        )
    }

    fn scaled(&self, factor: usize) -> GridSpec {
        GridSpec {
            bounds: self.bounds,
            width: self.width * factor,
            height: self.height * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelClass {
    InM,
    /// Smallest period at which the hull of repelling `nu` values contains 0.
    XWithPeriod(u8),
    NotDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub threads: usize,
    pub tile_size: usize,
    /// Seed each pixel's Newton searches from the previous pixel's orbits.
    pub continuation: bool,
    /// The origin must be at least this deep inside the hull.
    pub margin: f64,
    /// Render at twice the resolution; the image averages each 2x2 block.
    pub supersample: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            tile_size: 32,
            continuation: true,
            margin: 0.0,
            supersample: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        if self.tile_size < 8 {
            return Err(Error::InvalidConfig("tile_size must be >= 8".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidConfig("margin must be >= 0".into()));
        }
        Ok(())
    }
}

/// Classified parameter grid. With supersampling the stored grid has twice
/// the nominal resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XGrid {
    pub spec: GridSpec,
    pub supersample: usize,
    pub max_period: usize,
    pub escape_budget: u32,
    pub margin: f64,
    /// Row-major, top row first; `spec.width * supersample` columns.
    pub pixels: Vec<PixelClass>,
    /// Pixels downgraded to `NotDetected` because of an incomplete orbit set,
    /// keyed by the offending period.
    pub incomplete_by_period: BTreeMap<usize, usize>,
}

impl XGrid {
    pub fn sample_width(&self) -> usize {
        self.spec.width * self.supersample
    }

    pub fn sample_height(&self) -> usize {
        self.spec.height * self.supersample
    }

    pub fn sample_center(&self, col: usize, row: usize) -> Complex64 {
        self.spec.scaled(self.supersample).pixel_center(col, row)
    }

    pub fn class_at(&self, col: usize, row: usize) -> PixelClass {
        self.pixels[row * self.sample_width() + col]
    }

    pub fn count_in_m(&self) -> usize {
        self.pixels.iter().filter(|p| **p == PixelClass::InM).count()
    }

    pub fn count_not_detected(&self) -> usize {
        self.pixels.iter().filter(|p| **p == PixelClass::NotDetected).count()
    }

    /// Pixel counts of `XWithPeriod(p)` by `p`.
    pub fn counts_by_period(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for p in &self.pixels {
            if let PixelClass::XWithPeriod(k) = p {
                *out.entry(*k as usize).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Result of classifying a single parameter.
#[derive(Debug, Clone)]
pub struct PixelOutcome {
    pub class: PixelClass,
    /// Orbits computed on the way (absent for `InM`).
    pub catalog: Option<OrbitCatalog>,
    /// Period whose orbit set was incomplete, if that stopped the search.
    pub incomplete_period: Option<usize>,
}

/// Escape test, then periods `1..=max_period` with an incremental hull of
/// repelling `nu` values until it contains the origin.
pub fn classify_pixel(
    c: ComplexParam,
    max_period: usize,
    escape_budget: u32,
    margin: f64,
    finder: &OrbitFinderConfig,
    warm: Option<&OrbitCatalog>,
) -> Result<PixelOutcome> {
    if mandelbrot_member(c, escape_budget, 2.0)?.in_mandelbrot {
        return Ok(PixelOutcome {
            class: PixelClass::InM,
            catalog: None,
            incomplete_period: None,
        });
    }
    let mut catalog = OrbitCatalog {
        c,
        by_period: BTreeMap::new(),
    };
    let mut hull = HullPolygon::default();
    for n in 1..=max_period {
        let mut seeds: Vec<Complex64> = (1..n)
            .filter(|d| n % d == 0)
            .filter_map(|d| catalog.period(d))
            .flat_map(|p| p.points())
            .collect();
        if let Some(prior) = warm.and_then(|w| w.period(n)) {
            seeds.extend(continuation_seeds(c, prior, finder));
        }
        let set = orbits_of_period(c, n, finder, Some(&seeds))?;
        let complete = set.complete;
        let nus: Vec<Point2> = set
            .orbits
            .iter()
            .filter(|o| o.is_repelling())
            .filter_map(|o| o.nu)
            .map(Point2::from)
            .collect();
        catalog.by_period.insert(n, set);
        if !complete {
            return Ok(PixelOutcome {
                class: PixelClass::NotDetected,
                catalog: Some(catalog),
                incomplete_period: Some(n),
            });
        }
        hull = hull.extended(nus);
        if hull.contains_origin(margin) {
            return Ok(PixelOutcome {
                class: PixelClass::XWithPeriod(n as u8),
                catalog: Some(catalog),
                incomplete_period: None,
            });
        }
    }
    Ok(PixelOutcome {
        class: PixelClass::NotDetected,
        catalog: Some(catalog),
        incomplete_period: None,
    })
}

struct Tile {
    col0: usize,
    row0: usize,
    cols: usize,
    rows: usize,
}

struct TileResult {
    classes: Vec<(usize, usize, PixelClass)>,
    incomplete: Vec<usize>,
}

fn render_tile(
    tile: &Tile,
    spec: &GridSpec,
    max_period: usize,
    escape_budget: u32,
    cfg: &RenderConfig,
    finder: &OrbitFinderConfig,
) -> Result<TileResult> {
    let mut out = TileResult {
        classes: Vec::with_capacity(tile.cols * tile.rows),
        incomplete: Vec::new(),
    };
    let mut warm: Option<OrbitCatalog> = None;
    for local_row in 0..tile.rows {
        let row = tile.row0 + local_row;
        let cols: Box<dyn Iterator<Item = usize>> = if local_row % 2 == 0 {
            Box::new(0..tile.cols)
        } else {
            Box::new((0..tile.cols).rev())
        };
        for local_col in cols {
            let col = tile.col0 + local_col;
            let c = ComplexParam::from_complex(spec.pixel_center(col, row))?;
            let seed = if cfg.continuation { warm.as_ref() } else { None };
            let outcome = classify_pixel(c, max_period, escape_budget, cfg.margin, finder, seed)?;
            out.classes.push((col, row, outcome.class));
            out.incomplete.extend(outcome.incomplete_period);
            if cfg.continuation {
                if let Some(mut cat) = outcome.catalog {
                    if let Some(old) = warm.take() {
                        for (n, set) in old.by_period {
                            cat.by_period.entry(n).or_insert(set);
                        }
                    }
                    warm = Some(cat);
                }
            }
        }
    }
    Ok(out)
}

/// Renders the classification grid; tiles run in parallel on
/// `cfg.threads` workers and are merged once all have finished.
pub fn render_xset(
    spec: &GridSpec,
    max_period: usize,
    escape_budget: u32,
    cfg: &RenderConfig,
    finder: &OrbitFinderConfig,
) -> Result<XGrid> {
    cfg.validate()?;
    finder.validate()?;
    if max_period == 0 || max_period > finder.period_cap {
        return Err(Error::InvalidArgument(format!(
            "max_period must lie in 1..={}",
            finder.period_cap
        )));
    }
    if escape_budget == 0 {
        return Err(Error::InvalidArgument("escape_budget must be >= 1".into()));
    }
    let factor = if cfg.supersample { 2 } else { 1 };
    let sampled = spec.scaled(factor);
    let (w, h) = (sampled.width, sampled.height);
    let t = cfg.tile_size;
    let tiles: Vec<Tile> = (0..h)
        .step_by(t)
        .flat_map(|row0| {
            (0..w).step_by(t).map(move |col0| Tile {
                col0,
                row0,
                cols: t.min(w - col0),
                rows: t.min(h - row0),
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<TileResult> = pool.install(|| {
        tiles
            .par_iter()
            .map(|tile| render_tile(tile, &sampled, max_period, escape_budget, cfg, finder))
            .collect::<Result<_>>()
    })?;

    let mut pixels = vec![PixelClass::NotDetected; w * h];
    let mut incomplete_by_period = BTreeMap::new();
    for r in results {
        for (col, row, class) in r.classes {
            pixels[row * w + col] = class;
        }
        for n in r.incomplete {
            *incomplete_by_period.entry(n).or_insert(0) += 1;
        }
    }
    let downgraded: usize = incomplete_by_period.values().sum();
    if downgraded > 0 {
        log::warn!("{downgraded} pixels downgraded to NOT_DETECTED by incomplete orbit sets: {incomplete_by_period:?}");
    }
    Ok(XGrid {
        spec: *spec,
        supersample: factor,
        max_period,
        escape_budget,
        margin: cfg.margin,
        pixels,
        incomplete_by_period,
    })
}

/// Colors for `XWithPeriod(1..)`; periods beyond the list reuse the last color.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub periods: Vec<[u8; 3]>,
    pub in_m: [u8; 3],
    pub not_detected: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            periods: vec![
                [40, 60, 200],
                [0, 150, 220],
                [0, 180, 120],
                [140, 200, 40],
                [250, 210, 40],
                [250, 140, 30],
                [220, 50, 30],
                [120, 0, 0],
            ],
            in_m: [0, 0, 0],
            not_detected: [255, 255, 255],
        }
    }
}

impl Palette {
    pub fn color(&self, class: PixelClass) -> [u8; 3] {
        match class {
            PixelClass::InM => self.in_m,
            PixelClass::NotDetected => self.not_detected,
            PixelClass::XWithPeriod(p) => {
                let idx = (p as usize).clamp(1, self.periods.len().max(1)) - 1;
                self.periods.get(idx).copied().unwrap_or(self.not_detected)
            }
        }
    }
}

pub(crate) fn xset_image(grid: &XGrid, palette: &Palette) -> RgbImage {
    let s = grid.supersample;
    let area = (s * s) as u32;
    RgbImage::from_fn(grid.spec.width as u32, grid.spec.height as u32, |x, y| {
        let mut acc = [0u32; 3];
        for dy in 0..s {
            for dx in 0..s {
                let col = palette.color(grid.class_at(x as usize * s + dx, y as usize * s + dy));
                for k in 0..3 {
                    acc[k] += col[k] as u32;
                }
            }
        }
        Rgb(acc.map(|v| ((v + area / 2) / area) as u8))
    })
}

/// Writes the grid as an 8-bit RGB PNG.
pub fn emit_xset_image(grid: &XGrid, path: &Path, palette: &Palette) -> Result<()> {
    xset_image(grid, palette)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, e))
}

/// Everything needed to reproduce a render, plus its pixel statistics.
#[derive(Debug, Clone, Serialize)]
pub struct XsetManifest {
    pub bounds: Bounds,
    pub width: usize,
    pub height: usize,
    pub supersample: usize,
    pub max_period: usize,
    pub escape_budget: u32,
    pub margin: f64,
    pub palette: Palette,
    pub render: RenderConfig,
    pub finder: OrbitFinderConfig,
    pub pixels_in_m: usize,
    pub pixels_not_detected: usize,
    pub pixels_by_period: BTreeMap<usize, usize>,
    pub incomplete_by_period: BTreeMap<usize, usize>,
}

impl XsetManifest {
    pub fn new(grid: &XGrid, palette: &Palette, render: &RenderConfig, finder: &OrbitFinderConfig) -> Self {
        Self {
            bounds: grid.spec.bounds,
            width: grid.spec.width,
            height: grid.spec.height,
            supersample: grid.supersample,
            max_period: grid.max_period,
            escape_budget: grid.escape_budget,
            margin: grid.margin,
            palette: palette.clone(),
            render: render.clone(),
            finder: finder.clone(),
            pixels_in_m: grid.count_in_m(),
            pixels_not_detected: grid.count_not_detected(),
            pixels_by_period: grid.counts_by_period(),
            incomplete_by_period: grid.incomplete_by_period.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
