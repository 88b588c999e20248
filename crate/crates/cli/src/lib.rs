//! Command-line front end: argument definitions, config resolution and the
//! four subcommands.

// verification checks write `!(worst < threshold)` so a NaN counts as a failure
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod parse;
pub mod verify;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use multatlas_core::atlas::{
    build_yc, emit_xset_image, emit_yc_csv, emit_yc_figure, render_xset, GridSpec, Palette, RenderConfig, XsetManifest,
};
use multatlas_core::orbit::{orbits_of_period, OrbitFinderConfig, PeriodOrbits};
use multatlas_core::{ComplexParam, Error};
use serde::Serialize;

use config::{default_threads, FileConfig, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("incomplete orbit data for periods {0:?}; rerun with --allow-partial to accept")]
    Incomplete(Vec<usize>),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) | CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Incomplete(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "multatlas", version, about = "Multiplier log-derivatives of periodic orbits of z^2 + c")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs and manifests.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the periodic orbits of given periods with multipliers and nu.
    Orbits(OrbitsArgs),
    /// Build the Y_c dataset: CSV, SVG figure and manifest.
    Yc(YcArgs),
    /// Render the X set over a parameter rectangle: PNG and manifest.
    Xset(XsetArgs),
    /// Run the verification battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct OrbitsArgs {
    /// Parameter, as re,im or re+imi.
    #[arg(long, allow_hyphen_values = true, value_parser = parse::complex)]
    pub c: Option<ComplexParam>,
    /// Period N or range A..B.
    #[arg(long, value_parser = parse::period_range)]
    pub period: Option<(usize, usize)>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 0 even when some orbit sets are incomplete.
    #[arg(long)]
    pub allow_partial: bool,
}

#[derive(Debug, Args)]
pub struct YcArgs {
    /// Parameter, as re,im or re+imi.
    #[arg(long, allow_hyphen_values = true, value_parser = parse::complex)]
    pub c: Option<ComplexParam>,
    /// Largest period whose repelling orbits enter the hull.
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Output path prefix; `.csv`, `.svg` and `.manifest.json` are appended.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct XsetArgs {
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true, value_parser = parse::bounds)]
    pub bounds: Option<multatlas_core::atlas::Bounds>,
    /// WIDTHxHEIGHT
    #[arg(long, value_parser = parse::resolution)]
    pub res: Option<(usize, usize)>,
    /// Largest period searched at each pixel.
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Escape-test iteration budget.
    #[arg(long)]
    pub escape_iters: Option<u32>,
    /// Worker threads (default: MULTATLAS_THREADS, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Tile edge in pixels (at least 8).
    #[arg(long)]
    pub tile_size: Option<usize>,
    /// Warm-start each pixel from its neighbor's orbits.
    #[arg(long, action = clap::ArgAction::Set)]
    pub continuation: Option<bool>,
    /// Required depth of the origin inside the hull.
    #[arg(long)]
    pub margin: Option<f64>,
    /// 2x2 supersampling for the image.
    #[arg(long, action = clap::ArgAction::Set)]
    pub supersample: Option<bool>,
    /// Output path prefix; `.png` and `.json` are appended.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed for the sampled parameters.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only these checks (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
    /// Restrict the summation and Vieta checks to one k.
    #[arg(long)]
    pub k: Option<usize>,
}

struct Context {
    file: FileConfig,
    config_path: Option<PathBuf>,
    out_dir: PathBuf,
    finder: OrbitFinderConfig,
    argv: Vec<String>,
}

impl Context {
    fn manifest<T: Serialize>(&self, command: &str, resolved: T) -> RunManifest<T> {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: self.argv.clone(),
            config_file: self.config_path.clone(),
            finder: self.finder.clone(),
            resolved,
        }
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{flag} (flag or config file)")))
}

fn from_file<T>(value: Option<&str>, parse: fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
    value.map(parse).transpose().map_err(CliError::Usage)
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn label(c: ComplexParam) -> String {
    format!("{}_{}", c.re, c.im)
}

/// Runs the parsed command; `argv` is echoed into manifests.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let finder = file.finder.clone().unwrap_or_default();
    finder.validate()?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("multatlas-out"));
    let ctx = Context {
        file,
        config_path: cli.config.clone(),
        out_dir,
        finder,
        argv,
    };
    match cli.command {
        Command::Orbits(a) => cmd_orbits(&ctx, a),
        Command::Yc(a) => cmd_yc(&ctx, a),
        Command::Xset(a) => cmd_xset(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
    }
}

#[derive(Debug, Serialize)]
struct OrbitsResolved {
    c: ComplexParam,
    periods: (usize, usize),
    out: Option<PathBuf>,
    allow_partial: bool,
    incomplete_periods: Vec<usize>,
}

fn opt_pair(z: Option<num_complex::Complex64>) -> (String, String) {
    match z {
        Some(z) => (format!("{:.16e}", z.re), format!("{:.16e}", z.im)),
        None => (String::new(), String::new()),
    }
}

/// `period,z_re,z_im,rho_re,rho_im,rho_prime_re,rho_prime_im,nu_re,nu_im,stability`,
/// one row per orbit; `z` is the orbit's first point.
pub fn orbits_csv(sets: &[PeriodOrbits]) -> String {
    let mut out = String::from("period,z_re,z_im,rho_re,rho_im,rho_prime_re,rho_prime_im,nu_re,nu_im,stability\n");
    for set in sets {
        for o in &set.orbits {
            let (z_re, z_im) = opt_pair(Some(o.points[0]));
            let (r_re, r_im) = opt_pair(Some(o.multiplier));
            let (d_re, d_im) = opt_pair(o.multiplier_derivative);
            let (n_re, n_im) = opt_pair(o.nu);
            let _ = writeln!(
                out,
                "{},{z_re},{z_im},{r_re},{r_im},{d_re},{d_im},{n_re},{n_im},{}",
                set.period,
                o.stability.as_str()
            );
        }
    }
    out
}

fn cmd_orbits(ctx: &Context, a: OrbitsArgs) -> Result<(), CliError> {
    let f = &ctx.file.orbits;
    let c = required(a.c.or(from_file(f.c.as_deref(), parse::complex)?), "c")?;
    let periods = required(a.period.or(from_file(f.period.as_deref(), parse::period_range)?), "period")?;
    let out = a.out.or_else(|| f.out.clone());
    let allow_partial = a.allow_partial || f.allow_partial.unwrap_or(false);

    let mut sets = Vec::new();
    for n in periods.0..=periods.1 {
        let seeds: Vec<_> = sets
            .iter()
            .filter(|s: &&PeriodOrbits| n % s.period == 0)
            .flat_map(|s| s.points())
            .collect();
        sets.push(orbits_of_period(c, n, &ctx.finder, Some(&seeds))?);
    }
    let incomplete: Vec<usize> = sets.iter().filter(|s| !s.complete).map(|s| s.period).collect();
    let csv = orbits_csv(&sets);
    match &out {
        Some(path) => std::fs::write(path, &csv).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    ctx.ensure_out_dir()?;
    let manifest_path = match &out {
        Some(path) => with_ext(path, ".manifest.json"),
        None => ctx.out_dir.join(format!("orbits_{}.manifest.json", label(c))),
    };
    ctx.manifest(
        "orbits",
        OrbitsResolved {
            c,
            periods,
            out,
            allow_partial,
            incomplete_periods: incomplete.clone(),
        },
    )
    .write(&manifest_path)?;
    if !incomplete.is_empty() {
        if allow_partial {
            log::warn!("incomplete orbit sets for periods {incomplete:?}");
        } else {
            return Err(CliError::Incomplete(incomplete));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct YcResolved {
    c: ComplexParam,
    max_period: usize,
    csv: PathBuf,
    svg: PathBuf,
    origin_signed_distance: Option<f64>,
    contains_origin: bool,
    incomplete_periods: Vec<usize>,
    nu_points_by_period: Vec<(usize, usize)>,
}

fn cmd_yc(ctx: &Context, a: YcArgs) -> Result<(), CliError> {
    let f = &ctx.file.yc;
    let c = required(a.c.or(from_file(f.c.as_deref(), parse::complex)?), "c")?;
    let max_period = required(a.max_period.or(f.max_period), "max-period")?;
    ctx.ensure_out_dir()?;
    let prefix = a
        .out_prefix
        .or_else(|| f.out_prefix.clone())
        .unwrap_or_else(|| ctx.out_dir.join(format!("yc_{}", label(c))));
    let ds = build_yc(c, max_period, &ctx.finder)?;
    let (csv, svg) = (with_ext(&prefix, ".csv"), with_ext(&prefix, ".svg"));
    emit_yc_csv(&ds, &csv)?;
    emit_yc_figure(&ds, &svg)?;
    let resolved = YcResolved {
        c,
        max_period,
        csv,
        svg,
        origin_signed_distance: ds.origin_signed_distance,
        contains_origin: ds.contains_origin(),
        incomplete_periods: ds.incomplete_periods.clone(),
        nu_points_by_period: ds.nu_points.iter().map(|(&p, v)| (p, v.len())).collect(),
    };
    ctx.manifest("yc", resolved).write(&with_ext(&prefix, ".manifest.json"))?;
    let distance = ds
        .origin_signed_distance
        .map_or_else(|| "undefined (empty hull)".to_string(), |d| format!("{d:.6e}"));
    eprintln!(
        "Y_c at {c}: {} repelling nu values, origin signed distance {distance}, incomplete periods {:?}",
        ds.all_nu_points().count(),
        ds.incomplete_periods
    );
    Ok(())
}

fn cmd_xset(ctx: &Context, a: XsetArgs) -> Result<(), CliError> {
    let f = &ctx.file.xset;
    let bounds = a.bounds.or(from_file(f.bounds.as_deref(), parse::bounds)?);
    let bounds = bounds.unwrap_or(multatlas_core::atlas::Bounds {
        re_min: -2.5,
        re_max: 1.5,
        im_min: -2.0,
        im_max: 2.0,
    });
    let (w, h) = a.res.or(from_file(f.res.as_deref(), parse::resolution)?).unwrap_or((400, 400));
    let max_period = a.max_period.or(f.max_period).unwrap_or(8);
    let escape_iters = a
        .escape_iters
        .or(f.escape_iters)
        .unwrap_or(multatlas_core::dynamics::RENDER_ESCAPE_BUDGET);
    let defaults = RenderConfig::default();
    let render = RenderConfig {
        threads: a.threads.or(f.threads).unwrap_or_else(default_threads),
        tile_size: a.tile_size.or(f.tile_size).unwrap_or(defaults.tile_size),
        continuation: a.continuation.or(f.continuation).unwrap_or(defaults.continuation),
        margin: a.margin.or(f.margin).unwrap_or(defaults.margin),
        supersample: a.supersample.or(f.supersample).unwrap_or(defaults.supersample),
    };
    let spec = GridSpec::new(bounds, w, h)?;
    ctx.ensure_out_dir()?;
    let prefix = a
        .out_prefix
        .or_else(|| f.out_prefix.clone())
        .unwrap_or_else(|| ctx.out_dir.join("xset"));
    let started = std::time::Instant::now();
    let grid = render_xset(&spec, max_period, escape_iters, &render, &ctx.finder)?;
    let palette = Palette::default();
    let png = with_ext(&prefix, ".png");
    emit_xset_image(&grid, &png, &palette)?;
    let manifest = XsetManifest::new(&grid, &palette, &render, &ctx.finder);
    ctx.manifest("xset", &manifest).write(&with_ext(&prefix, ".json"))?;
    eprintln!(
        "{}x{} render in {:.1}s: IN_M {}, X by period {:?}, NOT_DETECTED {}, incomplete {:?}",
        w,
        h,
        started.elapsed().as_secs_f64(),
        manifest.pixels_in_m,
        manifest.pixels_by_period,
        manifest.pixels_not_detected,
        manifest.incomplete_by_period
    );
    Ok(())
}

fn cmd_verify(ctx: &Context, a: VerifyArgs) -> Result<(), CliError> {
    let f = &ctx.file.verify;
    let only = if a.only.is_empty() { f.only.clone().unwrap_or_default() } else { a.only };
    let unknown = verify::unknown_checks(&only);
    if !unknown.is_empty() {
        return Err(CliError::Usage(format!(
            "unknown checks {unknown:?}; choose from {:?}",
            verify::CHECK_NAMES
        )));
    }
    let opts = verify::VerifyOptions {
        seed: a.seed.or(f.seed).unwrap_or(verify::DEFAULT_SEED),
        only,
        k: a.k.or(f.k),
    };
    if let Some(k) = opts.k {
        if k == 0 || k > ctx.finder.period_cap {
            return Err(CliError::Usage(format!("--k must lie in 1..={}", ctx.finder.period_cap)));
        }
    }
    let reports = verify::run(&opts, &ctx.finder);
    let mut text = format!("verify seed={}\n", opts.seed);
    for r in &reports {
        let _ = writeln!(text, "{r}");
    }
    print!("{text}");
    ctx.ensure_out_dir()?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        options: &'a verify::VerifyOptions,
        reports: &'a [verify::CheckReport],
    }
    ctx.manifest(
        "verify",
        Resolved {
            options: &opts,
            reports: &reports,
        },
    )
    .write(&ctx.out_dir.join(format!("verify_{}.manifest.json", opts.seed)))?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
