//! Shared helpers: config file handling, option assembly, and parsing of
//! numeric lists and geometric ladders from the command line.

use anyhow::{bail, Context, Result};
use ladd::backfit::Variant;
use ladd::local_additive::LocalAdditiveOptions;
use ladd::KernelSpec;
use serde::Deserialize;
use std::path::Path;
use std::str::FromStr;

/// Optional TOML configuration. Command-line flags take precedence over
/// file values; file values take precedence over built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Kernel name: epanechnikov, quartic, or tgauss.
    pub kernel: Option<String>,
    /// Backfitting grid resolution per axis.
    pub grid_points: Option<usize>,
    /// Backfitting convergence tolerance.
    pub tol: Option<f64>,
    /// Backfitting iteration cap.
    pub max_iter: Option<usize>,
    /// Minimum observations per window before enlargement kicks in.
    pub n_min: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Builds estimator options from the global kernel flag and config file.
pub fn build_options(kernel_flag: Option<&str>, config: &FileConfig) -> Result<LocalAdditiveOptions> {
    let mut opts = LocalAdditiveOptions::default();
    let kernel_name = kernel_flag.or(config.kernel.as_deref());
    if let Some(name) = kernel_name {
        opts.backfit.kernel = KernelSpec::from_str(name)?;
    }
    if let Some(g) = config.grid_points {
        if g < 5 {
            bail!("grid_points must be at least 5, got {g}");
        }
        opts.backfit.grid_points = g;
    }
    if let Some(t) = config.tol {
        if !(t > 0.0) {
            bail!("tol must be positive, got {t}");
        }
        opts.backfit.tol = t;
    }
    if let Some(m) = config.max_iter {
        if m == 0 {
            bail!("max_iter must be positive");
        }
        opts.backfit.max_iter = m;
    }
    if let Some(nm) = config.n_min {
        opts.n_min = Some(nm);
    }
    Ok(opts)
}

pub fn parse_backend(name: &str) -> Result<Variant> {
    match name {
        "sbe-ll" => Ok(Variant::LocalLinear),
        "sbe-lc" => Ok(Variant::LocalConstant),
        other => bail!("unknown backend '{other}' (expected sbe-ll or sbe-lc)"),
    }
}

/// Parses a comma-separated list of floats.
pub fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("{what}: bad number '{tok}'"))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        bail!("{what}: empty list");
    }
    Ok(vals)
}

/// Parses a per-coordinate list: a scalar broadcasts to `d` entries, and a
/// `d`-element list is taken as-is.
pub fn parse_per_axis(s: &str, d: usize, what: &str) -> Result<Vec<f64>> {
    let vals = parse_floats(s, what)?;
    match vals.len() {
        1 => Ok(vec![vals[0]; d]),
        len if len == d => Ok(vals),
        len => bail!("{what}: expected 1 or {d} values, got {len}"),
    }
}

/// Parses a candidate ladder. `a:b:k` expands to `k` geometrically spaced
/// values from `a` to `b`; a comma-separated list is passed through.
pub fn parse_ladder(s: &str, what: &str) -> Result<Vec<f64>> {
    if !s.contains(':') {
        return parse_floats(s, what);
    }
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("{what}: expected a:b:k, got '{s}'");
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .with_context(|| format!("{what}: bad start '{}'", parts[0]))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .with_context(|| format!("{what}: bad end '{}'", parts[1]))?;
    let k: usize = parts[2]
        .trim()
        .parse()
        .with_context(|| format!("{what}: bad count '{}'", parts[2]))?;
    if !(a > 0.0) || !(b > 0.0) {
        bail!("{what}: ladder endpoints must be positive");
    }
    if k == 0 {
        bail!("{what}: ladder needs at least one value");
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    let ratio = (b / a).powf(1.0 / (k - 1) as f64);
    Ok((0..k).map(|i| a * ratio.powi(i as i32)).collect())
}
