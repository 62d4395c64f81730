//! `select`: grid search for smoothing parameters driven by a
//! degrees-of-freedom criterion, written out as JSON.

use crate::common::parse_ladder;
use anyhow::{bail, Context, Result};
use clap::Args;
use ladd::grid::Domain;
use ladd::io::{load_dataset_csv, Rescaler};
use ladd::local_additive::LocalAdditiveOptions;
use ladd::selection::{select_params, SelectionCriterion, SelectionGrid, TraceMethod};
use serde::Serialize;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Input CSV: predictor columns then a response column, with a header.
    #[arg(long)]
    pub input: PathBuf,
    /// Criterion: aic, aicc, aict, pls, or gcv.
    #[arg(long)]
    pub criterion: String,
    /// Bandwidth candidates, `a:b:k` (geometric) or a comma list.
    #[arg(long, value_name = "A:B:K")]
    pub h_grid: String,
    /// Window half-width candidates, `a:b:k` (geometric) or a comma list.
    #[arg(long, value_name = "A:B:K")]
    pub w_grid: String,
    /// Hat-matrix trace: exact, plugin, or auto (exact for small samples).
    #[arg(long, default_value = "auto")]
    pub trace: String,
    /// Reference noise variance for aict; estimated from a pilot fit when
    /// omitted.
    #[arg(long)]
    pub sigma2_ref: Option<f64>,
    /// Interpret each bandwidth candidate as a multiplier on w.
    #[arg(long)]
    pub h_relative: bool,
    /// Map each predictor's observed range to [-1, 1] before fitting.
    #[arg(long)]
    pub rescale: bool,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SelectionDocument<'a> {
    input: String,
    n: usize,
    d: usize,
    kernel: String,
    trace: &'a str,
    #[serde(flatten)]
    result: &'a ladd::selection::SelectionResult,
}

pub fn run(args: &SelectArgs, opts: LocalAdditiveOptions) -> Result<()> {
    let criterion = SelectionCriterion::from_str(&args.criterion)?;
    let trace = match args.trace.as_str() {
        "exact" => TraceMethod::Exact,
        "plugin" => TraceMethod::Plugin,
        "auto" => TraceMethod::Auto,
        other => bail!("unknown trace method '{other}' (expected exact, plugin, or auto)"),
    };
    let (raw, _headers) = load_dataset_csv(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let d = raw.d();
    let domain = Domain::unit_cube(d);
    let data = if args.rescale {
        Rescaler::fit(&raw).apply(&raw)?
    } else {
        for i in 0..raw.n() {
            if !domain.contains(raw.row(i)) {
                bail!(
                    "row {} lies outside [-1, 1]^{d}; pass --rescale to map the \
                     data range onto the unit cube",
                    i + 2
                );
            }
        }
        raw
    };

    let mut grid = SelectionGrid::new(
        parse_ladder(&args.h_grid, "--h-grid")?,
        parse_ladder(&args.w_grid, "--w-grid")?,
    )?;
    grid.h_relative = args.h_relative;

    let result = select_params(&data, &grid, criterion, trace, &domain, &opts, args.sigma2_ref)?;
    let doc = SelectionDocument {
        input: args.input.display().to_string(),
        n: data.n(),
        d,
        kernel: opts.backfit.kernel.to_string(),
        trace: &args.trace,
        result: &result,
    };
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    serde_json::to_writer_pretty(file, &doc)?;
    println!(
        "select: {} best h = {:.4}, w = {:.4}, value = {:.6e}, sigma2 = {:.6e}, trace = {:.2} -> {}",
        args.criterion,
        result.best_h,
        result.best_w,
        result.best_value,
        result.best_sigma2,
        result.best_trace,
        args.out.display()
    );
    Ok(())
}
