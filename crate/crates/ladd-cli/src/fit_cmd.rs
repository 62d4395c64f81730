//! `fit`: evaluate the windowed additive estimator at grid or file-supplied
//! points and write a predictions CSV.

use crate::common::{parse_backend, parse_per_axis};
use anyhow::{bail, Context, Result};
use clap::Args;
use ladd::grid::Domain;
use ladd::io::{load_dataset_csv, save_predictions_csv, PredictionRow, Rescaler};
use ladd::local_additive::{fit_local_additive, LocalAdditiveOptions, SmoothingParams};
use ladd::EvalGrid;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV: predictor columns then a response column, with a header.
    #[arg(long)]
    pub input: PathBuf,
    /// Bandwidths: one value (broadcast) or one per predictor.
    #[arg(long, value_name = "H[,H2,...]")]
    pub h: String,
    /// Window half-widths: one value (broadcast) or one per predictor.
    #[arg(long, value_name = "W[,W2,...]")]
    pub w: String,
    /// Where to evaluate: "grid" for a regular grid over the domain, or a
    /// CSV file of points (predictor columns with a header).
    #[arg(long, default_value = "grid")]
    pub outputs: String,
    /// Backend for the within-window additive fit.
    #[arg(long, default_value = "sbe-ll", value_name = "sbe-ll|sbe-lc")]
    pub backend: String,
    /// Points per axis when `--outputs grid`.
    #[arg(long, default_value_t = 21)]
    pub grid_points: usize,
    /// Map each predictor's observed range to [-1, 1] before fitting.
    /// Output coordinates stay in the original units.
    #[arg(long)]
    pub rescale: bool,
    /// Output predictions CSV.
    #[arg(long)]
    pub out: PathBuf,
}

/// Full tensor grid over the domain, row-major in the first axis fastest.
fn tensor_grid(domain: &Domain, per_axis: usize) -> Result<Vec<Vec<f64>>> {
    let d = domain.dim();
    let grid = EvalGrid::new(domain.clone(), per_axis)?;
    let total = per_axis.pow(d as u32);
    let mut pts = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        pts.push((0..d).map(|j| grid.axis(j)[idx[j]]).collect());
        for j in 0..d {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(pts)
}

fn load_points(path: &PathBuf, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("loading evaluation points {}", path.display()))?;
    let ncol = reader.headers()?.len();
    if ncol < d {
        bail!("evaluation points file has {ncol} columns; need the {d} predictor columns first");
    }
    let mut pts = Vec::new();
    for (ri, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            let v: f64 = rec[j]
                .trim()
                .parse()
                .with_context(|| format!("evaluation point line {}: '{}'", ri + 2, &rec[j]))?;
            row.push(v);
        }
        pts.push(row);
    }
    if pts.is_empty() {
        bail!("no evaluation points in {}", path.display());
    }
    Ok(pts)
}

pub fn run(args: &FitArgs, mut opts: LocalAdditiveOptions) -> Result<()> {
    opts.backfit.variant = parse_backend(&args.backend)?;
    let (raw, headers) = load_dataset_csv(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let d = raw.d();
    let coord_names: Vec<String> = headers[..d].to_vec();
    let h = parse_per_axis(&args.h, d, "--h")?;
    let w = parse_per_axis(&args.w, d, "--w")?;
    let params = SmoothingParams::new(h, w)?;

    let domain = Domain::unit_cube(d);
    let (data, rescaler) = if args.rescale {
        let r = Rescaler::fit(&raw);
        (r.apply(&raw)?, Some(r))
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
        (raw, None)
    };

    let on_grid = args.outputs == "grid";
    let eval: Vec<Vec<f64>> = if on_grid {
        tensor_grid(&domain, args.grid_points)?
    } else {
        load_points(&PathBuf::from(&args.outputs), d)?
    };

    let mut rows = Vec::with_capacity(eval.len());
    let mut ok = 0usize;
    for point in eval {
        // Grid points are generated in domain units; file points arrive in
        // original units and are mapped down. Output keeps original units.
        let (x_out, u) = match (&rescaler, on_grid) {
            (Some(r), true) => {
                let x: Vec<f64> = point
                    .iter()
                    .zip(r.center.iter().zip(&r.scale))
                    .map(|(v, (c, s))| c + v * s)
                    .collect();
                (x, point)
            }
            (Some(r), false) => {
                let u = r.apply_point(&point);
                (point, u)
            }
            (None, _) => (point.clone(), point),
        };
        match fit_local_additive(&data, &u, &params, &domain, &opts) {
            Ok(fit) => {
                ok += 1;
                rows.push(PredictionRow {
                    x: x_out,
                    estimate: Some(fit.value),
                    status: "ok".into(),
                });
            }
            Err(e) => rows.push(PredictionRow {
                x: x_out,
                estimate: None,
                status: e.to_string(),
            }),
        }
    }
    save_predictions_csv(&args.out, &coord_names, &rows)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("fit: {ok}/{} points -> {}", rows.len(), args.out.display());
    Ok(())
}
