//! `simulate`: run a named benchmark scenario, write the report as JSON and
//! a long-format CSV, and print a summary table.

use anyhow::{Context, Result};
use clap::Args;
use ladd::bench::{build_studies, run_mase_unconditional, run_mise, Study, StudyOverrides};
use ladd::bench::SimulationReport;
use ladd::local_additive::LocalAdditiveOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named scenario: table1-additive-peaks, table1-superposed,
    /// table1-periodic, fig3-sweep, or d10.
    #[arg(long)]
    pub scenario: String,
    /// Noise standard deviation override.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Sample size override.
    #[arg(long)]
    pub n: Option<usize>,
    /// Replicate (or run) count override.
    #[arg(long = "R", visible_alias = "replicates", value_name = "R")]
    pub replicates: Option<usize>,
    /// Design / noise seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interaction strength override (fig3-sweep runs a single strength,
    /// d10 switches from its default).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output JSON (array of reports).
    #[arg(long)]
    pub out: PathBuf,
    /// Long-format CSV; defaults to the JSON path with a .csv extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn write_long_csv(path: &Path, reports: &[SimulationReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["scenario", "estimator", "h", "w", "mise", "bias2", "var"])?;
    let field = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for rep in reports {
        for est in &rep.estimators {
            for cell in &est.cells {
                w.write_record([
                    rep.scenario.clone(),
                    est.estimator.clone(),
                    format!("{:?}", cell.h),
                    field(cell.w),
                    if cell.mise.is_finite() {
                        format!("{:?}", cell.mise)
                    } else {
                        String::new()
                    },
                    field(cell.bias2),
                    field(cell.variance),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn print_summary(rep: &SimulationReport) {
    println!(
        "scenario {} ({}, sigma = {}, n = {}, d = {}, replicates = {}, seed = {}, {:.1}s)",
        rep.scenario,
        rep.metric,
        rep.sigma,
        rep.n,
        rep.d,
        rep.replicates,
        rep.seed,
        rep.runtime_seconds
    );
    let ladd_best = rep
        .estimator("ladd")
        .and_then(|e| e.best.as_ref())
        .map(|b| b.mise);
    println!(
        "  {:<6} {:>14} {:>20} {:>10}",
        "est",
        format!("best {} x1000", rep.metric),
        "at (h, w)",
        "vs ladd"
    );
    for est in &rep.estimators {
        match &est.best {
            Some(best) => {
                let at = match best.w {
                    Some(w) => format!("({:.4}, {:.4})", best.h, w),
                    None => format!("({:.4}, -)", best.h),
                };
                let ratio = match ladd_best {
                    Some(l) if l > 0.0 => format!("{:>9.1}%", 100.0 * best.mise / l),
                    _ => "-".into(),
                };
                println!(
                    "  {:<6} {:>14.4} {:>20} {:>10}",
                    est.estimator,
                    1000.0 * best.mise,
                    at,
                    ratio
                );
            }
            None => println!("  {:<6} {:>14}", est.estimator, "no valid cell"),
        }
    }
    for traj in &rep.gcv {
        let mean_c = if traj.chosen_c.is_empty() {
            f64::NAN
        } else {
            traj.chosen_c.iter().sum::<f64>() / traj.chosen_c.len() as f64
        };
        println!(
            "  gcv: w = {:.2}, mean chosen c = {:.3}, {} x1000 at choice = {:.4}",
            traj.w,
            mean_c,
            rep.metric,
            1000.0 * traj.mase
        );
    }
}

pub fn run(args: &SimulateArgs, opts: LocalAdditiveOptions) -> Result<()> {
    let overrides = StudyOverrides {
        sigma: args.sigma,
        n: args.n,
        replicates: args.replicates,
        alpha: args.alpha,
        seed: args.seed,
    };
    let studies = build_studies(&args.scenario, &overrides)?;
    let mut reports = Vec::with_capacity(studies.len());
    for study in &studies {
        let report = match study {
            Study::Mise { scenario, estimators } => run_mise(scenario, estimators, &opts)?,
            Study::Mase(sc) => run_mase_unconditional(sc, &opts)?,
        };
        print_summary(&report);
        reports.push(report);
    }

    let mut file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    serde_json::to_writer_pretty(&mut file, &reports)?;
    file.write_all(b"\n")?;

    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| args.out.with_extension("csv"));
    write_long_csv(&csv_path, &reports)?;
    println!(
        "simulate: {} report(s) -> {} and {}",
        reports.len(),
        args.out.display(),
        csv_path.display()
    );
    Ok(())
}
