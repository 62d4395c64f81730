//! Unconditional MASE protocol for the high-dimensional study: design and
//! noise are redrawn every run, estimators are evaluated at a random subset
//! of design points, and squared errors are averaged over points and runs.
//!
//! The windowed estimator's bandwidth is parameterized as `h = c * w`, so
//! the within-window smoothing stays comparable across window sizes; for
//! each window size a GCV surrogate picks `c` per run, mirroring a
//! pipeline whose additive backend tunes itself internally.

use super::catalog::RegressionFunction;
use super::design::{gen_design, DesignKind, DesignSpec};
use super::report::{CellResult, EstimatorReport, GcvTrajectory, SimulationReport};
use crate::backfit::{BackfitDesign, Variant};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::kernels::KernelSpec;
use crate::local_additive::{
    fit_local_additive, window_extract, LocalAdditiveOptions, SmoothingParams,
};
use crate::local_linear::fit_local_linear;
use crate::selection::plugin_axis_term;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Unconditional scenario description.
#[derive(Debug, Clone)]
pub struct MaseScenario {
    pub name: String,
    pub function: RegressionFunction,
    pub sigma: f64,
    pub n: usize,
    pub runs: usize,
    pub eval_points: usize,
    pub seed: u64,
    /// Window half-widths for the windowed estimator.
    pub w_grid: Vec<f64>,
    /// Bandwidth multipliers: actual bandwidth is `c * w`.
    pub c_grid: Vec<f64>,
    /// Bandwidths for the local linear baseline.
    pub ll_h: Vec<f64>,
}

impl MaseScenario {
    /// The paper-scale study: 2000 observations in 10 dimensions,
    /// sigma = 0.2, 20 runs, 50 evaluation points per run.
    pub fn d10(alpha: f64, seed: u64) -> Self {
        MaseScenario {
            name: format!("d10:alpha={alpha}"),
            function: RegressionFunction::D10Interact { alpha },
            sigma: 0.2,
            n: 2000,
            runs: 20,
            eval_points: 50,
            seed,
            w_grid: vec![1.0, 1.2, 1.5, 2.0],
            c_grid: vec![0.3, 0.45, 0.6],
            ll_h: vec![1.0, 1.2, 1.5, 2.0],
        }
    }
}

/// splitmix64; used to derive independent sub-seeds per run.
fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Accumulated squared error and coverage for one cell.
#[derive(Clone, Default)]
struct SeAcc {
    se_sum: f64,
    covered: usize,
    attempted: usize,
}

impl SeAcc {
    fn add(&mut self, se: Option<f64>) {
        self.attempted += 1;
        if let Some(v) = se {
            self.se_sum += v;
            self.covered += 1;
        }
    }
}

struct RunOutcome {
    ll: Vec<SeAcc>,
    /// Indexed `[w][c]`.
    ladd: Vec<Vec<SeAcc>>,
    /// Per window: (chosen c, mean squared error at the chosen c).
    gcv: Vec<Option<(f64, f64)>>,
}

/// GCV surrogate for a windowed cell, computed from the evaluation subset:
/// the residual variance is averaged over the subset and the trace is
/// `n * mean(plug-in hat diagonal at the subset points)`.
fn gcv_surrogate(
    residuals2: &[f64],
    diag: &[f64],
    n: usize,
) -> Option<f64> {
    if residuals2.is_empty() {
        return None;
    }
    let sigma2 = residuals2.iter().sum::<f64>() / residuals2.len() as f64;
    let trace = n as f64 * diag.iter().sum::<f64>() / diag.len() as f64;
    let denom = 1.0 - trace / n as f64;
    if denom <= 0.0 {
        return Some(f64::INFINITY);
    }
    Some(sigma2 / (denom * denom))
}

/// Plug-in hat diagonal at a window center (same approximation as the
/// selection module's plug-in trace).
fn plugin_diag_at(
    data: &Dataset,
    x0: &[f64],
    params: &SmoothingParams,
    domain: &Domain,
    kernel: KernelSpec,
    variant: Variant,
    n_min: usize,
) -> Option<f64> {
    let sample = window_extract(data, x0, &params.w, domain, n_min).ok()?;
    let ht = params.h_tilde();
    let d = data.d();
    let mut acc = 0.0;
    for j in 0..d {
        acc += plugin_axis_term(kernel, variant, ht[j], sample.lo[j], sample.hi[j]);
    }
    Some((acc - (d as f64 - 1.0)).max(1e-12) / sample.n() as f64)
}

fn one_run(
    sc: &MaseScenario,
    run: usize,
    opts: &LocalAdditiveOptions,
) -> Result<RunOutcome> {
    let d = sc.function.dim();
    let domain = Domain::unit_cube(d);
    let design = DesignSpec::new(
        DesignKind::RandomUniform,
        sc.n,
        d,
        derive_seed(sc.seed, 2 * run as u64),
    );
    let xs = gen_design(&design)?;
    let truth: Vec<f64> = xs
        .chunks(d)
        .map(|row| sc.function.eval(row))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(sc.seed, 2 * run as u64 + 1));
    let y: Vec<f64> = truth
        .iter()
        .map(|r| {
            r + sc.sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        })
        .collect();
    let data = Dataset::new(xs, y, d)?;
    let eval_idx = rand::seq::index::sample(&mut rng, sc.n, sc.eval_points.min(sc.n)).into_vec();
    let n_min = opts.resolve_n_min(d);
    let kernel = opts.backfit.kernel;
    let variant = opts.backfit.variant;
    let width = domain.hi[0] - domain.lo[0];

    // Local linear baseline.
    let mut ll = vec![SeAcc::default(); sc.ll_h.len()];
    for (hi, &h) in sc.ll_h.iter().enumerate() {
        for &i in &eval_idx {
            let x0: Vec<f64> = data.row(i).to_vec();
            let se = fit_local_linear(&data, &x0, &vec![h; d], kernel, &domain)
                .ok()
                .map(|f| (f.value - truth[i]) * (f.value - truth[i]));
            ll[hi].add(se);
        }
    }

    // Windowed additive estimator over (w, c) cells. The full window
    // (w = domain width) is a global additive fit with bandwidth c * w:
    // one backfit per c serves all evaluation points.
    let mut ladd = vec![vec![SeAcc::default(); sc.c_grid.len()]; sc.w_grid.len()];
    let mut gcv = vec![None; sc.w_grid.len()];
    for (wi, &w) in sc.w_grid.iter().enumerate() {
        let full_window = w >= width - 1e-12;
        // fitted[ci][k]: prediction at eval point k, if it succeeded.
        let mut fitted: Vec<Vec<Option<f64>>> =
            vec![vec![None; eval_idx.len()]; sc.c_grid.len()];
        if full_window {
            for (ci, &c) in sc.c_grid.iter().enumerate() {
                let h = c * w;
                if let Ok(design) =
                    BackfitDesign::from_dataset(&data, &vec![h; d], &domain, &opts.backfit)
                {
                    if let Ok(fit) = design.fit(data.y()) {
                        for (k, &i) in eval_idx.iter().enumerate() {
                            fitted[ci][k] = fit.predict(data.row(i)).ok();
                        }
                    }
                }
            }
        } else {
            for (ci, &c) in sc.c_grid.iter().enumerate() {
                let params = SmoothingParams::isotropic(c * w, w, d)?;
                for (k, &i) in eval_idx.iter().enumerate() {
                    let x0: Vec<f64> = data.row(i).to_vec();
                    fitted[ci][k] = fit_local_additive(&data, &x0, &params, &domain, opts)
                        .ok()
                        .map(|f| f.value);
                }
            }
        }
        // Squared errors against the truth.
        for (ci, row) in fitted.iter().enumerate() {
            for (k, &i) in eval_idx.iter().enumerate() {
                ladd[wi][ci].add(row[k].map(|v| (v - truth[i]) * (v - truth[i])));
            }
        }
        // GCV over c from the same fitted values.
        let mut best: Option<(f64, f64, f64)> = None; // (gcv, c, mse)
        for (ci, &c) in sc.c_grid.iter().enumerate() {
            let params = SmoothingParams::isotropic(c * w, w, d)?;
            let mut res2 = Vec::new();
            let mut diag = Vec::new();
            let mut se = Vec::new();
            for (k, &i) in eval_idx.iter().enumerate() {
                let Some(v) = fitted[ci][k] else { continue };
                let x0: Vec<f64> = data.row(i).to_vec();
                let Some(dg) =
                    plugin_diag_at(&data, &x0, &params, &domain, kernel, variant, n_min)
                else {
                    continue;
                };
                res2.push((data.y()[i] - v) * (data.y()[i] - v));
                diag.push(dg);
                se.push((v - truth[i]) * (v - truth[i]));
            }
            // Require the same coverage bar as cells before trusting GCV.
            if (se.len() as f64) < 0.95 * eval_idx.len() as f64 {
                continue;
            }
            if let Some(g) = gcv_surrogate(&res2, &diag, sc.n) {
                let mse = se.iter().sum::<f64>() / se.len() as f64;
                match best {
                    None => best = Some((g, c, mse)),
                    Some((bg, _, _)) if g < bg => best = Some((g, c, mse)),
                    _ => {}
                }
            }
        }
        gcv[wi] = best.map(|(_, c, mse)| (c, mse));
    }

    Ok(RunOutcome { ll, ladd, gcv })
}

/// Runs the unconditional protocol and aggregates per-cell MASE, plus the
/// GCV-chosen bandwidth trajectory per window size.
pub fn run_mase_unconditional(
    sc: &MaseScenario,
    opts: &LocalAdditiveOptions,
) -> Result<SimulationReport> {
    let start = std::time::Instant::now();
    if sc.runs == 0 || sc.eval_points == 0 {
        return Err(Error::InvalidInput("runs and eval_points must be positive".into()));
    }
    let d = sc.function.dim();
    let outcomes: Vec<Result<RunOutcome>> = (0..sc.runs)
        .into_par_iter()
        .map(|run| one_run(sc, run, opts))
        .collect();
    let mut runs = Vec::with_capacity(sc.runs);
    for o in outcomes {
        runs.push(o?);
    }

    let reduce = |pick: &dyn Fn(&RunOutcome) -> &SeAcc| -> (f64, f64) {
        let mut se = 0.0;
        let mut covered = 0usize;
        let mut attempted = 0usize;
        for r in &runs {
            let acc = pick(r);
            se += acc.se_sum;
            covered += acc.covered;
            attempted += acc.attempted;
        }
        let coverage = covered as f64 / attempted.max(1) as f64;
        let mase = if covered > 0 { se / covered as f64 } else { f64::NAN };
        (mase, coverage)
    };

    let mut ll_cells = Vec::new();
    for (hi, &h) in sc.ll_h.iter().enumerate() {
        let (mase, coverage) = reduce(&|r: &RunOutcome| &r.ll[hi]);
        let valid = coverage >= super::mise::COVERAGE_THRESHOLD;
        ll_cells.push(CellResult {
            h,
            w: None,
            mise: if valid { mase } else { f64::NAN },
            bias2: None,
            variance: None,
            coverage,
            valid,
        });
    }
    let mut ladd_cells = Vec::new();
    for (wi, &w) in sc.w_grid.iter().enumerate() {
        for (ci, &c) in sc.c_grid.iter().enumerate() {
            let (mase, coverage) = reduce(&|r: &RunOutcome| &r.ladd[wi][ci]);
            let valid = coverage >= super::mise::COVERAGE_THRESHOLD;
            ladd_cells.push(CellResult {
                h: c * w,
                w: Some(w),
                mise: if valid { mase } else { f64::NAN },
                bias2: None,
                variance: None,
                coverage,
                valid,
            });
        }
    }
    // The full-window rows double as the global additive estimator.
    let width = 2.0;
    let add_cells: Vec<CellResult> = ladd_cells
        .iter()
        .filter(|c| c.w == Some(width))
        .map(|c| CellResult {
            h: c.h,
            w: None,
            ..c.clone()
        })
        .collect();

    let pick_best = |cells: &[CellResult]| {
        cells
            .iter()
            .filter(|c| c.valid)
            .fold(None::<&CellResult>, |acc, c| match acc {
                None => Some(c),
                Some(b) if c.mise < b.mise => Some(c),
                other => other,
            })
            .cloned()
    };

    let mut gcv_out = Vec::new();
    for (wi, &w) in sc.w_grid.iter().enumerate() {
        let mut chosen = Vec::new();
        let mut se = 0.0;
        let mut m = 0usize;
        for r in &runs {
            if let Some((c, mse)) = r.gcv[wi] {
                chosen.push(c);
                se += mse;
                m += 1;
            }
        }
        if m > 0 {
            gcv_out.push(GcvTrajectory {
                w,
                chosen_c: chosen,
                mase: se / m as f64,
            });
        }
    }

    let estimators = vec![
        EstimatorReport {
            estimator: "ll".into(),
            best: pick_best(&ll_cells),
            cells: ll_cells,
        },
        EstimatorReport {
            estimator: "ladd".into(),
            best: pick_best(&ladd_cells),
            cells: ladd_cells,
        },
        EstimatorReport {
            estimator: "add".into(),
            best: pick_best(&add_cells),
            cells: add_cells,
        },
    ];

    Ok(SimulationReport {
        scenario: sc.name.clone(),
        metric: "mase".into(),
        sigma: sc.sigma,
        n: sc.n,
        d,
        replicates: sc.runs,
        seed: sc.seed,
        runtime_seconds: start.elapsed().as_secs_f64(),
        estimators,
        gcv: gcv_out,
    })
}
