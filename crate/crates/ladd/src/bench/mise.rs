//! Conditional MISE protocol: one fixed design, replicated noise.
//!
//! Every estimator here is linear in the responses, so each replicate fit
//! at an output point is the inner product of precomputed prediction
//! weights with `truth + noise`. The harness computes the weights once per
//! (cell, output point) and sweeps the noise replicates through them, which
//! is exact and far cheaper than refitting per replicate.

use super::catalog::RegressionFunction;
use super::design::{gen_design, DesignSpec};
use super::report::{CellResult, EstimatorReport, SimulationReport};
use crate::backfit::BackfitDesign;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Domain, EvalGrid};
use crate::local_additive::{prediction_weights, LocalAdditiveOptions, SmoothingParams};
use crate::local_linear::local_linear_weights;
use crate::sums::csum;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Minimum fraction of output points an estimator must cover for a
/// parameter cell to count.
pub const COVERAGE_THRESHOLD: f64 = 0.95;

/// Unit-scale residual distribution; scaled by the scenario's sigma.
#[derive(Clone, Default)]
pub enum NoiseModel {
    #[default]
    Gaussian,
    /// Custom unit-scale residual sampler.
    Custom(Arc<dyn Fn(&mut ChaCha12Rng) -> f64 + Send + Sync>),
}

impl NoiseModel {
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            NoiseModel::Gaussian => {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            }
            NoiseModel::Custom(f) => f(rng),
        }
    }
}

impl std::fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseModel::Gaussian => f.write_str("Gaussian"),
            NoiseModel::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// The three estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Full-dimensional local linear smoother ("ll").
    LocalLinear,
    /// Windowed additive estimator ("ladd").
    WindowedAdditive,
    /// Global additive fit ("add").
    Additive,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::LocalLinear => "ll",
            EstimatorKind::WindowedAdditive => "ladd",
            EstimatorKind::Additive => "add",
        }
    }
}

/// Parameter grid for one estimator. `w` is only read by the windowed
/// estimator.
#[derive(Debug, Clone)]
pub struct EstimatorGrid {
    pub kind: EstimatorKind,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
}

/// A conditional-MISE scenario.
#[derive(Debug, Clone)]
pub struct MiseScenario {
    pub name: String,
    pub function: RegressionFunction,
    pub design: DesignSpec,
    pub sigma: f64,
    pub replicates: usize,
    /// Output grid points per axis.
    pub grid_points: usize,
    pub seed: u64,
    pub noise: NoiseModel,
}

/// Geometric bandwidth ladder from 0.123 to 1.0 (15 values).
pub fn default_h_ladder() -> Vec<f64> {
    let lo: f64 = 0.123;
    let steps: usize = 14;
    let ratio = (1.0 / lo).powf(1.0 / steps as f64);
    let mut v: Vec<f64> = (0..=steps).map(|k| lo * ratio.powi(k as i32)).collect();
    v[steps] = 1.0;
    v
}

/// Window ladder: the bandwidth ladder restricted to values >= 0.22.
pub fn default_w_ladder() -> Vec<f64> {
    default_h_ladder().into_iter().filter(|&v| v >= 0.22).collect()
}

/// All `(h, w)` cells of a grid in scan order: `w` ascending outer, `h`
/// ascending inner; estimators without a window get `w = None`.
fn cells_of(grid: &EstimatorGrid) -> Vec<(f64, Option<f64>)> {
    match grid.kind {
        EstimatorKind::WindowedAdditive => grid
            .w
            .iter()
            .flat_map(|&w| grid.h.iter().map(move |&h| (h, Some(w))))
            .collect(),
        _ => grid.h.iter().map(|&h| (h, None)).collect(),
    }
}

/// Sparse prediction weights at one output point.
type PointWeights = Option<(Vec<usize>, Vec<f64>)>;

fn weights_for_cell(
    kind: EstimatorKind,
    data: &Dataset,
    points: &[Vec<f64>],
    h: f64,
    w: Option<f64>,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
) -> Vec<PointWeights> {
    let d = data.d();
    let all: Vec<usize> = (0..data.n()).collect();
    match kind {
        EstimatorKind::LocalLinear => points
            .iter()
            .map(|x| {
                local_linear_weights(data, x, &vec![h; d], opts.backfit.kernel, domain)
                    .ok()
                    .map(|wts| (all.clone(), wts))
            })
            .collect(),
        EstimatorKind::Additive => {
            let design = BackfitDesign::from_dataset(data, &vec![h; d], domain, &opts.backfit);
            match design {
                Ok(design) => points
                    .iter()
                    .map(|x| {
                        design
                            .prediction_weights(x)
                            .ok()
                            .map(|wts| (all.clone(), wts))
                    })
                    .collect(),
                Err(_) => vec![None; points.len()],
            }
        }
        EstimatorKind::WindowedAdditive => {
            let w = w.expect("windowed cells carry w");
            let params = match SmoothingParams::isotropic(h, w, d) {
                Ok(p) => p,
                Err(_) => return vec![None; points.len()],
            };
            points
                .iter()
                .map(|x| prediction_weights(data, x, &params, domain, opts).ok())
                .collect()
        }
    }
}

struct CellStats {
    bias2: f64,
    variance: f64,
    coverage: f64,
}

/// Bias/variance integrals for one cell from per-point weights.
fn cell_stats(
    weights: &[PointWeights],
    truth_design: &[f64],
    truth_grid: &[f64],
    trapw: &[f64],
    volume: f64,
    noise: &[Vec<f64>],
) -> CellStats {
    let r = noise.len() as f64;
    let mut bias_int = 0.0;
    let mut var_int = 0.0;
    let mut covered_mass = 0.0;
    let mut covered = 0usize;
    let mut a = vec![0.0; noise.len()];
    for (g, pw) in weights.iter().enumerate() {
        let Some((idx, wts)) = pw else { continue };
        covered += 1;
        covered_mass += trapw[g];
        let s = csum(idx.iter().zip(wts).map(|(&i, w)| w * truth_design[i]));
        for (rho, eps) in noise.iter().enumerate() {
            let mut acc = 0.0;
            for (k, &i) in idx.iter().enumerate() {
                acc += wts[k] * eps[i];
            }
            a[rho] = acc;
        }
        let abar = a.iter().sum::<f64>() / r;
        let bias = s + abar - truth_grid[g];
        bias_int += trapw[g] * bias * bias;
        var_int += trapw[g] * a.iter().map(|v| (v - abar) * (v - abar)).sum::<f64>() / r;
    }
    let coverage = covered as f64 / weights.len() as f64;
    if covered_mass > 0.0 {
        let scale = volume / covered_mass;
        bias_int *= scale;
        var_int *= scale;
    }
    CellStats {
        bias2: bias_int,
        variance: var_int,
        coverage,
    }
}

/// Runs the conditional protocol: fixes the design, replicates the noise,
/// and reports the MISE surface with its exact bias^2 + variance split.
pub fn run_mise(
    scenario: &MiseScenario,
    estimators: &[EstimatorGrid],
    opts: &LocalAdditiveOptions,
) -> Result<SimulationReport> {
    let start = std::time::Instant::now();
    let d = scenario.function.dim();
    if scenario.design.d != d {
        return Err(Error::InvalidInput(format!(
            "design dimension {} does not match function dimension {d}",
            scenario.design.d
        )));
    }
    if scenario.replicates < 2 {
        return Err(Error::InvalidInput("need at least two noise replicates".into()));
    }
    if scenario.grid_points.pow(d as u32) > 200_000 {
        return Err(Error::TooLarge {
            n: scenario.grid_points.pow(d as u32),
            limit: 200_000,
        });
    }
    let domain = Domain::unit_cube(d);
    let xs = gen_design(&scenario.design)?;
    let n = scenario.design.n;
    let truth_design: Vec<f64> = xs
        .chunks(d)
        .map(|row| scenario.function.eval(row))
        .collect::<Result<_>>()?;
    let data = Dataset::new(xs, truth_design.clone(), d)?;

    let grid = EvalGrid::new(domain.clone(), scenario.grid_points)?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut trapw: Vec<f64> = Vec::new();
    let g = scenario.grid_points;
    let total = g.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = Vec::with_capacity(d);
        let mut tw = 1.0;
        for j in 0..d {
            let k = rem % g;
            rem /= g;
            x.push(grid.axis(j)[k]);
            tw *= grid.trap_weights(j)[k];
        }
        points.push(x);
        trapw.push(tw);
    }
    let volume: f64 = (0..d).map(|j| domain.hi[j] - domain.lo[j]).product();
    let truth_grid: Vec<f64> = points
        .iter()
        .map(|x| scenario.function.eval(x))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1);
    let noise: Vec<Vec<f64>> = (0..scenario.replicates)
        .map(|_| {
            (0..n)
                .map(|_| scenario.sigma * scenario.noise.sample(&mut rng))
                .collect()
        })
        .collect();

    let mut reports = Vec::new();
    for grid_spec in estimators {
        let cells = cells_of(grid_spec);
        let results: Vec<CellResult> = cells
            .par_iter()
            .map(|&(h, w)| {
                let weights =
                    weights_for_cell(grid_spec.kind, &data, &points, h, w, &domain, opts);
                let stats =
                    cell_stats(&weights, &truth_design, &truth_grid, &trapw, volume, &noise);
                let valid = stats.coverage >= COVERAGE_THRESHOLD;
                CellResult {
                    h,
                    w,
                    mise: if valid {
                        stats.bias2 + stats.variance
                    } else {
                        f64::NAN
                    },
                    bias2: valid.then_some(stats.bias2),
                    variance: valid.then_some(stats.variance),
                    coverage: stats.coverage,
                    valid,
                }
            })
            .collect();
        let best = results
            .iter()
            .filter(|c| c.valid)
            .fold(None::<&CellResult>, |acc, c| match acc {
                None => Some(c),
                Some(b) if c.mise < b.mise => Some(c),
                other => other,
            })
            .cloned();
        reports.push(EstimatorReport {
            estimator: grid_spec.kind.label().to_string(),
            cells: results,
            best,
        });
    }

    Ok(SimulationReport {
        scenario: scenario.name.clone(),
        metric: "mise".into(),
        sigma: scenario.sigma,
        n,
        d,
        replicates: scenario.replicates,
        seed: scenario.seed,
        runtime_seconds: start.elapsed().as_secs_f64(),
        estimators: reports,
        gcv: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::design::DesignKind;

    fn tiny_scenario(f: RegressionFunction, sigma: f64, n: usize, r: usize) -> MiseScenario {
        let d = f.dim();
        MiseScenario {
            name: "test".into(),
            function: f,
            design: DesignSpec::new(DesignKind::RandomUniform, n, d, 5),
            sigma,
            replicates: r,
            grid_points: 7,
            seed: 5,
            noise: NoiseModel::Gaussian,
        }
    }

    #[test]
    fn noiseless_linear_truth_gives_zero_ll_mise() {
        // The local linear estimator reproduces affine functions exactly, so
        // with sigma = 0 every cell integral must vanish at rounding scale.
        let d = 2;
        let domain = Domain::unit_cube(d);
        let spec = DesignSpec::new(DesignKind::RandomUniform, 400, d, 9);
        let xs = gen_design(&spec).unwrap();
        let lin = |x: &[f64]| 0.7 - 1.3 * x[0] + 0.4 * x[1];
        let truth_design: Vec<f64> = xs.chunks(d).map(lin).collect();
        let data = Dataset::new(xs, truth_design.clone(), d).unwrap();
        let grid = EvalGrid::new(domain.clone(), 7).unwrap();
        let mut points = Vec::new();
        let mut trapw = Vec::new();
        for a in 0..7 {
            for b in 0..7 {
                points.push(vec![grid.axis(0)[a], grid.axis(1)[b]]);
                trapw.push(grid.trap_weights(0)[a] * grid.trap_weights(1)[b]);
            }
        }
        let truth_grid: Vec<f64> = points.iter().map(|x| lin(x)).collect();
        let opts = LocalAdditiveOptions::default();
        let weights = weights_for_cell(
            EstimatorKind::LocalLinear,
            &data,
            &points,
            0.8,
            None,
            &domain,
            &opts,
        );
        assert!(weights.iter().all(|w| w.is_some()));
        let noise = vec![vec![0.0; 400]; 2];
        let stats = cell_stats(&weights, &truth_design, &truth_grid, &trapw, 4.0, &noise);
        assert_eq!(stats.variance, 0.0);
        assert!(stats.bias2 <= 1e-16, "bias2 {}", stats.bias2);
    }

    #[test]
    fn decomposition_identity_holds_exactly() {
        let sc = tiny_scenario(RegressionFunction::AdditivePeaks, 0.3, 250, 6);
        let grids = [
            EstimatorGrid {
                kind: EstimatorKind::Additive,
                h: vec![0.3, 0.5],
                w: vec![],
            },
            EstimatorGrid {
                kind: EstimatorKind::WindowedAdditive,
                h: vec![0.3],
                w: vec![0.9],
            },
        ];
        let mut opts = LocalAdditiveOptions::default();
        opts.n_min = Some(4);
        let rep = run_mise(&sc, &grids, &opts).unwrap();
        for est in &rep.estimators {
            for cell in est.cells.iter().filter(|c| c.valid) {
                let sum = cell.bias2.unwrap() + cell.variance.unwrap();
                assert_eq!(cell.mise, sum, "identity must be exact by construction");
                assert!(cell.bias2.unwrap() >= 0.0 && cell.variance.unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn seeded_reports_are_bit_identical() {
        let sc = tiny_scenario(RegressionFunction::QuadInteract { alpha: 0.4 }, 0.5, 200, 4);
        let grids = [EstimatorGrid {
            kind: EstimatorKind::WindowedAdditive,
            h: vec![0.3, 0.45],
            w: vec![0.8, 1.0],
        }];
        let mut opts = LocalAdditiveOptions::default();
        opts.n_min = Some(4);
        let a = run_mise(&sc, &grids, &opts).unwrap();
        let b = run_mise(&sc, &grids, &opts).unwrap();
        let ja = serde_json::to_value(&a.estimators).unwrap();
        let jb = serde_json::to_value(&b.estimators).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn starved_cells_are_marked_invalid() {
        let sc = tiny_scenario(RegressionFunction::QuadInteract { alpha: 0.0 }, 0.1, 60, 2);
        let grids = [EstimatorGrid {
            kind: EstimatorKind::WindowedAdditive,
            h: vec![0.05],
            w: vec![0.12],
        }];
        let rep = run_mise(&sc, &grids, &LocalAdditiveOptions::default()).unwrap();
        let cell = &rep.estimators[0].cells[0];
        assert!(!cell.valid);
        assert!(cell.mise.is_nan());
        assert!(rep.estimators[0].best.is_none());
    }

    #[test]
    fn ladder_endpoints_and_monotonicity() {
        let h = default_h_ladder();
        assert_eq!(h.len(), 15);
        assert!((h[0] - 0.123).abs() < 1e-12);
        assert_eq!(*h.last().unwrap(), 1.0);
        assert!(h.windows(2).all(|p| p[0] < p[1]));
        let w = default_w_ladder();
        assert_eq!(w.len(), 11);
        assert!(w[0] > 0.22 && w[0] < 0.23);
    }
}
