//! Smoothing-parameter selection: residual variance, hat-matrix trace
//! (exact and plug-in), the AIC family of criteria, and grid search over
//! `(h, w)`.

use crate::backfit::Variant;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::kernels::KernelSpec;
use crate::local_additive::{
    fit_local_additive, prediction_weights, window_extract, LocalAdditiveOptions, SmoothingParams,
};
use crate::local_linear::fit_local_linear;
use crate::sums::csum;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest sample size for which the exact hat diagonal is computed.
pub const EXACT_TRACE_MAX_N: usize = 2000;

/// Model-selection criteria. All are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    Aic,
    AicC,
    AicT,
    Pls,
    Gcv,
}

impl FromStr for SelectionCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(SelectionCriterion::Aic),
            "aicc" | "aic_c" => Ok(SelectionCriterion::AicC),
            "aict" | "aic_t" => Ok(SelectionCriterion::AicT),
            "pls" => Ok(SelectionCriterion::Pls),
            "gcv" => Ok(SelectionCriterion::Gcv),
            other => Err(Error::InvalidInput(format!(
                "unknown criterion '{other}' (expected aic|aicc|aict|pls|gcv)"
            ))),
        }
    }
}

impl fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SelectionCriterion::Aic => "aic",
            SelectionCriterion::AicC => "aicc",
            SelectionCriterion::AicT => "aict",
            SelectionCriterion::Pls => "pls",
            SelectionCriterion::Gcv => "gcv",
        };
        f.write_str(s)
    }
}

/// How the hat-matrix trace is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    Exact,
    Plugin,
    /// Exact up to [`EXACT_TRACE_MAX_N`], plug-in beyond.
    Auto,
}

impl TraceMethod {
    fn resolve(self, n: usize) -> TraceMethod {
        match self {
            TraceMethod::Auto => {
                if n <= EXACT_TRACE_MAX_N {
                    TraceMethod::Exact
                } else {
                    TraceMethod::Plugin
                }
            }
            m => m,
        }
    }
}

impl FromStr for TraceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(TraceMethod::Exact),
            "plugin" => Ok(TraceMethod::Plugin),
            "auto" => Ok(TraceMethod::Auto),
            other => Err(Error::InvalidInput(format!(
                "unknown trace method '{other}' (expected exact|plugin|auto)"
            ))),
        }
    }
}

/// Residual variance estimate `n^{-1} sum (y_i - fitted_i)^2`.
pub fn sigma2_hat(y: &[f64], fitted: &[f64]) -> f64 {
    debug_assert_eq!(y.len(), fitted.len());
    csum(y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b))) / y.len() as f64
}

/// Window with half-widths enlarged (doubling, clamped at the domain width)
/// until `n_min` observations are inside. Returns the effective parameters
/// and the number of enlargement steps taken.
fn enlarged_params(
    data: &Dataset,
    x0: &[f64],
    params: &SmoothingParams,
    domain: &Domain,
    n_min: usize,
) -> Result<(SmoothingParams, usize)> {
    if data.n() < n_min {
        return Err(Error::InsufficientData {
            needed: n_min,
            got: data.n(),
        });
    }
    let widths: Vec<f64> = (0..data.d()).map(|j| domain.hi[j] - domain.lo[j]).collect();
    let mut factor = 1.0;
    let mut steps = 0usize;
    loop {
        let w_eff: Vec<f64> = params
            .w
            .iter()
            .zip(&widths)
            .map(|(w, width)| (w * factor).min(*width))
            .collect();
        let attempt = window_extract(data, x0, &w_eff, domain, n_min);
        match attempt {
            Ok(_) => {
                return Ok((SmoothingParams::new(params.h.clone(), w_eff)?, steps));
            }
            Err(Error::InsufficientData { .. }) => {
                if w_eff.iter().zip(&widths).all(|(w, width)| w >= width) {
                    return Err(Error::InsufficientData {
                        needed: n_min,
                        got: data.n(),
                    });
                }
                factor *= 2.0;
                steps += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Exact hat-matrix information: per-point diagonal, fitted values, trace.
#[derive(Debug, Clone)]
pub struct HatSummary {
    pub diag: Vec<f64>,
    pub fitted: Vec<f64>,
    pub trace: f64,
    /// Number of observation windows that had to be enlarged.
    pub enlarged_windows: usize,
}

/// Computes the exact hat diagonal and fitted values of the windowed
/// additive estimator by evaluating prediction weights at every
/// observation. Guarded to `n <=` [`EXACT_TRACE_MAX_N`].
pub fn exact_hat(
    data: &Dataset,
    params: &SmoothingParams,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
) -> Result<HatSummary> {
    let n = data.n();
    if n > EXACT_TRACE_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: EXACT_TRACE_MAX_N,
        });
    }
    let n_min = opts.resolve_n_min(data.d());
    let rows: Vec<Result<(f64, f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = data.row(i).to_vec();
            let (eff, steps) = enlarged_params(data, &x0, params, domain, n_min)?;
            let (idx, wts) = prediction_weights(data, &x0, &eff, domain, opts)?;
            let pos = idx
                .binary_search(&i)
                .map_err(|_| Error::InvalidInput("window lost its own center".into()))?;
            let fitted = csum(idx.iter().zip(&wts).map(|(&k, w)| w * data.y()[k]));
            Ok((wts[pos], fitted, steps))
        })
        .collect();
    let mut diag = Vec::with_capacity(n);
    let mut fitted = Vec::with_capacity(n);
    let mut enlarged = 0usize;
    for r in rows {
        let (dg, ft, steps) = r?;
        diag.push(dg);
        fitted.push(ft);
        if steps > 0 {
            enlarged += 1;
        }
    }
    let trace = csum(diag.iter().copied());
    Ok(HatSummary {
        diag,
        fitted,
        trace,
        enlarged_windows: enlarged,
    })
}

/// Plug-in trace estimate.
#[derive(Debug, Clone)]
pub struct PluginTrace {
    pub diag: Vec<f64>,
    pub trace: f64,
    pub enlarged_windows: usize,
}

/// Scaled self-weight of one marginal smoother at the window center:
/// the boundary equivalent-kernel peak divided by the window-uniform density
/// `1/l`, where `l = hi - lo` is the rescaled window length on this axis.
/// Away from the domain boundary this is `l K(0) / h~ = 2 K(0) / h~`.
///
/// At a cut window the local linear peak is `K(0) s2 / (s0 s2 - s1^2)` with
/// `s_l` the kernel moments truncated to the remaining support; the local
/// constant peak is the plain cut-and-normalize `K(0) / s0`. Both reduce to
/// `K(0)` when nothing is cut, and both fall monotonically as `h~` grows:
/// to 1 for a centered window, to 4 (local linear) for a one-sided one.
pub(crate) fn plugin_axis_term(
    kernel: KernelSpec,
    variant: Variant,
    ht: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let len = hi - lo;
    let k0 = kernel.eval(0.0);
    let (a, b) = (lo / ht, hi / ht);
    let s0 = kernel.partial_moment(0, a, b);
    match variant {
        Variant::LocalConstant => len * k0 / (s0 * ht),
        Variant::LocalLinear => {
            let s1 = kernel.partial_moment(1, a, b);
            let s2 = kernel.partial_moment(2, a, b);
            let denom = (s0 * s2 - s1 * s1).max(1e-300);
            len * k0 * s2 / (denom * ht)
        }
    }
}

/// Per-point diagonal approximation
/// `diag_i = max(sum_j t_j - (d-1), 1e-12) / n_i`,
/// where `n_i` is the window count at `X_i` and `t_j` is the
/// [`plugin_axis_term`] self-weight for axis `j` at `h~_j = h_j / w_j`.
/// Summing the axes counts the shared intercept `d` times, so `d - 1`
/// copies are removed; as every `h~_j` grows the diagonal approaches the
/// global-mean value `1/n_i`.
pub fn plugin_trace(
    data: &Dataset,
    params: &SmoothingParams,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
) -> Result<PluginTrace> {
    let (n, d) = (data.n(), data.d());
    let n_min = opts.resolve_n_min(d);
    let kernel = opts.backfit.kernel;
    let variant = opts.backfit.variant;
    let entries: Vec<Result<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = data.row(i).to_vec();
            let (eff, steps) = enlarged_params(data, &x0, params, domain, n_min)?;
            let sample = window_extract(data, &x0, &eff.w, domain, n_min)?;
            let ht = eff.h_tilde();
            let mut acc = 0.0;
            for j in 0..d {
                acc += plugin_axis_term(kernel, variant, ht[j], sample.lo[j], sample.hi[j]);
            }
            let num = (acc - (d as f64 - 1.0)).max(1e-12);
            Ok((num / sample.n() as f64, steps))
        })
        .collect();
    let mut diag = Vec::with_capacity(n);
    let mut enlarged = 0usize;
    for e in entries {
        let (v, steps) = e?;
        diag.push(v);
        if steps > 0 {
            enlarged += 1;
        }
    }
    let trace = csum(diag.iter().copied());
    Ok(PluginTrace {
        diag,
        trace,
        enlarged_windows: enlarged,
    })
}

/// Fitted values at every observation via per-point windowed fits
/// (used when exact weights are too expensive).
fn fitted_values(
    data: &Dataset,
    params: &SmoothingParams,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = data.n();
    let n_min = opts.resolve_n_min(data.d());
    let vals: Vec<Result<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = data.row(i).to_vec();
            let (eff, steps) = enlarged_params(data, &x0, params, domain, n_min)?;
            let fit = fit_local_additive(data, &x0, &eff, domain, opts)?;
            Ok((fit.value, steps))
        })
        .collect();
    let mut fitted = Vec::with_capacity(n);
    let mut enlarged = 0usize;
    for v in vals {
        let (f, steps) = v?;
        fitted.push(f);
        if steps > 0 {
            enlarged += 1;
        }
    }
    Ok((fitted, enlarged))
}

/// Criterion formula on precomputed inputs. Out-of-domain criteria (AICc
/// with `tr >= n-2`, GCV with `tr >= n`) return `+inf`.
pub fn criterion_value(
    criterion: SelectionCriterion,
    sigma2: f64,
    trace: f64,
    n: usize,
    sigma2_ref: Option<f64>,
) -> Result<f64> {
    let nf = n as f64;
    Ok(match criterion {
        SelectionCriterion::Aic => sigma2.ln() + 2.0 * trace / nf,
        SelectionCriterion::AicT => {
            let r = sigma2_ref.ok_or_else(|| {
                Error::InvalidInput("AIC_T needs a reference sigma^2".into())
            })?;
            if !(r > 0.0) {
                return Err(Error::InvalidInput(
                    "AIC_T reference sigma^2 must be positive".into(),
                ));
            }
            sigma2 / r - 1.0 + 2.0 * trace / nf
        }
        SelectionCriterion::AicC => {
            if trace >= nf - 2.0 {
                f64::INFINITY
            } else {
                sigma2.ln() + 1.0 + 2.0 * (trace + 1.0) / (nf - trace - 2.0)
            }
        }
        SelectionCriterion::Pls => sigma2 * (1.0 + 2.0 * trace / nf),
        SelectionCriterion::Gcv => {
            if trace >= nf {
                f64::INFINITY
            } else {
                sigma2 / (1.0 - trace / nf).powi(2)
            }
        }
    })
}

/// One evaluated criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionEval {
    pub criterion: SelectionCriterion,
    pub value: f64,
    pub sigma2: f64,
    pub trace: f64,
    pub trace_method: TraceMethod,
    pub enlarged_windows: usize,
}

/// Evaluates a criterion for one parameter setting.
pub fn criterion_eval(
    data: &Dataset,
    params: &SmoothingParams,
    criterion: SelectionCriterion,
    trace_method: TraceMethod,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
    sigma2_ref: Option<f64>,
) -> Result<CriterionEval> {
    let method = trace_method.resolve(data.n());
    let (sigma2, trace, enlarged) = match method {
        TraceMethod::Exact => {
            let hat = exact_hat(data, params, domain, opts)?;
            (
                sigma2_hat(data.y(), &hat.fitted),
                hat.trace,
                hat.enlarged_windows,
            )
        }
        TraceMethod::Plugin => {
            let pt = plugin_trace(data, params, domain, opts)?;
            let (fitted, enlarged) = fitted_values(data, params, domain, opts)?;
            (
                sigma2_hat(data.y(), &fitted),
                pt.trace,
                enlarged.max(pt.enlarged_windows),
            )
        }
        TraceMethod::Auto => unreachable!("resolved above"),
    };
    let value = criterion_value(criterion, sigma2, trace, data.n(), sigma2_ref)?;
    Ok(CriterionEval {
        criterion,
        value,
        sigma2,
        trace,
        trace_method: method,
        enlarged_windows: enlarged,
    })
}

/// Reference variance for AIC_T: residual variance of a fixed-bandwidth
/// multivariate local linear pilot fit (`h_j` = a quarter of the domain
/// width per coordinate, doubled on data starvation).
pub fn pilot_sigma2(data: &Dataset, domain: &Domain, kernel: KernelSpec) -> Result<f64> {
    let d = data.d();
    let base: Vec<f64> = (0..d).map(|j| 0.25 * (domain.hi[j] - domain.lo[j])).collect();
    let fitted: Vec<Result<f64>> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = data.row(i).to_vec();
            let mut h = base.clone();
            loop {
                match fit_local_linear(data, &x0, &h, kernel, domain) {
                    Ok(fit) => return Ok(fit.value),
                    Err(Error::InsufficientData { .. }) => {
                        let capped = h
                            .iter()
                            .zip(domain.lo.iter().zip(&domain.hi))
                            .all(|(hj, (lo, hi))| *hj >= hi - lo);
                        if capped {
                            return Err(Error::InsufficientData {
                                needed: d + 1,
                                got: data.n(),
                            });
                        }
                        for (hj, (lo, hi)) in
                            h.iter_mut().zip(domain.lo.iter().zip(&domain.hi))
                        {
                            *hj = (*hj * 2.0).min(*hi - *lo);
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let mut vals = Vec::with_capacity(data.n());
    for f in fitted {
        vals.push(f?);
    }
    Ok(sigma2_hat(data.y(), &vals))
}

/// One cell of the selection surface.
#[derive(Debug, Clone, Serialize)]
pub struct SurfacePoint {
    pub h: f64,
    pub w: f64,
    pub value: f64,
    pub sigma2: f64,
    pub trace: f64,
    pub enlarged_windows: usize,
    /// Present when the cell could not be evaluated.
    pub error: Option<String>,
}

/// Candidate grids for selection. Scalar candidates are broadcast to all
/// coordinates. When `h_relative` is set, each `h` candidate is interpreted
/// as a multiplier `c` with actual bandwidth `c * w` (so the window-scale
/// bandwidth is `c` for every `w`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionGrid {
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(default)]
    pub h_relative: bool,
}

impl SelectionGrid {
    pub fn new(h: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if h.is_empty() || w.is_empty() {
            return Err(Error::InvalidInput("selection grids must be nonempty".into()));
        }
        if h.iter().chain(w.iter()).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "selection grid entries must be positive".into(),
            ));
        }
        Ok(SelectionGrid {
            h,
            w,
            h_relative: false,
        })
    }
}

/// Result of a grid search.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub criterion: SelectionCriterion,
    pub best_h: f64,
    pub best_w: f64,
    pub best_value: f64,
    pub best_sigma2: f64,
    pub best_trace: f64,
    /// Reference variance used by AIC_T cells, when applicable.
    pub sigma2_ref: Option<f64>,
    pub surface: Vec<SurfacePoint>,
}

/// Minimizes a criterion over the `(h, w)` grid.
///
/// Cells are evaluated in parallel; the scan order is `w` ascending, then
/// `h` ascending, and ties keep the earlier cell, so ties break toward
/// smaller `w`, then smaller `h`.
pub fn select_params(
    data: &Dataset,
    grid: &SelectionGrid,
    criterion: SelectionCriterion,
    trace_method: TraceMethod,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
    sigma2_ref: Option<f64>,
) -> Result<SelectionResult> {
    let d = data.d();
    let sigma2_ref = match (criterion, sigma2_ref) {
        (SelectionCriterion::AicT, None) => {
            Some(pilot_sigma2(data, domain, opts.backfit.kernel)?)
        }
        (_, r) => r,
    };
    let cells: Vec<(f64, f64)> = grid
        .w
        .iter()
        .flat_map(|&w| {
            grid.h.iter().map(move |&h| {
                let h_eff = if grid.h_relative { h * w } else { h };
                (h_eff, w)
            })
        })
        .collect();
    let surface: Vec<SurfacePoint> = cells
        .par_iter()
        .map(|&(h, w)| {
            let point = SmoothingParams::isotropic(h, w, d).and_then(|params| {
                criterion_eval(data, &params, criterion, trace_method, domain, opts, sigma2_ref)
            });
            match point {
                Ok(ev) => SurfacePoint {
                    h,
                    w,
                    value: ev.value,
                    sigma2: ev.sigma2,
                    trace: ev.trace,
                    enlarged_windows: ev.enlarged_windows,
                    error: None,
                },
                Err(e) => SurfacePoint {
                    h,
                    w,
                    value: f64::INFINITY,
                    sigma2: f64::NAN,
                    trace: f64::NAN,
                    enlarged_windows: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best: Option<&SurfacePoint> = None;
    for p in &surface {
        if p.error.is_some() || p.value.is_nan() || p.value == f64::INFINITY {
            continue;
        }
        match best {
            None => best = Some(p),
            Some(b) if p.value < b.value => best = Some(p),
            _ => {}
        }
    }
    let best = best.ok_or_else(|| {
        Error::InvalidInput("criterion surface has no finite values".into())
    })?;
    Ok(SelectionResult {
        criterion,
        best_h: best.h,
        best_w: best.w,
        best_value: best.value,
        best_sigma2: best.sigma2,
        best_trace: best.trace,
        sigma2_ref,
        surface,
    })
}

/// Re-scores an evaluated surface under a different criterion using the
/// stored `(sigma2, trace)` per cell; no refitting.
pub fn rescore_surface(
    surface: &[SurfacePoint],
    criterion: SelectionCriterion,
    n: usize,
    sigma2_ref: Option<f64>,
) -> Result<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for p in surface {
        if p.error.is_some() || !p.sigma2.is_finite() {
            continue;
        }
        let v = criterion_value(criterion, p.sigma2, p.trace, n, sigma2_ref)?;
        if !v.is_nan() {
            match best {
                None => best = Some((p.h, p.w, v)),
                Some((_, _, bv)) if v < bv => best = Some((p.h, p.w, v)),
                _ => {}
            }
        }
    }
    best.ok_or_else(|| Error::InvalidInput("criterion surface has no finite values".into()))
}

/// Monte-Carlo verification that the expected Taylor-AIC decomposes into a
/// squared-bias term and a variance term computed from the hat matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    /// Replicate mean of `AIC_T - (eps'eps/(n sigma^2) - 1)`.
    pub lhs_mean: f64,
    /// `(n sigma^2)^{-1} ||(I - H) r||^2`.
    pub bias_term: f64,
    /// `n^{-1} ||H||_F^2`.
    pub variance_term: f64,
    pub rhs: f64,
    pub relative_gap: f64,
    pub trace: f64,
    pub replicates: usize,
    /// Set when the variance term is under 1% of the bias term.
    pub variance_negligible: bool,
}

/// Core of the decomposition check for a precomputed hat matrix (rows of
/// prediction weights at each observation) and known truth.
pub fn decomposition_check_with_hat(
    hat_rows: &[Vec<f64>],
    truth: &[f64],
    sigma: f64,
    replicates: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    let n = truth.len();
    if hat_rows.len() != n || hat_rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("hat matrix must be n x n".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    if replicates < 2 {
        return Err(Error::InvalidInput("need at least two replicates".into()));
    }
    let nf = n as f64;
    let sigma2 = sigma * sigma;
    let hr: Vec<f64> = hat_rows
        .iter()
        .map(|row| csum(row.iter().zip(truth).map(|(w, r)| w * r)))
        .collect();
    let bias_ss = csum(truth.iter().zip(&hr).map(|(r, h)| (r - h) * (r - h)));
    let frob = csum(hat_rows.iter().flat_map(|row| row.iter().map(|w| w * w)));
    let trace = csum((0..n).map(|i| hat_rows[i][i]));
    let bias_term = bias_ss / (nf * sigma2);
    let variance_term = frob / nf;
    let rhs = bias_term + variance_term;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut lhs_sum = 0.0;
    for _ in 0..replicates {
        let eps: Vec<f64> = (0..n)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let mut rss = 0.0;
        let mut eps_ss = 0.0;
        for i in 0..n {
            let fitted = hr[i] + csum(hat_rows[i].iter().zip(&eps).map(|(w, e)| w * e));
            let resid = truth[i] + eps[i] - fitted;
            rss += resid * resid;
            eps_ss += eps[i] * eps[i];
        }
        let sigma2_hat = rss / nf;
        let aic_t = sigma2_hat / sigma2 - 1.0 + 2.0 * trace / nf;
        lhs_sum += aic_t - (eps_ss / (nf * sigma2) - 1.0);
    }
    let lhs_mean = lhs_sum / replicates as f64;
    let relative_gap = (lhs_mean - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    Ok(DecompositionReport {
        lhs_mean,
        bias_term,
        variance_term,
        rhs,
        relative_gap,
        trace,
        replicates,
        variance_negligible: variance_term < 0.01 * bias_term,
    })
}

/// Runs [`decomposition_check_with_hat`] for the windowed additive
/// estimator on a dataset whose response holds the noiseless truth.
pub fn aic_decomposition_check(
    truth_data: &Dataset,
    sigma: f64,
    params: &SmoothingParams,
    domain: &Domain,
    opts: &LocalAdditiveOptions,
    replicates: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    let n = truth_data.n();
    if n > EXACT_TRACE_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: EXACT_TRACE_MAX_N,
        });
    }
    let n_min = opts.resolve_n_min(truth_data.d());
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = truth_data.row(i).to_vec();
            let (eff, _) = enlarged_params(truth_data, &x0, params, domain, n_min)?;
            let (idx, wts) = prediction_weights(truth_data, &x0, &eff, domain, opts)?;
            let mut row = vec![0.0; n];
            for (k, w) in idx.iter().zip(&wts) {
                row[*k] = *w;
            }
            Ok(row)
        })
        .collect();
    let mut hat = Vec::with_capacity(n);
    for r in rows {
        hat.push(r?);
    }
    decomposition_check_with_hat(&hat, truth_data.y(), sigma, replicates, seed)
}
