//! Additive regression by smooth backfitting.
//!
//! The estimator minimizes a kernel-smoothed least-squares criterion over
//! additive functions `r0 + sum_j m_j(x_j)` tabulated on a per-coordinate
//! grid. Two solution routes are provided and must agree:
//!
//! * [`BackfitDesign::fit`]: coordinate-wise Gauss-Seidel sweeps;
//! * [`BackfitDesign::dense_fit`]: one linear solve of the full discrete
//!   stationarity system (also the source of exact hat weights).
//!
//! Kernel weight rows are normalized so that their trapezoid sum over the
//! grid equals one for every observation. This makes the marginal and
//! pairwise density tables satisfy their integral identities exactly and
//! keeps the discrete system consistent with the quadrature rule used
//! everywhere else.

mod dense;

pub use dense::DenseSystem;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Domain, EvalGrid};
use crate::kernels::{boundary_kernel, KernelSpec};
use crate::sums::{csum, Compensated};
use once_cell::sync::OnceCell;

/// Polynomial degree of the per-coordinate smoother.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Local constant (Nadaraya-Watson style) component updates.
    LocalConstant,
    /// Local linear component updates with slope coupling.
    LocalLinear,
}

/// Tuning knobs for the backfitting solver.
#[derive(Debug, Clone)]
pub struct BackfitOptions {
    pub variant: Variant,
    pub kernel: KernelSpec,
    /// Sup-norm convergence tolerance on the standardized response scale.
    pub tol: f64,
    pub max_iter: usize,
    /// Grid points per coordinate.
    pub grid_points: usize,
}

impl Default for BackfitOptions {
    fn default() -> Self {
        BackfitOptions {
            variant: Variant::LocalLinear,
            kernel: KernelSpec::Epanechnikov,
            tol: 1e-6,
            max_iter: 200,
            grid_points: 21,
        }
    }
}

/// Fitted additive model on a grid.
#[derive(Debug, Clone)]
pub struct AdditiveFit {
    pub grid: EvalGrid,
    /// Fitted intercept.
    pub r0: f64,
    /// Component values `m_j` tabulated on each axis.
    pub components: Vec<Vec<f64>>,
    /// Component slope values for the local linear variant.
    pub slopes: Option<Vec<Vec<f64>>>,
    pub converged: bool,
    pub iterations: usize,
    /// Grid points whose update system needed a ridge.
    pub ridge_points: usize,
    /// Final sup-norm update on the original response scale.
    pub last_update: f64,
    /// Bandwidths the fit was computed with.
    pub bandwidths: Vec<f64>,
}

impl AdditiveFit {
    /// Evaluates `r0 + sum_j m_j(x_j)` by per-axis linear interpolation.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.components.len() {
            return Err(Error::InvalidInput(
                "point dimension does not match fit".into(),
            ));
        }
        let mut v = self.r0;
        for (j, xj) in x.iter().enumerate() {
            v += self.grid.interp(j, &self.components[j], *xj)?;
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// Marginal and pairwise kernel density tables of a design.
pub struct DensityMarginals<'a> {
    design: &'a BackfitDesign,
}

impl<'a> DensityMarginals<'a> {
    pub fn grid(&self) -> &EvalGrid {
        &self.design.grid
    }

    /// Marginal density estimate of coordinate `j` on its axis.
    pub fn marginal(&self, j: usize) -> &[f64] {
        &self.design.f0[j]
    }

    /// Pairwise density table for `(j, k)`, indexed `[g_j * G + g_k]`.
    pub fn pair(&self, j: usize, k: usize) -> Result<Vec<f64>> {
        let (d, g) = (self.design.d, self.design.g);
        if j == k || j >= d || k >= d {
            return Err(Error::InvalidInput(
                "pair density needs two distinct coordinates".into(),
            ));
        }
        let mut out = vec![0.0; g * g];
        for gj in 0..g {
            for gk in 0..g {
                out[gj * g + gk] = self.design.table(j, k, 0, 0, gj, gk);
            }
        }
        Ok(out)
    }
}

struct PairTables {
    t00: Vec<f64>,
    t01: Vec<f64>,
    t10: Vec<f64>,
    t11: Vec<f64>,
}

impl PairTables {
    #[inline]
    fn get(&self, p: u8, q: u8) -> &[f64] {
        match (p, q) {
            (0, 0) => &self.t00,
            (0, 1) => &self.t01,
            (1, 0) => &self.t10,
            (1, 1) => &self.t11,
            _ => unreachable!("moment powers are 0 or 1"),
        }
    }
}

/// Per-grid-point component update system, prefactored.
#[derive(Debug, Clone, Copy)]
enum Block {
    Constant { inv0: f64 },
    Linear { i00: f64, i01: f64, i11: f64 },
}

/// Response-independent part of a smooth backfitting fit: normalized kernel
/// weight rows, density moment tables, and prefactored update blocks.
///
/// Building the design once and fitting many responses is the intended use
/// in resampling loops.
pub struct BackfitDesign {
    grid: EvalGrid,
    variant: Variant,
    kernel: KernelSpec,
    h: Vec<f64>,
    n: usize,
    d: usize,
    g: usize,
    /// Covariates, row-major `n x d`.
    x: Vec<f64>,
    /// Per dimension: `n x g` normalized kernel weights.
    wrows: Vec<Vec<f64>>,
    /// Per dimension, per observation: `[start, end)` of non-zero weights.
    support: Vec<Vec<(u32, u32)>>,
    f0: Vec<Vec<f64>>,
    f1: Vec<Vec<f64>>,
    f2: Vec<Vec<f64>>,
    pairs: Vec<PairTables>,
    blocks: Vec<Vec<Block>>,
    /// Per coordinate, per grid point: whether the update block was ridged.
    ridged: Vec<Vec<bool>>,
    ridge_points: usize,
    tol: f64,
    max_iter: usize,
    dense: OnceCell<DenseSystem>,
}

/// Ridge added to near-singular update blocks, scaled by `1/n`.
const RIDGE_BASE: f64 = 1e-12;
/// Relative determinant threshold that triggers the ridge.
const SINGULAR_REL: f64 = 1e-10;

impl BackfitDesign {
    pub fn from_dataset(
        data: &Dataset,
        h: &[f64],
        domain: &Domain,
        opts: &BackfitOptions,
    ) -> Result<Self> {
        data.check_in_domain(domain)?;
        BackfitDesign::new(data.xs(), data.n(), data.d(), h, domain, opts)
    }

    /// Builds a design from raw row-major covariates.
    pub fn new(
        xs: &[f64],
        n: usize,
        d: usize,
        h: &[f64],
        domain: &Domain,
        opts: &BackfitOptions,
    ) -> Result<Self> {
        if d == 0 || n == 0 || xs.len() != n * d {
            return Err(Error::InvalidInput("bad covariate shape".into()));
        }
        if n < d + 2 {
            return Err(Error::InsufficientData { needed: d + 2, got: n });
        }
        if h.len() != d || h.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "need one positive bandwidth per coordinate".into(),
            ));
        }
        if domain.dim() != d {
            return Err(Error::InvalidInput("domain dimension mismatch".into()));
        }
        let grid = EvalGrid::new(domain.clone(), opts.grid_points)?;
        let g = grid.points_per_axis();

        let mut wrows = Vec::with_capacity(d);
        let mut support = Vec::with_capacity(d);
        for j in 0..d {
            let axis = grid.axis(j);
            let trapw = grid.trap_weights(j);
            let mut rows = vec![0.0; n * g];
            let mut sup = vec![(0u32, 0u32); n];
            for i in 0..n {
                let xij = xs[i * d + j];
                if xij < domain.lo[j] || xij > domain.hi[j] {
                    return Err(Error::OutOfDomain {
                        dim: j,
                        value: xij,
                        lo: domain.lo[j],
                        hi: domain.hi[j],
                    });
                }
                let row = &mut rows[i * g..(i + 1) * g];
                let mut lo_idx = g;
                let mut hi_idx = 0usize;
                let mut mass = 0.0;
                for (k, &xg) in axis.iter().enumerate() {
                    let v = boundary_kernel(opts.kernel, h[j], xg, xij, domain.lo[j], domain.hi[j]);
                    row[k] = v;
                    if v > 0.0 {
                        lo_idx = lo_idx.min(k);
                        hi_idx = hi_idx.max(k + 1);
                        mass += trapw[k] * v;
                    }
                }
                if mass > 0.0 {
                    for v in row[lo_idx..hi_idx].iter_mut() {
                        *v /= mass;
                    }
                } else {
                    // Kernel support fell between grid nodes; spread a unit
                    // point mass over the bracketing nodes instead.
                    let (k, t) = grid.interp_coeffs(j, xij)?;
                    row[k] = (1.0 - t) / trapw[k];
                    row[k + 1] = t / trapw[k + 1];
                    lo_idx = k;
                    hi_idx = k + 2;
                }
                sup[i] = (lo_idx as u32, hi_idx as u32);
            }
            wrows.push(rows);
            support.push(sup);
        }

        // One-dimensional moment tables.
        let inv_n = 1.0 / n as f64;
        let mut f0: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut f1: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut f2: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let axis = grid.axis(j);
            let mut a0 = vec![Compensated::default(); g];
            let mut a1 = vec![Compensated::default(); g];
            let mut a2 = vec![Compensated::default(); g];
            for i in 0..n {
                let xij = xs[i * d + j];
                let (s, e) = support[j][i];
                let row = &wrows[j][i * g..(i + 1) * g];
                for k in s as usize..e as usize {
                    let w = row[k];
                    let dx = xij - axis[k];
                    a0[k].add(w);
                    a1[k].add(w * dx);
                    a2[k].add(w * dx * dx);
                }
            }
            f0.push(a0.iter().map(|a| a.value() * inv_n).collect());
            f1.push(a1.iter().map(|a| a.value() * inv_n).collect());
            f2.push(a2.iter().map(|a| a.value() * inv_n).collect());
        }

        // Pairwise moment tables (upper triangle).
        let need_slopes = opts.variant == Variant::LocalLinear;
        let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
        for a in 0..d {
            for b in (a + 1)..d {
                let axis_a = grid.axis(a);
                let axis_b = grid.axis(b);
                let gg = g * g;
                let mut c00 = vec![Compensated::default(); gg];
                let mut c01 = vec![Compensated::default(); if need_slopes { gg } else { 0 }];
                let mut c10 = vec![Compensated::default(); if need_slopes { gg } else { 0 }];
                let mut c11 = vec![Compensated::default(); if need_slopes { gg } else { 0 }];
                for i in 0..n {
                    let xa = xs[i * d + a];
                    let xb = xs[i * d + b];
                    let (sa, ea) = support[a][i];
                    let (sb, eb) = support[b][i];
                    let row_a = &wrows[a][i * g..(i + 1) * g];
                    let row_b = &wrows[b][i * g..(i + 1) * g];
                    for ga in sa as usize..ea as usize {
                        let wa = row_a[ga];
                        if wa == 0.0 {
                            continue;
                        }
                        let da = xa - axis_a[ga];
                        for gb in sb as usize..eb as usize {
                            let wb = row_b[gb];
                            if wb == 0.0 {
                                continue;
                            }
                            let w = wa * wb;
                            let idx = ga * g + gb;
                            c00[idx].add(w);
                            if need_slopes {
                                let db = xb - axis_b[gb];
                                c01[idx].add(w * db);
                                c10[idx].add(w * da);
                                c11[idx].add(w * da * db);
                            }
                        }
                    }
                }
                let fin = |v: Vec<Compensated>| -> Vec<f64> {
                    v.iter().map(|a| a.value() * inv_n).collect()
                };
                pairs.push(PairTables {
                    t00: fin(c00),
                    t01: fin(c01),
                    t10: fin(c10),
                    t11: fin(c11),
                });
            }
        }

        // Prefactor the per-grid-point update systems. The same ridge
        // decision feeds both the Gauss-Seidel sweeps and the dense system.
        let ridge = RIDGE_BASE / n as f64;
        let mut blocks = Vec::with_capacity(d);
        let mut ridged = Vec::with_capacity(d);
        let mut ridge_points = 0usize;
        for j in 0..d {
            let mut col = Vec::with_capacity(g);
            let mut flags = vec![false; g];
            for k in 0..g {
                let b = match opts.variant {
                    Variant::LocalConstant => {
                        let v0 = f0[j][k];
                        if v0 <= ridge {
                            ridge_points += 1;
                            flags[k] = true;
                            Block::Constant {
                                inv0: 1.0 / (v0 + ridge),
                            }
                        } else {
                            Block::Constant { inv0: 1.0 / v0 }
                        }
                    }
                    Variant::LocalLinear => {
                        let (v0, v1, v2) = (f0[j][k], f1[j][k], f2[j][k]);
                        let det = v0 * v2 - v1 * v1;
                        let scale = (v0 * v2 + v1 * v1).max(f64::MIN_POSITIVE);
                        let (v0r, v2r) = if det <= SINGULAR_REL * scale {
                            ridge_points += 1;
                            flags[k] = true;
                            (v0 + ridge, v2 + ridge)
                        } else {
                            (v0, v2)
                        };
                        let detr = v0r * v2r - v1 * v1;
                        if detr <= 0.0 {
                            return Err(Error::SingularSystem(format!(
                                "component update block is singular at coordinate {j}, node {k}"
                            )));
                        }
                        Block::Linear {
                            i00: v2r / detr,
                            i01: -v1 / detr,
                            i11: v0r / detr,
                        }
                    }
                };
                col.push(b);
            }
            blocks.push(col);
            ridged.push(flags);
        }

        Ok(BackfitDesign {
            grid,
            variant: opts.variant,
            kernel: opts.kernel,
            h: h.to_vec(),
            n,
            d,
            g,
            x: xs.to_vec(),
            wrows,
            support,
            f0,
            f1,
            f2,
            pairs,
            blocks,
            ridged,
            ridge_points,
            tol: opts.tol,
            max_iter: opts.max_iter,
            dense: OnceCell::new(),
        })
    }

    /// Fit returned when the response is exactly constant.
    fn trivial_fit(&self, ybar: f64) -> AdditiveFit {
        AdditiveFit {
            grid: self.grid.clone(),
            r0: ybar,
            components: vec![vec![0.0; self.g]; self.d],
            slopes: match self.variant {
                Variant::LocalLinear => Some(vec![vec![0.0; self.g]; self.d]),
                Variant::LocalConstant => None,
            },
            converged: true,
            iterations: 0,
            ridge_points: self.ridge_points,
            last_update: 0.0,
            bandwidths: self.h.clone(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn grid(&self) -> &EvalGrid {
        &self.grid
    }

    #[inline]
    pub fn variant(&self) -> Variant {
        self.variant
    }

    #[inline]
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    #[inline]
    pub fn bandwidths(&self) -> &[f64] {
        &self.h
    }

    /// Number of grid points whose update block required a ridge.
    pub fn ridge_points(&self) -> usize {
        self.ridge_points
    }

    pub fn marginals(&self) -> DensityMarginals<'_> {
        DensityMarginals { design: self }
    }

    #[inline]
    fn pair_idx(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.d);
        a * self.d - a * (a + 1) / 2 + (b - a - 1)
    }

    /// Pairwise moment with power `p` at coordinate `j` (node `gj`) and
    /// power `q` at coordinate `k` (node `gk`).
    #[inline]
    fn table(&self, j: usize, k: usize, p: u8, q: u8, gj: usize, gk: usize) -> f64 {
        if j < k {
            self.pairs[self.pair_idx(j, k)].get(p, q)[gj * self.g + gk]
        } else {
            self.pairs[self.pair_idx(k, j)].get(q, p)[gk * self.g + gj]
        }
    }

    fn standardize(y: &[f64]) -> (f64, f64, Vec<f64>) {
        let n = y.len();
        let ybar = csum(y.iter().copied()) / n as f64;
        let s = y.iter().fold(0.0f64, |m, &v| m.max((v - ybar).abs()));
        if s == 0.0 {
            return (ybar, 0.0, vec![0.0; n]);
        }
        (ybar, s, y.iter().map(|&v| (v - ybar) / s).collect())
    }

    /// Kernel-weighted response moments `g0`, `g1` per coordinate.
    fn response_moments(&self, ys: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (n, d, g) = (self.n, self.d, self.g);
        let inv_n = 1.0 / n as f64;
        let need_slopes = self.variant == Variant::LocalLinear;
        let mut g0 = Vec::with_capacity(d);
        let mut g1 = Vec::with_capacity(d);
        for j in 0..d {
            let axis = self.grid.axis(j);
            let mut a0 = vec![Compensated::default(); g];
            let mut a1 = vec![Compensated::default(); if need_slopes { g } else { 0 }];
            for i in 0..n {
                let yi = ys[i];
                let xij = self.x[i * d + j];
                let (s, e) = self.support[j][i];
                let row = &self.wrows[j][i * g..(i + 1) * g];
                for k in s as usize..e as usize {
                    let w = row[k] * yi;
                    a0[k].add(w);
                    if need_slopes {
                        a1[k].add(w * (xij - axis[k]));
                    }
                }
            }
            g0.push(a0.iter().map(|a| a.value() * inv_n).collect());
            g1.push(a1.iter().map(|a| a.value() * inv_n).collect());
        }
        (g0, g1)
    }

    /// Coupling sum `sum_{k != j} int m_k T(p,0) + beta_k T(p,1)` at node
    /// `gj` of coordinate `j`.
    fn coupling(
        &self,
        j: usize,
        p: u8,
        gj: usize,
        m: &[Vec<f64>],
        beta: &[Vec<f64>],
    ) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.d {
            if k == j {
                continue;
            }
            let trapw = self.grid.trap_weights(k);
            let mk = &m[k];
            if self.variant == Variant::LocalLinear {
                let bk = &beta[k];
                for gk in 0..self.g {
                    acc += trapw[gk]
                        * (mk[gk] * self.table(j, k, p, 0, gj, gk)
                            + bk[gk] * self.table(j, k, p, 1, gj, gk));
                }
            } else {
                for gk in 0..self.g {
                    acc += trapw[gk] * mk[gk] * self.table(j, k, 0, 0, gj, gk);
                }
            }
        }
        acc
    }

    /// Gauss-Seidel smooth backfitting fit of a response vector.
    pub fn fit(&self, y: &[f64]) -> Result<AdditiveFit> {
        if y.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "response length {} does not match design n = {}",
                y.len(),
                self.n
            )));
        }
        let (ybar, s, ys) = Self::standardize(y);
        let (d, g) = (self.d, self.g);
        if s == 0.0 {
            return Ok(self.trivial_fit(ybar));
        }
        let (g0, g1) = self.response_moments(&ys);
        let ysbar = csum(ys.iter().copied()) / self.n as f64;

        let mut m = vec![vec![0.0; g]; d];
        let mut beta = vec![vec![0.0; g]; d];
        let mut r0 = ysbar;
        let mut converged = false;
        let mut iterations = 0;
        let mut delta = f64::INFINITY;
        let need_slopes = self.variant == Variant::LocalLinear;

        for sweep in 1..=self.max_iter {
            delta = 0.0;
            let r0_old = r0;
            for j in 0..d {
                let mut mj_new = vec![0.0; g];
                let mut bj_new = vec![0.0; g];
                for gj in 0..g {
                    let q0 = g0[j][gj] - r0 * self.f0[j][gj] - self.coupling(j, 0, gj, &m, &beta);
                    match self.blocks[j][gj] {
                        Block::Constant { inv0 } => {
                            mj_new[gj] = inv0 * q0;
                        }
                        Block::Linear { i00, i01, i11 } => {
                            let q1 = g1[j][gj]
                                - r0 * self.f1[j][gj]
                                - self.coupling(j, 1, gj, &m, &beta);
                            mj_new[gj] = i00 * q0 + i01 * q1;
                            bj_new[gj] = i01 * q0 + i11 * q1;
                        }
                    }
                }
                // Center the component against its marginal and move the
                // mass into the intercept.
                let num = self.grid.trapz(j, &mj_new.iter().zip(&self.f0[j]).map(|(a, b)| a * b).collect::<Vec<_>>());
                let den = self.grid.trapz(j, &self.f0[j]);
                let c = num / den;
                for v in mj_new.iter_mut() {
                    *v -= c;
                }
                r0 += c;
                for gj in 0..g {
                    delta = delta.max((mj_new[gj] - m[j][gj]).abs());
                    if need_slopes {
                        delta = delta.max((bj_new[gj] - beta[j][gj]).abs());
                    }
                }
                m[j] = mj_new;
                if need_slopes {
                    beta[j] = bj_new;
                }
            }
            // Intercept stationarity: r0 = mean(y) - sum_j int(m_j f0_j)
            //                                       - sum_j int(beta_j f1_j).
            let mut r0_new = ysbar;
            for j in 0..d {
                let mf: Vec<f64> = m[j].iter().zip(&self.f0[j]).map(|(a, b)| a * b).collect();
                r0_new -= self.grid.trapz(j, &mf);
                if need_slopes {
                    let bf: Vec<f64> =
                        beta[j].iter().zip(&self.f1[j]).map(|(a, b)| a * b).collect();
                    r0_new -= self.grid.trapz(j, &bf);
                }
            }
            r0 = r0_new;
            delta = delta.max((r0 - r0_old).abs());
            iterations = sweep;
            if delta <= self.tol {
                converged = true;
                break;
            }
        }

        let components = m
            .into_iter()
            .map(|col| col.into_iter().map(|v| v * s).collect())
            .collect();
        let slopes = if need_slopes {
            Some(
                beta.into_iter()
                    .map(|col| col.into_iter().map(|v| v * s).collect())
                    .collect(),
            )
        } else {
            None
        };
        Ok(AdditiveFit {
            grid: self.grid.clone(),
            r0: ybar + s * r0,
            components,
            slopes,
            converged,
            iterations,
            ridge_points: self.ridge_points,
            last_update: delta * s,
            bandwidths: self.h.clone(),
        })
    }
}

/// Convenience wrapper: build a design for `data` and fit its response.
pub fn fit_additive(
    data: &Dataset,
    h: &[f64],
    domain: &Domain,
    opts: &BackfitOptions,
) -> Result<AdditiveFit> {
    BackfitDesign::from_dataset(data, h, domain, opts)?.fit(data.y())
}
