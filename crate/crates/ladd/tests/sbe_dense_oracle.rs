//! Brute-force oracle for the smooth backfitting solver.
//!
//! The additive fit minimizes, over the intercept and tabulated component
//! (and slope) values, the kernel-smoothed least squares criterion
//!
//! `(1/n) sum_i integral prod_j W_ij(x_j) * (y_i - r0 - sum_j phi_j(x_j))^2 dx`
//!
//! with `phi_j(x) = m_j(x) + s_j(x) (X_ij - x)` in the local linear variant
//! and `W_ij` the boundary-corrected kernel row of observation `i` in
//! coordinate `j`, normalized to unit trapezoid mass. Because each factor
//! depends on one coordinate only, the criterion expands into per-coordinate
//! integrals, and the full stationarity system can be assembled directly
//! from per-observation outer products. This test does exactly that with
//! its own weight rows and its own assembly, solves the system by SVD
//! pseudo-inverse, and compares predictions against the crate's iterative
//! and dense solvers.

use ladd::backfit::{BackfitDesign, BackfitOptions, Variant};
use ladd::grid::{Domain, EvalGrid};
use ladd::kernels::{boundary_kernel, KernelSpec};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

struct Oracle {
    grid: EvalGrid,
    r0: f64,
    components: Vec<Vec<f64>>,
}

impl Oracle {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut v = self.r0;
        for (j, &xj) in x.iter().enumerate() {
            v += self.grid.interp(j, &self.components[j], xj).unwrap();
        }
        v
    }
}

/// Assembles and solves the discrete stationarity system without using any
/// of the crate's backfitting code paths.
fn brute_force_fit(
    xs: &[f64],
    y: &[f64],
    d: usize,
    h: &[f64],
    domain: &Domain,
    kernel: KernelSpec,
    g: usize,
    variant: Variant,
) -> Oracle {
    let n = y.len();
    let grid = EvalGrid::new(domain.clone(), g).unwrap();
    // Coefficients per coordinate block: component values, then slopes.
    let block = match variant {
        Variant::LocalConstant => g,
        Variant::LocalLinear => 2 * g,
    };
    let dim = 1 + d * block;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    for i in 0..n {
        // u_i: coefficient vector of the per-observation mean response;
        // d_i: the within-coordinate second-moment correction, block
        // diagonal, entering as D_ij - a_ij a_ij^T.
        let mut u = DVector::<f64>::zeros(dim);
        u[0] = 1.0;
        let mut diag_blocks: Vec<DMatrix<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let axis = grid.axis(j);
            let trapw = grid.trap_weights(j);
            let xij = xs[i * d + j];
            let mut w: Vec<f64> = axis
                .iter()
                .map(|&xg| boundary_kernel(kernel, h[j], xg, xij, domain.lo[j], domain.hi[j]))
                .collect();
            let mass: f64 = w.iter().zip(trapw).map(|(wv, tv)| wv * tv).sum();
            assert!(mass > 0.0, "kernel support missed the grid");
            for wv in w.iter_mut() {
                *wv /= mass;
            }
            let off = 1 + j * block;
            let mut dmat = DMatrix::<f64>::zeros(block, block);
            for k in 0..g {
                let wk = trapw[k] * w[k];
                u[off + k] = wk;
                dmat[(k, k)] = wk;
                if variant == Variant::LocalLinear {
                    let dx = xij - axis[k];
                    u[off + g + k] = wk * dx;
                    dmat[(k, g + k)] = wk * dx;
                    dmat[(g + k, k)] = wk * dx;
                    dmat[(g + k, g + k)] = wk * dx * dx;
                }
            }
            // Subtract the rank-one part that the cross-term expansion
            // double counts within the same coordinate.
            let a = u.rows(off, block).clone_owned();
            dmat -= &a * a.transpose();
            diag_blocks.push(dmat);
        }
        m += &u * u.transpose();
        for (j, dmat) in diag_blocks.iter().enumerate() {
            let off = 1 + j * block;
            m.view_mut((off, off), (block, block)).add_assign(dmat);
        }
        rhs += u * y[i];
    }
    m /= n as f64;
    rhs /= n as f64;

    // Component shifts compensated by the intercept are null directions;
    // the pseudo-inverse picks the minimum-norm representative, which
    // predicts identically.
    let svd = m.svd(true, true);
    let theta = svd.solve(&rhs, 1e-10).unwrap();

    let r0 = theta[0];
    let components: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let off = 1 + j * block;
            (0..g).map(|k| theta[off + k]).collect()
        })
        .collect();
    Oracle {
        grid,
        r0,
        components,
    }
}

use std::ops::AddAssign;

fn toy_problem(n: usize, d: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = 0.0;
        for j in 0..d {
            let v: f64 = rng.gen_range(-1.0..=1.0);
            xs.push(v);
            s += if j % 2 == 0 {
                (1.7 * v).sin()
            } else {
                v * v - 0.3 * v
            };
        }
        y.push(s + 0.1 * rng.gen_range(-1.0..=1.0) + 0.4 * xs[xs.len() - 1] * xs[xs.len() - 2]);
    }
    (xs, y)
}

fn check_variant(variant: Variant, tol: f64) {
    let (n, d, g) = (50, 2, 11);
    let (xs, y) = toy_problem(n, d, 31);
    let domain = Domain::unit_cube(d);
    let h = [0.35, 0.5];
    let opts = BackfitOptions {
        variant,
        kernel: KernelSpec::Epanechnikov,
        tol: 1e-13,
        max_iter: 5000,
        grid_points: g,
    };
    let design = BackfitDesign::new(&xs, n, d, &h, &domain, &opts).unwrap();
    let iterative = design.fit(&y).unwrap();
    assert!(iterative.converged, "gauss-seidel did not converge");
    let dense = design.dense_fit(&y).unwrap();
    let oracle = brute_force_fit(&xs, &y, d, &h, &domain, opts.kernel, g, variant);

    // Compare fitted values at every observation and on a probe set.
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let mut probes: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    for i in 0..n {
        probes.push(xs[i * d..(i + 1) * d].to_vec());
    }
    for x in &probes {
        let want = oracle.predict(x);
        let got_it = iterative.predict(x).unwrap();
        let got_dn = dense.predict(x).unwrap();
        assert!(
            (got_it - want).abs() <= tol,
            "iterative {got_it} vs oracle {want} at {x:?}"
        );
        assert!(
            (got_dn - want).abs() <= tol,
            "dense {got_dn} vs oracle {want} at {x:?}"
        );
    }
}

#[test]
fn local_linear_backfit_matches_brute_force_system() {
    check_variant(Variant::LocalLinear, 1e-8);
}

#[test]
fn local_constant_backfit_matches_brute_force_system() {
    check_variant(Variant::LocalConstant, 1e-8);
}

#[test]
fn three_dimensional_case_agrees_too() {
    let (n, d, g) = (80, 3, 9);
    let (xs, y) = toy_problem(n, d, 5);
    let domain = Domain::unit_cube(d);
    let h = [0.4, 0.45, 0.5];
    let opts = BackfitOptions {
        variant: Variant::LocalLinear,
        tol: 1e-13,
        max_iter: 5000,
        grid_points: g,
        ..BackfitOptions::default()
    };
    let design = BackfitDesign::new(&xs, n, d, &h, &domain, &opts).unwrap();
    let fit = design.fit(&y).unwrap();
    let oracle = brute_force_fit(&xs, &y, d, &h, &domain, opts.kernel, g, Variant::LocalLinear);
    for i in 0..n {
        let x = &xs[i * d..(i + 1) * d];
        assert!((fit.predict(x).unwrap() - oracle.predict(x)).abs() <= 1e-8);
    }
}
