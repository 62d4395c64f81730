//! Dense form of the discrete backfitting stationarity system.
//!
//! The smoothed least-squares criterion is quadratic in the tabulated
//! component values, so its stationarity conditions are one linear system
//! `T theta = R y`. `T` has one exact null direction per coordinate
//! (shifting a component by a constant while adjusting the intercept), so
//! the system is solved with appended centering constraints in symmetric
//! KKT form. Because the KKT matrix is response-independent it is
//! factorized once per design; every subsequent fit or prediction-weight
//! query is a single triangular solve.

use super::{AdditiveFit, BackfitDesign, Variant};
use crate::error::{Error, Result};
use crate::sums::csum;
use nalgebra::{DMatrix, DVector, Dyn};

/// Factorized KKT system for a fixed design.
pub struct DenseSystem {
    lu: nalgebra::LU<f64, Dyn, Dyn>,
    /// Number of primal unknowns (intercept plus tabulated components).
    size: usize,
    /// Unknowns plus one centering constraint per coordinate.
    total: usize,
}

impl std::fmt::Debug for DenseSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseSystem")
            .field("size", &self.size)
            .field("total", &self.total)
            .finish()
    }
}

impl BackfitDesign {
    #[inline]
    fn per_coord(&self) -> usize {
        match self.variant {
            Variant::LocalConstant => self.g,
            Variant::LocalLinear => 2 * self.g,
        }
    }

    #[inline]
    fn m_off(&self, j: usize) -> usize {
        1 + j * self.per_coord()
    }

    #[inline]
    fn b_off(&self, j: usize) -> usize {
        debug_assert_eq!(self.variant, Variant::LocalLinear);
        1 + j * self.per_coord() + self.g
    }

    /// Returns the factorized stationarity system, building it on first use.
    pub fn dense_system(&self) -> Result<&DenseSystem> {
        self.dense.get_or_try_init(|| self.build_dense())
    }

    fn build_dense(&self) -> Result<DenseSystem> {
        let (d, g) = (self.d, self.g);
        let size = 1 + d * self.per_coord();
        let total = size + d;
        let ridge = super::RIDGE_BASE / self.n as f64;
        let slopes = self.variant == Variant::LocalLinear;
        let mut k = DMatrix::<f64>::zeros(total, total);
        k[(0, 0)] = 1.0;
        for j in 0..d {
            let trapw = self.grid.trap_weights(j);
            let ci = size + j;
            for gj in 0..g {
                let tw = trapw[gj];
                let mi = self.m_off(j) + gj;
                let eps = if self.ridged[j][gj] { ridge } else { 0.0 };
                k[(0, mi)] = tw * self.f0[j][gj];
                k[(mi, 0)] = k[(0, mi)];
                k[(mi, mi)] = tw * (self.f0[j][gj] + eps);
                k[(ci, mi)] = tw * self.f0[j][gj];
                k[(mi, ci)] = k[(ci, mi)];
                if slopes {
                    let bi = self.b_off(j) + gj;
                    k[(0, bi)] = tw * self.f1[j][gj];
                    k[(bi, 0)] = k[(0, bi)];
                    k[(mi, bi)] = tw * self.f1[j][gj];
                    k[(bi, mi)] = k[(mi, bi)];
                    k[(bi, bi)] = tw * (self.f2[j][gj] + eps);
                }
            }
        }
        for j in 0..d {
            for kk in (j + 1)..d {
                let trapw_j = self.grid.trap_weights(j);
                let trapw_k = self.grid.trap_weights(kk);
                for gj in 0..g {
                    let mj = self.m_off(j) + gj;
                    for gk in 0..g {
                        let mk = self.m_off(kk) + gk;
                        let w = trapw_j[gj] * trapw_k[gk];
                        let v = w * self.table(j, kk, 0, 0, gj, gk);
                        k[(mj, mk)] = v;
                        k[(mk, mj)] = v;
                        if slopes {
                            let bj = self.b_off(j) + gj;
                            let bk = self.b_off(kk) + gk;
                            let v01 = w * self.table(j, kk, 0, 1, gj, gk);
                            k[(mj, bk)] = v01;
                            k[(bk, mj)] = v01;
                            let v10 = w * self.table(j, kk, 1, 0, gj, gk);
                            k[(bj, mk)] = v10;
                            k[(mk, bj)] = v10;
                            let v11 = w * self.table(j, kk, 1, 1, gj, gk);
                            k[(bj, bk)] = v11;
                            k[(bk, bj)] = v11;
                        }
                    }
                }
            }
        }
        let lu = k.lu();
        Ok(DenseSystem { lu, size, total })
    }

    /// Solves the full stationarity system for one response vector.
    ///
    /// Agrees with [`BackfitDesign::fit`] up to the iteration tolerance and
    /// is the reference route for hat weights.
    pub fn dense_fit(&self, y: &[f64]) -> Result<AdditiveFit> {
        if y.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "response length {} does not match design n = {}",
                y.len(),
                self.n
            )));
        }
        let (ybar, s, ys) = Self::standardize(y);
        if s == 0.0 {
            return Ok(self.trivial_fit(ybar));
        }
        let sys = self.dense_system()?;
        let (g0, g1) = self.response_moments(&ys);
        let mut rhs = DVector::<f64>::zeros(sys.total);
        rhs[0] = csum(ys.iter().copied()) / self.n as f64;
        let slopes = self.variant == Variant::LocalLinear;
        for j in 0..self.d {
            let trapw = self.grid.trap_weights(j);
            for gj in 0..self.g {
                rhs[self.m_off(j) + gj] = trapw[gj] * g0[j][gj];
                if slopes {
                    rhs[self.b_off(j) + gj] = trapw[gj] * g1[j][gj];
                }
            }
        }
        let sol = sys.lu.solve(&rhs).ok_or_else(|| {
            Error::SingularSystem("backfitting stationarity system is singular".into())
        })?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(
                "backfitting stationarity solution is non-finite".into(),
            ));
        }
        let mut components = Vec::with_capacity(self.d);
        let mut betas = Vec::with_capacity(self.d);
        for j in 0..self.d {
            components.push(
                (0..self.g)
                    .map(|gj| s * sol[self.m_off(j) + gj])
                    .collect::<Vec<f64>>(),
            );
            if slopes {
                betas.push(
                    (0..self.g)
                        .map(|gj| s * sol[self.b_off(j) + gj])
                        .collect::<Vec<f64>>(),
                );
            }
        }
        Ok(AdditiveFit {
            grid: self.grid.clone(),
            r0: ybar + s * sol[0],
            components,
            slopes: if slopes { Some(betas) } else { None },
            converged: true,
            iterations: 0,
            ridge_points: self.ridge_points,
            last_update: 0.0,
            bandwidths: self.h.clone(),
        })
    }

    /// Hat (prediction) weights of the additive fit evaluated at `x0`:
    /// the returned `W` satisfies `fit(y).predict(x0) == sum_i W[i] y[i]`
    /// for every response vector, up to solver tolerance.
    pub fn prediction_weights(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != self.d {
            return Err(Error::InvalidInput(
                "point dimension does not match design".into(),
            ));
        }
        let sys = self.dense_system()?;
        let mut rhs = DVector::<f64>::zeros(sys.total);
        rhs[0] = 1.0;
        for j in 0..self.d {
            let (k, t) = self.grid.interp_coeffs(j, x0[j])?;
            rhs[self.m_off(j) + k] += 1.0 - t;
            rhs[self.m_off(j) + k + 1] += t;
        }
        // The KKT matrix is symmetric, so the adjoint solve reuses the same
        // factorization.
        let z = sys.lu.solve(&rhs).ok_or_else(|| {
            Error::SingularSystem("backfitting stationarity system is singular".into())
        })?;
        let slopes = self.variant == Variant::LocalLinear;
        let inv_n = 1.0 / self.n as f64;
        let mut wts = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = z[0];
            for j in 0..self.d {
                let axis = self.grid.axis(j);
                let trapw = self.grid.trap_weights(j);
                let xij = self.x[i * self.d + j];
                let row = &self.wrows[j][i * self.g..(i + 1) * self.g];
                let (s, e) = self.support[j][i];
                for gg in s as usize..e as usize {
                    let c = trapw[gg] * row[gg];
                    acc += z[self.m_off(j) + gg] * c;
                    if slopes {
                        acc += z[self.b_off(j) + gg] * c * (xij - axis[gg]);
                    }
                }
            }
            wts[i] = acc * inv_n;
        }
        Ok(wts)
    }
}
