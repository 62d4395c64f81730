//! Rectangular domains and equispaced evaluation grids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of grid points per coordinate.
pub const MIN_GRID_POINTS: usize = 5;

/// Axis-aligned rectangle `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidInput("domain bounds length mismatch".into()));
        }
        for j in 0..lo.len() {
            if !lo[j].is_finite() || !hi[j].is_finite() || lo[j] >= hi[j] {
                return Err(Error::InvalidInput(format!(
                    "invalid domain bounds in dimension {j}: [{}, {}]",
                    lo[j], hi[j]
                )));
            }
        }
        Ok(Domain { lo, hi })
    }

    /// The standard cube `[-1, 1]^d`.
    pub fn unit_cube(d: usize) -> Self {
        Domain {
            lo: vec![-1.0; d],
            hi: vec![1.0; d],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

/// Equispaced per-coordinate evaluation grid over a rectangle, with
/// trapezoid quadrature weights for each axis.
#[derive(Debug, Clone)]
pub struct EvalGrid {
    domain: Domain,
    g: usize,
    axes: Vec<Vec<f64>>,
    trapw: Vec<Vec<f64>>,
}

impl EvalGrid {
    /// `g` points per axis, endpoints included.
    pub fn new(domain: Domain, g: usize) -> Result<Self> {
        if g < MIN_GRID_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis, got {g}"
            )));
        }
        let d = domain.dim();
        let mut axes = Vec::with_capacity(d);
        let mut trapw = Vec::with_capacity(d);
        for j in 0..d {
            let (lo, hi) = (domain.lo[j], domain.hi[j]);
            let step = (hi - lo) / (g - 1) as f64;
            let axis: Vec<f64> = (0..g)
                .map(|k| if k + 1 == g { hi } else { lo + step * k as f64 })
                .collect();
            let mut w = vec![step; g];
            w[0] = 0.5 * step;
            w[g - 1] = 0.5 * step;
            axes.push(axis);
            trapw.push(w);
        }
        Ok(EvalGrid {
            domain,
            g,
            axes,
            trapw,
        })
    }

    /// Grid over `[-1, 1]^d`.
    pub fn unit_cube(d: usize, g: usize) -> Result<Self> {
        EvalGrid::new(Domain::unit_cube(d), g)
    }

    #[inline]
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn axis(&self, j: usize) -> &[f64] {
        &self.axes[j]
    }

    #[inline]
    pub fn trap_weights(&self, j: usize) -> &[f64] {
        &self.trapw[j]
    }

    #[inline]
    pub fn step(&self, j: usize) -> f64 {
        (self.domain.hi[j] - self.domain.lo[j]) / (self.g - 1) as f64
    }

    /// Trapezoid integral of values tabulated on axis `j`.
    pub fn trapz(&self, j: usize, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.g);
        values
            .iter()
            .zip(&self.trapw[j])
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Bracketing index and fractional offset for linear interpolation on
    /// axis `j`. Returns `(k, t)` with `t` in `[0, 1]` such that the
    /// interpolant is `(1 - t) * v[k] + t * v[k + 1]`.
    pub fn interp_coeffs(&self, j: usize, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.domain.lo[j], self.domain.hi[j]);
        if x < lo || x > hi {
            return Err(Error::OutOfDomain {
                dim: j,
                value: x,
                lo,
                hi,
            });
        }
        let step = self.step(j);
        let raw = (x - lo) / step;
        let mut k = raw.floor() as usize;
        if k >= self.g - 1 {
            k = self.g - 2;
        }
        let t = ((x - self.axes[j][k]) / step).clamp(0.0, 1.0);
        Ok((k, t))
    }

    /// Linear interpolation of values tabulated on axis `j`.
    pub fn interp(&self, j: usize, values: &[f64], x: f64) -> Result<f64> {
        let (k, t) = self.interp_coeffs(j, x)?;
        Ok((1.0 - t) * values[k] + t * values[k + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_hits_endpoints() {
        let grid = EvalGrid::unit_cube(2, 21).unwrap();
        let axis = grid.axis(0);
        assert_eq!(axis.len(), 21);
        assert_eq!(axis[0], -1.0);
        assert_eq!(axis[20], 1.0);
        assert_relative_eq!(axis[10], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trapz_integrates_linear_exactly() {
        let grid = EvalGrid::unit_cube(1, 11).unwrap();
        let vals: Vec<f64> = grid.axis(0).iter().map(|x| 2.0 + 3.0 * x).collect();
        assert_relative_eq!(grid.trapz(0, &vals), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn interp_reproduces_nodes_and_midpoints() {
        let grid = EvalGrid::unit_cube(1, 5).unwrap();
        let vals = vec![0.0, 1.0, 4.0, 9.0, 16.0];
        assert_relative_eq!(grid.interp(0, &vals, -0.5).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(grid.interp(0, &vals, -0.25).unwrap(), 2.5, epsilon = 1e-14);
        assert_relative_eq!(grid.interp(0, &vals, 1.0).unwrap(), 16.0, epsilon = 1e-14);
        assert!(grid.interp(0, &vals, 1.01).is_err());
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(EvalGrid::unit_cube(2, 4).is_err());
    }

    #[test]
    fn domain_contains() {
        let dom = Domain::unit_cube(2);
        assert!(dom.contains(&[0.0, 1.0]));
        assert!(!dom.contains(&[0.0, 1.0001]));
    }
}
