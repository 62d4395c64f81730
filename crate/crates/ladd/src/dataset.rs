//! Regression sample container.

use crate::error::{Error, Result};
use crate::grid::Domain;

/// A regression sample: `n` observations of `d` covariates plus a response.
///
/// Covariates are stored row-major (`x[i * d + j]` is coordinate `j` of
/// observation `i`). All values must be finite.
#[derive(Debug, Clone)]
pub struct Dataset {
    n: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty sample".into()));
        }
        if x.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "covariate length {} does not match n*d = {}",
                x.len(),
                n * d
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in sample".into()));
        }
        Ok(Dataset { n, d, x, y })
    }

    /// Builds a dataset from per-observation coordinate rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty sample".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged coordinate rows".into()));
        }
        let x: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Dataset::new(x, y, d)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.d + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Replaces the response vector, keeping the design.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "response length {} does not match n = {}",
                y.len(),
                self.n
            )));
        }
        Dataset::new(self.x.clone(), y, self.d)
    }

    /// Checks that every observation lies inside `domain`.
    pub fn check_in_domain(&self, domain: &Domain) -> Result<()> {
        if domain.dim() != self.d {
            return Err(Error::InvalidInput(format!(
                "domain dimension {} does not match data dimension {}",
                domain.dim(),
                self.d
            )));
        }
        for i in 0..self.n {
            for j in 0..self.d {
                let v = self.x(i, j);
                if v < domain.lo[j] || v > domain.hi[j] {
                    return Err(Error::OutOfDomain {
                        dim: j,
                        value: v,
                        lo: domain.lo[j],
                        hi: domain.hi[j],
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(Dataset::new(vec![0.0; 5], vec![0.0; 2], 2).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::new(vec![0.0, f64::NAN], vec![1.0], 2).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![f64::INFINITY], 2).is_err());
    }

    #[test]
    fn row_access() {
        let data = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], vec![10.0, 20.0], 2).unwrap();
        assert_eq!(data.row(1), &[3.0, 4.0]);
        assert_eq!(data.x(0, 1), 2.0);
    }
}
