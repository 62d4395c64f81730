//! Closed-form leading-order bias, variance, and optimal smoothing
//! parameters of the windowed additive estimator under a uniform design.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use serde::Serialize;

/// Curvature of the target function at the evaluation point, plus noise
/// level and kernel.
#[derive(Debug, Clone)]
pub struct CurvatureInput {
    pub d: usize,
    /// Second derivatives `r''_{jj}(x0)`.
    pub second_diag: Vec<f64>,
    /// Fourth cross derivatives `r''''_{jjkk}(x0)` for `j != k`; must be
    /// symmetric, diagonal unused.
    pub fourth_cross: Vec<Vec<f64>>,
    pub sigma: f64,
    pub kernel: KernelSpec,
}

impl CurvatureInput {
    pub fn new(
        second_diag: Vec<f64>,
        fourth_cross: Vec<Vec<f64>>,
        sigma: f64,
        kernel: KernelSpec,
    ) -> Result<Self> {
        let d = second_diag.len();
        if d == 0 {
            return Err(Error::InvalidInput("need at least one coordinate".into()));
        }
        if fourth_cross.len() != d || fourth_cross.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput(
                "fourth-derivative table must be d x d".into(),
            ));
        }
        for j in 0..d {
            for k in 0..d {
                if (fourth_cross[j][k] - fourth_cross[k][j]).abs()
                    > 1e-8 * (1.0 + fourth_cross[j][k].abs())
                {
                    return Err(Error::InvalidInput(
                        "fourth-derivative table must be symmetric".into(),
                    ));
                }
            }
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidInput("sigma must be non-negative".into()));
        }
        Ok(CurvatureInput {
            d,
            second_diag,
            fourth_cross,
            sigma,
            kernel,
        })
    }

    /// `sum_{j != k} r''''_{jjkk}`.
    pub fn fourth_cross_sum(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.d {
            for k in 0..self.d {
                if j != k {
                    s += self.fourth_cross[j][k];
                }
            }
        }
        s
    }
}

/// Coefficients of the asymptotic mean squared error
/// `(a C_h^2 - b)^2 w^8 + c / (n C_h w^{d+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbcCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Leading bias term under a uniform design:
/// `(mu2(K)/2) sum_j h_j^2 r''_{jj} - (w^4 / 72) sum_{j != k} r''''_{jjkk}`.
///
/// The first part is the usual within-window smoothing bias. The second is
/// the additivity deficit: the fourth-order Taylor term of the target on the
/// rescaled window contributes `(w^4/8) r''''_{jjkk} u_j^2 u_k^2` per ordered
/// pair, and the projection of `u_j^2 u_k^2` onto additive functions under
/// the window-uniform weight leaves `-1/9` at the window center (intercept
/// `1/9` minus two component values of `1/9` each), giving `-w^4/72` per
/// ordered pair.
pub fn bias_uniform(cv: &CurvatureInput, h: &[f64], w: f64) -> Result<f64> {
    if h.len() != cv.d {
        return Err(Error::InvalidInput("bandwidth length mismatch".into()));
    }
    let mu2 = cv.kernel.mu2();
    let curv: f64 = h
        .iter()
        .zip(&cv.second_diag)
        .map(|(hj, r2)| hj * hj * r2)
        .sum();
    Ok(0.5 * mu2 * curv - w.powi(4) / 72.0 * cv.fourth_cross_sum())
}

/// Leading variance term:
/// `2 mu0(K^2) sigma^2 sum_j (n w^{d-1} h_j)^{-1}`.
pub fn variance_formula(cv: &CurvatureInput, n: usize, w: f64, h: &[f64]) -> Result<f64> {
    if h.len() != cv.d {
        return Err(Error::InvalidInput("bandwidth length mismatch".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let r = cv.kernel.roughness();
    let wpow = w.powi(cv.d as i32 - 1);
    let s: f64 = h.iter().map(|hj| 1.0 / (n as f64 * wpow * hj)).sum();
    Ok(2.0 * r * cv.sigma * cv.sigma * s)
}

/// The `(a, b, c)` coefficients of the asymptotic MSE.
pub fn abc(cv: &CurvatureInput) -> AbcCoefficients {
    let a = 0.5 * cv.kernel.mu2() * cv.second_diag.iter().sum::<f64>();
    let b = cv.fourth_cross_sum() / 72.0;
    let c = 2.0 * cv.d as f64 * cv.kernel.roughness() * cv.sigma * cv.sigma;
    AbcCoefficients { a, b, c }
}

/// Asymptotic MSE as a function of `w` under the coupling `h = C_h w^2`:
/// `m(w) = (a C_h^2 - b)^2 w^8 + c / (n C_h w^{d+1})`.
pub fn asymptotic_mse(coef: &AbcCoefficients, c_h: f64, d: usize, n: usize, w: f64) -> f64 {
    let bias = coef.a * c_h * c_h - coef.b;
    bias * bias * w.powi(8) + coef.c / (n as f64 * c_h * w.powi(d as i32 + 1))
}

/// Closed-form minimizer of [`asymptotic_mse`] in `w`:
/// `w = [c (d+1) / (8 C_h (a C_h^2 - b)^2)]^{1/(9+d)} n^{-1/(9+d)}`.
pub fn optimal_w(coef: &AbcCoefficients, c_h: f64, d: usize, n: usize) -> Result<f64> {
    if !(c_h > 0.0) {
        return Err(Error::InvalidInput("C_h must be positive".into()));
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("n and d must be positive".into()));
    }
    if !(coef.c > 0.0) {
        return Err(Error::InvalidInput(
            "variance coefficient c must be positive (sigma > 0)".into(),
        ));
    }
    let bias = coef.a * c_h * c_h - coef.b;
    if bias == 0.0 {
        return Err(Error::InvalidInput(
            "a*C_h^2 = b: leading bias cancels, no interior optimum; pick a different C_h"
                .into(),
        ));
    }
    let expo = 1.0 / (9.0 + d as f64);
    Ok((coef.c * (d as f64 + 1.0) / (8.0 * c_h * bias * bias)).powf(expo)
        * (n as f64).powf(-expo))
}

/// Bias-balancing choice `C_h = sqrt((2/(d-1)) (-b/a))`, defined when
/// `a b < 0` and `d >= 2`.
pub fn optimal_ch(coef: &AbcCoefficients, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidInput(
            "optimal C_h needs d >= 2 (no cross term in one dimension)".into(),
        ));
    }
    if !(coef.a * coef.b < 0.0) {
        return Err(Error::InvalidInput(
            "optimal C_h needs a*b < 0 (opposing bias terms)".into(),
        ));
    }
    Ok((2.0 / (d as f64 - 1.0) * (-coef.b / coef.a)).sqrt())
}

/// Orders of the optimal parameters and risk in `n`.
#[derive(Debug, Clone, Serialize)]
pub struct RateSummary {
    pub d: usize,
    pub n: usize,
    /// Exponent of `n` in the optimal window half-width.
    pub w_exponent: f64,
    /// Exponent of `n` in the optimal bandwidth (`h ~ w^2`).
    pub h_exponent: f64,
    /// Exponent of `n` in the optimal MSE.
    pub mse_exponent: f64,
    pub w_order: f64,
    pub h_order: f64,
    pub mse_order: f64,
    /// `(d+1)/2`: the windowed additive estimator at dimension `d` behaves
    /// like a full local linear estimator at this dimension.
    pub equivalent_dimension: f64,
    /// The full-rate comparison underlying `mse_order` is established for
    /// `d <= 8` only.
    pub full_rate_established: bool,
}

pub fn rate_summary(d: usize, n: usize) -> RateSummary {
    let dd = d as f64;
    let nf = n as f64;
    let w_exponent = -1.0 / (9.0 + dd);
    let h_exponent = -2.0 / (9.0 + dd);
    let mse_exponent = -8.0 / (9.0 + dd);
    RateSummary {
        d,
        n,
        w_exponent,
        h_exponent,
        mse_exponent,
        w_order: nf.powf(w_exponent),
        h_order: nf.powf(h_exponent),
        mse_order: nf.powf(mse_exponent),
        equivalent_dimension: (dd + 1.0) / 2.0,
        full_rate_established: (1..=8).contains(&d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quartic_cross_curvature(sigma: f64) -> CurvatureInput {
        // r = x1^2 x2^2 at the origin: r''_{jj} = 0, r''''_{1122} = 4.
        CurvatureInput::new(
            vec![0.0, 0.0],
            vec![vec![0.0, 4.0], vec![4.0, 0.0]],
            sigma,
            KernelSpec::Epanechnikov,
        )
        .unwrap()
    }

    #[test]
    fn bias_matches_hand_arithmetic() {
        // r = x1^2 x2^2 at 0 has sum_{j!=k} r'''' = 8, so the pure window
        // bias at w = 0.5 is -0.5^4 * 8/72 = -w^4/9.
        let cv = quartic_cross_curvature(0.0);
        let b = bias_uniform(&cv, &[0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(b, -0.5f64.powi(4) * 8.0 / 72.0, epsilon = 1e-15);
        assert_relative_eq!(b, -6.9444444e-3, epsilon = 1e-9);
    }

    #[test]
    fn zero_curvature_zero_bias() {
        let cv = CurvatureInput::new(
            vec![0.0; 3],
            vec![vec![0.0; 3]; 3],
            1.0,
            KernelSpec::Epanechnikov,
        )
        .unwrap();
        assert_eq!(bias_uniform(&cv, &[0.1, 0.2, 0.3], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn variance_matches_hand_arithmetic() {
        let cv = CurvatureInput::new(
            vec![0.0, 0.0],
            vec![vec![0.0; 2]; 2],
            0.5,
            KernelSpec::Epanechnikov,
        )
        .unwrap();
        let v = variance_formula(&cv, 4000, 0.5, &[0.1, 0.1]).unwrap();
        assert_relative_eq!(v, 2.0 * 0.6 * 0.25 * 2.0 / (4000.0 * 0.5 * 0.1), epsilon = 1e-12);
        assert_relative_eq!(v, 0.003, epsilon = 1e-12);
    }

    #[test]
    fn abc_examples() {
        let cv = quartic_cross_curvature(1.0);
        let coef = abc(&cv);
        assert_relative_eq!(coef.a, 0.0, epsilon = 1e-15);
        assert_relative_eq!(coef.b, 8.0 / 72.0, epsilon = 1e-15);
        assert_relative_eq!(coef.c, 2.4, epsilon = 1e-12);

        let cv2 = CurvatureInput::new(
            vec![2.0, 2.0],
            vec![vec![0.0; 2]; 2],
            1.0,
            KernelSpec::Epanechnikov,
        )
        .unwrap();
        let coef2 = abc(&cv2);
        assert_relative_eq!(coef2.a, 0.4, epsilon = 1e-15);
        assert_relative_eq!(coef2.b, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn optimal_w_example_and_scaling() {
        let coef = AbcCoefficients {
            a: 0.4,
            b: 0.0,
            c: 2.4,
        };
        let w = optimal_w(&coef, 1.0, 2, 400).unwrap();
        assert_relative_eq!(w, (7.2f64 / (8.0 * 0.16)).powf(1.0 / 11.0) * 400f64.powf(-1.0 / 11.0), epsilon = 1e-12);
        assert!((w - 0.679).abs() < 5e-3);
        let w16 = optimal_w(&coef, 1.0, 2, 6400).unwrap();
        assert_relative_eq!(w16, w * 16f64.powf(-1.0 / 11.0), epsilon = 1e-12);
    }

    #[test]
    fn optimal_w_degenerate_bias_is_error() {
        let coef = AbcCoefficients {
            a: 1.0,
            b: 1.0,
            c: 2.0,
        };
        assert!(optimal_w(&coef, 1.0, 2, 100).is_err());
    }

    #[test]
    fn optimal_ch_examples() {
        let coef = AbcCoefficients {
            a: 0.4,
            b: -8.0 / 72.0,
            c: 1.0,
        };
        assert_relative_eq!(
            optimal_ch(&coef, 2).unwrap(),
            (2.0f64 / 3.6).sqrt(),
            epsilon = 1e-12
        );
        let eq = AbcCoefficients {
            a: 1.0,
            b: -1.0,
            c: 1.0,
        };
        assert_relative_eq!(optimal_ch(&eq, 3).unwrap(), 1.0, epsilon = 1e-15);
        let bad = AbcCoefficients {
            a: 1.0,
            b: 1.0,
            c: 1.0,
        };
        assert!(optimal_ch(&bad, 2).is_err());
    }

    #[test]
    fn rate_summary_examples() {
        assert_relative_eq!(rate_summary(3, 100).equivalent_dimension, 2.0, epsilon = 1e-15);
        assert_relative_eq!(rate_summary(5, 100).equivalent_dimension, 3.0, epsilon = 1e-15);
        let r400 = rate_summary(2, 400);
        let r4000 = rate_summary(2, 4000);
        assert_relative_eq!(
            r4000.mse_order / r400.mse_order,
            10f64.powf(-8.0 / 11.0),
            epsilon = 1e-12
        );
        assert!(!rate_summary(9, 100).full_rate_established);
    }

    #[test]
    fn superposition_linearity() {
        let cv1 = CurvatureInput::new(
            vec![1.0, 0.0],
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
            0.0,
            KernelSpec::Quartic,
        )
        .unwrap();
        let cv2 = CurvatureInput::new(
            vec![0.0, 3.0],
            vec![vec![0.0, -1.0], vec![-1.0, 0.0]],
            0.0,
            KernelSpec::Quartic,
        )
        .unwrap();
        let sum = CurvatureInput::new(
            vec![1.0, 3.0],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            0.0,
            KernelSpec::Quartic,
        )
        .unwrap();
        let h = [0.17, 0.23];
        let w = 0.6;
        let lhs = bias_uniform(&sum, &h, w).unwrap();
        let rhs = bias_uniform(&cv1, &h, w).unwrap() + bias_uniform(&cv2, &h, w).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-14);
    }
}
