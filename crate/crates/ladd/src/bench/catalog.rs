//! Regression-function catalog with analytic derivatives.
//!
//! Each function reports its second derivatives `r''_{jj}` and fourth cross
//! derivatives `r''''_{jjkk}` in closed form, so asymptotic oracles never
//! rely on numeric differentiation of fitted surfaces.

use crate::asymptotics::CurvatureInput;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use serde::{Deserialize, Serialize};

/// One Gaussian bump `a * exp(-b (t - c)^2)` and its one-dimensional
/// derivative factors.
#[derive(Debug, Clone, Copy)]
struct Bump {
    a: f64,
    b: f64,
    c: f64,
}

impl Bump {
    #[inline]
    fn value(&self, t: f64) -> f64 {
        let s = t - self.c;
        self.a * (-self.b * s * s).exp()
    }

    /// `g''(t) / g(t) = 4 b^2 (t-c)^2 - 2 b`.
    #[inline]
    fn q2(&self, t: f64) -> f64 {
        let s = t - self.c;
        4.0 * self.b * self.b * s * s - 2.0 * self.b
    }

    /// `g''''(t) / g(t) = 16 b^4 (t-c)^4 - 48 b^3 (t-c)^2 + 12 b^2`.
    #[inline]
    fn q4(&self, t: f64) -> f64 {
        let s = t - self.c;
        let b = self.b;
        16.0 * b.powi(4) * s.powi(4) - 48.0 * b.powi(3) * s * s + 12.0 * b * b
    }
}

/// The three bumps shared by the peaks functions.
const PEAKS: [Bump; 3] = [
    Bump {
        a: 0.3,
        b: 2.0,
        c: -0.5,
    },
    Bump {
        a: 0.7,
        b: 4.0,
        c: 0.5,
    },
    Bump {
        a: 0.5,
        b: 0.5,
        c: 0.0,
    },
];

/// `cos(pi sqrt(s))` as an entire function of `s = ||x||^2`, with
/// derivatives in `s`. The power series `sum_m (-1)^m pi^{2m} s^m / (2m)!`
/// avoids the sqrt singularity at the origin.
fn cos_pi_sqrt(s: f64, order: usize) -> f64 {
    debug_assert!(s >= 0.0 && order <= 4);
    let mut acc = 0.0;
    let mut term;
    // log-free recurrence over m; factorial ratios folded incrementally.
    // coeff_m = (-1)^m pi^{2m} / (2m)! * m! / (m-order)!
    let mut pi2m = 1.0; // pi^{2m}
    let mut fact2m = 1.0f64; // (2m)!
    let mut sign = 1.0;
    for m in 0..80usize {
        if m >= order {
            // falling factorial m (m-1) ... (m-order+1)
            let mut fall = 1.0;
            for t in 0..order {
                fall *= (m - t) as f64;
            }
            term = sign * pi2m / fact2m * fall * s.powi((m - order) as i32);
            acc += term;
            if term.abs() <= 1e-18 * acc.abs().max(1e-30) && m > order + 4 {
                break;
            }
        }
        sign = -sign;
        pi2m *= std::f64::consts::PI * std::f64::consts::PI;
        fact2m *= ((2 * m + 1) * (2 * m + 2)) as f64;
    }
    acc
}

/// Catalog of regression functions used by the simulation harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum RegressionFunction {
    /// `x1^2 + x2^2 + (alpha/(1-alpha)) x1 x2` on `[-1,1]^2`.
    QuadInteract { alpha: f64 },
    /// Additive sum of three Gaussian bumps per coordinate, `d = 2`.
    AdditivePeaks,
    /// The same bumps placed on the diagonal of `[-1,1]^2` (products over
    /// coordinates instead of sums), `d = 2`.
    SuperposedPeaks,
    /// `cos(pi ||x||)`.
    Periodic { d: usize },
    /// `x1^2 + alpha x1 (x2 + ... + x10)` on `[-1,1]^10`.
    D10Interact { alpha: f64 },
}

impl RegressionFunction {
    /// Builds a catalog entry from a CLI-style name.
    pub fn build(name: &str, alpha: Option<f64>, d: Option<usize>) -> Result<Self> {
        let need_alpha = || {
            alpha.ok_or_else(|| {
                Error::InvalidInput(format!("function '{name}' needs --alpha"))
            })
        };
        let f = match name {
            "quad_interact" => {
                let a = need_alpha()?;
                if !(0.0..1.0).contains(&a) {
                    return Err(Error::InvalidInput(
                        "quad_interact alpha must lie in [0, 1)".into(),
                    ));
                }
                RegressionFunction::QuadInteract { alpha: a }
            }
            "additive_peaks" => RegressionFunction::AdditivePeaks,
            "superposed_peaks" => RegressionFunction::SuperposedPeaks,
            "periodic" => RegressionFunction::Periodic { d: d.unwrap_or(2) },
            "d10_interact" => RegressionFunction::D10Interact {
                alpha: need_alpha()?,
            },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown function '{other}' (expected quad_interact, additive_peaks, \
                     superposed_peaks, periodic, or d10_interact)"
                )))
            }
        };
        if let Some(d) = d {
            if d != f.dim() {
                return Err(Error::InvalidInput(format!(
                    "function '{name}' has dimension {}, got --d {d}",
                    f.dim()
                )));
            }
        }
        Ok(f)
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegressionFunction::QuadInteract { .. } => "quad_interact",
            RegressionFunction::AdditivePeaks => "additive_peaks",
            RegressionFunction::SuperposedPeaks => "superposed_peaks",
            RegressionFunction::Periodic { .. } => "periodic",
            RegressionFunction::D10Interact { .. } => "d10_interact",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            RegressionFunction::QuadInteract { .. }
            | RegressionFunction::AdditivePeaks
            | RegressionFunction::SuperposedPeaks => 2,
            RegressionFunction::Periodic { d } => *d,
            RegressionFunction::D10Interact { .. } => 10,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, function needs {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            RegressionFunction::QuadInteract { alpha } => {
                x[0] * x[0] + x[1] * x[1] + alpha / (1.0 - alpha) * x[0] * x[1]
            }
            RegressionFunction::AdditivePeaks => {
                0.5 * x
                    .iter()
                    .map(|&t| PEAKS.iter().map(|b| b.value(t)).sum::<f64>())
                    .sum::<f64>()
            }
            RegressionFunction::SuperposedPeaks => PEAKS
                .iter()
                .map(|b| b.a * x.iter().map(|&t| b.value(t) / b.a).product::<f64>())
                .sum(),
            RegressionFunction::Periodic { .. } => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                cos_pi_sqrt(s, 0)
            }
            RegressionFunction::D10Interact { alpha } => {
                x[0] * x[0] + alpha * x[0] * x[1..].iter().sum::<f64>()
            }
        })
    }

    /// Second derivatives `r''_{jj}(x)` for every coordinate.
    pub fn second_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let d = self.dim();
        Ok(match self {
            RegressionFunction::QuadInteract { .. } => vec![2.0, 2.0],
            RegressionFunction::AdditivePeaks => x
                .iter()
                .map(|&t| 0.5 * PEAKS.iter().map(|b| b.q2(t) * b.value(t)).sum::<f64>())
                .collect(),
            RegressionFunction::SuperposedPeaks => (0..d)
                .map(|j| {
                    PEAKS
                        .iter()
                        .map(|b| {
                            let prod: f64 =
                                b.a * x.iter().map(|&t| b.value(t) / b.a).product::<f64>();
                            b.q2(x[j]) * prod
                        })
                        .sum()
                })
                .collect(),
            RegressionFunction::Periodic { .. } => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let g1 = cos_pi_sqrt(s, 1);
                let g2 = cos_pi_sqrt(s, 2);
                x.iter().map(|&t| 2.0 * g1 + 4.0 * t * t * g2).collect()
            }
            RegressionFunction::D10Interact { .. } => {
                let mut v = vec![0.0; d];
                v[0] = 2.0;
                v
            }
        })
    }

    /// Fourth derivatives `r''''_{jjkk}(x)` as a symmetric `d x d` table
    /// (diagonal holds `r''''_{jjjj}`).
    pub fn fourth_cross(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x)?;
        let d = self.dim();
        let mut out = vec![vec![0.0; d]; d];
        match self {
            RegressionFunction::QuadInteract { .. } | RegressionFunction::D10Interact { .. } => {}
            RegressionFunction::AdditivePeaks => {
                for j in 0..d {
                    out[j][j] = 0.5 * PEAKS.iter().map(|b| b.q4(x[j]) * b.value(x[j])).sum::<f64>();
                }
            }
            RegressionFunction::SuperposedPeaks => {
                for j in 0..d {
                    for k in 0..d {
                        out[j][k] = PEAKS
                            .iter()
                            .map(|b| {
                                let prod: f64 =
                                    b.a * x.iter().map(|&t| b.value(t) / b.a).product::<f64>();
                                let factor = if j == k {
                                    b.q4(x[j])
                                } else {
                                    b.q2(x[j]) * b.q2(x[k])
                                };
                                factor * prod
                            })
                            .sum();
                    }
                }
            }
            RegressionFunction::Periodic { .. } => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let g2 = cos_pi_sqrt(s, 2);
                let g3 = cos_pi_sqrt(s, 3);
                let g4 = cos_pi_sqrt(s, 4);
                for j in 0..d {
                    for k in 0..d {
                        let (xj2, xk2) = (x[j] * x[j], x[k] * x[k]);
                        out[j][k] = if j == k {
                            12.0 * g2 + 48.0 * xj2 * g3 + 16.0 * xj2 * xj2 * g4
                        } else {
                            4.0 * g2 + 8.0 * (xj2 + xk2) * g3 + 16.0 * xj2 * xk2 * g4
                        };
                    }
                }
            }
        }
        Ok(out)
    }

    /// Bundles the derivative information at `x` for the asymptotic oracle.
    pub fn curvature(&self, x: &[f64], sigma: f64, kernel: KernelSpec) -> Result<CurvatureInput> {
        CurvatureInput::new(self.second_diag(x)?, self.fourth_cross(x)?, sigma, kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn point_values_match_hand_arithmetic() {
        let quad0 = RegressionFunction::QuadInteract { alpha: 0.0 };
        assert_relative_eq!(quad0.eval(&[1.0, 1.0]).unwrap(), 2.0, epsilon = 1e-15);
        let quad = RegressionFunction::QuadInteract { alpha: 0.4 };
        assert_relative_eq!(
            quad.eval(&[0.5, 0.5]).unwrap(),
            0.25 + 0.25 + (2.0 / 3.0) * 0.25,
            epsilon = 1e-12
        );
        let per = RegressionFunction::Periodic { d: 2 };
        assert_relative_eq!(per.eval(&[0.0, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(per.eval(&[1.0, 0.0]).unwrap(), -1.0, epsilon = 1e-12);
        let d10 = RegressionFunction::D10Interact { alpha: 0.5 };
        let mut x = vec![0.1; 10];
        x[0] = 0.3;
        let rest: f64 = x[1..].iter().sum();
        assert_relative_eq!(
            d10.eval(&x).unwrap(),
            0.09 + 0.5 * 0.3 * rest,
            epsilon = 1e-15
        );
    }

    #[test]
    fn periodic_series_matches_direct_cosine() {
        // Away from the origin cos(pi ||x||) is directly computable.
        for x in [[0.3f64, -0.4], [0.9, 0.9], [1.0, 1.0], [0.01, 0.0]] {
            let f = RegressionFunction::Periodic { d: 2 };
            let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert_relative_eq!(
                f.eval(&x).unwrap(),
                (std::f64::consts::PI * norm).cos(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn peaks_functions_agree_on_the_diagonal_structure() {
        // On the axes both peaks variants reduce to interpretable sums.
        let add = RegressionFunction::AdditivePeaks;
        let g = |t: f64| PEAKS.iter().map(|b| b.value(t)).sum::<f64>();
        assert_relative_eq!(
            add.eval(&[0.2, -0.7]).unwrap(),
            0.5 * (g(0.2) + g(-0.7)),
            epsilon = 1e-15
        );
        let sup = RegressionFunction::SuperposedPeaks;
        // Direct evaluation of the superposed display at a point.
        let x = [0.25f64, -0.5];
        let direct = 0.3 * (-2.0 * ((x[0] + 0.5).powi(2) + (x[1] + 0.5).powi(2))).exp()
            + 0.7 * (-4.0 * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2))).exp()
            + 0.5 * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp();
        assert_relative_eq!(sup.eval(&x).unwrap(), direct, epsilon = 1e-14);
    }

    fn fd_second(f: &RegressionFunction, x: &[f64], j: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        (f.eval(&xp).unwrap() - 2.0 * f.eval(x).unwrap() + f.eval(&xm).unwrap()) / (h * h)
    }

    fn fd_second_of_diag(f: &RegressionFunction, x: &[f64], j: usize, k: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        (f.second_diag(&xp).unwrap()[j] - 2.0 * f.second_diag(x).unwrap()[j]
            + f.second_diag(&xm).unwrap()[j])
            / (h * h)
    }

    #[test]
    fn derivatives_consistent_with_finite_differences() {
        let h = 1e-3;
        let funcs = vec![
            RegressionFunction::QuadInteract { alpha: 0.4 },
            RegressionFunction::AdditivePeaks,
            RegressionFunction::SuperposedPeaks,
            RegressionFunction::Periodic { d: 2 },
            RegressionFunction::D10Interact { alpha: 1.0 },
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for f in funcs {
            let d = f.dim();
            for _ in 0..10 {
                // Interior points so the stencil stays in the domain.
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.9..=0.9)).collect();
                let sd = f.second_diag(&x).unwrap();
                let fc = f.fourth_cross(&x).unwrap();
                for j in 0..d {
                    let num = fd_second(&f, &x, j, h);
                    let err = (num - sd[j]).abs() / sd[j].abs().max(1.0);
                    assert!(err <= 1e-4, "{} second_diag[{j}] at {x:?}: {err}", f.name());
                    // Fourth derivatives are checked as second differences of
                    // the analytic second derivatives (a direct fourth
                    // difference at this step size drowns in roundoff).
                    for k in 0..d {
                        let num4 = fd_second_of_diag(&f, &x, j, k, h);
                        let err4 = (num4 - fc[j][k]).abs() / fc[j][k].abs().max(1.0);
                        assert!(
                            err4 <= 1e-4,
                            "{} fourth_cross[{j}][{k}] at {x:?}: {err4}",
                            f.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn quad_interact_curvature_feeds_asymptotics() {
        let f = RegressionFunction::QuadInteract { alpha: 0.4 };
        let cv = f
            .curvature(&[0.0, 0.0], 0.5, KernelSpec::Epanechnikov)
            .unwrap();
        let coef = crate::asymptotics::abc(&cv);
        assert_relative_eq!(coef.a, 0.4, epsilon = 1e-15);
        assert_relative_eq!(coef.b, 0.0, epsilon = 1e-15);
        assert_relative_eq!(coef.c, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn build_validates_names_and_dimensions() {
        assert!(RegressionFunction::build("quad_interact", Some(1.0), None).is_err());
        assert!(RegressionFunction::build("quad_interact", None, None).is_err());
        assert!(RegressionFunction::build("nope", None, None).is_err());
        let f = RegressionFunction::build("periodic", None, Some(3)).unwrap();
        assert_eq!(f.dim(), 3);
        assert!(RegressionFunction::build("additive_peaks", None, Some(5)).is_err());
        let d10 = RegressionFunction::build("d10_interact", Some(0.5), None).unwrap();
        assert_eq!(d10.dim(), 10);
    }
}
