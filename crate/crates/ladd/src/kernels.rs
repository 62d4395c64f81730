//! Second-order smoothing kernels on `[-1, 1]`.
//!
//! All kernels are symmetric probability densities supported on `[-1, 1]`.
//! The truncated Gaussian is the standard normal cut at `±4` and rescaled so
//! its support is again `[-1, 1]`.
//!
//! Near a domain boundary the plain rescaled kernel no longer integrates to
//! one over the domain; [`boundary_kernel`] applies the cut-and-normalize
//! correction, dividing by the kernel mass that actually falls inside.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Kernel family used for all smoothing operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// `K(u) = 3/4 (1 - u^2)` on `[-1, 1]`.
    #[default]
    Epanechnikov,
    /// `K(u) = 15/16 (1 - u^2)^2` on `[-1, 1]`.
    Quartic,
    /// Standard normal truncated at `±4`, rescaled to `[-1, 1]`.
    TruncGauss,
}

/// Standard normal density.
fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Mass of the standard normal on `[-a, a]`.
fn normal_mass(a: f64) -> f64 {
    libm::erf(a / std::f64::consts::SQRT_2)
}

/// `∫_{-a}^{a} x^j φ(x) dx` for even `j` (odd moments vanish by symmetry).
fn normal_moment(j: usize, a: f64) -> f64 {
    match j {
        0 => normal_mass(a),
        2 => normal_mass(a) - 2.0 * a * phi(a),
        4 => 3.0 * normal_mass(a) - 2.0 * a * (a * a + 3.0) * phi(a),
        _ => unreachable!("only even j up to 4 are needed"),
    }
}

/// Truncation point of the pre-rescaling normal.
const TRUNC: f64 = 4.0;

impl KernelSpec {
    /// Kernel value `K(u)`; zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            KernelSpec::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelSpec::Quartic => {
                let t = 1.0 - u * u;
                0.9375 * t * t
            }
            KernelSpec::TruncGauss => TRUNC * phi(TRUNC * u) / normal_mass(TRUNC),
        }
    }

    /// Cumulative kernel `∫_{-1}^{t} K(s) ds`, clamped to `[0, 1]`.
    pub fn cdf(self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self {
            KernelSpec::Epanechnikov => 0.5 + 0.75 * t - 0.25 * t * t * t,
            KernelSpec::Quartic => {
                let t3 = t * t * t;
                0.5 + 0.9375 * (t - 2.0 * t3 / 3.0 + t3 * t * t / 5.0)
            }
            KernelSpec::TruncGauss => {
                let m = normal_mass(TRUNC);
                // Phi(4t) - Phi(-4), expressed through erf to keep full precision.
                0.5 * (libm::erf(TRUNC * t / std::f64::consts::SQRT_2) + m) / m
            }
        }
    }

    /// Moment `μ_j(K^l) = ∫ u^j K(u)^l du` for `j ∈ 0..=4`, `l ∈ 1..=2`.
    ///
    /// Values are closed-form. Panics if `j` or `l` is out of range.
    pub fn moment(self, j: usize, l: usize) -> f64 {
        assert!(j <= 4, "moment order j must be in 0..=4, got {j}");
        assert!((1..=2).contains(&l), "power l must be 1 or 2, got {l}");
        if j % 2 == 1 {
            return 0.0;
        }
        match (self, l) {
            (KernelSpec::Epanechnikov, 1) => [1.0, 0.0, 0.2, 0.0, 3.0 / 35.0][j],
            (KernelSpec::Epanechnikov, 2) => [0.6, 0.0, 3.0 / 35.0, 0.0, 1.0 / 35.0][j],
            (KernelSpec::Quartic, 1) => [1.0, 0.0, 1.0 / 7.0, 0.0, 1.0 / 21.0][j],
            (KernelSpec::Quartic, 2) => [5.0 / 7.0, 0.0, 5.0 / 77.0, 0.0, 15.0 / 1001.0][j],
            (KernelSpec::TruncGauss, 1) => {
                let m = normal_mass(TRUNC);
                normal_moment(j, TRUNC) / (TRUNC.powi(j as i32) * m)
            }
            (KernelSpec::TruncGauss, 2) => {
                // K(u)^2 = 16 φ(4u)^2 / M^2 and φ(x)^2 = φ(√2 x)·φ(0), so the
                // square reduces to normal moments at 4√2.
                let m = normal_mass(TRUNC);
                let a = TRUNC * std::f64::consts::SQRT_2;
                4.0 * normal_moment(j, a)
                    / (TRUNC.powi(j as i32)
                        * m
                        * m
                        * 2f64.powf((j as f64 + 1.0) / 2.0)
                        * (2.0 * PI).sqrt())
            }
            _ => unreachable!(),
        }
    }

    /// Truncated moment `∫_a^b t^l K(t) dt` for `l ∈ 0..=2`, with the
    /// integration limits clamped to the support `[-1, 1]`.
    ///
    /// These feed the boundary form of the smoother self-weight: a local
    /// linear fit evaluated at a point whose kernel support is cut has an
    /// equivalent-kernel peak `K(0)·s2 / (s0·s2 - s1²)` built from the
    /// truncated moments `s_l` over the remaining support.
    pub fn partial_moment(self, l: usize, a: f64, b: f64) -> f64 {
        assert!(l <= 2, "partial moment order l must be in 0..=2, got {l}");
        let a = a.clamp(-1.0, 1.0);
        let b = b.clamp(-1.0, 1.0);
        if a >= b {
            return 0.0;
        }
        if l == 0 {
            return self.cdf(b) - self.cdf(a);
        }
        let anti = |t: f64| -> f64 {
            match (self, l) {
                (KernelSpec::Epanechnikov, 1) => 0.75 * (t * t / 2.0 - t.powi(4) / 4.0),
                (KernelSpec::Epanechnikov, 2) => 0.25 * t.powi(3) - 0.15 * t.powi(5),
                (KernelSpec::Quartic, 1) => {
                    0.9375 * (t * t / 2.0 - t.powi(4) / 2.0 + t.powi(6) / 6.0)
                }
                (KernelSpec::Quartic, 2) => {
                    0.9375 * (t.powi(3) / 3.0 - 0.4 * t.powi(5) + t.powi(7) / 7.0)
                }
                (KernelSpec::TruncGauss, 1) => {
                    // ∫ t·4φ(4t)/M dt = -φ(4t)/(4M).
                    -phi(TRUNC * t) / (TRUNC * normal_mass(TRUNC))
                }
                (KernelSpec::TruncGauss, 2) => {
                    // ∫ t²·4φ(4t)/M dt = (Φ(4t) - 4t·φ(4t))/(16M), with the
                    // constant part of Φ dropping out of the difference.
                    let x = TRUNC * t;
                    (0.5 * libm::erf(x / std::f64::consts::SQRT_2) - x * phi(x))
                        / (TRUNC * TRUNC * normal_mass(TRUNC))
                }
                _ => unreachable!(),
            }
        };
        anti(b) - anti(a)
    }

    /// `μ_2(K)`, the kernel variance.
    pub fn mu2(self) -> f64 {
        self.moment(2, 1)
    }

    /// `∫ K(u)^2 du`, the kernel roughness.
    pub fn roughness(self) -> f64 {
        self.moment(0, 2)
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            "quartic" => Ok(KernelSpec::Quartic),
            "tgauss" => Ok(KernelSpec::TruncGauss),
            other => Err(Error::InvalidInput(format!(
                "unknown kernel '{other}' (expected epanechnikov, quartic, or tgauss)"
            ))),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            KernelSpec::Epanechnikov => "epanechnikov",
            KernelSpec::Quartic => "quartic",
            KernelSpec::TruncGauss => "tgauss",
        };
        f.write_str(name)
    }
}

/// Mass of `h^{-1} K((t - v)/h)` over `t ∈ [lo, hi]`.
///
/// This is the denominator of the cut-and-normalize boundary correction; it
/// equals one whenever `[v - h, v + h] ⊆ [lo, hi]`.
#[inline]
pub fn boundary_mass(spec: KernelSpec, h: f64, v: f64, lo: f64, hi: f64) -> f64 {
    spec.cdf((hi - v) / h) - spec.cdf((lo - v) / h)
}

/// Boundary-corrected scaled kernel `K_h(u, v)` on the domain `[lo, hi]`.
///
/// For a data point `v ∈ [lo, hi]` the kernel centered at `v` is rescaled by
/// `h` and divided by its mass inside the domain, so that for every fixed `v`
/// `∫_lo^hi K_h(u, v) du = 1`. Away from the boundary this reduces to the
/// plain `h^{-1} K((u - v)/h)`.
#[inline]
pub fn boundary_kernel(spec: KernelSpec, h: f64, u: f64, v: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(h > 0.0 && h.is_finite(), "bandwidth must be positive");
    debug_assert!(lo < hi, "empty domain");
    debug_assert!((lo..=hi).contains(&v), "data point outside domain");
    if u < lo || u > hi {
        return 0.0;
    }
    let raw = spec.eval((u - v) / h) / h;
    if raw == 0.0 {
        return 0.0;
    }
    raw / boundary_mass(spec, h, v, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_point_values() {
        let k = KernelSpec::Epanechnikov;
        assert_eq!(k.eval(0.0), 0.75);
        assert_eq!(k.eval(-0.5), 0.5625);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-1.0000001), 0.0);
        assert_eq!(k.eval(7.0), 0.0);
    }

    #[test]
    fn moments_match_frozen_values() {
        let k = KernelSpec::Epanechnikov;
        assert!((k.moment(2, 1) - 0.2).abs() < 1e-15);
        assert!((k.moment(0, 2) - 0.6).abs() < 1e-15);
        assert_eq!(k.moment(1, 1), 0.0);
        assert_eq!(k.moment(3, 2), 0.0);
    }

    #[test]
    fn boundary_kernel_interior_and_edge() {
        let k = KernelSpec::Epanechnikov;
        // No truncation: plain scaled kernel.
        assert!((boundary_kernel(k, 0.1, 0.0, 0.0, -1.0, 1.0) - 7.5).abs() < 1e-12);
        // Half the kernel mass is cut at the edge, doubling the value.
        assert!((boundary_kernel(k, 0.1, -1.0, -1.0, -1.0, 1.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_kernel_zero_outside_domain() {
        let k = KernelSpec::Epanechnikov;
        assert_eq!(boundary_kernel(k, 0.5, 1.2, 0.9, -1.0, 1.0), 0.0);
        assert_eq!(boundary_kernel(k, 0.5, -1.2, -0.9, -1.0, 1.0), 0.0);
    }

    #[test]
    fn cdf_endpoints() {
        for k in [
            KernelSpec::Epanechnikov,
            KernelSpec::Quartic,
            KernelSpec::TruncGauss,
        ] {
            assert_eq!(k.cdf(-1.0), 0.0);
            assert_eq!(k.cdf(1.0), 1.0);
            assert!((k.cdf(0.0) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    #[should_panic(expected = "moment order")]
    fn moment_order_out_of_range_panics() {
        KernelSpec::Epanechnikov.moment(5, 1);
    }

    #[test]
    fn partial_moments_recover_full_moments() {
        for k in [
            KernelSpec::Epanechnikov,
            KernelSpec::Quartic,
            KernelSpec::TruncGauss,
        ] {
            for l in 0..=2 {
                let full = k.partial_moment(l, -1.0, 1.0);
                assert!((full - k.moment(l, 1)).abs() < 1e-14, "kernel {k} l={l}");
                // Clamping: limits beyond the support change nothing.
                assert_eq!(k.partial_moment(l, -9.0, 9.0), full);
                // Symmetric halves: even integrands split evenly, odd cancel.
                let left = k.partial_moment(l, -1.0, 0.0);
                let right = k.partial_moment(l, 0.0, 1.0);
                if l % 2 == 0 {
                    assert!((left - right).abs() < 1e-15);
                } else {
                    assert!((left + right).abs() < 1e-15);
                }
            }
            assert_eq!(k.partial_moment(1, 0.4, 0.4), 0.0);
        }
    }
}
