//! Deterministic design generators on `[-1, 1]^d`.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    RandomUniform,
    FixedEquidistant,
    Jittered,
    LinearSkewed,
}

/// Specification of a design draw. `skew` is only read by
/// [`DesignKind::LinearSkewed`] (density `(1 + beta x)/2`, default 0.5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    #[serde(default = "default_skew")]
    pub skew: f64,
}

fn default_skew() -> f64 {
    0.5
}

impl DesignSpec {
    pub fn new(kind: DesignKind, n: usize, d: usize, seed: u64) -> Self {
        DesignSpec {
            kind,
            n,
            d,
            seed,
            skew: default_skew(),
        }
    }
}

/// Side length `m` of the equidistant grid with `n = m^d`, or an error.
fn grid_side(n: usize, d: usize) -> Result<usize> {
    let m = (n as f64).powf(1.0 / d as f64).round() as usize;
    for cand in m.saturating_sub(1)..=m + 1 {
        if cand >= 1 && cand.pow(d as u32) == n {
            return Ok(cand);
        }
    }
    Err(Error::InvalidInput(format!(
        "equidistant design needs n = m^d, got n = {n}, d = {d}"
    )))
}

/// Equidistant coordinate levels including both endpoints.
fn grid_levels(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    (0..m)
        .map(|k| -1.0 + 2.0 * k as f64 / (m - 1) as f64)
        .collect()
}

/// Inverse CDF of the density `(1 + beta x)/2` on `[-1, 1]`.
#[inline]
fn skewed_quantile(u: f64, beta: f64) -> f64 {
    if beta.abs() < 1e-12 {
        return 2.0 * u - 1.0;
    }
    ((1.0 - beta) * (1.0 - beta) + 4.0 * beta * u).sqrt().mul_add(1.0, -1.0) / beta
}

/// Generates the design coordinates, row-major `n x d`, deterministically
/// from the spec's seed.
pub fn gen_design(spec: &DesignSpec) -> Result<Vec<f64>> {
    let DesignSpec { kind, n, d, seed, skew } = *spec;
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("design needs n >= 1 and d >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * d);
    match kind {
        DesignKind::RandomUniform => {
            for _ in 0..n * d {
                let u: f64 = rng.gen();
                x.push(2.0 * u - 1.0);
            }
        }
        DesignKind::LinearSkewed => {
            if skew.abs() > 1.0 {
                return Err(Error::InvalidInput(
                    "skew must lie in [-1, 1] for a nonnegative density".into(),
                ));
            }
            for _ in 0..n * d {
                let u: f64 = rng.gen();
                x.push(skewed_quantile(u, skew));
            }
        }
        DesignKind::FixedEquidistant | DesignKind::Jittered => {
            let m = grid_side(n, d)?;
            let levels = grid_levels(m);
            let jitter = if kind == DesignKind::Jittered && m > 1 {
                1.0 / (m - 1) as f64
            } else {
                0.0
            };
            for i in 0..n {
                let mut rem = i;
                for _ in 0..d {
                    let mut v = levels[rem % m];
                    rem /= m;
                    if jitter > 0.0 {
                        v = (v + rng.gen_range(-jitter..=jitter)).clamp(-1.0, 1.0);
                    }
                    x.push(v);
                }
            }
        }
    }
    Ok(x)
}
