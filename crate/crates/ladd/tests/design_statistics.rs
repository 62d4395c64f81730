//! Distributional checks on the seeded design generators and on window
//! occupancy: Kolmogorov-Smirnov uniformity of the marginals, the skewed
//! design's quantile law, and the binomial window-count prediction.

use ladd::bench::{gen_design, DesignKind, DesignSpec};
use ladd::dataset::Dataset;
use ladd::grid::Domain;
use ladd::local_additive::window_extract;

/// Two-sided KS distance of a sample against a cdf on its support.
fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

#[test]
fn random_uniform_marginals_pass_ks_at_level_one_in_a_thousand() {
    let n = 10_000;
    let spec = DesignSpec::new(DesignKind::RandomUniform, n, 2, 2024);
    let xs = gen_design(&spec).unwrap();
    // KS critical value at alpha = 0.001: sqrt(-ln(alpha/2)/2) / sqrt(n).
    let crit = (-(0.0005f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
    for j in 0..2 {
        let mut col: Vec<f64> = (0..n).map(|i| xs[i * 2 + j]).collect();
        let d = ks_distance(&mut col, |x| (x + 1.0) / 2.0);
        assert!(
            d <= crit,
            "coordinate {j}: KS distance {d} exceeds {crit}"
        );
    }
}

#[test]
fn skewed_design_matches_its_quantile_law() {
    // The linear-skewed design has density (1 + beta x)/2 on [-1, 1], so
    // its cdf is (x + 1)/2 + beta (x^2 - 1)/4.
    let n = 10_000;
    let beta = 0.9;
    let spec = DesignSpec {
        kind: DesignKind::LinearSkewed,
        n,
        d: 1,
        seed: 7,
        skew: beta,
    };
    let mut xs = gen_design(&spec).unwrap();
    let crit = (-(0.0005f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
    let d = ks_distance(&mut xs, |x| (x + 1.0) / 2.0 + beta * (x * x - 1.0) / 4.0);
    assert!(d <= crit, "KS distance {d} exceeds {crit}");
}

#[test]
fn window_count_follows_the_binomial_prediction() {
    // A centered window of half-width w captures each uniform point with
    // probability w per coordinate. At n=400, w=0.94, d=2 the count is
    // Binomial(400, 0.8836): mean 353.4, sd 6.4. Checked at 3 sigma over
    // several seeds to catch both systematic over- and under-counting.
    let n = 400;
    let w = 0.94;
    let p: f64 = w * w;
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let domain = Domain::unit_cube(2);
    for seed in [1u64, 2, 3, 4, 5] {
        let spec = DesignSpec::new(DesignKind::RandomUniform, n, 2, seed);
        let xs = gen_design(&spec).unwrap();
        let data = Dataset::new(xs, vec![0.0; n], 2).unwrap();
        let sample = window_extract(&data, &[0.0, 0.0], &[w, w], &domain, 4).unwrap();
        let count = sample.n() as f64;
        assert!(
            (count - mean).abs() <= 3.0 * sd,
            "seed {seed}: window count {count} outside {mean} +- {}",
            3.0 * sd
        );
    }
}

#[test]
fn jittered_design_fills_strata_evenly() {
    // 100 points on a 10x10 jittered grid: every axis level receives
    // exactly 10 points, each within half a grid step of its node.
    let m = 10usize;
    let spec = DesignSpec::new(DesignKind::Jittered, m * m, 2, 11);
    let xs = gen_design(&spec).unwrap();
    let step = 2.0 / (m as f64 - 1.0);
    for j in 0..2 {
        let mut counts = vec![0usize; m];
        for i in 0..m * m {
            let v = xs[i * 2 + j];
            let level = ((v + 1.0) / step).round() as usize;
            let node = -1.0 + step * level as f64;
            assert!(
                (v - node).abs() <= step / 2.0 + 1e-12,
                "axis {j}: point {v} strayed from node {node}"
            );
            counts[level] += 1;
        }
        assert!(
            counts.iter().all(|&c| c == m),
            "axis {j} stratum counts {counts:?}"
        );
    }
}
