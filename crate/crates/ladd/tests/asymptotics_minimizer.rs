//! Brute-force checks of the closed-form risk minimizers: dense scans over
//! the window half-width and the bandwidth coupling constant must not beat
//! the analytic optima, and the analytic bias/variance displays must match
//! direct evaluation of their defining sums.

use ladd::asymptotics::{
    abc, asymptotic_mse, bias_uniform, optimal_ch, optimal_w, rate_summary, variance_formula,
    CurvatureInput,
};
use ladd::bench::RegressionFunction;
use ladd::kernels::KernelSpec;

fn quad_curvature(alpha: f64, x0: &[f64], sigma: f64) -> CurvatureInput {
    RegressionFunction::QuadInteract { alpha }
        .curvature(x0, sigma, KernelSpec::Epanechnikov)
        .unwrap()
}

#[test]
fn closed_form_w_minimizes_the_risk_curve() {
    let cv = quad_curvature(0.4, &[0.5, 0.5], 0.5);
    let coef = abc(&cv);
    for n in [400usize, 6400] {
        for c_h in [0.7, 1.0, 1.6] {
            let w_star = optimal_w(&coef, c_h, cv.d, n).unwrap();
            let best = asymptotic_mse(&coef, c_h, cv.d, n, w_star);
            // Dense logarithmic scan around the claimed optimum.
            let lo = (w_star / 8.0).ln();
            let hi = (w_star * 8.0).ln();
            for k in 0..=20000 {
                let w = (lo + (hi - lo) * k as f64 / 20000.0).exp();
                let m = asymptotic_mse(&coef, c_h, cv.d, n, w);
                assert!(
                    m >= best * (1.0 - 1e-6),
                    "scan found better risk at w={w}: {m} < {best} (n={n}, C_h={c_h})"
                );
            }
            // First-order condition: symmetric perturbations change the
            // risk only at second order.
            let eps = 1e-6;
            let up = asymptotic_mse(&coef, c_h, cv.d, n, w_star * (1.0 + eps));
            let dn = asymptotic_mse(&coef, c_h, cv.d, n, w_star * (1.0 - eps));
            assert!(
                (up - dn).abs() <= 1e-6 * best,
                "risk slope at the claimed optimum is not flat"
            );
        }
    }
}

#[test]
fn coupling_constant_beats_a_dense_scan() {
    // Near a peak top the superposed function is concave (a < 0) while
    // the fourth cross derivative is positive (b > 0), so the
    // bias-balancing coupling constant exists.
    let cv = RegressionFunction::SuperposedPeaks
        .curvature(&[0.5, 0.5], 0.5, KernelSpec::Epanechnikov)
        .unwrap();
    let coef = abc(&cv);
    assert!(coef.a * coef.b < 0.0);
    let n = 2000;
    let ch_star = optimal_ch(&coef, cv.d).unwrap();
    let w_star = optimal_w(&coef, ch_star, cv.d, n).unwrap();
    let best = asymptotic_mse(&coef, ch_star, cv.d, n, w_star);
    for k in 0..50 {
        let c_h = 0.05 * (20.0f64 / 0.05).powf(k as f64 / 49.0);
        if let Ok(w) = optimal_w(&coef, c_h, cv.d, n) {
            let m = asymptotic_mse(&coef, c_h, cv.d, n, w);
            assert!(
                m >= best * (1.0 - 1e-9),
                "C_h={c_h} gives risk {m} below the balanced optimum {best}"
            );
        }
    }
}

#[test]
fn bias_and_variance_match_their_defining_sums() {
    let cv = quad_curvature(0.4, &[0.5, 0.5], 0.5);
    // quad interaction: second derivatives are [2, 2], the only nonzero
    // fourth cross derivative is absent, so the uniform-design bias is
    // mu2/2 * (h1^2 r_11 + h2^2 r_22) and the w^4 term vanishes.
    let h = [0.09, 0.14];
    let w = 0.6;
    let mu2 = KernelSpec::Epanechnikov.mu2();
    let expect = 0.5 * mu2 * (h[0] * h[0] * 2.0 + h[1] * h[1] * 2.0);
    let got = bias_uniform(&cv, &h, w).unwrap();
    assert!((got - expect).abs() <= 1e-12, "bias {got} vs {expect}");

    let n = 1234;
    let r = KernelSpec::Epanechnikov.roughness();
    let expect_var =
        2.0 * r * 0.25 * (1.0 / (n as f64 * w * h[0]) + 1.0 / (n as f64 * w * h[1]));
    let got_var = variance_formula(&cv, n, w, &h).unwrap();
    assert!((got_var - expect_var).abs() <= 1e-15);
}

#[test]
fn optimal_orders_follow_the_stated_exponents() {
    let cv = quad_curvature(0.4, &[0.5, 0.5], 0.5);
    let coef = abc(&cv);
    let d = cv.d;
    // Doubling n scales the optimal w by 2^{-1/(9+d)} exactly.
    let w1 = optimal_w(&coef, 1.0, d, 1000).unwrap();
    let w2 = optimal_w(&coef, 1.0, d, 2000).unwrap();
    let expect = 2.0f64.powf(-1.0 / (9.0 + d as f64));
    assert!((w2 / w1 - expect).abs() <= 1e-12);

    let rs = rate_summary(d, 4000);
    assert!((rs.w_exponent + 1.0 / 11.0).abs() <= 1e-15);
    assert!((rs.h_exponent + 2.0 / 11.0).abs() <= 1e-15);
    assert!((rs.mse_exponent + 8.0 / 11.0).abs() <= 1e-15);
    assert!((rs.equivalent_dimension - 1.5).abs() <= 1e-15);
    assert!(rs.full_rate_established);
    assert!(!rate_summary(10, 4000).full_rate_established);

    // The risk at the optimum scales like n^{-8/(9+d)}.
    let m1 = asymptotic_mse(&coef, 1.0, d, 1000, w1);
    let m2 = asymptotic_mse(&coef, 1.0, d, 2000, w2);
    assert!((m2 / m1 - 2.0f64.powf(-8.0 / 11.0)).abs() <= 1e-12);
}
