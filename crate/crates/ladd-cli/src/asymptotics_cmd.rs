//! `asymptotics`: closed-form bias/variance coefficients, optimal smoothing
//! parameters, and convergence-rate summary for a catalog function at a
//! point.

use crate::common::parse_floats;
use anyhow::{bail, Context, Result};
use clap::Args;
use ladd::asymptotics::{
    abc, asymptotic_mse, bias_uniform, optimal_ch, optimal_w, rate_summary, variance_formula,
    CurvatureInput,
};
use ladd::bench::RegressionFunction;
use ladd::local_additive::LocalAdditiveOptions;

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    /// Catalog function: quad_interact, additive_peaks, superposed_peaks,
    /// periodic, or d10_interact.
    #[arg(long)]
    pub function: String,
    /// Interaction strength for quad_interact and d10_interact.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dimension for functions that support it (periodic).
    #[arg(long)]
    pub d: Option<usize>,
    /// Evaluation point, comma-separated.
    #[arg(long, value_name = "X1,X2,...")]
    pub x0: String,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: f64,
    /// Sample size the optimal parameters refer to.
    #[arg(long)]
    pub n: usize,
    /// Bandwidth profile h = C_h * w^2; defaults to the bias-balancing
    /// choice when available, else 1.
    #[arg(long)]
    pub c_h: Option<f64>,
    /// Also evaluate the bias and variance formulas at this window
    /// half-width (with h = C_h * w^2 unless --h is given).
    #[arg(long)]
    pub w: Option<f64>,
    /// Bandwidth override for the --w evaluation.
    #[arg(long)]
    pub h: Option<f64>,
}

pub fn run(args: &AsymptoticsArgs, opts: LocalAdditiveOptions) -> Result<()> {
    let function = RegressionFunction::build(&args.function, args.alpha, args.d)?;
    let d = function.dim();
    let x0 = parse_floats(&args.x0, "--x0")?;
    if x0.len() != d {
        bail!("--x0 has {} coordinates but {} is {d}-dimensional", x0.len(), function.name());
    }
    if args.n == 0 {
        bail!("--n must be positive");
    }
    let kernel = opts.backfit.kernel;
    let second = function
        .second_diag(&x0)
        .with_context(|| format!("second derivatives of {}", function.name()))?;
    let fourth = function
        .fourth_cross(&x0)
        .with_context(|| format!("fourth cross derivatives of {}", function.name()))?;
    let cv = CurvatureInput::new(second.clone(), fourth, args.sigma, kernel)?;
    let coef = abc(&cv);

    println!(
        "function {} at x0 = ({}), d = {d}, sigma = {}, kernel = {kernel}",
        function.name(),
        x0.iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        args.sigma
    );
    println!(
        "second derivatives r_jj: {}",
        second
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join("  ")
    );
    println!("fourth cross-derivative sum: {:.6}", cv.fourth_cross_sum());
    println!(
        "coefficients: a = {:.6}  b = {:.6}  c = {:.6}",
        coef.a, coef.b, coef.c
    );

    let c_h = match args.c_h {
        Some(v) if v > 0.0 => v,
        Some(v) => bail!("--c-h must be positive, got {v}"),
        None => match optimal_ch(&coef, d) {
            Ok(v) => {
                println!("bias-balancing C_h = {v:.6}");
                v
            }
            Err(e) => {
                println!("bias-balancing C_h unavailable ({e}); using C_h = 1");
                1.0
            }
        },
    };

    match optimal_w(&coef, c_h, d, args.n) {
        Ok(w_opt) => {
            let h_opt = c_h * w_opt * w_opt;
            let mse = asymptotic_mse(&coef, c_h, d, args.n, w_opt);
            println!(
                "optimal at n = {}: w = {:.6}, h = C_h w^2 = {:.6}, asymptotic MSE = {:.6e}",
                args.n, w_opt, h_opt, mse
            );
        }
        Err(e) => println!("no interior optimum: {e}"),
    }

    if let Some(w) = args.w {
        let h_scalar = args.h.unwrap_or(c_h * w * w);
        let h = vec![h_scalar; d];
        let bias = bias_uniform(&cv, &h, w)?;
        let var = variance_formula(&cv, args.n, w, &h)?;
        println!(
            "at w = {w:.4}, h = {h_scalar:.4}: bias = {bias:.6e}, variance = {var:.6e}, \
             mse = {:.6e}",
            bias * bias + var
        );
    }

    let rates = rate_summary(d, args.n);
    println!(
        "rates: w ~ n^{:.4} ({:.6}), h ~ n^{:.4} ({:.6}), MSE ~ n^{:.4} ({:.6e})",
        rates.w_exponent,
        rates.w_order,
        rates.h_exponent,
        rates.h_order,
        rates.mse_exponent,
        rates.mse_order
    );
    println!(
        "equivalent local linear dimension: {:.1}{}",
        rates.equivalent_dimension,
        if rates.full_rate_established {
            " (full-rate comparison established)"
        } else {
            " (full-rate comparison not established at this d)"
        }
    );
    Ok(())
}
