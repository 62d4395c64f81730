//! Benchmark harness: regression function catalog, seeded design
//! generators, the fixed-design MISE protocol, the unconditional MASE
//! protocol, and report serialization.

pub mod catalog;
pub mod design;
pub mod mase;
pub mod mise;
pub mod report;

pub use catalog::RegressionFunction;
pub use design::{gen_design, DesignKind, DesignSpec};
pub use mase::{run_mase_unconditional, MaseScenario};
pub use mise::{
    default_h_ladder, default_w_ladder, run_mise, EstimatorGrid, EstimatorKind, MiseScenario,
};
pub use report::{CellResult, EstimatorReport, GcvTrajectory, SimulationReport};

use crate::error::{Error, Result};

/// A ready-to-run study: either a fixed-design MISE comparison or an
/// unconditional MASE comparison.
#[derive(Debug)]
pub enum Study {
    Mise {
        scenario: MiseScenario,
        estimators: Vec<EstimatorGrid>,
    },
    Mase(MaseScenario),
}

/// Overrides applied on top of a named scenario's defaults.
#[derive(Debug, Clone, Default)]
pub struct StudyOverrides {
    pub sigma: Option<f64>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

fn three_estimator_grids() -> Vec<EstimatorGrid> {
    let h = default_h_ladder();
    let w = default_w_ladder();
    vec![
        EstimatorGrid {
            kind: EstimatorKind::LocalLinear,
            h: h.clone(),
            w: vec![],
        },
        EstimatorGrid {
            kind: EstimatorKind::WindowedAdditive,
            h: h.clone(),
            w,
        },
        EstimatorGrid {
            kind: EstimatorKind::Additive,
            h,
            w: vec![],
        },
    ]
}

fn mise_study(
    name: &str,
    function: RegressionFunction,
    sigma: f64,
    ov: &StudyOverrides,
) -> Study {
    let d = function.dim();
    let n = ov.n.unwrap_or(400);
    let seed = ov.seed.unwrap_or(17);
    let scenario = MiseScenario {
        name: name.to_string(),
        function,
        design: DesignSpec::new(DesignKind::RandomUniform, n, d, seed),
        sigma: ov.sigma.unwrap_or(sigma),
        replicates: ov.replicates.unwrap_or(200),
        grid_points: 21,
        seed,
        noise: Default::default(),
    };
    Study::Mise {
        scenario,
        estimators: three_estimator_grids(),
    }
}

/// Builds the named studies used by the benchmark CLI. `fig3-sweep`
/// expands to one study per interaction strength.
pub fn build_studies(name: &str, ov: &StudyOverrides) -> Result<Vec<Study>> {
    match name {
        "table1-additive-peaks" => Ok(vec![mise_study(
            name,
            RegressionFunction::AdditivePeaks,
            0.1,
            ov,
        )]),
        "table1-superposed" => Ok(vec![mise_study(
            name,
            RegressionFunction::SuperposedPeaks,
            0.5,
            ov,
        )]),
        "table1-periodic" => Ok(vec![mise_study(
            name,
            RegressionFunction::Periodic { d: 2 },
            0.1,
            ov,
        )]),
        "fig3-sweep" => {
            let alphas = match ov.alpha {
                Some(a) => vec![a],
                None => vec![0.0, 0.2, 0.4, 0.6, 0.8],
            };
            Ok(alphas
                .into_iter()
                .map(|alpha| {
                    mise_study(
                        &format!("fig3:alpha={alpha}"),
                        RegressionFunction::QuadInteract { alpha },
                        0.5,
                        ov,
                    )
                })
                .collect())
        }
        "d10" => {
            let mut sc = MaseScenario::d10(ov.alpha.unwrap_or(1.0), ov.seed.unwrap_or(17));
            if let Some(s) = ov.sigma {
                sc.sigma = s;
            }
            if let Some(n) = ov.n {
                sc.n = n;
            }
            if let Some(r) = ov.replicates {
                sc.runs = r;
            }
            Ok(vec![Study::Mase(sc)])
        }
        other => Err(Error::InvalidInput(format!(
            "unknown scenario '{other}'; expected one of table1-additive-peaks, \
             table1-superposed, table1-periodic, fig3-sweep, d10"
        ))),
    }
}
