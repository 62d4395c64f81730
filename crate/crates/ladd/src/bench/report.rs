//! Simulation report structures and their JSON / CSV / text renderings.

use crate::error::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// One evaluated parameter cell of an estimator.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub h: f64,
    /// Window half-width; absent for estimators without a window.
    pub w: Option<f64>,
    /// The scenario's risk metric (integrated MSE for the conditional
    /// protocol, mean averaged squared error for the unconditional one).
    pub mise: f64,
    /// Integrated squared bias (conditional protocol only).
    pub bias2: Option<f64>,
    /// Integrated variance (conditional protocol only).
    pub variance: Option<f64>,
    /// Fraction of output points the estimator covered.
    pub coverage: f64,
    /// False when coverage fell below the 95% threshold.
    pub valid: bool,
}

/// All cells of one estimator plus its optimum.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub estimator: String,
    pub cells: Vec<CellResult>,
    /// Valid cell with the smallest risk, if any.
    pub best: Option<CellResult>,
}

/// GCV-driven summary of an unconditional run: for each window half-width,
/// the per-run GCV-selected bandwidth multipliers and the resulting risk.
#[derive(Debug, Clone, Serialize)]
pub struct GcvTrajectory {
    pub w: f64,
    /// Bandwidth multiplier chosen by GCV in each run.
    pub chosen_c: Vec<f64>,
    /// Mean over runs of the squared error at the GCV-chosen bandwidth.
    pub mase: f64,
}

/// Full result of a simulation scenario.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub scenario: String,
    /// "mise" (fixed design, noise replicates) or "mase" (design redrawn).
    pub metric: String,
    pub sigma: f64,
    pub n: usize,
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    pub runtime_seconds: f64,
    pub estimators: Vec<EstimatorReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub gcv: Vec<GcvTrajectory>,
}

impl SimulationReport {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorReport> {
        self.estimators.iter().find(|e| e.estimator == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Long-format plot data: `scenario,estimator,h,w,mise,bias2,var`, one
    /// row per valid cell.
    pub fn write_long_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "scenario,estimator,h,w,mise,bias2,var")?;
        for est in &self.estimators {
            for cell in est.cells.iter().filter(|c| c.valid) {
                let w = cell.w.map(|v| v.to_string()).unwrap_or_default();
                let b = cell.bias2.map(|v| v.to_string()).unwrap_or_default();
                let v = cell.variance.map(|v| v.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    self.scenario, est.estimator, cell.h, w, cell.mise, b, v
                )?;
            }
        }
        Ok(())
    }

    pub fn save_long_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_long_csv(&mut f)
    }

    /// Aligned text table of per-estimator optima (risk scaled by 1000,
    /// percentage relative to the best estimator).
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenario {} ({}, sigma={}, n={}, d={}, replicates={}, seed={})\n",
            self.scenario, self.metric, self.sigma, self.n, self.d, self.replicates, self.seed
        ));
        let best_overall = self
            .estimators
            .iter()
            .filter_map(|e| e.best.as_ref().map(|b| b.mise))
            .fold(f64::INFINITY, f64::min);
        out.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>12} {:>8} {:>8} {:>8} {:>9}\n",
            "estimator", "risk x1000", "bias2 x1000", "var x1000", "ratio", "h", "w", "coverage"
        ));
        for est in &self.estimators {
            match &est.best {
                Some(b) => {
                    let fmt_opt = |v: Option<f64>| {
                        v.map(|x| format!("{:.3}", x * 1000.0))
                            .unwrap_or_else(|| "-".into())
                    };
                    let ratio = if best_overall > 0.0 {
                        format!("{:.0}%", 100.0 * b.mise / best_overall)
                    } else {
                        "-".into()
                    };
                    out.push_str(&format!(
                        "{:<10} {:>12.3} {:>12} {:>12} {:>8} {:>8.3} {:>8} {:>8.0}%\n",
                        est.estimator,
                        b.mise * 1000.0,
                        fmt_opt(b.bias2),
                        fmt_opt(b.variance),
                        ratio,
                        b.h,
                        b.w.map(|w| format!("{w:.3}")).unwrap_or_else(|| "-".into()),
                        b.coverage * 100.0,
                    ));
                }
                None => {
                    out.push_str(&format!("{:<10} no valid cells\n", est.estimator));
                }
            }
        }
        if !self.gcv.is_empty() {
            out.push_str("gcv-selected bandwidth per window:\n");
            for t in &self.gcv {
                out.push_str(&format!(
                    "  w={:<6.3} risk x1000 = {:<10.3} chosen c: {:?}\n",
                    t.w,
                    t.mase * 1000.0,
                    t.chosen_c
                ));
            }
        }
        out.push_str(&format!("runtime: {:.1}s\n", self.runtime_seconds));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> SimulationReport {
        let cell = CellResult {
            h: 0.26,
            w: None,
            mise: 3.9e-3,
            bias2: Some(1.0e-3),
            variance: Some(2.9e-3),
            coverage: 1.0,
            valid: true,
        };
        let cell2 = CellResult {
            h: 0.123,
            w: Some(0.87),
            mise: 1.2e-3,
            bias2: Some(4.0e-4),
            variance: Some(8.0e-4),
            coverage: 0.99,
            valid: true,
        };
        SimulationReport {
            scenario: "demo".into(),
            metric: "mise".into(),
            sigma: 0.1,
            n: 400,
            d: 2,
            replicates: 200,
            seed: 1,
            runtime_seconds: 1.5,
            estimators: vec![
                EstimatorReport {
                    estimator: "ll".into(),
                    cells: vec![cell.clone()],
                    best: Some(cell),
                },
                EstimatorReport {
                    estimator: "ladd".into(),
                    cells: vec![cell2.clone()],
                    best: Some(cell2),
                },
            ],
            gcv: Vec::new(),
        }
    }

    #[test]
    fn long_csv_shape() {
        let rep = sample_report();
        let mut buf = Vec::new();
        rep.write_long_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario,estimator,h,w,mise,bias2,var");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("demo,ll,0.26,,0.0039,"));
        assert!(lines[2].starts_with("demo,ladd,0.123,0.87,0.0012,"));
    }

    #[test]
    fn text_table_mentions_each_estimator() {
        let rep = sample_report();
        let text = rep.render_text();
        assert!(text.contains("ll"));
        assert!(text.contains("ladd"));
        assert!(text.contains("325%"));
        assert!(text.contains("100%"));
    }

    #[test]
    fn json_round_trip_is_parseable() {
        let rep = sample_report();
        let s = rep.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["scenario"], "demo");
        assert_eq!(v["estimators"][1]["best"]["w"], 0.87);
    }
}
