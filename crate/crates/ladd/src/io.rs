//! CSV input and output: datasets with a header row (predictor columns
//! followed by a response column), optional affine rescaling of predictors
//! onto `[-1, 1]`, and prediction tables.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Per-column affine map `x -> (x - center) / scale` that took raw
/// predictor columns onto `[-1, 1]`. Needed to map query points the same
/// way and to report fitted coordinates back on the original scale.
#[derive(Debug, Clone)]
pub struct Rescaler {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Rescaler {
    /// Fits the map sending each column's observed min/max to -1/1.
    /// Constant columns map to 0.
    pub fn fit(data: &Dataset) -> Self {
        let d = data.d();
        let mut center = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..data.n() {
                lo = lo.min(data.x(i, j));
                hi = hi.max(data.x(i, j));
            }
            center[j] = 0.5 * (lo + hi);
            scale[j] = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        }
        Rescaler { center, scale }
    }

    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(v, (c, s))| (v - c) / s)
            .collect()
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let d = data.d();
        let mut xs = Vec::with_capacity(data.n() * d);
        for i in 0..data.n() {
            xs.extend(self.apply_point(data.row(i)));
        }
        Dataset::new(xs, data.y().to_vec(), d)
    }
}

fn parse_cell(raw: &str, line: usize, col: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::InvalidInput(format!("line {line}: column '{col}' is not a number: '{raw}'"))
    })?;
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!(
            "line {line}: column '{col}' is not finite: '{raw}'"
        )));
    }
    Ok(v)
}

/// Loads a dataset from CSV with a header row. All columns but the last
/// are predictors; the last is the response. Returns the data and the
/// header names.
pub fn load_dataset_csv(path: &Path) -> Result<(Dataset, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least one predictor column and one response column".into(),
        ));
    }
    let d = headers.len() - 1;
    let mut xs = Vec::new();
    let mut y = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        let line = ri + 2; // 1-based, after the header
        if record.len() != headers.len() {
            return Err(Error::InvalidInput(format!(
                "line {line}: expected {} cells, found {}",
                headers.len(),
                record.len()
            )));
        }
        for j in 0..d {
            xs.push(parse_cell(&record[j], line, &headers[j])?);
        }
        y.push(parse_cell(&record[d], line, &headers[d])?);
    }
    if y.is_empty() {
        return Err(Error::InvalidInput("no data rows".into()));
    }
    Ok((Dataset::new(xs, y, d)?, headers))
}

/// Writes a dataset as CSV with the given header names (predictors then
/// response). Uses full float precision so a round trip is lossless.
pub fn write_dataset_csv<W: Write>(out: W, data: &Dataset, headers: &[String]) -> Result<()> {
    if headers.len() != data.d() + 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} header names, got {}",
            data.d() + 1,
            headers.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{:?}", data.y()[i]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

pub fn save_dataset_csv(path: &Path, data: &Dataset, headers: &[String]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset_csv(file, data, headers)
}

/// One row of a prediction table.
#[derive(Debug, Clone)]
pub struct PredictionRow {
    pub x: Vec<f64>,
    pub estimate: Option<f64>,
    /// "ok" or a short failure reason such as "insufficient data".
    pub status: String,
}

/// Writes predictions as CSV: predictor coordinates, the estimate (empty
/// when the fit failed), and a status column.
pub fn write_predictions_csv<W: Write>(
    out: W,
    coord_names: &[String],
    rows: &[PredictionRow],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = coord_names.to_vec();
    header.push("estimate".into());
    header.push("status".into());
    w.write_record(&header)?;
    for row in rows {
        if row.x.len() != coord_names.len() {
            return Err(Error::InvalidInput(format!(
                "prediction row has {} coordinates, expected {}",
                row.x.len(),
                coord_names.len()
            )));
        }
        let mut rec: Vec<String> = row.x.iter().map(|v| format!("{v:?}")).collect();
        rec.push(row.estimate.map(|v| format!("{v:?}")).unwrap_or_default());
        rec.push(row.status.clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

pub fn save_predictions_csv(
    path: &Path,
    coord_names: &[String],
    rows: &[PredictionRow],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_predictions_csv(file, coord_names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("ladd-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn round_trip_preserves_values_exactly() {
        let data = Dataset::new(
            vec![0.1, -0.9, 1.0 / 3.0, 0.25, -1e-17, 0.5],
            vec![1.5, -2.25, 3.0f64.sqrt()],
            2,
        )
        .unwrap();
        let headers: Vec<String> = ["x1", "x2", "y"].map(String::from).to_vec();
        let path = tmp("roundtrip.csv");
        save_dataset_csv(&path, &data, &headers).unwrap();
        let (back, names) = load_dataset_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(names, headers);
        assert_eq!(back.xs(), data.xs());
        assert_eq!(back.y(), data.y());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "a,b,y\n0.1,0.2,1.0\n0.3,oops,2.0\n").unwrap();
        let err = load_dataset_csv(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("'b'"), "{msg}");
    }

    #[test]
    fn non_finite_cells_are_rejected() {
        let path = tmp("inf.csv");
        std::fs::write(&path, "a,y\n0.1,inf\n").unwrap();
        let err = load_dataset_csv(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(err.to_string().contains("not finite"));
    }

    #[test]
    fn rescaler_maps_observed_range_onto_unit_interval() {
        let data = Dataset::new(vec![0.0, 10.0, 1.0, 30.0, 2.0, 20.0], vec![0.0; 3], 2).unwrap();
        let r = Rescaler::fit(&data);
        let scaled = r.apply(&data).unwrap();
        assert_eq!(scaled.x(0, 0), -1.0);
        assert_eq!(scaled.x(2, 0), 1.0);
        assert_eq!(scaled.x(1, 1), 1.0);
        assert_eq!(scaled.x(0, 1), -1.0);
        assert!((scaled.x(1, 0) - 0.0).abs() < 1e-15);
        // New points go through the same map.
        assert_eq!(r.apply_point(&[1.0, 20.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn predictions_csv_has_estimate_and_status_columns() {
        let rows = vec![
            PredictionRow {
                x: vec![0.1, 0.2],
                estimate: Some(1.25),
                status: "ok".into(),
            },
            PredictionRow {
                x: vec![0.9, 0.9],
                estimate: None,
                status: "insufficient data".into(),
            },
        ];
        let mut buf = Vec::new();
        write_predictions_csv(&mut buf, &["x1".into(), "x2".into()], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,estimate,status");
        assert!(lines.next().unwrap().ends_with("1.25,ok"));
        assert!(lines.next().unwrap().ends_with(",insufficient data"));
    }
}
