//! Aligned forecast/realization panels and their CSV/JSON serialization.
//!
//! Rows are assumed pre-aligned: the forecasts on a row target the
//! realization on the same row. Ingestion never reorders or drops rows.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Read;
use std::path::Path;

/// A panel of `k` named forecast series and the realized values they target,
/// all of common length. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPanel {
    names: Vec<String>,
    realized: Vec<f64>,
    forecasts: Vec<Vec<f64>>,
    horizon_label: Option<String>,
}

impl ForecastPanel {
    /// Build a panel, enforcing equal lengths, finite entries, and unique
    /// non-empty series names.
    pub fn new(
        realized: Vec<f64>,
        names: Vec<String>,
        forecasts: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if realized.is_empty() {
            return Err(Error::EmptyInput("panel has no rows".into()));
        }
        if forecasts.is_empty() {
            return Err(Error::EmptyInput("panel has no forecast series".into()));
        }
        if names.len() != forecasts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} forecast series",
                names.len(),
                forecasts.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty forecast series name".into()));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate forecast series name `{name}`"
                )));
            }
        }
        let t = realized.len();
        for (name, series) in names.iter().zip(&forecasts) {
            if series.len() != t {
                return Err(Error::InvalidArgument(format!(
                    "series `{name}` has {} rows, realized has {t}",
                    series.len()
                )));
            }
        }
        for &v in realized.iter().chain(forecasts.iter().flatten()) {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "panel entries must be finite, got {v}"
                )));
            }
        }
        Ok(ForecastPanel {
            names,
            realized,
            forecasts,
            horizon_label: None,
        })
    }

    pub fn with_horizon_label(mut self, label: impl Into<String>) -> Self {
        self.horizon_label = Some(label.into());
        self
    }

    /// Number of rows (forecast periods).
    pub fn len(&self) -> usize {
        self.realized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realized.is_empty()
    }

    /// Number of forecast series.
    pub fn series_count(&self) -> usize {
        self.forecasts.len()
    }

    pub fn realized(&self) -> &[f64] {
        &self.realized
    }

    pub fn series(&self, k: usize) -> &[f64] {
        &self.forecasts[k]
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn horizon_label(&self) -> Option<&str> {
        self.horizon_label.as_deref()
    }

    /// Index of the series named `name`.
    pub fn series_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    }

    /// Benchmark-vs-competitor slices with `benchmark` fixed and every other
    /// series as competitor, in series order.
    pub fn pairs_against(&self, benchmark: usize) -> Result<Vec<PanelSlice>> {
        if benchmark >= self.series_count() {
            return Err(Error::InvalidArgument(format!(
                "benchmark index {benchmark} out of range"
            )));
        }
        Ok((0..self.series_count())
            .filter(|&l| l != benchmark)
            .map(|l| PanelSlice::new(benchmark, l).expect("distinct indices"))
            .collect())
    }

    /// All ordered pairs `(k, l)` with `k != l`.
    pub fn all_ordered_pairs(&self) -> Vec<PanelSlice> {
        let k = self.series_count();
        let mut out = Vec::with_capacity(k * k.saturating_sub(1));
        for b in 0..k {
            for c in 0..k {
                if b != c {
                    out.push(PanelSlice::new(b, c).expect("distinct indices"));
                }
            }
        }
        out
    }
}

/// A benchmark/competitor pair of series indices into a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PanelSlice {
    pub benchmark: usize,
    pub competitor: usize,
}

impl PanelSlice {
    pub fn new(benchmark: usize, competitor: usize) -> Result<Self> {
        if benchmark == competitor {
            return Err(Error::InvalidArgument(format!(
                "benchmark and competitor must differ, both are {benchmark}"
            )));
        }
        Ok(PanelSlice {
            benchmark,
            competitor,
        })
    }

    /// The same pair with roles swapped.
    pub fn reversed(self) -> Self {
        PanelSlice {
            benchmark: self.competitor,
            competitor: self.benchmark,
        }
    }

    pub fn validate_against(&self, panel: &ForecastPanel) -> Result<()> {
        let k = panel.series_count();
        if self.benchmark >= k || self.competitor >= k {
            return Err(Error::InvalidArgument(format!(
                "pair ({}, {}) out of range for {k} series",
                self.benchmark, self.competitor
            )));
        }
        Ok(())
    }
}

/// Read a panel from CSV: one header row, `.` decimal separator, RFC-4180
/// quoting. Rows become time order. Column order in `forecast_columns` fixes
/// the series order of the panel.
pub fn read_panel_csv<R: Read>(
    reader: R,
    realized_column: &str,
    forecast_columns: &[String],
) -> Result<ForecastPanel> {
    if forecast_columns.is_empty() {
        return Err(Error::InvalidArgument("no forecast columns requested".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    };
    let realized_idx = col_index(realized_column)?;
    let forecast_idx: Vec<usize> = forecast_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;

    let mut realized = Vec::new();
    let mut forecasts: Vec<Vec<f64>> = vec![Vec::new(); forecast_columns.len()];
    for (row_number, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row_number + 1;
        let parse = |idx: usize, col: &str| -> Result<f64> {
            let cell = record.get(idx).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("column `{col}` has non-numeric cell `{cell}`"),
            })
        };
        realized.push(parse(realized_idx, realized_column)?);
        for (slot, (&idx, col)) in forecasts
            .iter_mut()
            .zip(forecast_idx.iter().zip(forecast_columns))
        {
            slot.push(parse(idx, col)?);
        }
    }
    if realized.is_empty() {
        return Err(Error::EmptyInput("CSV contains a header but no data rows".into()));
    }
    ForecastPanel::new(realized, forecast_columns.to_vec(), forecasts)
}

/// Convenience wrapper over [`read_panel_csv`] for a filesystem path.
pub fn read_panel_csv_path(
    path: &Path,
    realized_column: &str,
    forecast_columns: &[String],
) -> Result<ForecastPanel> {
    let file = std::fs::File::open(path)?;
    read_panel_csv(file, realized_column, forecast_columns)
}

/// Read a single numeric column from a CSV file with a header row.
pub fn read_series_csv<R: Read>(reader: R, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Schema(column.to_string()))?;
    let mut values = Vec::new();
    for (row_number, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = record.get(idx).unwrap_or("");
        let value = cell.parse::<f64>().map_err(|_| Error::Parse {
            row: row_number + 1,
            message: format!("column `{column}` has non-numeric cell `{cell}`"),
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("CSV contains a header but no data rows".into()));
    }
    Ok(values)
}

/// Serialize a report as pretty JSON with a trailing newline.
///
/// Key order follows struct declaration order, so two writes of the same
/// report are byte-identical. Non-finite numbers are a hard error rather
/// than `null` in the output.
pub fn report_to_json<T: Serialize>(report: &T) -> Result<String> {
    let value = serde_json::to_value(report)?;
    check_json_finite(&value, "$")?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

fn check_json_finite(value: &serde_json::Value, path: &str) -> Result<()> {
    match value {
        serde_json::Value::Null => Err(Error::NonFinite(format!(
            "field {path} is null (non-finite numbers serialize to null)"
        ))),
        serde_json::Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                check_json_finite(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        serde_json::Value::Object(map) => {
            for (key, item) in map {
                check_json_finite(item, &format!("{path}.{key}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let csv = "y,f1,f2\n1,0,2\n-1,0,-2\n";
        let panel =
            read_panel_csv(csv.as_bytes(), "y", &["f1".into(), "f2".into()]).unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.series_count(), 2);
        assert_eq!(panel.realized(), &[1.0, -1.0]);
        assert_eq!(panel.series(1), &[2.0, -2.0]);
        assert_eq!(panel.name(0), "f1");
    }

    #[test]
    fn csv_missing_column_names_it() {
        let csv = "y,f1\n1,0\n";
        let err = read_panel_csv(csv.as_bytes(), "y", &["nope".into()]).unwrap_err();
        assert!(matches!(err, Error::Schema(ref c) if c == "nope"), "{err}");
    }

    #[test]
    fn csv_parse_error_cites_row() {
        let csv = "y,f1\nabc,0\n1,2\n";
        let err = read_panel_csv(csv.as_bytes(), "y", &["f1".into()]).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn csv_header_only_is_empty_input() {
        let csv = "y,f1\n";
        let err = read_panel_csv(csv.as_bytes(), "y", &["f1".into()]).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
    }

    #[test]
    fn panel_rejects_ragged_and_non_finite() {
        assert!(ForecastPanel::new(
            vec![1.0, 2.0],
            vec!["a".into()],
            vec![vec![1.0]]
        )
        .is_err());
        assert!(ForecastPanel::new(
            vec![1.0, f64::NAN],
            vec!["a".into()],
            vec![vec![1.0, 2.0]]
        )
        .is_err());
        assert!(ForecastPanel::new(
            vec![1.0],
            vec!["a".into(), "a".into()],
            vec![vec![1.0], vec![2.0]]
        )
        .is_err());
    }

    #[test]
    fn pair_construction() {
        assert!(PanelSlice::new(1, 1).is_err());
        let pair = PanelSlice::new(0, 2).unwrap();
        assert_eq!(pair.reversed(), PanelSlice::new(2, 0).unwrap());
    }

    #[test]
    fn json_writer_is_deterministic_and_finite() {
        #[derive(Serialize)]
        struct Dummy {
            statistic: f64,
            values: Vec<f64>,
        }
        let a = report_to_json(&Dummy {
            statistic: 0.0,
            values: vec![1.0, 2.0],
        })
        .unwrap();
        let b = report_to_json(&Dummy {
            statistic: 0.0,
            values: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"statistic\": 0.0"));

        let err = report_to_json(&Dummy {
            statistic: f64::NAN,
            values: vec![],
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)), "{err}");
    }
}
