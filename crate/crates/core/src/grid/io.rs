//! CSV and JSON output for sampled fields.
//!
//! CSV files start with the node coordinates followed by one column per
//! field component. Headers carry units as `name [units]`. Masked samples
//! are written as `nan`.

use super::{Grid, GridMeta, Sample, ScalarField, VectorField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, units: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            units: units.into(),
            values,
        }
    }

    pub fn header(&self) -> String {
        if self.units.is_empty() {
            self.name.clone()
        } else {
            format!("{} [{}]", self.name, self.units)
        }
    }

    pub fn real(name: &str, f: &ScalarField<f64>) -> Vec<Column> {
        vec![Column::new(name, f.units(), f.values().to_vec())]
    }

    /// Real and imaginary parts as `name.re`, `name.im`.
    pub fn complex(name: &str, f: &ScalarField<Complex64>) -> Vec<Column> {
        vec![
            Column::new(format!("{name}.re"), f.units(), f.values().iter().map(|z| z.re).collect()),
            Column::new(format!("{name}.im"), f.units(), f.values().iter().map(|z| z.im).collect()),
        ]
    }

    /// One column per component, suffixed `.0`, `.1`, ...
    pub fn vector(name: &str, f: &VectorField<f64>) -> Vec<Column> {
        (0..f.ncomp())
            .map(|c| Column::new(format!("{name}.{c}"), f.units(), f.component(c).into_values()))
            .collect()
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

/// Writes coordinate columns `x0, x1, ...` followed by `columns`.
pub fn write_csv<W: Write>(out: W, grid: &Grid, columns: &[Column]) -> Result<()> {
    for c in columns {
        if c.values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "column `{}` has {} values for {} points",
                c.name,
                c.values.len(),
                grid.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let dim = grid.config_dim();
    let mut header: Vec<String> = (0..dim).map(|a| format!("x{a} [bohr]")).collect();
    header.extend(columns.iter().map(Column::header));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for idx in 0..grid.len() {
        record.clear();
        record.extend(grid.point(idx).into_iter().map(format_value));
        record.extend(columns.iter().map(|c| format_value(c.values[idx])));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, grid: &Grid, columns: &[Column]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), grid, columns)
}

/// Reads a CSV written by [`write_csv`] back into named columns. Units are
/// split off the header.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Column>> {
    let mut r = csv::Reader::from_reader(input);
    let mut columns: Vec<Column> = r
        .headers()?
        .iter()
        .map(|h| match h.split_once(" [") {
            Some((name, rest)) => Column::new(name, rest.trim_end_matches(']'), Vec::new()),
            None => Column::new(h, "", Vec::new()),
        })
        .collect();
    for rec in r.records() {
        let rec = rec?;
        for (c, s) in columns.iter_mut().zip(rec.iter()) {
            let v = s
                .parse::<f64>()
                .map_err(|e| Error::Scenario(format!("bad number `{s}` in column `{}`: {e}", c.name)))?;
            c.values.push(v);
        }
    }
    Ok(columns)
}

/// Common wrapper for JSON outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridMeta>,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: impl Into<String>, grid: Option<GridMeta>, data: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            kind: kind.into(),
            grid,
            data,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Finite samples as-is, everything else as `None` (JSON `null`).
pub fn nullable<T: Sample>(values: &[T]) -> Vec<Option<T>> {
    values
        .iter()
        .map(|&v| v.is_finite_sample().then_some(v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Centering;
    use std::sync::Arc;

    #[test]
    fn csv_roundtrip_keeps_units_and_nan() {
        let g = Arc::new(Grid::cartesian_box(&[0.0, 0.0], &[1.0, 1.0], &[5, 5], Centering::Vertex).unwrap());
        let mut vals: Vec<f64> = (0..25).map(|i| i as f64 * 0.1).collect();
        vals[7] = f64::NAN;
        let f = ScalarField::new(g.clone(), vals, "hartree").unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &g, &Column::real("E_S", &f)).unwrap();
        let cols = read_csv(buf.as_slice()).unwrap();
        assert_eq!(cols.len(), 3);
        assert_eq!(cols[2].name, "E_S");
        assert_eq!(cols[2].units, "hartree");
        assert!(cols[2].values[7].is_nan());
        assert!((cols[2].values[24] - 2.4).abs() < 1e-15);
        assert!((cols[1].values[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let g = Grid::radial_log(10, 0.1, 1.0).unwrap();
        let err = write_csv(Vec::new(), &g, &[Column::new("a", "", vec![0.0; 3])]).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }
}
