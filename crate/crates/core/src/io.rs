//! File formats: atomic measures as `x,y,weight` CSV, curve measures as
//! JSON with optional free-form metadata, and marker sheets as
//! `x,y,dgamma` CSV.

use crate::birkhoff_rott::SheetState;
use crate::geom::PlanePoint;
use crate::measure::{AtomicMeasure, CurveMeasure, Measure, MeasureError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("missing column '{0}' in CSV header")]
    MissingColumn(&'static str),
    #[error("cannot infer measure kind from extension of {0}; use .csv or .json")]
    UnknownExtension(String),
}

/// On-disk JSON schema of a curve measure.
#[derive(Debug, Serialize, Deserialize)]
struct CurveMeasureFile {
    vertices: Vec<[f64; 2]>,
    densities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cumulative: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

/// Loads an atomic measure from CSV with header `x,y,weight`.
pub fn load_atoms_csv(path: impl AsRef<Path>) -> Result<AtomicMeasure, IoError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, IoError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(IoError::MissingColumn(name))
    };
    let (cx, cy, cw) = (col("x")?, col("y")?, col("weight")?);
    let mut atoms = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64, IoError> {
            record
                .get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    IoError::Io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("bad float in CSV: {e}"),
                    ))
                })
        };
        atoms.push((PlanePoint::new(parse(cx)?, parse(cy)?), parse(cw)?));
    }
    Ok(AtomicMeasure::new(atoms)?)
}

pub fn save_atoms_csv(path: impl AsRef<Path>, mu: &AtomicMeasure) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "weight"])?;
    for (p, weight) in mu.atoms() {
        w.write_record([p.x.to_string(), p.y.to_string(), weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a curve measure from JSON. A stored `cumulative` array is
/// cross-checked against the densities; a relative mismatch beyond 1e-9 is
/// a load error.
pub fn load_curve_json(
    path: impl AsRef<Path>,
) -> Result<(CurveMeasure, Option<serde_json::Value>), IoError> {
    let file: CurveMeasureFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let vertices: Vec<PlanePoint> = file
        .vertices
        .iter()
        .map(|[x, y]| PlanePoint::new(*x, *y))
        .collect();
    let curve = match file.cumulative {
        Some(cum) => CurveMeasure::with_cumulative(vertices, file.densities, cum)?,
        None => CurveMeasure::new(vertices, file.densities)?,
    };
    Ok((curve, file.metadata))
}

pub fn save_curve_json(
    path: impl AsRef<Path>,
    mu: &CurveMeasure,
    metadata: Option<serde_json::Value>,
) -> Result<(), IoError> {
    let file = CurveMeasureFile {
        vertices: mu.vertices().iter().map(|p| [p.x, p.y]).collect(),
        densities: mu.densities().to_vec(),
        cumulative: Some(mu.cumulative().to_vec()),
        metadata,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &file)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Loads a measure by file extension: `.csv` as atoms, `.json` as a curve.
pub fn load_measure(
    path: impl AsRef<Path>,
) -> Result<(Measure, Option<serde_json::Value>), IoError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok((load_atoms_csv(path)?.into(), None)),
        Some("json") => {
            let (curve, meta) = load_curve_json(path)?;
            Ok((curve.into(), meta))
        }
        _ => Err(IoError::UnknownExtension(path.display().to_string())),
    }
}

/// Loads a marker sheet from CSV with header `x,y,dgamma`.
pub fn load_sheet_csv(path: impl AsRef<Path>) -> Result<SheetState, IoError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, IoError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(IoError::MissingColumn(name))
    };
    let (cx, cy, cg) = (col("x")?, col("y")?, col("dgamma")?);
    let mut markers = Vec::new();
    let mut d_gamma = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64, IoError> {
            record
                .get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    IoError::Io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("bad float in CSV: {e}"),
                    ))
                })
        };
        markers.push(Complex64::new(parse(cx)?, parse(cy)?));
        d_gamma.push(parse(cg)?);
    }
    SheetState::new(markers, d_gamma, 0.0).map_err(|e| {
        IoError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            e.to_string(),
        ))
    })
}

pub fn save_sheet_csv(path: impl AsRef<Path>, state: &SheetState) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "dgamma"])?;
    for (z, g) in state.markers.iter().zip(&state.d_gamma) {
        w.write_record([z.re.to_string(), z.im.to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn atoms_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("atoms.csv");
        let mu = AtomicMeasure::new(vec![
            (PlanePoint::new(0.25, -1.5), 2.0),
            (PlanePoint::new(1e-9, 3.0), -0.125),
        ])
        .unwrap();
        save_atoms_csv(&path, &mu).unwrap();
        let back = load_atoms_csv(&path).unwrap();
        assert_eq!(mu, back);
    }

    #[test]
    fn curve_roundtrip_with_metadata() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("curve.json");
        let mu = CurveMeasure::new(
            vec![
                PlanePoint::ORIGIN,
                PlanePoint::new(0.5, 0.25),
                PlanePoint::new(1.0, 0.0),
            ],
            vec![1.5, -0.75],
        )
        .unwrap();
        let meta = serde_json::json!({"family": "test", "n": 2});
        save_curve_json(&path, &mu, Some(meta.clone())).unwrap();
        let (back, got_meta) = load_curve_json(&path).unwrap();
        assert_eq!(mu, back);
        assert_eq!(got_meta, Some(meta));
    }

    #[test]
    fn curve_load_rejects_tampered_cumulative() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"vertices": [[0,0],[1,0]], "densities": [1.0], "cumulative": [0.0, 1.01]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_curve_json(&path),
            Err(IoError::Measure(MeasureError::CumulativeMismatch { .. }))
        ));
    }

    #[test]
    fn csv_missing_column_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.csv");
        std::fs::write(&path, "x,y\n0,0\n").unwrap();
        assert!(matches!(
            load_atoms_csv(&path),
            Err(IoError::MissingColumn("weight"))
        ));
    }

    #[test]
    fn sheet_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sheet.csv");
        let state = SheetState::new(
            vec![Complex64::new(0.0, 1.0), Complex64::new(-2.0, 0.5)],
            vec![6.28, -3.14],
            0.0,
        )
        .unwrap();
        save_sheet_csv(&path, &state).unwrap();
        let back = load_sheet_csv(&path).unwrap();
        assert_eq!(state.markers, back.markers);
        assert_eq!(state.d_gamma, back.d_gamma);
    }

    #[test]
    fn load_measure_dispatches_on_extension() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("atoms.csv");
        save_atoms_csv(&path, &AtomicMeasure::dirac(PlanePoint::ORIGIN)).unwrap();
        let (mu, meta) = load_measure(&path).unwrap();
        assert!(matches!(mu, Measure::Atomic(_)));
        assert!(meta.is_none());
        assert!(load_measure(dir.path().join("x.toml")).is_err());
    }
}
