//! Field files. A field or a set of Cauchy data is one lattice and a list of
//! coefficient vectors.
//!
//! `.json`: `{"sizes": [..], "periods": [..], "components": [[[re, im], ..], ..]}`.
//!
//! `.csv`: a first line `# {"sizes": [..], "periods": [..]}`, then a header
//! `component,index,re,im` and one row per coefficient.

use std::fs;
use std::path::Path;

use hoermander_core::{Lattice, SpectralError, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::traces::{CauchyData, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad field file: {0}")]
    Format(String),
    #[error("unknown extension on {0}; expected .json or .csv")]
    Extension(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    sizes: Vec<usize>,
    periods: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonFile {
    sizes: Vec<usize>,
    periods: Vec<f64>,
    components: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    component: usize,
    index: usize,
    re: f64,
    im: f64,
}

enum Kind {
    Json,
    Csv,
}

fn kind(path: &Path) -> Result<Kind, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Kind::Json),
        Some("csv") => Ok(Kind::Csv),
        _ => Err(IoError::Extension(path.display().to_string())),
    }
}

/// Write coefficient vectors sharing one lattice.
pub fn write_components(path: &Path, components: &[SpectralField]) -> Result<(), IoError> {
    let lat = components.first().ok_or_else(|| IoError::Format("no components".into()))?.lattice();
    if components.iter().any(|c| c.lattice() != lat) {
        return Err(IoError::Format("components on different lattices".into()));
    }
    match kind(path)? {
        Kind::Json => {
            let file = JsonFile {
                sizes: lat.sizes().to_vec(),
                periods: lat.periods().to_vec(),
                components: components.iter().map(|c| c.coeffs().iter().map(|z| [z.re, z.im]).collect()).collect(),
            };
            fs::write(path, serde_json::to_string(&file)?)?;
        }
        Kind::Csv => {
            let header = Header { sizes: lat.sizes().to_vec(), periods: lat.periods().to_vec() };
            let mut w = csv::Writer::from_writer(Vec::new());
            for (component, c) in components.iter().enumerate() {
                for (index, z) in c.coeffs().iter().enumerate() {
                    w.serialize(CsvRow { component, index, re: z.re, im: z.im })?;
                }
            }
            let body = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
            let mut out = format!("# {}\n", serde_json::to_string(&header)?).into_bytes();
            out.extend(body);
            fs::write(path, out)?;
        }
    }
    Ok(())
}

/// Read coefficient vectors written by [`write_components`].
pub fn read_components(path: &Path) -> Result<Vec<SpectralField>, IoError> {
    let text = fs::read_to_string(path)?;
    let (lattice, raw) = match kind(path)? {
        Kind::Json => {
            let f: JsonFile = serde_json::from_str(&text)?;
            let raw: Vec<Vec<Complex64>> = f
                .components
                .into_iter()
                .map(|c| c.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect();
            (Lattice::new(f.sizes, f.periods)?, raw)
        }
        Kind::Csv => {
            let (first, body) = text.split_once('\n').ok_or_else(|| IoError::Format("missing header line".into()))?;
            let header = first
                .strip_prefix('#')
                .ok_or_else(|| IoError::Format("first line must start with '#'".into()))?;
            let h: Header = serde_json::from_str(header.trim())?;
            let lattice = Lattice::new(h.sizes, h.periods)?;
            let mut raw: Vec<Vec<Complex64>> = Vec::new();
            for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
                let row: CsvRow = row?;
                if row.index >= lattice.len() {
                    return Err(IoError::Format(format!("index {} out of range", row.index)));
                }
                while raw.len() <= row.component {
                    raw.push(vec![Complex64::new(0.0, 0.0); lattice.len()]);
                }
                raw[row.component][row.index] = Complex64::new(row.re, row.im);
            }
            (lattice, raw)
        }
    };
    if raw.is_empty() {
        return Err(IoError::Format("no components".into()));
    }
    Ok(raw.into_iter().map(|c| SpectralField::new(lattice.clone(), c)).collect::<Result<_, _>>()?)
}

pub fn write_field(path: &Path, u: &SpectralField) -> Result<(), IoError> {
    write_components(path, std::slice::from_ref(u))
}

pub fn read_field(path: &Path) -> Result<SpectralField, IoError> {
    let mut c = read_components(path)?;
    if c.len() != 1 {
        return Err(IoError::Format(format!("expected one component, found {}", c.len())));
    }
    Ok(c.remove(0))
}

pub fn write_cauchy(path: &Path, v: &CauchyData) -> Result<(), IoError> {
    write_components(path, v.components())
}

pub fn read_cauchy(path: &Path) -> Result<CauchyData, IoError> {
    Ok(CauchyData::new(read_components(path)?)?)
}
