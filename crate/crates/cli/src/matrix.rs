//! Column-oriented matrix files: CSV with an id header, or raw little-endian
//! f32 with a JSON sidecar.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail, ensure};
use clap::ValueEnum;
use neuroneval::{ActivationVector, ConceptVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Rawf32,
}

impl MatrixFormat {
    /// `.csv` files are CSV, everything else raw f32.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Rawf32,
        }
    }
}

/// Sidecar of a raw f32 file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub rows: usize,
    pub cols: usize,
    pub ids: Vec<String>,
}

/// A matrix stored as named columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn new(ids: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        ensure!(
            ids.len() == columns.len(),
            "{} ids for {} columns",
            ids.len(),
            columns.len()
        );
        ensure!(!ids.is_empty(), "matrix has no columns");
        let rows = columns[0].len();
        ensure!(rows > 0, "matrix has no rows");
        for (id, col) in ids.iter().zip(&columns) {
            ensure!(
                col.len() == rows,
                "column '{id}' has {} rows, expected {rows}",
                col.len()
            );
        }
        let mut seen = HashSet::new();
        for id in &ids {
            ensure!(!id.is_empty(), "empty column id");
            ensure!(seen.insert(id), "duplicate column id '{id}'");
        }
        for (j, col) in columns.iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                bail!(
                    "non-finite value at row {}, column {} ('{}')",
                    i + 1,
                    j + 1,
                    ids[j]
                );
            }
        }
        Ok(Self { ids, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn from_activations(vs: &[ActivationVector]) -> Result<Self> {
        Self::new(
            vs.iter().map(|v| v.id().to_string()).collect(),
            vs.iter().map(|v| v.values().to_vec()).collect(),
        )
    }

    pub fn from_concepts(vs: &[ConceptVector]) -> Result<Self> {
        Self::new(
            vs.iter().map(|v| v.id().to_string()).collect(),
            vs.iter().map(|v| v.values().to_vec()).collect(),
        )
    }

    pub fn activations(&self) -> Result<Vec<ActivationVector>> {
        self.ids
            .iter()
            .zip(&self.columns)
            .map(|(id, col)| {
                ActivationVector::new(id.clone(), col.clone())
                    .with_context(|| format!("activation '{id}'"))
            })
            .collect()
    }

    pub fn concepts(&self) -> Result<Vec<ConceptVector>> {
        self.ids
            .iter()
            .zip(&self.columns)
            .enumerate()
            .map(|(j, (id, col))| {
                if let Some(i) = col.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    bail!(
                        "concept value {} outside [0,1] at row {}, column {} ('{id}')",
                        col[i],
                        i + 1,
                        j + 1
                    );
                }
                ConceptVector::new(id.clone(), col.clone())
                    .with_context(|| format!("concept '{id}'"))
            })
            .collect()
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn read_matrix(path: &Path, format: Option<MatrixFormat>) -> Result<Matrix> {
    match format.unwrap_or_else(|| MatrixFormat::infer(path)) {
        MatrixFormat::Csv => read_csv(path),
        MatrixFormat::Rawf32 => read_rawf32(path),
    }
    .with_context(|| format!("reading {}", path.display()))
}

fn read_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let ids: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); ids.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        ensure!(
            record.len() == ids.len(),
            "row {} has {} fields, expected {}",
            r + 1,
            record.len(),
            ids.len()
        );
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!("row {}, column {}: '{field}' is not a number", r + 1, j + 1)
            })?;
            columns[j].push(v);
        }
    }
    Matrix::new(ids, columns)
}

fn read_rawf32(path: &Path) -> Result<Matrix> {
    let side = sidecar_path(path);
    let text =
        fs::read_to_string(&side).with_context(|| format!("reading sidecar {}", side.display()))?;
    let meta: Sidecar = serde_json::from_str(&text)
        .with_context(|| format!("parsing sidecar {}", side.display()))?;
    ensure!(
        meta.ids.len() == meta.cols,
        "sidecar declares {} cols but {} ids",
        meta.cols,
        meta.ids.len()
    );
    let bytes = fs::read(path)?;
    let expected = meta
        .rows
        .checked_mul(meta.cols)
        .and_then(|x| x.checked_mul(4));
    ensure!(
        expected == Some(bytes.len()),
        "sidecar declares {}x{} floats but file holds {} bytes",
        meta.rows,
        meta.cols,
        bytes.len()
    );
    let mut columns = vec![Vec::with_capacity(meta.rows); meta.cols];
    for (k, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        columns[k % meta.cols].push(f64::from(v));
    }
    Matrix::new(meta.ids, columns)
}

pub fn write_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&m.ids)?;
    for i in 0..m.rows() {
        w.write_record(m.columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Values are narrowed to f32; callers wanting a lossless round trip must
/// supply f32-representable data.
pub fn write_rawf32(path: &Path, m: &Matrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.rows() * m.cols() * 4);
    for i in 0..m.rows() {
        for c in &m.columns {
            bytes.extend_from_slice(&(c[i] as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    let meta = Sidecar {
        rows: m.rows(),
        cols: m.cols(),
        ids: m.ids.clone(),
    };
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Read a `unit_id,concept_id` CSV.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let read = || -> Result<BTreeMap<String, String>> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        ensure!(
            headers == ["unit_id", "concept_id"],
            "expected header 'unit_id,concept_id', got '{}'",
            headers.join(",")
        );
        let mut pairs = BTreeMap::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            ensure!(
                record.len() == 2,
                "row {} has {} fields, expected 2",
                r + 1,
                record.len()
            );
            let unit = record[0].trim().to_string();
            if pairs
                .insert(unit.clone(), record[1].trim().to_string())
                .is_some()
            {
                bail!("unit '{unit}' listed twice");
            }
        }
        Ok(pairs)
    };
    read().with_context(|| format!("reading {}", path.display()))
}

pub fn write_pairs(path: &Path, pairs: &BTreeMap<String, String>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["unit_id", "concept_id"])?;
    for (u, c) in pairs {
        w.write_record([u, c])?;
    }
    w.flush()?;
    Ok(())
}
