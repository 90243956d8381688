//! JSON files exchanged with the command line tool and the bindings.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RiemannMatrix;
use crate::solver::{SolverConfig, Verdict};
use crate::zoo::MatrixRecord;

/// `{ "g": 2, "re": [[..],[..]], "im": [[..],[..]], "name": .., "stated_accuracy": .. }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub g: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stated_accuracy: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn from_rows(g: usize, r: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if r.len() != g || r.iter().any(|row| row.len() != g) {
        return Err(Error::MalformedFile(format!("{what} must be {g}x{g}")));
    }
    Ok(DMatrix::from_fn(g, g, |i, j| r[i][j]))
}

impl MatrixFile {
    pub fn from_matrix(b: &RiemannMatrix, name: Option<String>, stated_accuracy: Option<f64>) -> Self {
        Self {
            g: b.genus(),
            re: rows(&b.re()),
            im: rows(&b.im()),
            name,
            stated_accuracy,
        }
    }

    pub fn from_record(rec: &MatrixRecord) -> Self {
        Self::from_matrix(&rec.matrix, Some(rec.name.clone()), Some(rec.stated_accuracy))
    }

    pub fn to_matrix(&self) -> Result<RiemannMatrix> {
        if self.g == 0 {
            return Err(Error::MalformedFile("g must be positive".into()));
        }
        let re = from_rows(self.g, &self.re, "re")?;
        let im = from_rows(self.g, &self.im, "im")?;
        RiemannMatrix::from_parts(&re, &im)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Result of one `check` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub input: MatrixFile,
    pub config: SolverConfig,
    pub verdict: Verdict,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

impl ReportFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Copy with the wall time zeroed, for run-to-run comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}
