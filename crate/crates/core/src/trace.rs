//! Population time series and their CSV/JSON forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SiteId;

/// Populations `n_i(t)` sampled on a time grid. Times are in units of `1/J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// One row per time, one column per label.
    pub populations: Vec<Vec<f64>>,
    /// Optional per-time norm of the off-diagonal part of the density matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<Vec<f64>>,
}

impl PopulationTrace {
    pub fn new(times: Vec<f64>, labels: Vec<String>, populations: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != populations.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} population rows",
                times.len(),
                populations.len()
            )));
        }
        if let Some(row) = populations.iter().find(|r| r.len() != labels.len()) {
            return Err(Error::ShapeMismatch(format!(
                "row of length {} for {} labels",
                row.len(),
                labels.len()
            )));
        }
        Ok(Self {
            times,
            labels,
            populations,
            coherence: None,
        })
    }

    pub fn generic_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n_{i}")).collect()
    }

    pub fn site_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| SiteId::from_index(i).column_name()).collect()
    }

    /// Relabels columns with rhombic site names (`n_A1`, `n_up1`, ...).
    pub fn with_site_labels(mut self) -> Self {
        self.labels = Self::site_labels(self.labels.len());
        self
    }

    pub fn with_coherence(mut self, coherence: Vec<f64>) -> Result<Self> {
        if coherence.len() != self.times.len() {
            return Err(Error::ShapeMismatch("coherence column length".into()));
        }
        self.coherence = Some(coherence);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn site_count(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, site: usize) -> Vec<f64> {
        self.populations.iter().map(|r| r[site]).collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        let idx = self.labels.iter().position(|l| l == label)?;
        Some(self.column(idx))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.populations.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn final_row(&self) -> Option<&[f64]> {
        self.populations.last().map(Vec::as_slice)
    }

    /// Maximum absolute population difference over all times and columns.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .populations
            .iter()
            .zip(&other.populations)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    pub fn mean_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        let n = (self.len() * self.site_count()).max(1) as f64;
        Ok(self
            .populations
            .iter()
            .zip(&other.populations)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .sum::<f64>()
            / n)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.site_count() != other.site_count() || self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.len(),
                self.site_count(),
                other.len(),
                other.site_count()
            )));
        }
        if self
            .times
            .iter()
            .zip(&other.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::ShapeMismatch("time grids differ".into()));
        }
        Ok(())
    }

    /// CSV with header `Jt,<labels...>[,coherence]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Jt");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        if self.coherence.is_some() {
            out.push_str(",coherence");
        }
        out.push('\n');
        for (k, (t, row)) in self.times.iter().zip(&self.populations).enumerate() {
            write!(out, "{t:.12e}").unwrap();
            for v in row {
                write!(out, ",{v:.12e}").unwrap();
            }
            if let Some(c) = &self.coherence {
                write!(out, ",{:.12e}", c[k]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty trace file".into()))?;
        let mut cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if cols.first().map(String::as_str) != Some("Jt") {
            return Err(Error::InvalidInput("trace header must start with Jt".into()));
        }
        cols.remove(0);
        let has_coherence = cols.last().map(String::as_str) == Some("coherence");
        if has_coherence {
            cols.pop();
        }
        let mut times = Vec::new();
        let mut pops = Vec::new();
        let mut coh = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 2)))?;
            let expect = cols.len() + 1 + usize::from(has_coherence);
            if vals.len() != expect {
                return Err(Error::ShapeMismatch(format!(
                    "line {} has {} fields, expected {expect}",
                    lineno + 2,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            pops.push(vals[1..=cols.len()].to_vec());
            if has_coherence {
                coh.push(vals[cols.len() + 1]);
            }
        }
        let trace = Self::new(times, cols, pops)?;
        if has_coherence {
            trace.with_coherence(coh)
        } else {
            Ok(trace)
        }
    }
}

/// JSON mirror of a trace with run metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema: u32,
    pub lattice_hash: String,
    pub fluxes: Vec<String>,
    pub delta_over_j: f64,
    /// Initially excited site, e.g. `"A,1"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_over_j: Option<Vec<f64>>,
    pub trace: PopulationTrace,
}
