//! Experiment artifacts: a versioned CSV table and a TOML summary.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// Bumped whenever a column is added, removed or reinterpreted.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    kind: String,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&'static str]) -> Self {
        Self {
            kind: kind.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Appends a row; panics if the arity is wrong since that is a harness bug.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row arity does not match the {} schema", self.kind);
        self.rows.push(row);
    }

    pub fn header_comment(&self) -> String {
        format!("# ratq-csv v{CSV_SCHEMA_VERSION} kind={}", self.kind)
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "{}", self.header_comment())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// Formats one CSV cell.
pub fn cell(v: impl Display) -> String {
    v.to_string()
}

/// A bound comparison recorded in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Measured side, already including any SE allowance.
    pub measured: f64,
    pub bound: f64,
    /// `"le"`, `"lt"`, `"within"`.
    pub relation: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            relation: "le".into(),
            passed: measured <= bound,
            detail: detail.into(),
        }
    }

    /// Passes when `measured < bound`.
    pub fn below(name: &str, measured: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            relation: "lt".into(),
            passed: measured < bound,
            detail: detail.into(),
        }
    }

    /// Passes when `lo ≤ measured ≤ hi`; `bound` records `hi`.
    pub fn within(name: &str, measured: f64, lo: f64, hi: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            bound: hi,
            relation: "within".into(),
            passed: (lo..=hi).contains(&measured),
            detail: format!("[{lo}, {hi}] {}", detail.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub seed: u64,
    pub trials: usize,
    /// Resolved quantizer constants and derived bounds.
    pub parameters: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Summary {
    pub fn new(kind: &str, seed: u64, trials: usize) -> Self {
        Self {
            kind: kind.into(),
            seed,
            trials,
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn param(&mut self, key: &str, v: impl Into<f64>) {
        self.parameters.insert(key.into(), v.into());
    }

    pub fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn warn(&mut self, w: String) {
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Running mean and standard error of a scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanSe {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl MeanSe {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanSe {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::default();
        for v in iter {
            m.push(v);
        }
        m
    }
}
