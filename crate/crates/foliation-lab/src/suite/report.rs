//! Verdicts, reports and plot series.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};

/// One verdict. `value` is the measured minimum, maximum or margin compared
/// against `bound`; `violation` names the first failing sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    /// A closed-form value the measurement should match, when there is one.
    pub expected: Option<f64>,
    pub violation: Option<String>,
    /// Advisory checks gate the exit status only in strict mode.
    pub advisory: bool,
}

impl Check {
    /// `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value <= bound, value, bound)
    }

    /// `value >= bound`.
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value >= bound, value, bound)
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self::new(name, pass, if pass { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn new(name: &str, pass: bool, value: f64, bound: f64) -> Self {
        Check { name: name.into(), pass, value, bound, expected: None, violation: None, advisory: false }
    }

    pub fn expected(mut self, v: f64) -> Self {
        self.expected = Some(v);
        self
    }

    /// Attach the first violating sample; ignored for passing checks.
    pub fn violation(mut self, v: Option<String>) -> Self {
        if !self.pass {
            self.violation = v;
        }
        self
    }

    pub fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }

    pub fn gates(&self, strict: bool) -> bool {
        strict || !self.advisory
    }
}

/// A table for plotting: headered numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub strict: bool,
    /// Every parameter the run read, defaults included.
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
    /// Runtime budget verdict; advisory, and left out of the canonical form.
    pub runtime: Option<Check>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().chain(&self.runtime).filter(|c| !c.pass && c.gates(self.strict)).collect()
    }

    /// The report without timings, as compact JSON.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        r.runtime = None;
        serde_json::to_string(&r).expect("report serializes")
    }
}

fn io(e: impl std::fmt::Display) -> LabError {
    LabError::Io(e.to_string())
}

/// One CSV per series, named `<prefix>.<series>.csv`. An empty series gives
/// a header-only file.
pub fn emit_plot_series(dir: &Path, prefix: &str, series: &[Series]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(series.len());
    for s in series {
        if s.columns.is_empty() {
            return Err(LabError::Io(format!("series '{}' has no columns", s.name)));
        }
        let path = dir.join(format!("{prefix}.{}.csv", s.name));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(&s.columns).map_err(io)?;
        for row in &s.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(io)?;
        }
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

/// Read a series back from its CSV file.
pub fn read_series(path: &Path) -> Result<Series> {
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let columns: Vec<String> = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        rows.push(rec.iter().map(|v| v.parse::<f64>().map_err(io)).collect::<Result<Vec<f64>>>()?);
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    Ok(Series { name, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_directions() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_least("b", -1e-300, 0.0).pass);
        assert!(!Check::at_most("nan", f64::NAN, 1.0).pass);
        let c = Check::flag("c", true).violation(Some("x".into()));
        assert_eq!(c.violation, None);
        let d = Check::flag("d", false).violation(Some("sample 3".into()));
        assert_eq!(d.violation.as_deref(), Some("sample 3"));
        assert!(!Check::flag("e", false).advisory().gates(false));
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Series::new("decay", &["t", "angle", "bound"]);
        s.push(vec![0.0, 0.3, 0.3]);
        s.push(vec![1.0, 0.1 + 0.2, f64::MIN_POSITIVE]);
        let empty = Series::new("empty", &["theta", "z", "margin"]);
        let paths = emit_plot_series(dir.path(), "x", &[s.clone(), empty]).unwrap();
        let back = read_series(&paths[0]).unwrap();
        assert_eq!((back.columns, back.rows), (s.columns, s.rows));
        assert_eq!(fs::read_to_string(&paths[1]).unwrap(), "theta,z,margin\n");
    }
}
