//! Suite configuration: TOML sections of flat keys, read through typed
//! accessors that record every value actually used.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{LabError, Result};

pub const SUITES: [&str; 8] = [
    "anosov-liouville",
    "lemma-flow",
    "ribbon",
    "pulldown",
    "smoothing-2d",
    "appendix-a",
    "straighten",
    "preliouville-path",
];

/// Smallest grid resolution a suite accepts.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug)]
pub struct SuiteConfig {
    pub suite: String,
    pub seed: u64,
    pub out: PathBuf,
    /// Promote advisory checks (runtime budgets) to gating ones.
    pub strict: bool,
    table: Table,
    echo: RefCell<Table>,
}

impl SuiteConfig {
    pub fn new(suite: &str, seed: u64, out: impl Into<PathBuf>) -> Result<Self> {
        if !SUITES.contains(&suite) {
            return Err(LabError::Config(format!("unknown suite '{suite}'; expected one of {}", SUITES.join(", "))));
        }
        Ok(SuiteConfig {
            suite: suite.into(),
            seed,
            out: out.into(),
            strict: false,
            table: Table::new(),
            echo: RefCell::new(Table::new()),
        })
    }

    /// Parse parameter sections from TOML text. Top-level `suite` and `seed`
    /// keys are honoured when present.
    pub fn parse(text: &str, suite: Option<&str>, seed: Option<u64>, out: impl Into<PathBuf>) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))?;
        let name = match (suite, table.get("suite")) {
            (Some(s), _) => s.to_string(),
            (None, Some(Value::String(s))) => s.clone(),
            _ => return Err(LabError::Config("no suite named".into())),
        };
        let seed = match (seed, table.get("seed")) {
            (Some(s), _) => s,
            (None, Some(Value::Integer(s))) if *s >= 0 => *s as u64,
            (None, None) => 0,
            (None, Some(v)) => return Err(LabError::Config(format!("seed must be a nonnegative integer, got {v}"))),
        };
        let mut cfg = SuiteConfig::new(&name, seed, out)?;
        for (k, v) in table {
            match (k.as_str(), v) {
                ("suite" | "seed", _) => {}
                (_, Value::Table(t)) => {
                    cfg.table.insert(k, Value::Table(t));
                }
                (_, v) => return Err(LabError::Config(format!("top-level key '{k}' = {v} outside a section"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, suite: Option<&str>, seed: Option<u64>, out: impl Into<PathBuf>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, suite, seed, out)
    }

    /// `section.key`, or `default` when absent. The value used is echoed.
    pub fn get<T: DeserializeOwned + Serialize>(&self, section: &str, key: &str, default: T) -> Result<T> {
        let found = self.table.get(section).and_then(|s| s.as_table()).and_then(|s| s.get(key));
        let value = match found {
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| LabError::Config(format!("{section}.{key}: {e}")))?,
            None => default,
        };
        let shown = Value::try_from(&value).map_err(|e| LabError::Config(format!("{section}.{key}: {e}")))?;
        let mut echo = self.echo.borrow_mut();
        let sec = echo.entry(section).or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = sec {
            t.insert(key.into(), shown);
        }
        Ok(value)
    }

    /// A grid resolution, at least [`MIN_RESOLUTION`].
    pub fn resolution(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        let n: usize = self.get(section, key, default)?;
        if n < MIN_RESOLUTION {
            return Err(LabError::Config(format!("{section}.{key} = {n} is below {MIN_RESOLUTION}")));
        }
        Ok(n)
    }

    /// Keys present in the file but never read by the suite.
    pub fn unused_keys(&self) -> Vec<String> {
        let echo = self.echo.borrow();
        let mut out = Vec::new();
        for (s, v) in &self.table {
            if let Value::Table(t) = v {
                for k in t.keys() {
                    let used = echo.get(s).and_then(|e| e.as_table()).is_some_and(|e| e.contains_key(k));
                    if !used {
                        out.push(format!("{s}.{k}"));
                    }
                }
            }
        }
        out
    }

    /// Every value read so far, with suite and seed, as TOML text that
    /// reproduces the run.
    pub fn echo_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("suite".into(), Value::String(self.suite.clone()));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        for (k, v) in self.echo.borrow().iter() {
            t.insert(k.clone(), v.clone());
        }
        toml::to_string(&t).expect("echo table serializes")
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(&*self.echo.borrow()).expect("echo table converts")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = SuiteConfig::parse("suite = \"ribbon\"\n[ribbon]\npairs = 7\n", None, None, "out").unwrap();
        assert_eq!((cfg.suite.as_str(), cfg.seed), ("ribbon", 0));
        assert_eq!(cfg.get("ribbon", "pairs", 50usize).unwrap(), 7);
        assert_eq!(cfg.get("ribbon", "s_max", 5.0).unwrap(), 5.0);
        let echo = cfg.echo_toml();
        assert!(echo.contains("pairs = 7") && echo.contains("s_max = 5.0"));
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(matches!(SuiteConfig::new("nope", 0, "out"), Err(LabError::Config(_))));
        assert!(SuiteConfig::parse("", None, None, "out").is_err());
    }

    #[test]
    fn bad_types_and_resolutions() {
        let cfg = SuiteConfig::parse("[m]\nn = \"big\"\nk = 4\n", Some("ribbon"), Some(3), "out").unwrap();
        assert_eq!(cfg.seed, 3);
        assert!(cfg.get("m", "n", 8usize).is_err());
        assert!(cfg.resolution("m", "k", 16).is_err());
        assert!(SuiteConfig::parse("x = 1\n", Some("ribbon"), None, "out").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = SuiteConfig::new("pulldown", 9, "out").unwrap();
        let v: Vec<f64> = cfg.get("p", "eps", vec![0.1, 0.01]).unwrap();
        let again = SuiteConfig::parse(&cfg.echo_toml(), None, None, "out").unwrap();
        assert_eq!(again.seed, 9);
        assert_eq!(again.get("p", "eps", Vec::<f64>::new()).unwrap(), v);
        assert!(again.unused_keys().is_empty());
    }
}
