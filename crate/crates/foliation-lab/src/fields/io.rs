//! Text dumps of forms with a JSON sidecar header, and CSV export.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::form::FormField;
use super::grid::ModelManifold;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormHeader {
    pub degree: usize,
    pub resolution: Vec<usize>,
    pub chart: String,
    pub manifold: ModelManifold,
    pub components: usize,
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.json")), dir.join(format!("{name}.txt")))
}

/// Write `name.json` (header) and `name.txt` (one line per sample, all
/// components, shortest round-trip float formatting).
pub fn save_form(form: &FormField, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (hp, dp) = paths(dir, name);
    let header = FormHeader {
        degree: form.degree,
        resolution: form.manifold.shape(),
        chart: form.manifold.kind.label(),
        manifold: (*form.manifold).clone(),
        components: form.comps.len(),
    };
    fs::write(&hp, serde_json::to_string_pretty(&header).map_err(|e| LabError::Io(e.to_string()))?)?;
    let mut w = BufWriter::new(fs::File::create(&dp)?);
    for p in 0..form.manifold.len() {
        let line: Vec<String> = form.comps.iter().map(|c| format!("{:?}", c[p])).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(vec![hp, dp])
}

pub fn load_form(dir: &Path, name: &str) -> Result<FormField> {
    let (hp, dp) = paths(dir, name);
    let header: FormHeader =
        serde_json::from_str(&fs::read_to_string(hp)?).map_err(|e| LabError::Io(e.to_string()))?;
    header.manifold.validate()?;
    let m = Arc::new(header.manifold);
    let mut form = FormField::zeros(m.clone(), header.degree);
    if form.comps.len() != header.components {
        return Err(LabError::Io("component count disagrees with degree".into()));
    }
    let reader = BufReader::new(fs::File::open(dp)?);
    let mut count = 0;
    for (p, line) in reader.lines().enumerate() {
        let line = line?;
        if p >= m.len() {
            return Err(LabError::Io("too many samples".into()));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| LabError::Io(e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != header.components {
            return Err(LabError::Io(format!("sample {p}: wrong component count")));
        }
        for (c, v) in vals.into_iter().enumerate() {
            form.comps[c][p] = v;
        }
        count += 1;
    }
    if count != m.len() {
        return Err(LabError::Io(format!("expected {} samples, found {count}", m.len())));
    }
    Ok(form)
}

/// CSV of a scalar (degree 0 or top degree) field: coordinate columns then value.
pub fn write_scalar_csv(form: &FormField, path: &Path) -> Result<()> {
    if form.comps.len() != 1 {
        return Err(LabError::GridMismatch("CSV export needs a single-component field".into()));
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let names: Vec<&str> = form.manifold.axes.iter().map(|a| a.name.as_str()).collect();
    writeln!(w, "{},value", names.join(","))?;
    for p in 0..form.manifold.len() {
        let c = form.manifold.coords(p);
        let cs: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{},{:?}", cs.join(","), form.comps[0][p])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Arc::new(ModelManifold::mapping_torus([[2, 1], [1, 1]], 9, 8).unwrap());
        let f = FormField::from_fn(m, 2, |c| vec![c[0].exp(), 1.0 / 3.0, -c[1] * c[2]]);
        save_form(&f, dir.path(), "f").unwrap();
        let g = load_form(dir.path(), "f").unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let m = Arc::new(ModelManifold::torus3(8).unwrap());
        let f = FormField::scalar_from_fn(m, |c| c[0]);
        let p = dir.path().join("s.csv");
        write_scalar_csv(&f, &p).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert!(text.starts_with("x,y,z,value\n"));
        assert_eq!(text.lines().count(), 513);
    }
}
