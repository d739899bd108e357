//! Suite orchestration: run a named suite from a config, write the JSON
//! report, the plot series and the echoed config into the output directory.

mod config;
mod report;
mod runs;

use std::fs;
use std::path::Path;
use std::time::Instant;

pub use config::{SuiteConfig, MIN_RESOLUTION, SUITES};
pub use report::{emit_plot_series, read_series, Check, Report, Series};
pub use runs::{PathManifest, MANIFEST};

use crate::error::{LabError, Result};

/// Wall-clock budget in seconds, for suites that have one.
pub fn runtime_budget(suite: &str) -> Option<f64> {
    match suite {
        "anosov-liouville" => Some(10.0),
        "ribbon" => Some(5.0),
        "smoothing-2d" => Some(60.0),
        _ => None,
    }
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

/// Run one suite and write `<suite>.report.json`, `<suite>.config.toml` and
/// `<suite>.<series>.csv` into `cfg.out`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    let out = cfg.out.as_path();
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let run = match cfg.suite.as_str() {
        "anosov-liouville" => runs::anosov_liouville,
        "lemma-flow" => runs::lemma_flow,
        "ribbon" => runs::ribbon,
        "pulldown" => runs::pulldown,
        "smoothing-2d" => runs::smoothing_2d,
        "appendix-a" => runs::appendix_a,
        "straighten" => runs::straighten,
        "preliouville-path" => runs::preliouville_path,
        other => return Err(LabError::Config(format!("unknown suite '{other}'"))),
    };
    let outcome = run(cfg, out)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let unused = cfg.unused_keys();
    if !unused.is_empty() {
        return Err(LabError::Config(format!("unknown config keys: {}", unused.join(", "))));
    }

    let mut artifacts: Vec<String> = outcome.artifacts.iter().map(|p| relative(out, p)).collect();
    for p in emit_plot_series(out, &cfg.suite, &outcome.series)? {
        artifacts.push(relative(out, &p));
    }
    let echo = out.join(format!("{}.config.toml", cfg.suite));
    fs::write(&echo, cfg.echo_toml())?;
    artifacts.push(relative(out, &echo));

    let mut report = Report {
        suite: cfg.suite.clone(),
        seed: cfg.seed,
        strict: cfg.strict,
        config: cfg.echo_json(),
        checks: outcome.checks,
        pass: false,
        wall_time_s,
        runtime: runtime_budget(&cfg.suite).map(|b| Check::at_most("runtime seconds", wall_time_s, b).advisory()),
        artifacts,
    };
    report.pass = report.failures().is_empty();
    let json = serde_json::to_string_pretty(&report).map_err(|e| LabError::Io(e.to_string()))?;
    fs::write(out.join(format!("{}.report.json", cfg.suite)), json)?;
    Ok(report)
}
