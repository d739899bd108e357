use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use foliation_lab::suite::{run_suite, SuiteConfig, SUITES};

/// Run a verification suite and write its JSON report and CSV series.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Suite name; may also come from the config file.
    #[arg(long)]
    suite: Option<String>,
    /// TOML file with per-suite parameter sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FOLIATION_LAB_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Runtime budgets gate the exit status too.
    #[arg(long)]
    strict: bool,
}

fn main() -> anyhow::Result<ExitCode> {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => SuiteConfig::from_file(path, args.suite.as_deref(), args.seed, &args.out)
            .with_context(|| format!("reading {}", path.display()))?,
        None => {
            let Some(suite) = args.suite.as_deref() else {
                anyhow::bail!("no suite given; expected --suite <{}>", SUITES.join("|"));
            };
            SuiteConfig::new(suite, args.seed.unwrap_or(0), &args.out)?
        }
    };
    cfg.strict = args.strict;
    let report = run_suite(&cfg)?;
    for c in report.checks.iter().chain(&report.runtime) {
        let tag = if c.pass { "ok  " } else if c.gates(report.strict) { "FAIL" } else { "warn" };
        println!("{tag} {}: {:.6e} (bound {:.6e})", c.name, c.value, c.bound);
    }
    println!(
        "{} {} in {:.2}s -> {}",
        report.suite,
        if report.pass { "passed" } else { "FAILED" },
        report.wall_time_s,
        cfg.out.display()
    );
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
