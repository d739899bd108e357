//! Run a suite programmatically: `cargo run --example run_suite -- ribbon`.
//! Output goes to `$FOLIATION_LAB_OUT` or `out/`.

use foliation_lab::suite::{run_suite, SuiteConfig};

fn main() -> foliation_lab::Result<()> {
    let suite = std::env::args().nth(1).unwrap_or_else(|| "ribbon".into());
    let out = std::env::var("FOLIATION_LAB_OUT").unwrap_or_else(|_| "out".into());
    let cfg = SuiteConfig::new(&suite, 0, out)?;
    let report = run_suite(&cfg)?;
    for c in &report.checks {
        println!("{:<5} {:<40} {:.4e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.value);
    }
    println!("{} artifacts, pass = {}", report.artifacts.len(), report.pass);
    Ok(())
}
