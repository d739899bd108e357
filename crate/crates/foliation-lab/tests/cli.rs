use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use foliation_lab::suite::read_series;

fn lab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_foliation-lab"));
    cmd.args(args).env_remove("FOLIATION_LAB_OUT");
    if let Some(p) = env_out {
        cmd.env("FOLIATION_LAB_OUT", p);
    }
    cmd.output().unwrap()
}

fn report(dir: &Path, suite: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{suite}.report.json"))).unwrap()).unwrap()
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["--suite", "nope", "--out", dir.path().to_str().unwrap()], None);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unknown suite") && err.contains("anosov-liouville"), "{err}");
}

#[test]
fn missing_suite_is_a_usage_error() {
    let o = lab(&[], None);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--suite"));
}

#[test]
fn ribbon_run_writes_report_series_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["--suite", "ribbon", "--seed", "7", "--out", dir.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "ribbon");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["ribbon"]["pairs"], 50);
    let s = read_series(&dir.path().join("ribbon.holonomy.csv")).unwrap();
    assert_eq!(s.columns, ["s", "a", "b", "accumulated", "min_f_s"]);
    assert!(!s.rows.is_empty());
    let echo = fs::read_to_string(dir.path().join("ribbon.config.toml")).unwrap();
    assert!(echo.contains("seed = 7") && echo.contains("pairs = 50"));
}

#[test]
fn env_var_sets_output_and_flag_wins() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    assert!(lab(&["--suite", "pulldown"], Some(env_dir.path())).status.success());
    assert!(env_dir.path().join("pulldown.report.json").exists());
    let o = lab(&["--suite", "pulldown", "--out", flag_dir.path().to_str().unwrap()], Some(env_dir.path()));
    assert!(o.status.success());
    assert!(flag_dir.path().join("pulldown.report.json").exists());
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "suite = \"ribbon\"\nseed = 3\n[ribbon]\npairs = 6\ns_max = 5.0\n").unwrap();
    let out = dir.path().join("out");
    let o = lab(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success());
    let r = report(&out, "ribbon");
    assert_eq!((r["seed"].as_u64(), r["config"]["ribbon"]["pairs"].as_u64()), (Some(3), Some(6)));

    // the echoed config reproduces the run
    let echo = out.join("ribbon.config.toml");
    let again = dir.path().join("again");
    assert!(lab(&["--config", echo.to_str().unwrap(), "--out", again.to_str().unwrap()], None).status.success());
    let mut a = report(&out, "ribbon");
    let mut b = report(&again, "ribbon");
    for v in [&mut a, &mut b] {
        v["wall_time_s"] = 0.into();
        v["runtime"] = serde_json::Value::Null;
    }
    assert_eq!(a, b);
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    for text in ["[ribbon]\npairs = \"many\"\n", "[ribbon]\npears = 5\n", "[pulldown]\nn_z = 4\n"] {
        fs::write(&cfg, text).unwrap();
        let suite = if text.contains("pulldown") { "pulldown" } else { "ribbon" };
        let o = lab(&["--suite", suite, "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
        assert!(!o.status.success(), "{text}");
    }
}
