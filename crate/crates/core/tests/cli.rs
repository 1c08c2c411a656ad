use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cct");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn cct(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("CCT_THREADS");
    if let Some(t) = threads_env {
        cmd.env("CCT_THREADS", t);
    }
    cmd.output().unwrap()
}

const SMALL: &str = "scenario = \"a1\"\nn = 200\nm = 60\nreps = 4\nseed = 11\n";

#[test]
fn successful_run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("report.csv");
    let o = cct(&["outlier-detect", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("replication,seed,fdp,"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("mean,")).count(), 1);
}

#[test]
fn stdout_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{}alpha = 0.2\n", SMALL.replace("\"a1\"", "\"a2\"")));
    let args = ["select", "--config", cfg.to_str().unwrap(), "--threads", "1"];
    let one = cct(&args, None);
    let three = cct(&args, Some("3"));
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let path = cfg.to_str().unwrap();

    let o = cct(&["outlier-detect", "--config", "/no/such/file.toml"], None);
    assert_eq!(o.status.code(), Some(1));

    let o = cct(&["outlier-detect", "--config", path, "--alpha", "1.5"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    let o = cct(&["outlier-detect", "--config", path, "--set", "no_such_key=1"], None);
    assert_eq!(o.status.code(), Some(1));

    let o = cct(&["outlier-detect", "--config", path, "--threads", "2"], Some("many"));
    assert_eq!(o.status.code(), Some(1), "CCT_THREADS must take precedence over --threads");

    let o = cct(&["two-sample-test", "--config", path], None);
    assert_eq!(o.status.code(), Some(1), "a1 is not a two-sample scenario");

    let o = cct(&["outlier-detect"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = cct(&["outlier-detect", "--config", cfg.to_str().unwrap(), "--output", "/no/such/dir/report.json"], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = cct(&["simulate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 201);
}
