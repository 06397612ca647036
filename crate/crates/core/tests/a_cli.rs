//! End-to-end runs of the `ssgm` binary against stored artifacts.
//! Set `SSGM_BLESS=1` to rewrite the files under `tests/golden`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn ssgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssgm"))
        .args(args)
        .env_remove("SSGM_THREADS")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = ssgm(args);
    assert!(
        out.status.success(),
        "ssgm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn compare_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("SSGM_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden copy");
}

fn artifact(args: &[&str], ext: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join(format!("out.{ext}"));
    let mut full = vec![if ext == "csv" { "--csv" } else { "--json" }, file.to_str().unwrap()];
    full.extend_from_slice(args);
    run_ok(&full);
    std::fs::read_to_string(&file).unwrap()
}

#[test]
fn kernel_eval_csv() {
    let csv = artifact(&["kernel-eval", "--kernel", "canonical:H=0.7,c=-1.5", "--grid", "geom:0.1:2:5"], "csv");
    compare_golden("kernel_eval_canonical.csv", &csv);
}

#[test]
fn markov_test_json() {
    let json = artifact(&["markov-test", "--kernel", "fbm:H=0.75", "--grid", "standard"], "json");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["version"], "1");
    assert_eq!(v["verdict"], "NotMarkov");
    compare_golden("markov_test_fbm.json", &json);
}

#[test]
fn sample_csv_is_seeded() {
    let args = ["sample", "--kernel", "canonical:H=0.5,c=-1", "--grid", "lin:0.25:1:4", "--paths", "8", "--seed", "17"];
    let csv = artifact(&args, "csv");
    compare_golden("sample_brownian.csv", &csv);
}

#[test]
fn variation_csv() {
    let args = ["variation", "--kernel", "fbm:H=0.25", "--n", "2^4..2^6", "--paths", "8", "--seed", "5"];
    let csv = artifact(&args, "csv");
    assert!(csv.starts_with("n,mean_S_n,se_S_n\n"));
    compare_golden("variation_fbm.csv", &csv);
}

#[test]
fn posdef_reports_witness() {
    let out = run_ok(&["posdef", "--alpha", "0.5", "--beta", "0", "--grid", "1,2"]);
    assert!(out.contains("NotPSD"), "{out}");
}

#[test]
fn asym_summary() {
    let out = run_ok(&["asym", "--kernel", "rl:H=0.25"]);
    assert!(out.starts_with("asym"), "{out}");
}

#[test]
fn invalid_parameters_exit_with_two() {
    let out = ssgm(&["kernel-eval", "--kernel", "fbm:H=1.5", "--grid", "standard"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("H"));
}

#[test]
fn missing_seed_is_rejected() {
    let out = ssgm(&["sample", "--kernel", "fbm:H=0.3", "--grid", "standard", "--paths", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("env.csv");
    let args = ["--csv", file.to_str().unwrap(), "sample", "--kernel", "fbm:H=0.3", "--grid", "lin:0.1:1:6", "--paths", "50", "--seed", "2"];
    let out = Command::new(env!("CARGO_BIN_EXE_ssgm"))
        .args(args)
        .env("SSGM_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let via_env = std::fs::read(&file).unwrap();
    run_ok(&["--threads", "1", "--csv", file.to_str().unwrap(), "sample", "--kernel", "fbm:H=0.3", "--grid", "lin:0.1:1:6", "--paths", "50", "--seed", "2"]);
    assert_eq!(via_env, std::fs::read(&file).unwrap());
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[process]\nfamily = \"canonical\"\nH = 0.7\nc = -1.5\n\n[grid]\ngeometric = { start = 0.1, stop = 2.0, points = 5 }\n",
    )
    .unwrap();
    let csv = artifact(&["--config", cfg.to_str().unwrap(), "kernel-eval"], "csv");
    compare_golden("kernel_eval_canonical.csv", &csv);
}
