use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "bs_antennas = 8\nirs_elements = 4\nusers = 2\nkappa_bs = 0.0025\nkappa_ue = 0.0025\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-maxmin"))
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn error_summary(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has a summary line");
    serde_json::from_str(line).expect("summary is JSON")
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config", &cfg, "--seed", "4", "--threads", "1", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sweep_value,tau_bar,min_rate"));
    for f in ["run.csv", "run.dat", "run.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |threads: &str| {
        let out = bin()
            .args(["sweep", "--config", &cfg, "--axis", "kappa", "--values", "0,0.01", "--threads", threads])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn validate_reports_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("v");
    let out = bin()
        .args(["validate", "--config", &cfg, "--trials", "20", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    assert_ne!(row.split(',').nth(3).unwrap(), "nan");
    assert!(out_dir.join("validate_mc.dat").exists());
}

#[test]
fn gradcheck_passes_and_negative_control_fails() {
    let ok = bin().args(["gradcheck", "--seed", "2"]).output().unwrap();
    assert!(ok.status.success());
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["cases"].as_array().unwrap().len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let bad = bin().args(["gradcheck", "--config", &cfg, "--printed-prefactor"]).output().unwrap();
    assert!(!bad.status.success());
    let s = error_summary(&bad);
    assert_eq!(s["kind"], "gradcheck");
    assert!(s["details"]["worst_n"].is_u64());
}

#[test]
fn bad_inputs_exit_nonzero_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bs_antennas = 8\nunknown_key = 1\n");
    let out = bin().args(["run", "--config", &cfg]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_summary(&out)["kind"], "parse");

    let out = bin().args(["sweep", "--axis", "irs_elements", "--values", "8,4"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_summary(&out)["kind"], "argument");

    let out = bin().args(["sweep"]).output().unwrap();
    assert_eq!(error_summary(&out)["status"], "error");
}

#[test]
fn solver_failure_is_reported_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[solver]\npower_max_iter = 1\n"));
    let out = bin().args(["run", "--config", &cfg]).output().unwrap();
    assert!(!out.status.success());
    let s = error_summary(&out);
    assert_eq!(s["kind"], "solver");
    assert!(s["details"]["failures"][0]["error"].as_str().unwrap().contains("non_convergence"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("# error at"));
}
