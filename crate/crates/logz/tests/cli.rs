//! Contract tests for the `logz` binary: output shapes, determinism, flag
//! overrides, and exit codes.

use std::io::Write;
use std::process::{Command, Output};

use logz::schedule::{build_schedule, ScheduleConfig};

fn write_config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

fn logz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logz"))
        .args(args)
        .output()
        .unwrap()
}

const GAUSS10: &str = r#"
eps = 0.1
mu = 0.1
preset = "gaussian-fig1"

[model]
kind = "gaussian"
dim = 10
"#;

const LOGCOSH_FAST: &str = r#"
eps = 0.25
mu = 0.25
preset = "gaussian-fig1"

[model]
kind = "log-cosh"
"#;

#[test]
fn schedule_csv_has_one_row_per_phase() {
    let cfg = write_config(GAUSS10);
    let path = cfg.path().to_str().unwrap();
    let out = logz(&["schedule", "--config", path, "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("i,k,sigma2,a,"));
    let rows = lines.count();

    let p = logz::potential::builtin::gaussian_benchmark(10).unwrap();
    let mut sc = ScheduleConfig::new(0.1, 0.1);
    sc.preset = logz::schedule::Preset::GaussianFig1;
    let s = build_schedule(&p, &sc).unwrap();
    assert_eq!(rows, s.m);
}

#[test]
fn invalid_eps_exits_2_and_names_the_field() {
    let cfg = write_config(GAUSS10);
    let path = cfg.path().to_str().unwrap();
    let out = logz(&["schedule", "--config", path, "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("eps"), "stderr was: {err}");
}

#[test]
fn stride_flag_shrinks_phase_count_and_keeps_invariants() {
    let cfg = write_config(&GAUSS10.replace("gaussian-fig1", "theoretical"));
    let path = cfg.path().to_str().unwrap();
    let base = logz(&["schedule", "--config", path, "--format", "json"]);
    let strided = logz(&[
        "schedule", "--config", path, "--format", "json", "--stride", "5",
    ]);
    assert!(base.status.success() && strided.status.success());
    let m = |o: &Output| {
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["m"]
            .as_u64()
            .unwrap()
    };
    assert!(m(&strided) < m(&base));

    let p = logz::potential::builtin::gaussian_benchmark(10).unwrap();
    let mut sc = ScheduleConfig::new(0.1, 0.1);
    sc.stride = 5;
    build_schedule(&p, &sc).unwrap().validate().unwrap();
}

#[test]
fn estimate_is_deterministic_under_a_fixed_seed() {
    let cfg = write_config(LOGCOSH_FAST);
    let path = cfg.path().to_str().unwrap();
    let run = || {
        let out = logz(&["estimate", "--config", path, "--seed", "11"]);
        assert!(out.status.success());
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_secs");
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn mu_tilde_flag_yields_21_replicates() {
    let cfg = write_config(LOGCOSH_FAST);
    let path = cfg.path().to_str().unwrap();
    let out = logz(&["estimate", "--config", path, "--mu-tilde", "0.1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["replicates"].as_array().unwrap().len(), 21);
    assert!(v["config_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn radiata_estimate_reports_finite_log_evidence() {
    // The fast practical preset is enough for the interface contract; the
    // accuracy claim lives in the acceptance suite.
    let cfg = write_config(
        r#"
eps = 0.1
mu = 0.1
preset = "gaussian-fig1"

[model]
kind = "radiata-pine"
model = 1
"#,
    );
    let path = cfg.path().to_str().unwrap();
    let out = logz(&["estimate", "--config", path]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["log_evidence"].as_f64().unwrap().is_finite());
}

#[test]
fn replicate_emits_phase_rows_with_nonnegative_std() {
    let cfg = write_config(LOGCOSH_FAST);
    let path = cfg.path().to_str().unwrap();
    let out = logz(&[
        "replicate", "--config", path, "--replicates", "3", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "phase,mean,std");
    let mut rows = 0;
    for line in lines {
        let std: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(std >= 0.0);
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn oracle_covers_closed_form_quadrature_and_unavailable() {
    let gauss = write_config(GAUSS10);
    let out = logz(&["oracle", "--config", gauss.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["oracle_value"].as_f64().unwrap() - 8.842812).abs() < 1e-5);

    let lc = write_config(LOGCOSH_FAST);
    let out = logz(&["oracle", "--config", lc.path().to_str().unwrap()]);
    assert!(out.status.success());

    let pima = write_config(
        r#"
eps = 0.1
mu = 0.1

[model]
kind = "pima-logistic"
model = 1
"#,
    );
    let out = logz(&["oracle", "--config", pima.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let cfg = write_config(GAUSS10);
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("sched.csv");
    let out = logz(&[
        "schedule",
        "--config",
        cfg.path().to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(dest).unwrap().starts_with("i,k,"));
}
