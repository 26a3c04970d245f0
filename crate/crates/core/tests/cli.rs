//! End-to-end behaviour of the `qnlab` binary: verbs, flags, exit codes.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "n = 32\nppc = 16\neps = 0.1\nt_end = 0.1\n";

fn qnlab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qnlab"));
    cmd.args(args).env_remove("QNLAB_OUT");
    if let Some(p) = env_out {
        cmd.env("QNLAB_OUT", p);
    }
    cmd.output().expect("spawn qnlab")
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_outputs_and_honours_out_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "a.cfg", &format!("{SMALL}out = {}\n", d.path().join("from_cfg").display()));
    let env_dir = d.path().join("from_env");
    let flag_dir = d.path().join("from_flag");

    let o = qnlab(&["run", &cfg], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env_dir.join("steps.csv").exists());
    assert!(!d.path().join("from_cfg").exists());

    let o = qnlab(&["run", &cfg, "--out", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("summary.json").exists());

    let o = qnlab(&["run", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("from_cfg").join("euler.csv").exists());
}

#[test]
fn worker_count_does_not_change_outputs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "a.cfg", SMALL);
    let mut csv = Vec::new();
    for (w, sub) in [("1", "w1"), ("3", "w3")] {
        let out = d.path().join(sub);
        let o = qnlab(&["run", &cfg, "--workers", w, "--seed", "7", "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0));
        csv.push(std::fs::read(out.join("steps.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn flags_override_the_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "a.cfg", SMALL);
    let out = d.path().join("o");
    let o = qnlab(
        &["run", &cfg, "--t-end", "0.05", "--checkpoint-every", "1", "--seed", "3", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let saved = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(saved.contains("t_end = 0.05") && saved.contains("seed = 3") && saved.contains("checkpoint_every = 1"));
    assert!(out.join("checkpoints").join("particles_000000.qnp1").exists());
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for text in ["n = 48\n", "bogus = 1\n", "k0 = 3\n", "eps = 0.1\ndt = 0.5\n"] {
        let cfg = write_cfg(d.path(), "bad.cfg", text);
        assert_eq!(qnlab(&["run", &cfg], None).status.code(), Some(2), "{text}");
    }
    assert_eq!(qnlab(&["run", "/nonexistent/x.cfg"], None).status.code(), Some(2));
    let cfg = write_cfg(d.path(), "ok.cfg", SMALL);
    assert_eq!(qnlab(&["sweep", &cfg, "--eps", "0.1,0.00001"], None).status.code(), Some(2));
    assert_eq!(qnlab(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn hypothesis_failure_exits_3_and_io_failure_exits_4() {
    let d = tempfile::tempdir().unwrap();
    let cold = write_cfg(d.path(), "cold.cfg", &format!("{SMALL}thermal = false\n"));
    assert_eq!(qnlab(&["verify", &cold], None).status.code(), Some(3));
    let ok = write_cfg(d.path(), "ok.cfg", SMALL);
    let o = qnlab(&["verify", &ok], None);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["h3_energy"]["pass"], true);

    // an existing regular file where the output directory should go
    let blocker = d.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = qnlab(&["run", &ok, "--out", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(qnlab(&["report", d.path().join("missing").to_str().unwrap()], None).status.code(), Some(4));
}

#[test]
fn sweep_then_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "s.cfg", SMALL);
    let out = d.path().join("sweep");
    let o = qnlab(&["sweep", &cfg, "--eps", "0.05,0.1,0.025", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let eps: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(eps, vec![0.1, 0.05, 0.025]);
    assert!(!csv.lines().next().unwrap().contains("runtime"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["complete"], true);
    assert!(summary["rows"][0]["runtime"].as_f64().unwrap() > 0.0);

    let o = qnlab(&["report", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["monotone_e"], true);
    assert!(rep["horizon"].as_f64().unwrap() > 0.0);
    assert!(out.join("report.json").exists());
}
