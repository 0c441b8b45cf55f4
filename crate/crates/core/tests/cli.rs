//! The `kvflow` binary: exit codes, output files and summary keys.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kvflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kvflow")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

fn summary(out: &Path) -> String {
    fs::read_to_string(out.join("summary.txt")).unwrap()
}

fn value<'a>(summary: &'a str, key: &str) -> Option<&'a str> {
    summary.lines().find_map(|l| l.strip_prefix(&format!("{key}: ")))
}

const TORUS_RUN: &str = "\
[manifold]
kind = flat_torus_t2
resolution = 16 16

[flow]
integrator = rk4
k_max = 1
checkpoint_stride = 20

[initial.killing]
kind = killing_rotation
axis = x

[initial.gradient]
kind = fourier_mode
component = x
kx = 1
";

#[test]
fn converged_run_reports_err_and_kernel_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TORUS_RUN);
    let out = dir.path().join("out");
    let o = kvflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let err: f64 = value(&s, "err_estimate").unwrap().parse().unwrap();
    assert!((err - 2.0 * std::f64::consts::PI.powi(2)).abs() < 0.2, "{err}");
    let kd: f64 = value(&s, "kernel_distance").unwrap().parse().unwrap();
    assert!(kd < 1e-4, "{kd}");
    assert_eq!(value(&s, "kernel_dim"), Some("2"));
    assert!(s.contains("# config echo"));

    let header = fs::read_to_string(out.join("monitors.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "t,u0,u1,u2,v0,v1,v2,frakL,E_bochner,normX2,E_int,err_partial"
    );
    assert!(out.join("final.kvf").exists() && out.join("step_20.kvf").exists());
}

#[test]
fn plotdata_splits_monitor_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TORUS_RUN);
    let out = dir.path().join("out");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(kvflow(&["run", "--config", c, "--out", o]).status.code(), Some(0));
    let p = kvflow(&["plotdata", "--config", c, "--out", o]);
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
    let u0 = fs::read_to_string(out.join("plot/u0.dat")).unwrap();
    let mut lines = u0.lines();
    assert_eq!(lines.next(), Some("# t u0"));
    let first: Vec<f64> = lines.next().unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(first.len(), 2);
    assert_eq!(first[0], 0.0);
    assert!(out.join("plot/err_partial.dat").exists());
}

#[test]
fn err_from_existing_monitors_matches_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TORUS_RUN);
    let out = dir.path().join("out");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(kvflow(&["run", "--config", c, "--out", o]).status.code(), Some(0));
    let fresh = value(&summary(&out), "err_estimate").unwrap().to_string();
    let monitors = out.join("monitors.csv");
    let out2 = dir.path().join("again");
    let e = kvflow(&["err", "--config", c, "--out", out2.to_str().unwrap(), "--monitors", monitors.to_str().unwrap()]);
    assert_eq!(e.status.code(), Some(0), "{}", String::from_utf8_lossy(&e.stdout));
    let a: f64 = fresh.parse().unwrap();
    let b: f64 = value(&summary(&out2), "err_estimate").unwrap().parse().unwrap();
    assert!((a - b).abs() <= 1e-9 * a.abs());
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TORUS_RUN.replace("k_max = 1", "k_maximum = 1"));
    let o = kvflow(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("k_maximum"), "{err}");
}

#[test]
fn unstable_fixed_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TORUS_RUN.replace("k_max = 1", "k_max = 1\ndt = 1"));
    let o = kvflow(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CFL"));
}

#[test]
fn failed_check_exits_4_and_short_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = TORUS_RUN.replace("checkpoint_stride = 20", "t_end = 0.5") + "\n[checks]\ndecay_rate = 5\n";
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("o");
    let o = kvflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(summary(&out).contains("check.decay_rate: fail"));

    let cfg = write_config(dir.path(), &TORUS_RUN.replace("checkpoint_stride = 20", "t_end = 0.5"));
    let o = kvflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(value(&summary(&out), "status"), Some("not_converged"));
}

#[test]
fn seed_override_changes_random_data() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[manifold]\nkind = flat_torus_t2\nresolution = 8 8\n\n[flow]\nt_end = 0.1\n\n[initial]\nkind = random_bandlimited\nseed = 1\n";
    let cfg = write_config(dir.path(), body);
    let c = cfg.to_str().unwrap();
    let read = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        kvflow(&["run", "--config", c, "--out", out.to_str().unwrap(), "--seed", seed]);
        let s = summary(&out);
        (value(&s, "frak_l_initial").unwrap().to_string(), value(&s, "seeds").unwrap().to_string())
    };
    let (f1, s1) = read("1");
    let (f2, s2) = read("2");
    assert_ne!(f1, f2);
    assert!(s1.starts_with('1') && s2.starts_with('2'));
}

#[test]
fn spectrum_writes_kernel_members() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[manifold]\nkind = flat_torus_t2\nresolution = 8 8\n\n[checks]\nkernel_dim = 2\n";
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("o");
    let o = kvflow(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 128);
    assert!(out.join("kernel_0.kvf").exists() && out.join("kernel_1.kvf").exists());
}
