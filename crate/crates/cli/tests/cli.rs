use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sqg_core::grid::Field;
use sqg_core::io::read_field;

fn sqg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqg")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("output.dir = {}\n{body}", dir.join("out").display())).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn single_mode_decays_like_its_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "# a lone eigenfunction\ngrid.n1 = 16\ngrid.n2 = 31\ninit.preset = single_mode\ninit.k = 0\ninit.m = 1\ninit.amplitude = 1\nsolver.dt = 0.01\nsolver.snapshot_stride = 1000\nholder.pairs = 64\n",
    );
    let out = sqg(&["simulate", "--config", &cfg, "--emit-gnuplot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let outdir = dir.path().join("out");
    let (last, t) = read_field(&outdir.join("snapshot_00001.sqgf")).unwrap();
    assert_eq!(t, 1.0);
    let want = Field::from_fn(*last.grid(), |_, x2| (-1.0f64).exp() * x2.sin());
    assert!(last.max_abs_diff(&want).unwrap() < 1e-10);
    assert!(outdir.join("diagnostics.gp").exists());
    let csv = fs::read_to_string(outdir.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.n1 = 16\nthis line has no equals sign\n");
    let out = sqg(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bad_override_and_missing_file_are_config_errors() {
    assert_eq!(sqg(&["simulate", "--set", "grid.nonsense=1"]).status.code(), Some(2));
    assert_eq!(sqg(&["simulate", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.n1 = 32\ngrid.n2 = 31\nverify.pairs = 8\nseed = 3\n");
    let first = sqg(&["verify", "--config", &cfg]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let a = fs::read(dir.path().join("out/reports.csv")).unwrap();
    let second = sqg(&["verify", "--config", &cfg]);
    assert_eq!(second.status.code(), Some(0));
    let b = fs::read(dir.path().join("out/reports.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
}

#[test]
fn help_lists_configuration_keys() {
    let out = sqg(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("solver.dt") && text.contains("init.preset"));
}
