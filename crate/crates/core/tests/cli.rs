use std::path::Path;
use std::process::{Command, Output};

use fmhsdm::bench::read_averaged_csv;

fn bench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn writes_curves_plots_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(
        &["--problem", "hyperplane", "--d", "10", "--runs", "3", "--iters", "100", "--solvers", "fm-hsdm,fista", "--certificates"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["fm-hsdm.csv", "fista.csv", "averaged.csv", "certificates.csv", "run.log", "distance.svg", "distance.gp", "objective_gap.svg"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let rows = read_averaged_csv(&dir.path().join("averaged.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 101 * 3);
    let first = rows.iter().find(|r| r.solver == "fm-hsdm" && r.metric == "distance" && r.iter == 0).unwrap();
    // x0 is drawn on the unit sphere around the minimizer.
    assert!((first.mean - 1.0).abs() < 1e-12);
    let log = std::fs::read_to_string(dir.path().join("run.log")).unwrap();
    assert_eq!(log.matches("x0_sha256=").count(), 3);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fm-hsdm") && stdout.contains("fista"));
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "problem = \"iiduka\"\nd = 6\nruns = 5\niters = 30\nsolvers = [\"admm\"]\n[params.admm]\nadmm_rho = 2.0\n")
        .unwrap();
    let out = bench(&["--config", cfg.to_str().unwrap(), "--runs", "2"], &dir.path().join("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.path().join("o/run.log")).unwrap();
    assert!(log.starts_with("problem=iiduka d=6 p11=1 runs=2 iters=30"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--p11", "1.5"][..],
        &["--d", "1"],
        &["--problem", "iiduka", "--solvers", "fista"],
        &["--problem", "iiduka", "--solvers", "fm-hsdm-iii"],
        &["--solvers", "newton"],
        &["--runs", "0"],
    ] {
        let out = bench(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "iterations = 5\n").unwrap();
    let out = bench(&["--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bench(&["--config", "/nonexistent/x.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergence_exits_3_and_is_logged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("div.toml");
    std::fs::write(
        &cfg,
        "problem = \"hyperplane\"\nd = 5\nruns = 2\niters = 300\nsolvers = [\"fm-hsdm\", \"fista\"]\n[params.fista]\nfista_step = 5.0\n",
    )
    .unwrap();
    let out = bench(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fista diverged"));
    let log = std::fs::read_to_string(dir.path().join("run.log")).unwrap();
    assert_eq!(log.matches("status=diverged").count(), 2);
    // The diverged solver drops out of the averages; fm-hsdm is still plotted.
    let rows = read_averaged_csv(&dir.path().join("averaged.csv")).unwrap();
    assert!(rows.iter().all(|r| r.solver == "fm-hsdm"));
    assert!(dir.path().join("distance.svg").exists());
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--problem", "iiduka", "--d", "8", "--runs", "3", "--iters", "50", "--solvers", "fm-hsdm,hsdm,pd-cp"];
    let read = |sub: &str| std::fs::read(dir.path().join(sub).join("averaged.csv")).unwrap();
    for (sub, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let mut a = args.to_vec();
        a.extend(["--seed", seed]);
        assert!(bench(&a, &dir.path().join(sub)).status.success());
    }
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
