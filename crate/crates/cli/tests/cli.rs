use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strucrank"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Trace with the wall-clock column blanked.
fn masked_trace(path: &Path) -> String {
    read(path)
        .lines()
        .map(|line| {
            let mut cells: Vec<&str> = line.split(',').collect();
            if cells.len() > 1 && cells[0] != "iter" {
                cells[1] = "";
            }
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn ssr_desk_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ssr");
    let o = run(&["ssr", "--T", "2000", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let trace = read(&out.join("trace.csv"));
    let rows = trace.lines().count() - 1;
    assert!((1..=100).contains(&rows));
    assert!(trace.starts_with("iter,time_s,phi,f,sqloss,psi,theta,sigma_top,rank,factor_rank\n"));

    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    for key in [
        "solver",
        "iters",
        "final_phi",
        "final_sqloss",
        "final_rank",
        "wall_time_s",
        "converged_reason",
        "seed",
    ] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["solver"], "gcgls");
    assert_eq!(summary["iters"].as_u64().unwrap() as usize, rows);
    assert!(read(&out.join("covariance.csv")).starts_with("lag,row,col,value,observed\n"));
}

#[test]
fn scs_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scs");
    let o = run(&[
        "scs", "--n1", "12", "--n2", "12", "--r", "2", "--k1", "4", "--k2", "4", "--obs", "0.6",
        "--max-iter", "20", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&read(&out.join("metrics.json"))).unwrap();
    assert!(metrics["normalized_error"].as_f64().unwrap().is_finite());
    assert_eq!(read(&out.join("recovered.csv")).lines().count(), 1 + 144);
    assert_eq!(read(&out.join("signal.csv")).lines().count(), 1 + 144);
}

#[test]
fn apg_solver_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("apg");
    let o = run(&[
        "ssr", "--solver", "apg-svt", "--max-iter", "15", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["solver"], "apg-svt");
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["ssr", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["ssr", "--solver", "newton"]).status.code(), Some(2));
    assert_eq!(run(&["ssr", "--mu=-1"]).status.code(), Some(2));
    assert_eq!(run(&["ssr", "--T", "4", "--k", "8"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--sizes", "1,1,2"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# desk run\nsolver = gcg\nseed = 5\nmax-iter = 4\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "--config", cfg.to_str().unwrap(), "ssr", "--seed", "9", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["solver"], "gcg");
    assert_eq!(summary["seed"], 9);
    assert!(summary["iters"].as_u64().unwrap() <= 4);
}

#[test]
fn same_seed_gives_identical_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["ssr", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(masked_trace(&a.join("trace.csv")), masked_trace(&b.join("trace.csv")));
    assert_eq!(read(&a.join("covariance.csv")), read(&b.join("covariance.csv")));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = run(&[
        "bench", "--sizes", "1,1,5,10;1,1,10,20", "--iters", "2", "--reps", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("bench.csv"));
    assert_eq!(text.lines().count(), 3);
}
