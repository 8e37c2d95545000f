use std::path::Path;
use std::process::{Command, Output};

use ots_core::network::{write_case, Bus, Generator, Line, PowerNetwork};

fn triangle_case(dir: &Path) -> String {
    let buses = [(1, 0.0), (2, 0.0), (3, 100.0)]
        .map(|(id, d)| Bus {
            id,
            baseline_demand: d,
            is_reference: id == 1,
        })
        .to_vec();
    let gens = [(1, 1, 10.0), (2, 2, 30.0)]
        .map(|(id, bus, c)| Generator {
            id,
            bus,
            p_min: 0.0,
            p_max: 150.0,
            marginal_cost: c,
        })
        .to_vec();
    let lines = vec![Line::new(1, 1, 2, 10.0, 200.0), Line::new(2, 2, 3, 10.0, 200.0), Line::new(3, 1, 3, 10.0, 50.0)];
    let net = PowerNetwork::new(buses, gens, lines, 100.0).unwrap();
    let path = dir.join("tri.m");
    std::fs::write(&path, write_case(&net)).unwrap();
    path.to_string_lossy().into_owned()
}

fn ots(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ots")).args(args).output().unwrap()
}

#[test]
fn bigm_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let case = triangle_case(dir.path());
    let out = ots(&["bigm", "--case", &case, "--strategy", "bn", "--compare", "sr"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("line_id,strategy,value_mw,compute_time_s,proven_optimal\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ratio BN / SR"));
}

#[test]
fn solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let case = triangle_case(dir.path());
    let out_dir = dir.path().join("run");
    let out = ots(&[
        "solve", "--case", &case, "--method", "sr-it", "--scenario-seed", "7", "--time-limit", "30", "--outer-times",
        "2,4", "--heur-time", "2", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("open lines: 3"), "{stdout}");
    assert!(out_dir.join("runs.csv").exists());
    assert!(out_dir.join("trace_0_sr-it.csv").exists());
}

#[test]
fn bench_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let case = triangle_case(dir.path());
    let out_dir = dir.path().join("bench");
    let out = ots(&[
        "bench", "--case", &case, "--scenarios", "2", "--seed", "1", "--methods", "bn-ss,lp-ss", "--scale-pct", "35",
        "--time-limit", "30", "--baseline", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["runs.csv", "summary.csv", "curve_bn-ss.csv", "curve_lp-ss+35.csv", "bigm_lp+35.csv", "meta.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("ST-SS"), "{summary}");

    let out = ots(&["oracle", "--case", &case]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("open lines: 3"));
}

#[test]
fn failures_exit_nonzero() {
    assert!(!ots(&["solve", "--case", "/nonexistent/case.m"]).status.success());
    assert!(!ots(&["bench", "--bogus-flag"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let case = triangle_case(dir.path());
    let out = ots(&["solve", "--case", &case, "--method", "xx-ss"]);
    assert!(!out.status.success());
    let out = ots(&["bench", "--case", &case, "--time-limit", "100", "--methods", "sr-it"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("outer times"));
}
