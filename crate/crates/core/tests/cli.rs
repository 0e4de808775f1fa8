use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cng_core::io::{read_instance, ResultFile};
use serde_json::Value;

fn cng() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cng"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    cng().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_writes_result_and_exits_zero() {
    let out = run(&["solve", p(&fixture("two_node.json"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for k in [
        "x",
        "alpha",
        "phi",
        "exact",
        "defender_payoff",
        "attacker_payoff",
        "objective",
        "objective_value",
        "iterations",
        "cuts",
        "phi_ub",
        "wall_time_s",
        "status",
    ] {
        assert!(keys.contains(&k), "missing {k}");
    }
    let r: ResultFile = serde_json::from_value(v).unwrap();
    assert_eq!(r.status, "PROVED_OPTIMAL_NE");
    assert_eq!((r.x, r.alpha), (vec![1, 0], vec![1, 0]));
    assert!(r.exact);
}

#[test]
fn solve_attacker_objective_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out/r.json");
    let out = run(&[
        "solve",
        p(&fixture("example1.json")),
        "--objective",
        "attacker",
        "--cuts",
        "all",
        "-o",
        p(&path),
    ]);
    assert_eq!(code(&out), 0);
    let r: ResultFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r.objective, "attacker");
    r.check_shape(5).unwrap();
}

#[test]
fn limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g");
    assert_eq!(
        code(&run(&[
            "generate",
            "--n",
            "25",
            "--grid",
            "--seed",
            "1",
            "-o",
            p(&grid)
        ])),
        0
    );
    let inst = grid.join("n25_g0_e0.6_d0.75_a0.3_s1.json");
    let out = run(&["solve", p(&inst), "--time-limit", "0.05"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let r: ResultFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.status, "INCUMBENT_ON_LIMIT");
}

#[test]
fn errors_exit_one() {
    let missing = run(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
    assert_eq!(code(&run(&["solve"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&["solve", p(&fixture("two_node.json")), "--time-limit", "-1"])),
        1
    );
    assert_eq!(
        code(&run(&["solve", p(&fixture("two_node.json")), "--cuts", "some"])),
        1
    );
    assert_eq!(code(&run(&["generate", "--n", "10,25"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(fixture("two_node.json")).unwrap()).unwrap();
    v["eta"] = Value::from(0.1);
    fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(code(&run(&["solve", p(&bad)])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn generate_grid_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid");
    let out = run(&["generate", "--n", "10,25", "--grid", "--seed", "7", "-o", p(&grid)]);
    assert_eq!(code(&out), 0);
    let files: Vec<PathBuf> = fs::read_dir(&grid).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 48);

    let single = run(&["generate", "--n", "12", "--seed", "3", "--afrac", "0.3"]);
    assert_eq!(code(&single), 0);
    let again = run(&["generate", "--n", "12", "--seed", "3", "--afrac", "0.3"]);
    assert_eq!(single.stdout, again.stdout);
    let path = dir.path().join("one.json");
    fs::write(&path, &single.stdout).unwrap();
    let inst = read_instance(&path).unwrap();
    assert_eq!(inst.n, 12);
    assert_eq!(
        cng_core::io::instance_to_json(&inst).unwrap().as_bytes(),
        &single.stdout[..]
    );
}

#[test]
fn ingest_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    let out = run(&["ingest", p(&fixture("snapshot.json")), "--afrac", "0.3", "-o", p(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let inst = read_instance(&path).unwrap();
    assert_eq!(inst.n, 4);
    assert!(inst.edges.is_some());
    assert_eq!(code(&run(&["solve", p(&path)])), 0);
    assert_eq!(code(&run(&["ingest", "/nonexistent.json"])), 1);
}

#[test]
fn prices() {
    let pos = run(&["pos", p(&fixture("two_node.json"))]);
    assert_eq!(code(&pos), 0);
    let v: Value = serde_json::from_slice(&pos.stdout).unwrap();
    assert_eq!(v["metric"], "pos");
    assert!((v["ratio"].as_f64().unwrap() - 11.0 / 6.0).abs() < 1e-12);
    let poa = run(&["poa", p(&fixture("two_node.json"))]);
    assert_eq!(code(&poa), 0);
    let v: Value = serde_json::from_slice(&poa.stdout).unwrap();
    assert!((v["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["equilibrium"]["objective"], "attacker");
}

#[test]
fn verify_fixtures() {
    let out = run(&["verify", p(&fixture("example1.json")), p(&fixture("pennies.json"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.ends_with(": ok")).count(), 6);
}

#[test]
fn batch_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    fs::create_dir_all(&inputs).unwrap();
    for name in ["two_node.json", "example1.json"] {
        fs::copy(fixture(name), inputs.join(name)).unwrap();
    }
    let out_dir = dir.path().join("out");
    let out = run(&[
        "batch",
        p(&inputs),
        "--grid",
        "6",
        "--seed",
        "2",
        "--jobs",
        "2",
        "-o",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(out_dir.join("batch.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 + 24);

    let report = dir.path().join("report.csv");
    assert_eq!(code(&run(&["report", p(&out_dir), "-o", p(&report)])), 0);
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "Instance,|V|,POS,POS Range,POA,POA Range,Phi,f^d,f^a,Time (s)"
    );
    let all: Vec<&str> = text.lines().filter(|l| l.starts_with("ALL,")).collect();
    assert_eq!(all.len(), 3);
    assert!(all.iter().any(|l| l.starts_with("ALL,6,")));
}
