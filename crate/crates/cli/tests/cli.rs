//! End-to-end runs of the `ordmech` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ordmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordmech")).args(args).output().expect("spawn ordmech")
}

fn ordmech_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordmech"))
        .args(args)
        .env("ORDMECH_THREADS", threads)
        .output()
        .expect("spawn ordmech")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = ordmech(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn csv_column(csv: &str, col: usize) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap_or("").to_string()).collect()
}

fn ratio(s: &str) -> f64 {
    match s.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = ordmech(&["gen", "random-matching", "--n", "6", "--m", "5", "--seed", "11"]);
    let b = ordmech(&["gen", "random-matching", "--n", "6", "--m", "5", "--seed", "11"]);
    let c = ordmech(&["gen", "random-matching", "--n", "6", "--m", "5", "--seed", "12"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn matching_lower_bound_ratio_between_bound_and_two() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "lb.json", &["matching-lb", "--K", "3"]);
    let o = ordmech(&["match", "--algo", "maxmatch", "--in", f.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    assert!(csv.starts_with("r,rank_r,maxrank_r,ratio\n"));
    let worst = csv_column(&csv, 3).iter().filter(|s| !s.is_empty()).map(|s| ratio(s)).fold(0.0, f64::max);
    assert!((5.0 / 3.0..=2.0).contains(&worst), "{csv}");
}

#[test]
fn ps_json_reports_matrix_and_factor() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "sqrt.json", &["sqrt", "--n", "9"]);
    let o = ordmech(&["match", "--algo", "ps", "--in", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["algo"], "ps");
    assert_eq!(v["x"][0][0], "4/9");
    assert_eq!(v["x"][8][8], "1/6");
    assert!(v["lottery"].as_array().unwrap().len() > 1);
}

#[test]
fn verify_reports_holds_and_violations() {
    let o = ordmech(&["verify", "pseudo", "maxmatch"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "holds"));

    let o = ordmech(&["verify", "lex", "ps"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("class: lex"));

    let o = ordmech(&["verify", "lex", "weak-not-lex"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["property"], "lex");
    assert!(v["misreport"].is_array());

    let o = ordmech(&["verify", "weak", "weak-not-lex"]);
    assert_eq!(code(&o), 0);

    let o = ordmech(&["verify", "strong", "a-or-c-lt", "--eps", "1/3"]);
    assert_eq!(code(&o), 1);
    let o = ordmech(&["verify", "lex", "a-or-c-lt", "--eps", "1/3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_rejects_oversized_domain() {
    let o = ordmech(&["verify", "lex", "rsd", "--domain", "9x9"]);
    assert_eq!(code(&o), 6);
}

#[test]
fn verify_accepts_domain_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("domain.json");
    std::fs::write(&path, r#"{"per_agent": [[[0,1,2],[1,0,2]], [[0,1,2],[2,1,0]]]}"#).unwrap();
    let o = ordmech(&["verify", "lex", "maxmatch-lt", "--domain", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes_for_bad_input() {
    let o = ordmech(&["run", "--algo", "maxmatch", "--in", "/nonexistent/instance.json"]);
    assert_eq!(code(&o), 3);

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": \"strict\", \"n\": 2, \"m\": 2, \"lists\": [[0, 0], [1, 0]]}").unwrap();
    let o = ordmech(&["run", "--algo", "maxmatch", "--in", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 4);

    let o = ordmech(&["run", "--algo", "no-such-algo", "--in", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let o = ordmech(&["gen", "matching-lb"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn large_schedule_omits_oracle_columns() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "plb.json", &["parallel-lb", "--m", "3", "--k", "3", "--T", "8"]);
    let out = dir.path().join("out.csv");
    let o = ordmech(&["sched", "--algo", "det", "--in", f.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",,")), "{csv}");
}

#[test]
fn randomized_schedule_within_eight_t() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "par.json", &["random-parallel", "--n", "8", "--m", "3", "--T", "4", "--seed", "3"]);
    for algo in ["rand", "rand-lt", "det"] {
        let o = ordmech(&["sched", "--algo", algo, "--in", f.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{algo}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(ratio(v["makespan_over_T"].as_str().unwrap()) <= 8.0);
        assert!(v["factor"].is_string());
    }
}

#[test]
fn unrelated_schedule_within_three_t() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "unr.json", &["random-unrelated", "--n", "6", "--m", "3", "--seed", "5"]);
    let o = ordmech(&["sched", "--algo", "unrelated", "--in", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(ratio(v["makespan_over_T"].as_str().unwrap()) <= 3.0);
}

#[test]
fn best_lottery_on_randrank_lower_bound() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "rlb.json", &["randrank-lb", "--k", "2"]);
    let o = ordmech(&["run", "--algo", "best-lottery", "--in", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(ratio(v["fraction"].as_str().unwrap()) <= 1.5);
    let o = ordmech(&["run", "--algo", "randrank", "--in", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

#[test]
fn sampled_rsd_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = gen_to(dir.path(), "big.json", &["random-matching", "--n", "10", "--m", "10", "--seed", "1"]);
    let args = ["match", "--algo", "rsd", "--in", f.to_str().unwrap(), "--samples", "200", "--seed", "9"];
    let a = ordmech(&args);
    let b = ordmech(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["sampled"], true);
}

#[test]
fn bench_is_independent_of_thread_count() {
    let args = ["bench", "--family", "general", "--count", "12", "--n", "6", "--m", "5", "--seed", "4"];
    let one = ordmech_env(&args, "1");
    let four = ordmech_env(&args, "4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    let csv = stdout(&one);
    assert!(csv.starts_with("instance,algo,factor,makespan_over_T\n"));
    assert_eq!(csv.lines().count(), 1 + 12 * 3);
}

#[test]
fn decompose_doubly_stochastic_matrix() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.json");
    std::fs::write(&path, r#"{"x": [["1/2", "1/2", "0"], ["1/4", "1/4", "1/2"], ["1/4", "1/4", "1/2"]]}"#).unwrap();
    let o = ordmech(&["decompose", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let total: f64 = v.as_array().unwrap().iter().map(|e| ratio(e["p"].as_str().unwrap())).sum();
    assert!((total - 1.0).abs() < 1e-12);

    std::fs::write(&path, r#"[["1/2", "0"], ["0", "1"]]"#).unwrap();
    let o = ordmech(&["decompose", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}
