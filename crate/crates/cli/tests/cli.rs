use std::process::{Command, Output};

use statelift::runner::{read_reports, without_times, RunReport};

fn statelift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statelift")).args(args).env_remove("STATELIFT_SOLVER").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn one_report(o: &Output) -> RunReport {
    assert_eq!(code(o), 0, "stderr: {}", stderr(o));
    let mut rows = read_reports(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    rows.remove(0)
}

#[test]
fn missing_file_exits_with_one() {
    let o = statelift(&["solve", "/nonexistent/problem.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent/problem.json"), "{}", stderr(&o));
}

#[test]
fn malformed_file_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"n\": 1, \"ranks\": \"oops\"}").unwrap();
    let o = statelift(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn conflicting_inputs_are_rejected() {
    let o = statelift(&["solve", "p.json", "--family", "markov-quadratic"]);
    assert_eq!(code(&o), 1);
    let o = statelift(&["solve", "--family", "no-such-family"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn perturbed_train_push_bound() {
    let r = one_report(&statelift(&["solve", "--family", "perturbed-tt", "--n", "10", "--hierarchy", "push", "--order", "3"]));
    let b = r.bound;
    assert!((2.0 - 1e-6..=2.0 + 1e-3).contains(&b), "bound {b}");
    assert_eq!(r.max_block, 20);
}

#[test]
fn markov_chord_bound_matches_closed_form() {
    let r = one_report(&statelift(&["solve", "--family", "markov-quadratic", "--n", "4", "--hierarchy", "chord", "--order", "3"]));
    // Optimal controls are zero, giving 1/2 + 1/2·0.9^4.
    let want = 0.5 + 0.5 * 0.9f64.powi(4);
    assert!((r.bound - want).abs() < 1e-4, "{:?}", r.bound);
}

#[test]
fn timeout_exits_with_two() {
    let o = statelift(&["solve", "--family", "random-quadratic", "--n", "4", "--hierarchy", "dense", "--time-limit", "0.05"]);
    assert_eq!(code(&o), 2, "stderr: {}", stderr(&o));
    assert_eq!(read_reports(o.stdout.as_slice()).unwrap()[0].status, "timeout");
}

#[test]
fn export_prints_summary_and_writes_sdpa() {
    let dir = tempfile::tempdir().unwrap();
    let sdpa = dir.path().join("p.dat-s");
    let o = statelift(&["export", "--family", "random-quadratic", "--n", "3", "--hierarchy", "chord", "--order", "3", "--sdpa", sdpa.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("largest block 56"), "{}", stdout(&o));
    let program = statelift::conic::parse_sdpa(&std::fs::read_to_string(&sdpa).unwrap()).unwrap();
    assert_eq!(program.max_block_dim(), 56);
}

#[test]
fn generated_file_solves_like_the_family() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    let o = statelift(&["generate", "--family", "random-quadratic", "--n", "2", "--seed", "3", "--out", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let from_file = one_report(&statelift(&["solve", file.to_str().unwrap(), "--hierarchy", "push", "--order", "2"]));
    let direct = one_report(&statelift(&["solve", "--family", "random-quadratic", "--n", "2", "--seed", "3", "--hierarchy", "push", "--order", "2"]));
    assert!((from_file.bound - direct.bound).abs() < 1e-9);
}

#[test]
fn external_backend_agrees_with_in_process() {
    let exe = env!("CARGO_BIN_EXE_statelift");
    let args = ["solve", "--family", "perturbed-tt", "--n", "4", "--hierarchy", "push", "--order", "3"];
    let inproc = one_report(&statelift(&args));
    let o = Command::new(exe).args(args).env("STATELIFT_SOLVER", format!("external:{exe} solve-sdpa")).output().unwrap();
    let ext = one_report(&o);
    assert!((inproc.bound - ext.bound).abs() < 1e-6, "{:?} vs {:?}", inproc.bound, ext.bound);
}

#[test]
fn seeded_reports_are_reproducible() {
    let args = ["solve", "--family", "random-quadratic", "--n", "2", "--seed", "7", "--hierarchy", "push", "--order", "2"];
    let (a, b) = (statelift(&args), statelift(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(without_times(&stdout(&a)), without_times(&stdout(&b)));
}

#[test]
fn quantum_extraction_stays_below_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = statelift(&["extract", "--family", "quantum", "--n", "5", "--hierarchy", "push", "--order", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let err = stderr(&o);
    let field = |name: &str| -> f64 { err.split(&format!("{name} ")).nth(1).and_then(|s| s.split(',').next()).unwrap().parse().unwrap() };
    let (bound, achieved) = (field("bound"), field("achieved"));
    assert!(achieved <= bound + 1e-6, "{err}");
    assert!(achieved > 0.99, "{err}");
    assert!(std::fs::read_to_string(&out).unwrap().lines().count() > 5);
}
