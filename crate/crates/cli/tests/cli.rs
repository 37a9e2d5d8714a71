use std::process::{Command, Output};

use serde_json::Value;

fn fisherlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fisherlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn check_passed(doc: &Value, name: &str) -> bool {
    doc["checks"].as_array().unwrap().iter().any(|e| e["name"] == name && e["pass"] == true)
}

const DECADE: &str = "-1,-1.58489319246,-2.51188643151,-3.98107170553,-6.3095734448,-10";

#[test]
fn solve_harmonic_ladder() {
    let out = fisherlab(&["solve", "--lambda", "2=-4", "--states", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let alpha: Vec<f64> = doc["alpha"].as_array().unwrap().iter().map(f).collect();
    // ω = 1: α_n = 8ω(n + 1/2)
    assert!(close(alpha[0], 4.0, 1e-6), "{alpha:?}");
    assert!(close(alpha[1], 12.0, 1e-6), "{alpha:?}");
    assert_eq!(doc["states"][1]["nodes"], 1);
}

#[test]
fn solve_shifted_oscillator_has_zero_ground_alpha() {
    let doc = json(&fisherlab(&["solve", "--lambda", "2=-4", "--lambda", "1=8"]));
    // U = (x - 1)²/2 - 1/2, so the ground energy 1/2 cancels the offset
    assert!(f(&doc["alpha"][0]).abs() < 1e-6);
}

#[test]
fn solve_csv_has_wavefunction_columns() {
    let out = fisherlab(&["solve", "--lambda", "2=-4", "--states", "3", "--grid", "-8,8,801", "--refinements", "0", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,psi_0,psi_1,psi_2"));
    assert_eq!(lines.count(), 801);
    let doc = json(&fisherlab(&["solve", "--lambda", "2=-4", "--grid", "-8,8,801", "--refinements", "0"]));
    assert_eq!(doc["grid"]["n_points"], 801);
}

#[test]
fn missing_multipliers_is_a_config_error() {
    let out = fisherlab(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn malformed_flags_are_config_errors() {
    assert_eq!(fisherlab(&["solve", "--lambda", "2"]).status.code(), Some(2));
    assert_eq!(fisherlab(&["solve", "--lambda", "2=4"]).status.code(), Some(2));
    assert_eq!(fisherlab(&["verify", "--lambda", "2=-4", "--checks", "nonsense"]).status.code(), Some(2));
    assert_eq!(fisherlab(&["solve", "--lambda", "2=-4", "--grid", "1,-1,100"]).status.code(), Some(2));
}

#[test]
fn verify_quartic_passes() {
    let out = fisherlab(&["verify", "--lambda", "4=-1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["pass"], true);
    assert!(doc["checks"].as_array().unwrap().iter().all(|e| e["pass"] == true));
}

#[test]
fn verify_runs_only_the_requested_checks() {
    let out = fisherlab(&["verify", "--lambda", "2=-4", "--lambda", "4=-1", "--checks", "pde,reciprocity"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let names: Vec<&str> = doc["checks"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.iter().all(|n| n.contains("pde") || n.contains("reciprocity")), "{names:?}");
    assert!(names.iter().any(|n| n.contains("pde")));
    assert!(names.iter().any(|n| n.contains("reciprocity.k4")));
}

#[test]
fn verify_failure_exits_one() {
    // a 9-point grid cannot resolve the Fisher routes to 1e-4
    let out = fisherlab(&["verify", "--lambda", "2=-4", "--grid", "-4,4,9", "--refinements", "0", "--checks", "fisher"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
}

#[test]
fn scan_quartic_exponent() {
    let out = fisherlab(&["scan", "--k", "4", "--values", DECADE]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let fit = &doc["fits"][0]["alpha_fit"];
    assert!((f(&fit["exponent_fit"]) - 1.0 / 3.0).abs() < 1e-4);
}

#[test]
fn scan_quadratic_constants() {
    let doc = json(&fisherlab(&["scan", "--k", "2", "--values", DECADE]));
    let fit = &doc["fits"][0];
    // α = 2|λ₂|^{1/2} and I = 1/σ² for the oscillator ground state
    assert!(close(f(&fit["alpha_fit"]["coefficient"]), 2.0, 1e-5));
    assert!(close(f(&fit["constants"]["c_bar"]), 1.0, 1e-5));
    assert!(close(f(&fit["constants"]["d_bar"]), 1.0, 1e-5));
}

#[test]
fn scan_csv_rows_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("runs/k6");
    let out = fisherlab(&["scan", "--k", "6", "--values", DECADE, "--scan-states", "0,1", "--jobs", "2", "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("runs/k6.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "state,lambda_k,alpha_n,I_direct,moment_k");
    assert_eq!(rows.len(), 1 + 12);
    assert!(rows[1].starts_with("0,-1.0,"));
    assert!(rows[2].starts_with("1,-1.0,"));
    assert!(rows[12].starts_with("1,-10.0,"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("runs/k6.json")).unwrap()).unwrap();
    assert_eq!(doc, json(&out));
}

#[test]
fn scan_rejects_empty_and_short_lists() {
    assert_eq!(fisherlab(&["scan", "--k", "4", "--values"]).status.code(), Some(2));
    assert_eq!(fisherlab(&["scan", "--k", "4", "--values", "-1,-2,-3"]).status.code(), Some(2));
    assert_eq!(fisherlab(&["scan", "--values", DECADE]).status.code(), Some(2));
}

#[test]
fn scan_solver_failure_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("fail");
    let out = fisherlab(&["scan", "--k", "4", "--values", DECADE, "--tol", "1e-300", "--refinements", "1", "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let csv = std::fs::read_to_string(dir.path().join("fail.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("failed,-1.0,"), "{last}");
    let doc = json(&out);
    assert_eq!(doc["pass"], false);
    assert!(doc["error"].as_str().unwrap().contains("lambda = -1"));
}

#[test]
fn translate_shifted_oscillator() {
    let out = fisherlab(&["translate", "--lambda", "1=8", "--lambda", "2=-4"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!(close(f(&doc["xi"]), 1.0, 1e-9));
    assert!(close(f(&doc["shifted_multipliers"]["2"]), -4.0, 1e-12));
    assert_eq!(doc["tie"], false);
    let s0 = &doc["states"][0];
    assert!(close(f(&s0["alpha_bar"]), 4.0, 1e-6));
    assert!(close(f(&s0["fisher"]), 2.0, 1e-6));
    assert!(close(f(&s0["cramer_rao"]), 1.0, 1e-6));
    assert!(check_passed(&doc, "state0.frame_fisher"));
    assert!(check_passed(&doc, "state0.moment_consistency"));
}

#[test]
fn translate_centered_oscillator_is_identity_shift() {
    let doc = json(&fisherlab(&["translate", "--lambda", "2=-4"]));
    assert_eq!(f(&doc["xi"]), 0.0);
    assert_eq!(f(&doc["u_min"]), 0.0);
}

#[test]
fn translate_double_well_flags_tie() {
    // U = x⁴/8 - x², minima at x = ±2 with equal depth
    let doc = json(&fisherlab(&["translate", "--lambda", "2=8", "--lambda", "4=-1"]));
    assert_eq!(doc["tie"], true);
    assert!(close(f(&doc["xi"]).abs(), 2.0, 1e-9));
    assert!(close(f(&doc["u_min"]), -2.0, 1e-9));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let a = fisherlab(&["verify", "--lambda", "2=-4", "--lambda", "4=-1", "--states", "2"]);
    let b = fisherlab(&["verify", "--lambda", "2=-4", "--lambda", "4=-1", "--states", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let c = fisherlab(&["scan", "--k", "4", "--values", DECADE, "--jobs", "1"]);
    let d = fisherlab(&["scan", "--k", "4", "--values", DECADE, "--jobs", "3"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn timing_is_opt_in() {
    assert!(json(&fisherlab(&["solve", "--lambda", "2=-4"])).get("timing").is_none());
    assert!(json(&fisherlab(&["solve", "--lambda", "2=-4", "--timing"]))["timing"]["wall_seconds"].is_number());
}

#[test]
fn config_file_and_echo_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# two-term\nlambda 2 = -4\nlambda 4 = -1\nstates = 3\nchecks = pde, virial\n").unwrap();
    let out = fisherlab(&["verify", "--config", path.to_str().unwrap(), "--states", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let echo: Vec<&str> = doc["config"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    assert!(echo.contains(&"states = 2"), "flag overrides the file: {echo:?}");

    let replay = dir.path().join("replay.conf");
    std::fs::write(&replay, echo.join("\n")).unwrap();
    let again = fisherlab(&["verify", "--config", replay.to_str().unwrap()]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "lambda 2 = -4\ncolour = blue\n").unwrap();
    let out = fisherlab(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}
