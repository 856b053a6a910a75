use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/examples")
}

fn example(name: &str) -> String {
    examples().join(name).to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_synsafe"))
        .args(args)
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Writes `text` to a fresh model file in the test scratch directory.
fn model(name: &str, text: &str) -> String {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}.ssm"));
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(run(&["validate", &example("backup_system.ssm")]).status.code(), Some(0));
    assert_eq!(run(&["validate", &example("chain3.ssm")]).status.code(), Some(0));

    let bad = model(
        "bad_sum",
        "const dt = 1s;\nautomaton A { states a, b; init a; a -> { 0.5: a, 0.4: b }; b -> b; }\nhazard H = A.b;",
    );
    let out = run(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad_sum.ssm"), "{stderr}");

    assert_eq!(run(&["validate", "/nonexistent/model.ssm"]).status.code(), Some(2));
}

#[test]
fn syntax_errors_carry_positions() {
    let bad = model(
        "syntax",
        "const dt = 1s;\nautomaton A { states a; init a; a -> ; }\nhazard H = A.a;",
    );
    let out = run(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("syntax.ssm:2:"), "{stderr}");
}

#[test]
fn dcca_on_small_models() {
    let unreachable = model(
        "unreachable",
        "const dt = 1s;
         automaton A { states ok, bad; init ok; ok -> ok; bad -> bad; }
         failure F per_time(1/h);
         hazard H = A.bad;",
    );
    let r = json(&["dcca", &unreachable]);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["minimal_critical_sets"], serde_json::json!([]));

    // by hand: only F breaks A, G is irrelevant
    let single = model(
        "single",
        "const dt = 1s;
         automaton A { states ok, bad; init ok; ok -> bad [F]; ok -> ok [!F]; bad -> bad; }
         failure F per_time(1/h);
         failure G per_time(1/h);
         hazard H = A.bad;",
    );
    let r = json(&["dcca", &single]);
    assert_eq!(r["minimal_critical_sets"], serde_json::json!([["F"]]));
    assert_eq!(r["witnesses"].as_array().unwrap().len(), 1);
    assert!(r.get("runtime_ms").is_none());
    assert!(json(&["dcca", &single, "--timing"]).get("runtime_ms").is_some());
}

#[test]
fn hazard_reports() {
    let r = json(&["hazard", &example("chain3.ssm"), "-k", "3"]);
    assert_eq!(r["probability"].as_f64(), Some(0.75));
    assert_eq!(r["k"], 3);
    assert_eq!(r["t_seconds"].as_f64(), Some(3.0));
    let r = json(&["hazard", &example("chain3.ssm"), "-k", "0"]);
    assert_eq!(r["probability"].as_f64(), Some(0.0));
    let r = json(&["hazard", &example("chain3.ssm"), "--time", "3s"]);
    assert_eq!(r["probability"].as_f64(), Some(0.75));

    let text = run(&["hazard", &example("chain3.ssm"), "-k", "3", "--format", "text"]);
    assert_eq!(String::from_utf8_lossy(&text.stdout), "P[true U<=3 H] = 0.75\n");
}

#[test]
fn horizon_arguments_are_checked() {
    let chain = example("chain3.ssm");
    assert_eq!(
        run(&["hazard", &chain, "-k", "3", "--time", "3s"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["hazard", &chain, "--time", "2500ms"]).status.code(), Some(1));
    assert_eq!(run(&["hazard", &chain]).status.code(), Some(1));
    // the case study declares a horizon of one hour
    let r = json(&["fta-bound", &example("backup_system.ssm"), "--demand-default"]);
    assert_eq!(r["k"], 360_000);
}

#[test]
fn hazard_curve_csv() {
    let file = Path::new(env!("CARGO_TARGET_TMPDIR")).join("chain_curve.csv");
    json(&[
        "hazard",
        &example("chain3.ssm"),
        "-k",
        "3",
        "--curve",
        "1",
        "--curve-file",
        file.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(&file).unwrap();
    assert_eq!(csv, "k,t_seconds,probability\n0,0,0\n1,1,0\n2,2,0.5\n3,3,0.75\n");
    // a curve needs somewhere to go
    assert_ne!(
        run(&["hazard", &example("chain3.ssm"), "-k", "3", "--curve", "1"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn state_cap_exit_code() {
    let out = run(&["hazard", &example("backup_system.ssm"), "-k", "10", "--state-cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fta_bound_reports() {
    let case = example("backup_system.ssm");
    let out = run(&["fta-bound", &case, "--time", "1h"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A2FailsActivate"));

    let r = json(&[
        "fta-bound",
        &case,
        "--time",
        "1h",
        "--demand",
        "A2FailsActivate=1e-4",
        "--model-check",
    ]);
    let bound = r["bound"].as_f64().unwrap();
    let checked = r["model_checked"].as_f64().unwrap();
    assert!(bound > checked, "{bound} vs {checked}");
    assert_eq!(r["violated"], false);
    assert_eq!(r["terms"].as_array().unwrap().len(), 8);

    let unreachable = model(
        "unreachable_fta",
        "const dt = 1s;
         automaton A { states ok, bad; init ok; ok -> ok; bad -> bad; }
         failure F per_time(1/h);
         hazard H = A.bad;",
    );
    let r = json(&["fta-bound", &unreachable, "-k", "10"]);
    assert_eq!(r["bound"].as_f64(), Some(0.0));
}

#[test]
fn approx_error_csv() {
    let out = run(&["approx-error", "--rate", "1e-2/h", "--dt", "1s", "--at", "0,100"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t_hours,exp_cdf,geom_cdf,abs_err,rel_err");
    assert_eq!(lines[1], "0,0,0,0,");
    let cols: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(cols[0], 100.0);
    assert!((cols[3] - 5.1095e-7).abs() < 5e-3 * 5.1095e-7);
    let r = json(&["approx-error", "--at", "100", "--format", "json"]);
    assert_eq!(r["rows"][0]["t_hours"].as_f64(), Some(100.0));
    assert_eq!(run(&["approx-error", "--format", "text"]).status.code(), Some(1));
}

#[test]
fn simulate_is_seeded() {
    let chain = example("chain3.ssm");
    let a = run(&["simulate", &chain, "-k", "3", "--samples", "50000", "--seed", "3"]);
    let b = run(&[
        "simulate",
        &chain,
        "-k",
        "3",
        "--samples",
        "50000",
        "--seed",
        "3",
        "--workers",
        "1",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    let (est, sigma) = (r["estimate"].as_f64().unwrap(), r["sigma"].as_f64().unwrap());
    assert!((est - 0.75).abs() <= 3.0 * sigma, "{est} +- {sigma}");
}

#[test]
fn output_file() {
    let file = Path::new(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    let out = run(&[
        "hazard",
        &example("chain3.ssm"),
        "-k",
        "3",
        "-o",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(r["probability"].as_f64(), Some(0.75));
    let out = run(&[
        "hazard",
        &example("chain3.ssm"),
        "-k",
        "3",
        "-o",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
