use std::process::Command;

use geomprod::cli::{run, EXIT_DOMAIN, EXIT_IO, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("geomprod").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn estimate_json() {
    let (code, out, _) = call(&[
        "estimate",
        "--function",
        "half-sin",
        "--x",
        "3",
        "--r",
        "2",
        "--n-max",
        "40",
        "--base",
        "1,2,3,4",
    ]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    let value = v["value"].as_f64().unwrap();
    assert!((value - 1.0717576916717282).abs() < 1e-12);
    assert_eq!(v["factor_count"], 135_750);
}

#[test]
fn estimate_sqrt_ratio_csv() {
    let (code, out, _) = call(&[
        "--format",
        "csv",
        "estimate",
        "--function",
        "cos",
        "--x",
        "1",
        "--r",
        "sqrt:2",
        "--n-max",
        "10",
        "--base",
        "2,4",
        "--parity",
        "even",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("5.409434567153"), "{out}");
}

#[test]
fn count_factors_prints_integer() {
    let (code, out, _) = call(&["count-factors", "--base", "1,2,3,4", "--n-max", "40"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "135750");
}

#[test]
fn euler_csv() {
    let (code, out, _) = call(&["euler", "--x", "1.5707963267948966", "--n", "40"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,n,product,sinc,abs_diff"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(row[4] < 1e-10);
}

#[test]
fn component_of_cos() {
    let (code, out, _) = call(&[
        "component",
        "--function",
        "cos",
        "--k",
        "2",
        "--x",
        "1",
        "--r",
        "1.05",
        "--base",
        "2,4",
    ]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 3e-3);
}

#[test]
fn sweep_is_reproducible() {
    let args = [
        "sweep",
        "--function",
        "half-sin",
        "--x-stop",
        "4",
        "--r",
        "2",
        "--n-max",
        "40",
        "--base",
        "1,2,3,4",
    ];
    let (code, first, _) = call(&args);
    assert_eq!(code, EXIT_OK);
    let (_, second, _) = call(&args);
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 82);
    assert!(first.starts_with("x,r,n_max,estimate,reference,abs_error,factor_count,status\n"));
}

#[test]
fn sweep_marks_infeasible_rows() {
    let (code, out, _) = call(&[
        "sweep",
        "--function",
        "cos",
        "--x-stop",
        "3",
        "--r",
        "sqrt:2",
        "--n-max",
        "10",
        "--base",
        "2,4",
        "--parity",
        "even",
    ]);
    assert_eq!(code, EXIT_OK);
    let bad = out
        .lines()
        .filter(|l| l.ends_with("non_positive_sample"))
        .count();
    assert_eq!(bad, 27);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(call(&["estimate", "--function", "cos"]).0, EXIT_USAGE);
    assert_eq!(
        call(&["estimate", "--function", "cos", "--x", "1", "--r", "0.5"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&[
            "estimate",
            "--function",
            "cos",
            "--x",
            "1",
            "--r",
            "2",
            "--n-max",
            "1",
            "--base",
            "2,4"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&["estimate", "--function", "bogus", "--x", "1"]).0,
        EXIT_USAGE
    );
}

#[test]
fn domain_error_exit_3_single_line_json() {
    let (code, out, err) = call(&[
        "--format",
        "json",
        "estimate",
        "--function",
        "cos",
        "--x",
        "2.5",
        "--r",
        "sqrt:2",
        "--n-max",
        "10",
        "--base",
        "2,4",
    ]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(out.is_empty());
    assert_eq!(err.lines().count(), 1);
    let v = json(&err);
    assert_eq!(v["error"], "non_positive_sample");
    assert_eq!(v["exit_code"], EXIT_DOMAIN);
}

#[test]
fn missing_input_exit_4() {
    let (code, _, err) = call(&[
        "forecast",
        "--input",
        "/nonexistent/data.csv",
        "--x",
        "1",
        "--r",
        "2",
        "--base",
        "1,2",
    ]);
    assert_eq!(code, EXIT_IO);
    assert!(err.starts_with("error[io]"), "{err}");
}

fn write_signal(dir: &tempfile::TempDir) -> std::path::PathBuf {
    let path = dir.path().join("signal.csv");
    let mut text = String::from("t,value\n");
    for i in 0..=80 {
        let t = i as f64 * 0.05;
        text.push_str(&format!("{t},{}\n", 1.0 + t.sin() / 2.0));
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn forecast_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_signal(&dir);
    let input = input.to_str().unwrap();
    let (code, out, _) = call(&[
        "forecast",
        "--input",
        input,
        "--normalize",
        "none",
        "--x",
        "3",
        "--r",
        "2",
        "--n-max",
        "40",
        "--base",
        "1,2,3,4",
    ]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    let raw = v["raw_value"].as_f64().unwrap();
    assert!((raw - 1.0717576916717282).abs() < 1e-3, "{raw}");

    let (code, _, err) = call(&[
        "forecast",
        "--input",
        input,
        "--normalize",
        "none",
        "--x",
        "4.5",
        "--r",
        "2",
        "--n-max",
        "40",
        "--base",
        "1,2,3,4",
    ]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.starts_with("error[domain_coverage]"), "{err}");
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("count.txt");
    let (code, out, _) = call(&[
        "count-factors",
        "--base",
        "1,2",
        "--n-max",
        "5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    assert!(!std::fs::read_to_string(path).unwrap().is_empty());
}

#[test]
fn thread_count_does_not_change_output() {
    let bin = env!("CARGO_BIN_EXE_geomprod");
    let args = [
        "sweep",
        "--function",
        "cos",
        "--x-stop",
        "2",
        "--r",
        "2,1.5,1.25",
        "--cutoff",
        "32",
        "--base",
        "2,4",
    ];
    let single = Command::new(bin)
        .args(args)
        .env("GEOMPROD_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(bin)
        .args(args)
        .env("GEOMPROD_THREADS", "4")
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(single.stdout, many.stdout);

    let bad = Command::new(bin)
        .args(args)
        .env("GEOMPROD_THREADS", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
