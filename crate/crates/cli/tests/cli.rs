use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn poafd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poafd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_vector(p: &Path) -> Vec<f64> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_identity() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "I3.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let y = put(&d, "y123.csv", "1\n2\n3\n");
    let w = d.path().join("w.csv");
    let o = poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", s(&w)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_vector(&w), vec![1.0, 2.0, 3.0]);
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("residual=0e0") && report.contains("steps=3"), "{report}");
}

#[test]
fn every_solve_method_runs() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,0\n0,2\n1,1\n");
    let y = put(&d, "y.csv", "1\n2\n2\n");
    let w = d.path().join("w.csv");
    for (method, extra) in [
        ("poafd", vec![]),
        ("lsqr", vec![]),
        ("cgls", vec![]),
        ("ridge", vec![]),
        ("pcr", vec!["--k", "2"]),
        ("lasso", vec!["--lambda", "0.01"]),
    ] {
        let mut args = vec!["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", s(&w), "--method", method];
        args.extend(extra);
        let o = poafd(&args);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        let got = read_vector(&w);
        // exact LS solution is (1, 1); lasso is shrunk slightly
        let tol = if method == "lasso" { 0.05 } else { 1e-8 };
        assert!((got[0] - 1.0).abs() < tol && (got[1] - 1.0).abs() < tol, "{method}: {got:?}");
    }
}

#[test]
fn lasso_without_lambda_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1\n");
    let y = put(&d, "y.csv", "1\n");
    let o = poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", "w.csv", "--method", "lasso"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--lambda"));
}

#[test]
fn missing_file_is_an_input_error_naming_the_path() {
    let d = TempDir::new().unwrap();
    let y = put(&d, "y.csv", "1\n");
    let missing = d.path().join("missing.csv");
    let o = poafd(&["solve", "--matrix", s(&missing), "--rhs", s(&y), "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("missing.csv"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn malformed_csv_reports_row_and_column() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "bad.csv", "1,2\n3,oops\n");
    let y = put(&d, "y.csv", "1\n2\n");
    let o = poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("bad.csv") && err.contains("line 2") && err.contains("column 2"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn dimension_mismatch_is_an_input_error() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,0\n0,1\n");
    let y = put(&d, "y.csv", "1\n2\n3\n");
    let o = poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("y.csv"));
}

#[test]
fn numerical_failure_exits_4() {
    // ridge with λ = 0 on a singular Gram matrix cannot factorize
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,1\n0,0\n");
    let y = put(&d, "y.csv", "2\n0\n");
    let w = d.path().join("w.csv");
    let o = poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", s(&w), "--method", "ridge"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_rejected() {
    let o = poafd(&["solve", "--matrix", "x", "--rhs", "y", "--out", "w", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pinv_routes_on_parallel_columns() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,1\n0,0\n");
    let y = put(&d, "y.csv", "2\n0\n");
    let w = d.path().join("w.csv");
    for method in ["one-step", "two-step", "svd"] {
        for inner in ["poafd", "lsqr", "cgls"] {
            let o = poafd(&[
                "pinv", "--matrix", s(&x), "--rhs", s(&y), "--out", s(&w), "--method", method, "--inner", inner,
            ]);
            assert!(o.status.success(), "{method}/{inner}: {}", stderr(&o));
            let got = read_vector(&w);
            assert!((got[0] - 1.0).abs() < 1e-12 && (got[1] - 1.0).abs() < 1e-12, "{method}/{inner}: {got:?}");
        }
    }
}

#[test]
fn pinv_solves_each_rhs_column() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,1\n0,0\n");
    let y = put(&d, "y.csv", "2,4\n0,1\n");
    let w = d.path().join("w.csv");
    let o = poafd(&["pinv", "--matrix", s(&x), "--rhs", s(&y), "--out", s(&w), "--method", "two-step"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&w).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][0] - 1.0).abs() < 1e-12 && (rows[0][1] - 2.0).abs() < 1e-12);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
}

#[test]
fn one_step_cap_is_a_numerical_failure() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1\n1\n1\n");
    let y = put(&d, "y.csv", "1\n1\n1\n");
    let o = poafd(&[
        "pinv", "--matrix", s(&x), "--rhs", s(&y), "--out", "w.csv", "--method", "one-step", "--max-gram-rows", "2",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn help_documents_every_flag() {
    let expected: [(&str, &[&str]); 4] = [
        ("solve", &["--matrix", "--rhs", "--out", "--method", "--tol", "--max-select", "--lambda", "--k"]),
        ("pinv", &["--matrix", "--rhs", "--out", "--method", "--inner"]),
        ("bench", &["--preset", "--seed", "--trials", "--out", "--summary", "--scale", "--omit-timing"]),
        ("compare", &["--matrix", "--rhs", "--methods", "--out"]),
    ];
    for (cmd, flags) in expected {
        let o = poafd(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd} --help");
        let text = String::from_utf8(o.stdout).unwrap();
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
    assert!(poafd(&["--help"]).status.success());
}

#[test]
fn solve_and_pinv_are_idempotent() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,2,3\n4,5,6\n7,8,10\n1,0,1\n");
    let y = put(&d, "y.csv", "1\n2\n3\n4\n");
    let a = d.path().join("a.csv");
    let b = d.path().join("b.csv");
    for out in [&a, &b] {
        assert!(poafd(&["solve", "--matrix", s(&x), "--rhs", s(&y), "--out", s(out)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    for out in [&a, &b] {
        let o = poafd(&["pinv", "--matrix", s(&x), "--rhs", s(&y), "--out", s(out), "--method", "one-step"]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn bench_writes_schema_and_is_idempotent_without_timing() {
    let d = TempDir::new().unwrap();
    let a = d.path().join("a.csv");
    let b = d.path().join("b.csv");
    for out in [&a, &b] {
        let o = poafd(&[
            "bench", "--preset", "fig1", "--seed", "3", "--trials", "2", "--scale", "0.5", "--out", s(out),
            "--omit-timing", "--summary",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8(o.stdout).unwrap().starts_with("preset"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "preset,method,trial,seed,m,n,noise_sigma,feature_count,error,solution_norm,wall_time_s,converged"
    );
    // 5 methods × 2 trials × 5 feature counts
    assert_eq!(lines.count(), 50);
}

#[test]
fn bench_rejects_unknown_preset() {
    let o = poafd(&["bench", "--preset", "fig9", "--seed", "1", "--out", "r.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_runs_listed_methods() {
    let d = TempDir::new().unwrap();
    let x = put(&d, "x.csv", "1,0\n0,2\n1,1\n2,1\n");
    let y = put(&d, "y.csv", "1\n2\n2\n3\n");
    let out = d.path().join("r.csv");
    let o = poafd(&[
        "compare", "--matrix", s(&x), "--rhs", s(&y), "--methods", "poafd,lsqr,two-step,mp", "--out", s(&out),
        "--omit-timing",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    let errors: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    for e in &errors {
        assert!((e - errors[0]).abs() < 1e-9, "{errors:?}");
    }
    let bad = poafd(&["compare", "--matrix", s(&x), "--rhs", s(&y), "--methods", "poafd,nope", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}
