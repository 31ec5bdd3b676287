use std::path::Path;
use std::process::{Command, Output};

use sscor::cli::io::EstimateReport;
use sscor::correlation::multivariate_matrix;
use sscor::robust::DataMatrix;

fn sscor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sscor"))
        .args(args)
        .env_remove("SSCOR_THREADS")
        .output()
        .expect("run sscor")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn cross_dataset_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "cross.csv", "x,y\n1,0\n-1,0\n0,1\n0,-1\n");
    let out = sscor(&["estimate", "--method", "pairwise", "--input", &input]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "quantity,row,col,value\ncorrelation,1,1,1.0\ncorrelation,1,2,0.0\n\
         correlation,2,1,0.0\ncorrelation,2,2,1.0\n"
    );
}

#[test]
fn constant_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "flat.csv", "height,weight\n1,5\n2,5\n3,5\n4,5\n");
    let out = sscor(&["estimate", "--method", "two-stage", "--input", &input]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("column 2 ('weight')"), "{}", stderr(&out));
}

#[test]
fn parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "bad.csv", "1,2\n3,4\n5,x\n");
    let out = sscor(&["estimate", "--method", "moment", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn json_report_round_trips() {
    let rows = [
        [0.3, 1.0, -0.2],
        [2.0, -1.0, 0.4],
        [4.0, 4.5, 1.1],
        [-1.0, 0.2, -2.0],
        [0.7, 0.1, 0.3],
        [1.5, 2.5, 0.9],
        [-2.0, -0.4, -0.6],
        [0.1, -1.3, 0.05],
    ];
    let csv: String = rows
        .iter()
        .map(|r| format!("{},{},{}\n", r[0], r[1], r[2]))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "data.csv", &csv);
    let output = dir.path().join("report.json");
    let out = sscor(&[
        "estimate",
        "--method",
        "multivariate",
        "--input",
        &input,
        "--format",
        "json",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let report: EstimateReport = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    let data = DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    let expected = multivariate_matrix(&data).unwrap();
    assert_eq!(report.method, "multivariate");
    assert_eq!((report.p, report.n), (3, 8));
    assert!(report.correlation_matrix().max_abs_diff(&expected.matrix) <= 1e-15);
    assert_eq!(report.lambdas.as_deref(), expected.lambdas.as_deref());
    assert!(report.shape.is_some());
    assert!(report.ci.is_none());
}

#[test]
fn two_stage_interval() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "pair.csv",
        "1.0,1.2\n2.0,1.9\n3.0,3.5\n4.0,3.7\n5.0,5.6\n6.0,5.8\n-1.0,0.3\n0.5,-0.4\n",
    );
    let out = sscor(&["estimate", "--method", "two-stage", "--input", &input, "--ci", "0.9", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: EstimateReport = serde_json::from_str(&stdout(&out)).unwrap();
    let ci = report.ci.unwrap();
    let rho = report.correlation[0][1];
    assert!(ci.lower <= rho && rho <= ci.upper);
    assert!(ci.lower >= -1.0 && ci.upper <= 1.0);
    assert_eq!(ci.level, 0.9);

    let out = sscor(&["estimate", "--method", "pairwise", "--input", &input, "--ci", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eigenmap_forward_and_inverse() {
    let out = sscor(&["eigenmap", "forward", "--lambdas", "0.8,0.2"]);
    assert!(out.status.success());
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    let delta1: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
    assert!((delta1 - 2.0 / 3.0).abs() < 1e-12);

    let out = sscor(&["eigenmap", "inverse", "--deltas", "0.666667,0.333333"]);
    assert!(out.status.success());
    let lambda1: f64 = stdout(&out).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((lambda1 - 0.8).abs() < 1e-5);
    assert!(stderr(&out).contains("iterations:"));

    let out = sscor(&["eigenmap", "forward", "--lambdas", "0.5,-0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_rows() {
    let out = sscor(&["figure", "--figure", "2", "--p", "3"]);
    assert!(out.status.success());
    let lambdas: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lambdas.len(), 3);
    assert!((lambdas[0] / lambdas[1] - 5.0).abs() < 1e-12);
}

#[test]
fn simulate_reproduces_pairwise_variance() {
    let out = sscor(&[
        "simulate", "--dist", "normal", "--p", "2", "--n", "100", "--reps", "2000", "--seed", "1",
        "--estimators", "pairwise",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let v: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((1.7..=2.1).contains(&v), "{row}");
}

#[test]
fn simulate_rejects_single_replication() {
    let out = sscor(&["simulate", "--dist", "normal", "--p", "2", "--n", "50", "--reps", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let args = [
        "simulate", "--dist", "laplace", "--p", "3", "--n", "40", "--reps", "100", "--seed", "9",
    ];
    let base = sscor(&args);
    let env = Command::new(env!("CARGO_BIN_EXE_sscor"))
        .args(args)
        .env("SSCOR_THREADS", "3")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(base.stdout, env.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_sscor"))
        .args(args)
        .env("SSCOR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
