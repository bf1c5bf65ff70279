use std::io::Write;
use std::process::{Command, Output};

use spreadpc::cli::Envelope;
use spreadpc::sums::{LoopSums, Model, Prediction};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadpc"))
        .args(args)
        .env("SPREADPC_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn predict_saw_text() {
    let o = run(&["predict", "--model", "saw", "--d", "5", "--L", "4", "--format", "text"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("p_c = 1 + ")).unwrap();
    assert!(line.contains("+ O("), "{line}");
}

#[test]
fn predict_json_round_trips() {
    let o = run(&["predict", "--model", "op", "--d", "6", "--L", "3", "--no-meta"]);
    assert!(o.status.success());
    let env: Envelope<Prediction> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env.schema, 1);
    assert_eq!(env.command, "predict");
    assert!(env.meta.is_none());
    let p = env.body;
    assert_eq!(p.model, Model::Op);
    assert_eq!((p.d, p.range), (6, 3));
    assert!(p.tail_valid);
    assert!((p.p_c_leading - 1.0 - p.correction_term).abs() < 1e-15);
}

#[test]
fn meta_present_by_default() {
    let o = run(&["predict", "--model", "cp", "--d", "5", "--L", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["meta"]["wall_time"].is_number());
    assert_eq!(v["meta"]["workers"], 2);
}

#[test]
fn no_meta_output_is_reproducible() {
    let args = ["sums", "--d", "7", "--L", "2", "--no-meta"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let sim = ["simulate-op", "--d", "5", "--L", "1", "--mode", "survival", "--p", "1.0", "--horizon", "10", "--trials", "300", "--seed", "7", "--no-meta"];
    let a = run(&sim);
    let b = run(&sim);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("wall_time"));
}

#[test]
fn gate_and_bad_suite_exit_2() {
    let o = run(&["predict", "--model", "perc", "--d", "3", "--L", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension gate"));
    assert_eq!(run(&["verify", "--suite", "nosuch"]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--model", "saw", "--d", "5"]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--model", "saw", "--d", "5", "--L", "0"]).status.code(), Some(2));
}

#[test]
fn override_gate_runs_and_strict_flags_it() {
    let args = ["predict", "--model", "perc", "--d", "3", "--L", "2", "--override-gate", "--nmax", "40"];
    let o = run(&args);
    assert!(o.status.success());
    let p: Envelope<Prediction> = serde_json::from_slice(&o.stdout).unwrap();
    assert!(p.body.gate_overridden);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(3));
}

#[test]
fn series_csv_columns() {
    let o = run(&["series", "--d", "2", "--L", "1", "--nmax", "4", "--format", "csv", "--rational"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,r_n,method,d,L,rational"));
    let row2: Vec<&str> = lines.nth(2).unwrap().split(',').collect();
    assert_eq!(row2[0], "2");
    assert_eq!(row2[5], "1/8");
}

#[test]
fn sweep_csv_has_one_row_per_range() {
    let o = run(&["predict", "--model", "saw", "--d", "5", "--Ls", "2,3,4", "--format", "csv"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4);
    assert!(out.starts_with("model,source,d,L,"));
}

#[test]
fn output_file_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = run(&["sums", "--d", "5", "--L", "2", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let env: Envelope<LoopSums> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(env.body.dim, 5);
}

#[test]
fn unwritable_output_exits_4() {
    let o = run(&["sums", "--d", "5", "--L", "2", "--output", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# saw run\ncommand = predict\nmodel = saw\nd = 5\nL = 2\nno-meta = true").unwrap();
    let p = path.to_str().unwrap();
    let o = run(&["--config", p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let env: Envelope<Prediction> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env.body.range, 2);
    assert!(env.meta.is_none());
    let o = run(&["predict", "--config", p, "--L", "3"]);
    let env: Envelope<Prediction> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env.body.range, 3);

    std::fs::write(&path, "colour = red\n").unwrap();
    let o = run(&["predict", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}

#[test]
fn kernel_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.txt");
    std::fs::write(&path, "d=1 L=1 profile=table\n-1 0.5\n1 0.5\n").unwrap();
    let o = run(&["series", "--kernel", path.to_str().unwrap(), "--nmax", "4", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let r2: f64 = out.lines().nth(3).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((r2 - 0.5).abs() < 1e-15);
}

#[test]
fn continuum_and_compare_run() {
    let o = run(&["continuum", "--model", "saw", "--d", "5", "--L", "3", "--no-meta"]);
    let p: Envelope<Prediction> = serde_json::from_slice(&o.stdout).unwrap();
    assert!((p.body.error_scale - p.body.beta / 3.0).abs() < 1e-18);
    let o = run(&["compare", "--d", "5", "--Ls", "2,3", "--alpha", "even", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn series_one_dimension_rows() {
    let o = run(&["series", "--d", "1", "--L", "1", "--nmax", "4", "--format", "csv"]);
    let out = stdout(&o);
    let r: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(r, [1.0, 0.0, 0.5, 0.0, 0.375]);
}
