use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn biphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(cmd: &str, file: &Path, extra: &[&str]) -> Output {
    let p = file.display().to_string();
    let mut args = vec![cmd, "--scenario", p.as_str()];
    args.extend_from_slice(extra);
    biphase(&args)
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).expect("json error record")
}

fn write_scenario(dir: &Path, doc: &Value) -> PathBuf {
    let path = dir.join("s.json");
    std::fs::write(&path, serde_json::to_string(doc).unwrap()).unwrap();
    path
}

fn two_level(matrix: Value, t1: f64, steps: usize) -> Value {
    json!({
        "scenario_version": 1,
        "dimension": 2,
        "hamiltonian": { "t_domain": [0.0, t1], "terms": [{ "matrix": matrix }] },
        "initial_state": [[1.0, 0.0], [0.0, 0.0]],
        "grid": { "steps": steps },
        "outputs": { "trajectory": true, "stride": 1 }
    })
}

#[test]
fn evolve_csv_header_and_rows() {
    let out = run_on("evolve", &scenario("pt_symmetric.json"), &["--format", "csv", "--steps", "200"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,re_psi_0,re_psi_1,im_psi_0,im_psi_1,re_dual_0,re_dual_1,im_dual_0,im_dual_1,binorm_defect"
    );
    let rows: Vec<_> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 10));
}

#[test]
fn zero_hamiltonian_keeps_the_pair_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let zero = json!([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]);
    let path = write_scenario(dir.path(), &two_level(zero, 2.0, 50));
    let out = run_on("evolve", &path, &[]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let rows = v["trajectory"].as_array().unwrap();
    assert_eq!(rows.len(), 51);
    for row in rows {
        assert_eq!(row["state"], json!([{ "re": 1.0, "im": 0.0 }, { "re": 0.0, "im": 0.0 }]));
        assert_eq!(row["dual"], row["state"]);
    }
    assert_eq!(v["max_binorm_drift"], json!(0.0));
}

#[test]
fn eigenstate_of_constant_hamiltonian_has_no_geometric_phase() {
    let out = run_on("phase", &scenario("hermitian_eigenstate.json"), &[]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["operation"], "phase");
    assert_eq!(v["mode"], "direct");
    for field in ["pancharatnam", "dynamical", "geometric", "endpoint_overlap"] {
        assert!(v.get(field).is_some(), "missing {field}");
    }
    let g = &v["geometric"];
    assert!(g["re"].as_f64().unwrap().abs() < 1e-9);
    assert!(g["im"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["resolution"]["steps"], 600);
}

#[test]
fn biorthogonal_endpoints_need_an_anchor() {
    let flip = scenario("biorthogonal_flip.json");
    let out = run_on("phase", &flip, &[]);
    assert_eq!(code(&out), 4);
    let err = stderr_json(&out);
    assert_eq!(err["exit_status"], 4);
    assert_eq!(err["command"], "phase");

    let auto = run_on("phase", &flip, &["--anchor", "auto"]);
    assert_eq!(code(&auto), 0);
    let v = stdout_json(&auto);
    assert_eq!(v["mode"], "anchored");
    assert!(v["anchor_used"].is_object());
}

#[test]
fn anchor_from_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let r = 1.0 / 2f64.sqrt();
    let anchor = dir.path().join("anchor.json");
    std::fs::write(&anchor, json!([[r, 0.0], [0.0, r]]).to_string()).unwrap();
    let arg = format!("file:{}", anchor.display());
    let out = run_on("phase", &scenario("biorthogonal_flip.json"), &["--anchor", &arg]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["mode"], "anchored");
    let a = &v["anchor_used"]["state"];
    assert!((a[1]["im"].as_f64().unwrap() - r).abs() < 1e-15);
}

#[test]
fn bad_anchor_argument_is_a_parse_error() {
    let out = run_on("phase", &scenario("biorthogonal_flip.json"), &["--anchor", "nearest"]);
    assert_eq!(code(&out), 2);
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "ParseError");
}

#[test]
fn schema_errors_exit_2_with_the_offending_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = two_level(json!([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]), 1.0, 10);
    doc["initial_state"] = json!([[1.0, 0.0], "x"]);
    let path = write_scenario(dir.path(), &doc);
    let out = run_on("evolve", &path, &[]);
    assert_eq!(code(&out), 2);
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "ParseError");
    assert!(err["message"].as_str().unwrap().contains("initial_state[1]"));
}

#[test]
fn exceptional_point_is_rejected() {
    let out = run_on("phase", &scenario("pt_exceptional.json"), &[]);
    assert_eq!(code(&out), 3);
    assert_eq!(stderr_json(&out)["exit_status"], 3);
}

#[test]
fn coarse_grid_reports_drift() {
    let out = run_on("evolve", &scenario("pt_symmetric.json"), &["--steps", "4"]);
    assert_eq!(code(&out), 5);
}

#[test]
fn missing_scenario_and_unwritable_output_exit_1() {
    let out = biphase(&["phase", "--scenario", "/nonexistent/s.json"]);
    assert_eq!(code(&out), 1);
    let out = run_on(
        "polygon",
        &scenario("triangle.json"),
        &["--out", "/nonexistent/dir/out.json"],
    );
    assert_eq!(code(&out), 1);
    assert_eq!(stderr_json(&out)["kind"], "IoError");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("tri.csv");
    let d = dest.display().to_string();
    let tri = scenario("triangle.json");
    let to_file = run_on("polygon", &tri, &["--format", "csv", "--out", &d]);
    assert_eq!(code(&to_file), 0);
    assert!(to_file.stdout.is_empty());
    let to_stdout = run_on("polygon", &tri, &["--format", "csv"]);
    assert_eq!(std::fs::read(&dest).unwrap(), to_stdout.stdout);
}

#[test]
fn check_is_deterministic_per_seed() {
    let pt = scenario("pt_symmetric.json");
    let a = run_on("check", &pt, &["--seed", "5", "--format", "csv"]);
    let b = run_on("check", &pt, &["--seed", "5", "--format", "csv"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let header = String::from_utf8(a.stdout).unwrap();
    assert!(header.starts_with("operation,steps,check,status,measured,threshold,detail\n"));
}
