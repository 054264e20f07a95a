use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homfilt::mesh::UnitCellMesh;
use tempfile::TempDir;

fn homfilt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homfilt"))
        .args(args)
        .current_dir(dir)
        .env_remove("HOMFILT_OUTPUT_DIR")
        .output()
        .expect("run homfilt")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = homfilt(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    homfilt(dir, args).status.code().expect("exit code")
}

fn circle_mesh(dir: &Path) -> PathBuf {
    let path = dir.join("m.json");
    let stdout = ok(dir, &["mesh", "--geom", "circle", "--radius", "0.25", "--triangles", "1000", "--out", "m.json"]);
    assert!(stdout.starts_with("valid"), "{stdout}");
    path
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 2
}

#[test]
fn mesh_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let path = circle_mesh(d);
    let mesh = UnitCellMesh::read(&path).unwrap();
    assert!((mesh.triangles.len() as f64 / 1000.0 - 1.0).abs() <= 0.3);
    ok(d, &["mesh", "--geom", "channels", "--delta", "0.1", "--out", "c.json"]);
    let cross = UnitCellMesh::read(&d.join("c.json")).unwrap();
    assert!(matches!(cross.geometry, Some(homfilt::geometry::GeometrySpec::ChannelNetwork { .. })));
    assert_eq!(code(d, &["mesh", "--geom", "circle", "--radius", "0.7", "--out", "bad.json"]), 2);
    assert!(!d.join("bad.json").exists());
}

#[test]
fn carreau_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    circle_mesh(d);
    ok(d, &["darcy", "--mesh", "m.json", "--out", "k.json"]);
    let k: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("k.json")).unwrap()).unwrap();
    assert!(k["k"][0][0].as_f64().unwrap() > 0.0);

    let law = ["--law", "carreau", "--eta0", "1", "--lambda", "100", "--r", "1.5"];
    let mut sweep = vec!["sweep", "--mesh", "m.json", "--grid", "5x8", "--out", "s.csv"];
    sweep.extend(law);
    ok(d, &sweep);
    let text = fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(text.starts_with("# {"));
    assert_eq!(text.lines().nth(1).unwrap(), "xi_x,xi_y,U_x,U_y,newton_iters,div_norm,residual");
    assert_eq!(data_rows(&d.join("s.csv")), 45);

    let mut taylor = vec!["taylor", "--mesh", "m.json", "--out", "t.json"];
    taylor.extend(law);
    ok(d, &taylor);
    ok(d, &["gaps", "--sweep", "s.csv", "--tensors", "t.json", "--out", "g.csv"]);
    let gaps = fs::read_to_string(d.join("g.csv")).unwrap();
    assert_eq!(gaps.lines().nth(1).unwrap(), "xi_x,xi_y,delta1,delta3,delta5");
    assert_eq!(data_rows(&d.join("g.csv")), 45);

    // tensors for another law do not match the sweep
    ok(d, &["taylor", "--mesh", "m.json", "--law", "carreau", "--lambda", "1", "--order", "3", "--out", "t1.json"]);
    assert_eq!(code(d, &["gaps", "--sweep", "s.csv", "--tensors", "t1.json", "--out", "g1.csv"]), 2);
}

#[test]
fn power_law_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    circle_mesh(d);
    ok(d, &["solve", "--mesh", "m.json", "--xi", "0.6,0.8", "--out", "p.json"]);
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert!(p.get("U").is_some() && p.get("xi").is_some() && p.get("diagnostics").is_some());

    ok(d, &["sweep", "--mesh", "m.json", "--circle", "8", "--extend", "--out", "c.csv"]);
    assert_eq!(data_rows(&d.join("c.csv")), 32);
    ok(d, &["analyze-g", "--sweep", "c.csv", "--component", "1", "--out", "a.json", "--plot", "a.csv"]);
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("a.json")).unwrap()).unwrap();
    assert_eq!(a["component"], 1);
    assert!(a["A"].as_f64().unwrap() > 0.0);
    assert!(a["Delta"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(d.join("a.csv")).unwrap().lines().count(), 33);
    assert_eq!(code(d, &["analyze-g", "--sweep", "c.csv", "--component", "3"]), 2);
}

#[test]
fn validate_green_path() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    circle_mesh(d);
    let stdout = ok(d, &["validate", "--suite", "all", "--mesh", "m.json", "--report", "--out", "v.json"]);
    assert!(!stdout.contains("VIOLATED"), "{stdout}");
    assert!(stdout.contains("theta mean: form without (1/2)^r' / quadrature"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("v.json")).unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    circle_mesh(d);
    ok(d, &["mesh", "--geom", "circle", "--radius", "0.25", "--triangles", "1000", "--out", "m2.json"]);
    assert_eq!(fs::read(d.join("m.json")).unwrap(), fs::read(d.join("m2.json")).unwrap());
    for out in ["a.csv", "b.csv"] {
        ok(d, &["--deterministic", "sweep", "--mesh", "m.json", "--circle", "4", "--extend", "--verify", "0.5", "--out", out]);
    }
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    ok(d, &["sweep", "--jobs", "3", "--mesh", "m.json", "--circle", "4", "--extend", "--verify", "0.5", "--out", "c.csv"]);
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("c.csv")).unwrap());
    for out in ["t1.json", "t2.json"] {
        ok(d, &["--deterministic", "taylor", "--mesh", "m.json", "--law", "carreau", "--out", out]);
    }
    assert_eq!(fs::read(d.join("t1.json")).unwrap(), fs::read(d.join("t2.json")).unwrap());
}

#[test]
fn usage_and_solver_failures() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, &["darcy", "--mesh", "missing.json"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
    circle_mesh(d);
    assert_eq!(code(d, &["solve", "--mesh", "m.json", "--xi", "1"]), 2);
    assert_eq!(code(d, &["sweep", "--mesh", "m.json", "--grid", "5x8", "--circle", "8"]), 2);
    assert_eq!(code(d, &["solve", "--mesh", "m.json", "--law", "power", "--r", "3"]), 2);
    // a fully periodic cell has no wall to hold the flow
    UnitCellMesh::structured_periodic(4).write(&d.join("open.json")).unwrap();
    assert_eq!(code(d, &["darcy", "--mesh", "open.json"]), 3);
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out_dir = d.join("results");
    fs::create_dir(&out_dir).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_homfilt"))
        .args(["mesh", "--geom", "square", "--triangles", "400"])
        .current_dir(d)
        .env("HOMFILT_OUTPUT_DIR", &out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("mesh.json").exists());
}
