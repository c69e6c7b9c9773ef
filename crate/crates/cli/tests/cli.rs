use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn affmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affmin"))
        .args(args)
        .env_remove("AFFMIN_GRID")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn approx_parabola() {
    let v = json(&affmin(&["approx", "--interval=-1,1", "--field", "x1^2"]));
    assert!((v["d"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["beta"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["vertex_residuals"].as_array().unwrap().len(), 2);
    assert_eq!(v["witness"][0].as_f64().unwrap(), 0.0);
}

#[test]
fn approx_builtin_on_triangle_file_with_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", r#"{"vertices": [[0,0],[1,0],[0,1]]}"#);
    let csv = dir.path().join("res.csv");
    let out = affmin(&[
        "approx",
        "--simplex",
        &tri,
        "--field",
        "builtin:sqnorm",
        "--grid",
        "8",
        "--residuals",
        csv.to_str().unwrap(),
    ]);
    let v = json(&out);
    assert!((v["d"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["grid"], 8);
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,residual"));
    assert_eq!(text.lines().count(), 1 + 45);
}

#[test]
fn grid_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_affmin"))
        .args(["approx", "--interval=0,1", "--field", "exp(x1)"])
        .env("AFFMIN_GRID", "12")
        .output()
        .unwrap();
    assert_eq!(json(&out)["grid"], 12);
}

#[test]
fn exit_codes() {
    let bad_expr = affmin(&["approx", "--interval=0,1", "--field", "x1 +"]);
    assert_eq!(bad_expr.status.code(), Some(2));
    let degenerate = affmin(&["approx", "--vertices", "0,0;1,1;2,2", "--field", "x1"]);
    assert_eq!(degenerate.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&degenerate.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    let violation = affmin(&["approx", "--interval=-2,2", "--field", "x1^3", "--convexity", "convex"]);
    assert_eq!(violation.status.code(), Some(3));
    let unknown = affmin(&["approx", "--interval=-2,2", "--field", "x1^3"]);
    assert_eq!(unknown.status.code(), Some(3));
    let missing = affmin(&["regions", "--homography", "/nonexistent/h.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn line_reciprocal() {
    let v = json(&affmin(&["line", "--interval", "1,2", "--field", "1/x1"]));
    let d = (3.0 - 2.0 * 2f64.sqrt()) / 4.0;
    assert!((v["d"].as_f64().unwrap() - d).abs() < 1e-10);
    assert_eq!(v["certificate"]["signs"], serde_json::json!([1, -1, 1]));
    let h = json(&affmin(&["line", "--interval", "1,2", "--hyperbola", "0,1,1,0"]));
    assert!((h["d"].as_f64().unwrap() - d).abs() < 1e-10);
}

#[test]
fn verify_is_deterministic_and_tight() {
    let args = ["verify", "--random-quadratic", "2", "--seed", "7"];
    let a = affmin(&args);
    let b = affmin(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!(v["gap"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["within_bound"], true);
}

#[test]
fn regions_and_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", r#"{"matrix": [[0,1,0.5],[0,1,-3.35],[1,0,-3]]}"#);
    let v = json(&affmin(&["regions", "--homography", &h]));
    assert_eq!(v["regions"].as_array().unwrap().len(), 6);
    assert_eq!(v["lines"].as_array().unwrap().len(), 3);
    let crossing = write(dir.path(), "crossing.json", r#"{"vertices": [[0,4],[0.4,0],[2,4.3]]}"#);
    let r = json(&affmin(&["admissible", "--homography", &h, "--triangle", &crossing]));
    assert_eq!(r["admissible"], false);
    assert_eq!(r["region_consistent"], false);
}

#[test]
fn warp_identity_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let img = affmin::warp::Image::grid_pattern(40, 30, 5).unwrap();
    let input = dir.path().join("in.ppm");
    img.write_ppm(&input).unwrap();
    let input = input.display().to_string();
    let id = write(dir.path(), "id.json", r#"{"matrix": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let out = dir.path().join("out.ppm").display().to_string();
    let status = affmin(&[
        "warp",
        "--in",
        &input,
        "--homography",
        &id,
        "--method",
        "exact",
        "--out",
        &out,
    ]);
    assert!(status.status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&input).unwrap());

    let h = write(dir.path(), "h.json", r#"{"matrix": [[1,0,0],[0,1,0],[0.002,0,1]]}"#);
    let tri = write(dir.path(), "tri.json", r#"{"vertices": [[4,3],[20,12],[36,26]]}"#);
    let stats = dir.path().join("stats.csv").display().to_string();
    for method in ["exact", "affine", "taylor"] {
        let o = affmin(&[
            "warp",
            "--in",
            &input,
            "--homography",
            &h,
            "--method",
            method,
            "--triangle",
            &tri,
            "--stats",
            &stats,
            "--out",
            &out,
        ]);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&stats).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,sup_px,mean_px,d1,d2");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("exact,0"));
    let sup = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(sup(lines[2]) <= sup(lines[3]));

    let no_tri = affmin(&[
        "warp",
        "--in",
        &input,
        "--homography",
        &h,
        "--method",
        "affine",
        "--out",
        &out,
    ]);
    assert_eq!(no_tri.status.code(), Some(2));
}
