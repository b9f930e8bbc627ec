use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples", &format!("{name}.json")].iter().collect();
    p.to_string_lossy().into_owned()
}

fn gdcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdcover")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn validate_accepts_the_corpus() {
    for name in ["cantor", "cantor_point", "cantor_segment", "rotated_2d", "sierpinski", "two_ratio", "two_vertex"] {
        let out = gdcover(&["validate", &example(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn validate_reports_a_broken_spec() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = std::fs::read_to_string(example("cantor")).unwrap().replace("\"to\": \"K\"", "\"to\": \"Q\"");
    assert!(text.contains("\"Q\""));
    std::fs::write(&p, text).unwrap();
    let out = gdcover(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dim_of_two_vertex_example() {
    let out = gdcover(&["dim", &example("two_vertex")]);
    assert_eq!(out.status.code(), Some(0));
    let s0 = json(&out)["s0"].as_f64().unwrap();
    assert!((s0 - 0.551463).abs() < 1e-6, "{s0}");
}

#[test]
fn lattice_of_cantor() {
    let out = gdcover(&["lattice", &example("cantor")]);
    let v = json(&out);
    assert_eq!(v["kind"], "Lattice");
    assert!((v["tau"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn missing_file_exits_with_one() {
    let out = gdcover(&["dim", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_subcommand_exits_with_one() {
    assert_eq!(gdcover(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn analyze_cantor_small_range() {
    let out = gdcover(&["analyze", &example("cantor"), "--tmin", "2", "--tmax", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["regime"], "SmallCondensation-Lattice");
    assert!((v["lattice"]["tau"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
    assert_eq!(v["estimate"]["kind"], "periodic");
    // at y = 0 every scale is 3^{-n}, where the ratio is exactly one
    assert!((v["estimate"]["h"][0][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn analyze_is_deterministic() {
    let args = ["--seed", "11", "analyze", &example("cantor_point"), "--tmin", "2", "--tmax", "8"];
    let a = gdcover(&args);
    let b = gdcover(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn analyze_of_large_condensation_reports_growth() {
    let out = gdcover(&["analyze", &example("cantor_segment"), "--tmin", "3", "--tmax", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["regime"], "LargeCondensation");
    assert_eq!(v["estimate"]["kind"], "growth");
    assert!(v["cross_check"].is_null());
}

#[test]
fn profile_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let out = gdcover(&[
        "profile",
        &example("cantor"),
        "--tmin",
        "1.0986122886681098",
        "--tmax",
        "6.591673732008658",
        "--samples",
        "6",
        "-o",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,N_K,N_total,ratio"));
    let counts: Vec<u64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(counts, vec![2, 4, 8, 16, 32, 64]);
}

#[test]
fn report_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = gdcover(&[
        "report",
        &example("two_vertex"),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--tmin",
        "2",
        "--tmax",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "profile.csv", "estimate.csv", "forcing.csv", "predicted.csv", "boundary.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn renewal_scalar_nonlattice_limit() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    let (l2, l3) = (2f64.ln(), 3f64.ln());
    let doc = serde_json::json!({
        "M": [[[[l2, 0.5], [l3, 0.5]]]],
        "L": [{"breakpoints": [0.0, l2], "values": [1.0, 0.0]}]
    });
    std::fs::write(&input, doc.to_string()).unwrap();
    let out_csv = dir.path().join("f.csv");
    let out = gdcover(&["renewal", input.to_str().unwrap(), "--horizon", "10", "-o", out_csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let limit = std::fs::read_to_string(dir.path().join("f.csv.limit.csv")).unwrap();
    let value: f64 = limit.lines().nth(1).unwrap().split(',').next_back().unwrap().parse().unwrap();
    assert!((value - l2 / ((l2 + l3) / 2.0)).abs() < 1e-6, "{value}");
}
