mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

const P4: &str = "n 4\n1 2 1\n2 3 1\n3 4 1\n";
const P5: &str = "n 5\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n";

fn plap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn lambdas(report: &Value, section: usize) -> Vec<f64> {
    report["spectra"][section]["spectrum"]["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["lambda"].as_f64().unwrap())
        .collect()
}

#[test]
fn solve_p4_at_p2() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p4.txt", P4);
    let out = plap(&["solve", s(&g), "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let l = lambdas(&r, 0);
    assert_eq!(l.len(), 4);
    assert!((l[1] - (2.0 - 2f64.sqrt())).abs() < 1e-9);
    assert_eq!(r["schema"], "plap-report/1");
}

#[test]
fn solve_p4_at_p15_converges() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p4.txt", P4);
    let out = plap(&["solve", s(&g), "--p", "1.5", "--steps", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    for pair in r["spectra"][0]["spectrum"]["pairs"].as_array().unwrap() {
        assert!(pair["residual"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn disconnected_graph_warns() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "d.txt", "n 4\n1 2 1\n3 4 1\n");
    let out = plap(&["solve", s(&g), "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph disconnected"));
    assert_eq!(json(&out)["warnings"][0], "graph disconnected");
}

#[test]
fn malformed_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "bad.txt", "n 3\n1 2\n");
    let out = plap(&["certify", s(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = plap(&["solve", s(&g)]);
    assert_eq!(out.status.code(), Some(2));
    let out = plap(&["solve", "/nonexistent/graph.txt", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_p5_passes_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p5.txt", P5);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let csv = dir.path().join("s.csv");
    let args = ["certify", s(&g), "--p", "1.2,1.5,2,3", "--seed", "3"];
    let out = plap(&[&args[..], &["--json", s(&a), "--csv", s(&csv)]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = plap(&[&args[..], &["--json", s(&b)]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let r: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(r["status"], "certified");
    assert_eq!(r["parameters"]["options"]["seed"], 3);
    assert!(r.get("timings").is_none());
    let rows = fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 5);
}

#[test]
fn certify_p3_one_laplacian() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p3.txt", "n 3\n1 2 1\n2 3 1\n");
    let out = plap(&["certify", s(&g), "--mu", "degree", "--one-laplacian", "--p", "1.5,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let one = &r["one_laplacian"];
    let set = one["enumeration"]["nonconstant"].as_array().unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set[0]["lo"], "1");
    assert_eq!(set[0]["hi"], "1");
    let lambda2 = &one["indexed"][1];
    assert_eq!(lambda2["bound"], 3);
    let alternating = lambda2["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["weak"] == 3 && c["strong"] == 3)
        .expect("a pattern with three strong and weak domains");
    assert_eq!(alternating["pass"], true);
}

#[test]
fn cheeger_constants_and_sweep() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p4.txt", P4);
    let out = plap(&["cheeger", s(&g), "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let h: Vec<f64> = r["cheeger_constants"].as_array().unwrap().iter().map(|c| c["h"].as_f64().unwrap()).collect();
    assert_eq!(h, vec![0.0, 0.5, 1.0]);

    let out = plap(&["cheeger", s(&g), "--k", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must satisfy"));

    let f = write(&dir, "f.txt", "0.65\n0.27\n-0.27\n-0.65\n");
    let out = plap(&["cheeger", s(&g), "--k", "2", "--sweep", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let sweep = &json(&out)["sweep"];
    assert_eq!(sweep["satisfied"], true);
    assert!(sweep["cut_ratio"].as_f64().unwrap() <= sweep["bound"].as_f64().unwrap());

    let short = write(&dir, "short.txt", "1\n2\n");
    let out = plap(&["cheeger", s(&g), "--k", "2", "--sweep", s(&short)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cheeger_above_cap_needs_approx() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("n 16\n");
    for i in 1..16 {
        text += &format!("{i} {} 1\n", i + 1);
    }
    let g = write(&dir, "p16.txt", &text);
    let out = plap(&["cheeger", s(&g), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plap(&["cheeger", s(&g), "--k", "2", "--approx"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["cheeger_constants"][1]["exact"], false);
}

#[test]
fn timings_on_request() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p4.txt", P4);
    let out = plap(&["solve", s(&g), "--p", "3", "--timings"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["timings"].is_object());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(plap(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(plap(&[]).status.code(), Some(2));
}

#[test]
fn unconverged_pair_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("n 7\n");
    for i in 1..7 {
        text += &format!("{i} {} 1\n", i + 1);
    }
    let g = write(&dir, "p7.txt", &text);
    let out = plap(&["certify", s(&g), "--p", "1.1"]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    assert_eq!(r["status"], "non_convergence");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED residual"));
}

#[test]
fn failed_certificate_exits_1() {
    // lambda_2 continued from p = 2 lands above 2^{p-1} h_2 on this graph
    let mut r = common::rng(7);
    let mut g = None;
    for _ in 0..19 {
        let n = r.random_range(3..=10);
        let mode = common::random_mode(&mut r);
        g = Some(common::random_connected(&mut r, n, 0.3, mode));
    }
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "g.txt", &g.unwrap().to_edge_list());
    let out = plap(&["certify", s(&path), "--mu", "explicit", "--p", "1.1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["status"], "certificate_failure");
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).collect();
    assert!(failed.iter().any(|c| c["name"] == "cheeger" && c["k"] == 2));
}
