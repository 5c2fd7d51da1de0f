use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const SCENARIO: &str = r#"
name = "ring"
[network]
topology = "cycle"
n = 6
coupling_mode = "graph_incidence"
k = 4.0
[omega]
kind = "uniform"
lo = -0.2
hi = 0.2
seed = 3
mean_center = true
[theta0]
kind = "uniform_random"
seed = 4
[integrator]
h = 0.01
t_end = 5.0
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kuramoto"))
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, SCENARIO).unwrap();
    (dir, cfg)
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    let o = bin()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_trace_and_summary() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    run(&["simulate"], &cfg, &out);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), lines.next().unwrap().split(',').count());
    // t = 0 plus 500 steps
    assert_eq!(trace.lines().count(), 1 + 501);
    let s = json_file(&out.join("summary.json"));
    assert_eq!(s["n"], 6);
    assert_eq!(s["seeds"]["omega"], 3);
    assert!(s["final_r"].as_f64().unwrap() <= 1.0);
}

#[test]
fn seed_override_changes_output_and_is_reproducible() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run(&["simulate", "--seed", "99"], &cfg, &a);
    run(&["simulate", "--seed", "99"], &cfg, &b);
    run(&["simulate"], &cfg, &c);
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("trace.csv")).unwrap());
    assert_ne!(ta, std::fs::read(c.join("trace.csv")).unwrap());
    assert_eq!(json_file(&a.join("summary.json"))["seeds"]["theta0"], 99);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    run(&["sweep", "--param", "k", "--values", "0.1,1,4"], &cfg, &out);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let rows = json_file(&out.join("sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn thresholds_and_fixedpoint_print_json() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let o = run(&["thresholds"], &cfg, &out);
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    // cycle of 6: lambda2 = 2 - 2 cos(2 pi / 6) = 1
    assert!((t["lambda2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(t, json_file(&out.join("thresholds.json")));

    let o = run(&["fixedpoint"], &cfg, &out);
    let fp: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fp["converged"], true);
    assert!(out.join("fixedpoint.json").exists());
}

#[test]
fn missing_config_is_an_error() {
    let o = bin().arg("simulate").output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SCENARIO.replace("n = 6", "n = 6\nline = 1")).unwrap();
    let o = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn serve_once_streams_until_disconnect() {
    let (_dir, cfg) = setup();
    let mut child = bin()
        .args(["serve", "--port", "0", "--fps", "0", "--once", "--quiet", "--config"])
        .arg(&cfg)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut banner).unwrap();
    let addr = banner.trim().strip_prefix("listening ").unwrap().to_string();

    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let hello: Value = serde_json::from_str(&line).unwrap();
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["n"], 6);
    writeln!(writer, r#"{{"cmd":"set_K","k":2}}"#).unwrap();
    let ack = loop {
        line.clear();
        reader.read_line(&mut line).unwrap();
        let v: Value = serde_json::from_str(&line).unwrap();
        if v["type"] == "ack" {
            break v;
        }
    };
    assert_eq!(ack["k"], 2.0);
    drop(reader);
    drop(writer);
    assert!(child.wait().unwrap().success());
}
