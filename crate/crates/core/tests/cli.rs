//! End-to-end runs of the `cidc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
# two vehicle counts, both protocols, short rounds
n_values = 10, 30
w_values = 32
delta_values = 0, 3
t_tx_us = 254
n_cycles = 30
n_rounds = 2
warmup_cycles = 5
";

fn cidc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cidc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_then_verify_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    let o = cidc(&["--config", &cfg, "--out", &out_s, "--traces", "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    // header, then per N: two CIDC rows and one DCF row
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.starts_with("protocol,N,W,delta,K,rounds,p_col_mean"));
    assert!(stdout(&o).contains("summary"));

    let traces = fs::read_dir(out.join("traces")).unwrap().count();
    assert_eq!(traces, 2 * 3 * 2 * 2);
    let v = cidc(&["--config", &cfg, "--out", &out_s, "verify"]);
    assert!(v.status.success());
    let text = stdout(&v);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 12);
    assert!(!text.contains("FAIL"));

    let r = cidc(&["report", &out.join("metrics.csv").to_string_lossy()]);
    assert!(r.status.success());
    assert!(stdout(&r).contains("collision ordering"));
}

#[test]
fn tampered_trace_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}protocols = cidc\ndelta_values = 0\nn_values = 30\n"));
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    assert!(cidc(&["--config", &cfg, "--out", &out_s, "--traces", "simulate"]).status.success());
    let slots = fs::read_dir(out.join("traces"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".slots.csv"))
        .unwrap();
    let text = fs::read_to_string(&slots).unwrap();
    // bump the contention count of the first data row
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let row = lines.iter().position(|l| !l.starts_with('#') && l.starts_with(|c: char| c.is_ascii_digit())).unwrap();
    let mut fields: Vec<String> = lines[row].split(',').map(str::to_owned).collect();
    let header: Vec<&str> = lines[row - 1].split(',').collect();
    let c = header.iter().position(|h| *h == "c").unwrap();
    fields[c] = (fields[c].parse::<u64>().unwrap() + 1).to_string();
    lines[row] = fields.join(",");
    fs::write(&slots, lines.join("\n") + "\n").unwrap();
    let v = cidc(&["verify", &slots.to_string_lossy()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).starts_with("FAIL"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut tables = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = cidc(&["--config", &cfg, "--out", &out.to_string_lossy(), "--workers", workers, "simulate"]);
        assert!(o.status.success());
        tables.push(fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn analyze_writes_model_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_values = 100, 250\n");
    let out = dir.path().join("an");
    let o = cidc(&["--config", &cfg, "--out", &out.to_string_lossy(), "analyze"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("analytics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    // K = 30 at N = 250 has no steady state
    assert!(stdout(&o).lines().any(|l| l.contains("K=30 N=250") && l.contains("beyond_saturation")));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_values = 10\nm_param = two\n");
    let o = cidc(&["--config", &cfg, "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config line 2"));
}
