use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sqmul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqmul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn int_file(rows: usize, cols: usize, data: &str) -> String {
    format!(r#"{{"rows":{rows},"cols":{cols},"domain":"int","complex":false,"data":{data}}}"#)
}

#[test]
fn gen_is_deterministic() {
    let a = sqmul(&["gen", "2x2", "--domain", "int", "--seed", "1", "--range", "8"]);
    let b = sqmul(&["gen", "2x2", "--domain", "int", "--seed", "1", "--range", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\"rows\": 2"), "{text}");
    let c = sqmul(&["gen", "2x2", "--seed", "2"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_writes_file_and_rejects_bad_requests() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let o = sqmul(&["gen", "3x1", "--complex", "--domain", "float", "-o", s(&out)]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&out).unwrap().contains("\"complex\": true"));
    assert_eq!(sqmul(&["gen", "0x2"]).status.code(), Some(2));
    assert_eq!(sqmul(&["gen", "2x2", "--range", "200", "--bits", "8"]).status.code(), Some(2));
    assert!(sqmul(&["gen", "2x2", "--range", "127", "--bits", "8"]).status.success());
}

#[test]
fn verify_random_matmul() {
    let o = sqmul(&["verify", "matmul_sq", "--random", "1000", "--seed", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("1000/1000 exact"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("case ")).count(), 1000);
    assert!(text.starts_with("case 0: exact\ncase 1: exact\n"));
}

#[test]
fn verify_output_is_reproducible() {
    for kernel in ["ctransform_sq3", "conv2d_sq"] {
        let args = ["verify", kernel, "--random", "20", "--seed", "3", "--domain", "float", "--json"];
        let a = sqmul(&args);
        assert!(a.status.success(), "{kernel}");
        assert_eq!(a.stdout, sqmul(&args).stdout);
    }
}

#[test]
fn verify_worked_complex_example() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", r#"{"rows":1,"cols":1,"domain":"int","complex":true,"data":[[[1,2]]]}"#);
    let b = write(&dir, "b.json", r#"{"rows":1,"cols":1,"domain":"int","complex":true,"data":[[[3,4]]]}"#);
    let o = sqmul(&["verify", "cmatmul_sq3", "--a", s(&a), "--b", s(&b)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("result: -5+10i"), "{}", stdout(&o));
}

#[test]
fn verify_rejects_unknown_kernel_and_bad_files() {
    let o = sqmul(&["verify", "bogus_kernel"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"rows":2,"cols":2,"domain":"int","complex":false,"data":[[1]]}"#);
    let o = sqmul(&["verify", "matmul_sq", "--a", s(&bad), "--b", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ratio_reports() {
    let o = sqmul(&["ratio", "real", "4", "4", "4"]);
    assert_eq!(stdout(&o), "1.5 (3/2)\n");
    let o = sqmul(&["ratio", "complex3", "4", "4", "4"]);
    assert_eq!(stdout(&o), "4.5 (9/2)\n");
    assert_eq!(sqmul(&["ratio", "real", "0", "4", "4"]).status.code(), Some(2));
}

#[test]
fn area_report_is_labelled() {
    let o = sqmul(&["area", "systolic", "SQ", "--bits", "8", "--pes", "16", "--depth", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("label: model estimate\n"), "{text}");
    let o = sqmul(&["area", "transform", "CPM3", "--bits", "16", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["label"], "model estimate");
    assert_eq!(sqmul(&["area", "systolic", "CPM"]).status.code(), Some(2));
}

#[test]
fn simulate_systolic_example_with_trace() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", &int_file(2, 2, "[[1,2],[3,4]]"));
    let b = write(&dir, "b.json", &int_file(2, 2, "[[5,6],[7,8]]"));
    let trace = dir.path().join("t.csv");
    let o = sqmul(&["simulate", "systolic", "SQ", "--a", s(&a), "--b", s(&b), "--trace", s(&trace)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("final: [[38,44],[86,100]]"), "{text}");
    assert!(text.contains("divide by 2"));
    assert!(text.contains("[[19,22],[43,50]]"));
    let csv = fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("cycle,unit,signal,value\n"));
}

#[test]
fn simulate_failures() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", &int_file(2, 3, "[[1,2,3],[3,4,5]]"));
    let b = write(&dir, "b.json", &int_file(2, 2, "[[5,6],[7,8]]"));
    let o = sqmul(&["simulate", "systolic", "SQ", "--a", s(&a), "--b", s(&b)]);
    assert_eq!(o.status.code(), Some(2));
    // 100 does not fit 4 signed bits.
    let big = write(&dir, "big.json", &int_file(1, 2, "[[100,1]]"));
    let o = sqmul(&["simulate", "pmacc", "SQ", "--a", s(&big), "--b", s(&big), "--bits", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("width violations: "));
}

#[test]
fn simulate_tensor_core_tiles() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", &int_file(2, 2, "[[1,2],[3,4]]"));
    let b = write(&dir, "b.json", &int_file(2, 2, "[[5,6],[7,8]]"));
    let o = sqmul(&[
        "simulate", "tensorcore", "MAC", "--a", s(&a), "--b", s(&b), "--tile", "1x1", "--tile-depth", "1", "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["final"], "[[19,22],[43,50]]");
    assert!(v.get("halved").is_none());
}
