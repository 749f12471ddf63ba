use std::path::PathBuf;

use assert_cmd::Command;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.json"))
}

fn scuc() -> Command {
    Command::cargo_bin("scuc").unwrap()
}

#[test]
fn solve_writes_report_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let (report, iters, nodes) = (dir.path().join("r.json"), dir.path().join("i.csv"), dir.path().join("n.csv"));
    let out = scuc()
        .arg("solve")
        .arg(fixture("three_bus"))
        .arg("--report")
        .arg(&report)
        .arg("--iter-log")
        .arg(&iters)
        .arg("--node-log")
        .arg(&nodes)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["status"], "solved");
    assert!((rep["objective"].as_f64().unwrap() - 15950.0).abs() < 1e-3);
    assert!(std::fs::read_to_string(&iters).unwrap().lines().count() > 1);
    assert!(std::fs::read_to_string(&nodes).unwrap().lines().count() > 1);
}

#[test]
fn solver_flags_are_accepted() {
    scuc()
        .args(["solve", "--precision", "fp32", "--no-instance-scaling", "--lp-solver", "simplex-oracle"])
        .args(["--tau", "0.2", "--tau2", "0.05", "--rounds1", "1", "--rounds2", "2", "--gap1", "0.02", "--gap2", "0.0005"])
        .args(["--seed", "3"])
        .arg(fixture("copper_plate"))
        .assert()
        .code(0);
    scuc().arg("solve").arg("--no-fixing").arg(fixture("min_updown")).assert().code(0);
}

#[test]
fn exit_codes() {
    scuc().arg("solve").arg(fixture("invalid_startup")).assert().code(4);
    scuc().arg("solve").arg(fixture("islanding_contingency")).assert().code(4);
    scuc().args(["solve", "/nonexistent.json"]).assert().code(4);
    scuc().arg("solve").arg(fixture("congested_ten_gen")).args(["--time-limit", "0"]).assert().code(2);
    scuc().arg("solve").arg(fixture("tight")).args(["--tau", "0.7"]).assert().code(4);
}

#[test]
fn bench_emits_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["three_bus", "copper_plate"] {
        std::fs::copy(fixture(name), dir.path().join(format!("{name}.json"))).unwrap();
    }
    let out = scuc().arg("bench").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("instance,status,objective"));
    assert!(lines[1].starts_with("copper_plate,solved,"));
    assert!(lines[2].starts_with("three_bus,solved,"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("sgm10"));
}
