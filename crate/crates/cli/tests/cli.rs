use std::process::{Command, Output};

fn zladder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zladder")).args(args).output().expect("binary runs")
}

fn body(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn sum_check_prints_one_window() {
    let out = zladder(&["sum-check", "--T", "1e4", "--delta", "sixth"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = body(&out);
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("window,T,delta,H,parity"));
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[4], "odd");
    let ratio: f64 = cells[8].parse().unwrap();
    assert!(ratio > 0.5 && ratio < 1.5);
}

#[test]
fn fermat_scan_contains_two() {
    let out = zladder(&["fermat-scan", "--max-n", "3", "--max-xyz", "2", "--tau", "4.6", "--delta", "sixth"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = body(&out);
    assert_eq!(lines.len(), 1 + 3 * 2);
    let two = lines.iter().find(|l| l.starts_with("1,1,1,3,2.0,")).expect("x = 2 row");
    let cells: Vec<&str> = two.split(',').collect();
    assert!(cells[12].parse::<f64>().unwrap() > 0.0);
    // out-of-range cells carry an error and no numbers
    assert!(lines.iter().any(|l| l.contains("out of range")));
}

#[test]
fn invalid_config_exits_nonzero_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, "{}").unwrap();
    let target = dir.path().join("out.csv");
    let out = zladder(&["run", cfg.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!target.exists());

    std::fs::write(&cfg, r#"{"command":"sum-check","params":{"T":"1e4"}}"#).unwrap();
    let out = zladder(&["run", cfg.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    assert!(!target.exists());
}

#[test]
fn run_file_matches_subcommand_and_thread_count_is_irrelevant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sum.json");
    std::fs::write(&cfg, r#"{"command":"sum-check","params":{"T":"1e4,3e4","delta":"sixth","windows":"2"}}"#)
        .unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    for (path, threads) in [(&one, "1"), (&four, "4")] {
        let out = zladder(&["run", cfg.to_str().unwrap(), "--threads", threads, "-o", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&one).unwrap();
    assert_eq!(a, std::fs::read(&four).unwrap());
    let direct = zladder(&["sum-check", "--T", "1e4,3e4", "--delta", "sixth", "--windows", "2"]);
    assert_eq!(direct.stdout, a);
}

#[test]
fn dry_run_prints_resolved_config() {
    let out = zladder(&["eval", "--t", "1000", "--rs-order", "1", "--dry-run"]);
    assert!(out.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["eval"]["rs_correction_order"], 1);
    assert_eq!(cfg["params"]["t"], "1000");
}
