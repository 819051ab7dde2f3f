//! End-to-end runs of the `projpart` binary: construct → file → verify
//! round trips, reproducible reports, and machine-readable failures.

use std::process::Command;

fn projpart(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_projpart"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn construct_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let partition = dir.path().join("plane.json");
    let out = projpart(&[
        "construct",
        "--q",
        "2",
        "--n",
        "2",
        "--kind",
        "plane",
        "--partition-out",
        partition.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["size"], 21);
    assert_eq!(report["result"]["verify"]["covering"], true);

    let out = projpart(&["verify", "--input", partition.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["disjoint"], true);
    assert_eq!(report["result"]["covering"], true);
    assert_eq!(report["result"]["witnessed"], true);
}

#[test]
fn rerunning_the_same_config_is_byte_identical() {
    let args = [
        "lemma", "surgery", "--q", "3", "--n", "3", "--count", "25", "--seed", "123",
    ];
    let a = projpart(&args);
    let b = projpart(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_accepts_indices_and_coordinates() {
    let by_index = projpart(&["dspan", "solve", "--q", "2", "--n", "2", "--points", "0,1"]);
    assert!(by_index.status.success());
    let by_coords = projpart(&[
        "dspan", "solve", "--q", "2", "--n", "2", "--points", "0:0:1;0:1:0",
    ]);
    assert!(by_coords.status.success());
    let report: serde_json::Value = serde_json::from_slice(&by_index.stdout).unwrap();
    assert_eq!(report["result"]["trace"]["queries"].as_array().unwrap().len(),
               report["result"]["queries"].as_u64().unwrap() as usize);
}

#[test]
fn failures_exit_nonzero_with_an_error_record() {
    let out = projpart(&["construct", "--q", "6", "--n", "2"]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "NotPrimePower");

    let out = projpart(&["dependent", "--q", "4", "--n", "4", "--k", "4", "--mode", "sampled"]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "Parse");
}

#[test]
fn bench_csv_has_one_row_per_grid_cell() {
    let out = projpart(&[
        "--format", "csv", "dspan", "bench", "--q", "2,3", "--n", "2", "--samples", "50",
        "--seed", "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3); // header + 2 rows
    assert!(lines[0].contains("mean_queries"));
}

#[test]
fn worker_flag_is_accepted() {
    let out = projpart(&["--workers", "2", "lemma", "gp", "--n", "3"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["minimum"], 3);
}
