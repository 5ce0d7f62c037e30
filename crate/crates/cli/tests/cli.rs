use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use isc_core::sim::SimTrace;

fn isc_sim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isc-sim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn sweep_writes_one_trace_per_value_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isc_sim(
        &[
            "--scenario",
            "path_following",
            "--out",
            "o",
            "--sweep-lambda-a",
            "0,0.3,0.7,1",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("o");
    let csv: Vec<_> = files(&dir)
        .into_iter()
        .filter(|f| f.ends_with(".csv"))
        .collect();
    assert_eq!(
        csv,
        [
            "path_following_lambda_a_0.3.csv",
            "path_following_lambda_a_0.7.csv",
            "path_following_lambda_a_0.csv",
            "path_following_lambda_a_1.csv",
        ]
    );
    let summary = fs::read_to_string(dir.join("summary.txt")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<_> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(
        header,
        [
            "scenario",
            "lambda_D",
            "lambda_A",
            "rms_y_err",
            "rms_psi_err",
            "rms_uD",
            "peak_uD",
            "latency_s",
            "switches"
        ]
    );
    assert_eq!(lines.count(), 4);

    let trace = SimTrace::read_csv(
        fs::read(dir.join("path_following_lambda_a_1.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    assert_eq!(trace.len(), 500);
    assert!(trace.rows.iter().all(|r| r.u_d == 0.0));
}

#[test]
fn combined_run_reports_one_switch_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isc_sim(
        &["--scenario", "combined", "--out", "o", "--plot-data"],
        tmp.path(),
    );
    assert!(out.status.success());
    let dir = tmp.path().join("o");
    let summary = fs::read_to_string(dir.join("summary.txt")).unwrap();
    let row: Vec<_> = summary.lines().nth(1).unwrap().split_whitespace().collect();
    let latency: f64 = row[7].parse().unwrap();
    assert!((latency - 1.0).abs() <= 0.3, "{latency}");
    assert_eq!(row[8], "1");
    let names = files(&dir);
    for f in [
        "combined_y.dat",
        "combined_u_d.dat",
        "combined_u_d_switch.dat",
    ] {
        assert!(names.iter().any(|n| n == f), "{f} missing");
    }
    let switch = fs::read_to_string(dir.join("combined_u_d_switch.dat")).unwrap();
    assert!(switch
        .lines()
        .skip(1)
        .all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(
        isc_sim(&["--out", "o", "--plot-data", "--seedless"], tmp.path())
            .status
            .success()
    );
    let dir = tmp.path().join("o");
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("# digest: sha256"));
    let listed: Vec<(&str, &str)> = manifest
        .lines()
        .filter_map(|l| l.split_once("  "))
        .collect();
    let mut names: Vec<&str> = listed.iter().map(|(_, f)| *f).collect();
    names.push("manifest.txt");
    names.sort();
    assert_eq!(names, files(&dir));
    for (d, f) in listed {
        assert_eq!(isc_cli::run::digest(&fs::read(dir.join(f)).unwrap()), d);
    }
}

#[test]
fn repeated_invocations_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "scenario = \"obstacle_avoidance\"\nlambda_a = 0.25\n").unwrap();
    let before = fs::read(&cfg).unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(tmp.path().join("o"));
        assert!(isc_sim(&["--config", "c.toml", "--out", "o"], tmp.path())
            .status
            .success());
        let dir = tmp.path().join("o");
        runs.push((
            fs::read(dir.join("manifest.txt")).unwrap(),
            fs::read(dir.join("obstacle_avoidance.csv")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(fs::read(&cfg).unwrap(), before);
}

#[test]
fn failures_exit_nonzero_and_leave_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.toml"),
        "lambda_d = 0.6\nlambda_a = 0.6\n",
    )
    .unwrap();
    let out = isc_sim(&["--config", "bad.toml", "--out", "o"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum to 1"));
    assert!(!tmp.path().join("o").exists());

    let out = isc_sim(&["--out", "o", "--sweep-lambda-a", "0.5,1.5"], tmp.path());
    assert!(!out.status.success());
    assert!(!tmp.path().join("o").exists());

    let out = isc_sim(&["--scenario", "rally", "--out", "o"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn run_failure_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("keep.txt"), "x").unwrap();
    // a directory where the summary should go makes the write fail midway
    fs::create_dir(dir.join("summary.txt")).unwrap();
    let out = isc_sim(&["--out", "o"], tmp.path());
    assert!(!out.status.success());
    assert_eq!(files(&dir), ["keep.txt", "summary.txt"]);
}

#[test]
fn config_cannot_be_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("summary.txt"), "").unwrap();
    let out = isc_sim(&["--config", "summary.txt", "--out", "."], tmp.path());
    assert!(!out.status.success());
    assert_eq!(fs::read(tmp.path().join("summary.txt")).unwrap(), b"");
}
