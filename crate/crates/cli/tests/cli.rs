use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wormhole(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wormhole"))
        .args(args)
        .current_dir(cwd)
        .env_remove("WORMHOLE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn teleport_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(
        &["teleport", "--state", "plus", "--out", "r.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let report = json(&fs::read(dir.path().join("r.json")).unwrap());
    assert!((report["output_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(report["teleported_state_label"], "plus");
    let manifest = json(&fs::read(dir.path().join("r.manifest.json")).unwrap());
    assert_eq!(manifest["command"], "teleport");
    assert!(manifest["duration_secs"].is_number());
}

#[test]
fn teleport_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(&["teleport", "--state", "0"], dir.path());
    assert!(out.status.success());
    let report = json(&out.stdout);
    assert!((report["hawking_entropy_over_ln2"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn teleport_bloch_and_standard() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(&["teleport", "--theta", "1.1", "--phi", "-0.3"], dir.path());
    assert!(out.status.success());
    assert!((json(&out.stdout)["output_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let out = wormhole(
        &[
            "teleport",
            "--state",
            "left",
            "--protocol",
            "standard",
            "--seed",
            "4",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let r = json(&out.stdout);
    assert!((r["output_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(r["measurement_bits"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["teleport", "--state", "bogus"][..],
        &["teleport"],
        &["teleport", "--theta", "1.0"],
        &["experiment", "--eps", "1.5"],
        &["experiment", "--runs", "0"],
        &["varsearch", "--n", "1"],
        &["tfd", "--energies", "0,1,2", "--beta", "1"],
        &["tfd", "--energies", "0,1", "--beta", "-1"],
        &["tfd", "--energies", "0,0", "--beta", "inf"],
    ] {
        let out = wormhole(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), b"file, not a directory").unwrap();
    let out = wormhole(
        &["teleport", "--state", "1", "--out", "blocker/r.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        [
            "experiment",
            "--eps",
            "0",
            "--seed",
            "7",
            "--runs",
            "4",
            "--out",
            o,
        ]
    };
    assert!(wormhole(&args("a"), dir.path()).status.success());
    assert!(wormhole(&args("b"), dir.path()).status.success());
    for f in [
        "experiment_runs.csv",
        "experiment_summary.csv",
        "experiment.json",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = fs::read_to_string(dir.path().join("a/experiment_runs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "state_label,run,output_fidelity,hawking_fidelity,hawking_entropy_over_ln2"
    );
    assert_eq!(lines.count(), 24);

    let summary = json(&fs::read(dir.path().join("a/experiment.json")).unwrap());
    let rows = summary["summary"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row["hawking_fidelity"]["mean"].as_f64().unwrap() >= 0.999);
    }
}

#[test]
fn experiment_fully_mixed_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(
        &[
            "experiment",
            "--eps",
            "1",
            "--runs",
            "3",
            "--out",
            "o",
            "--plot-data",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report = json(&fs::read(dir.path().join("o/experiment.json")).unwrap());
    for row in report["summary"].as_array().unwrap() {
        assert!((row["output_fidelity"]["mean"].as_f64().unwrap() - 0.5).abs() < 0.02);
    }
    let plot = fs::read_to_string(dir.path().join("o/fidelity_plot.csv")).unwrap();
    assert!(plot.starts_with("series,state_label,value,error"));
    assert_eq!(plot.lines().count(), 1 + 12);
    let manifest = json(&fs::read(dir.path().join("o/manifest.json")).unwrap());
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wormhole"))
        .args([
            "experiment",
            "--runs",
            "1",
            "--shots",
            "64",
            "--states",
            "0,plus",
        ])
        .current_dir(dir.path())
        .env("WORMHOLE_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from-env/experiment_runs.csv").exists());
}

#[test]
fn varsearch_two_pairs_three_reps() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(
        &["varsearch", "--n", "2", "--seed", "2", "--out", "v"],
        dir.path(),
    );
    assert!(out.status.success());
    let trace = json(&fs::read(dir.path().join("v/varsearch_trace.json")).unwrap());
    assert_eq!(trace["reps"], 3);
    assert!(trace["best_cost"].as_f64().unwrap() < 1e-3);
    let costs = fs::read_to_string(dir.path().join("v/varsearch_costs.csv")).unwrap();
    assert!(costs.starts_with("restart,iteration,cost\n"));
}

#[test]
fn varsearch_three_pairs_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let run = |o: &str| {
        let out = wormhole(
            &["varsearch", "--n", "3", "--seed", "5", "--out", o],
            dir.path(),
        );
        assert!(out.status.success());
        fs::read(dir.path().join(o).join("varsearch_trace.json")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let trace = json(&a);
    assert_eq!(trace["reps"], 2);
    let summary = fs::read_to_string(dir.path().join("a/varsearch_summary.csv")).unwrap();
    let good = summary
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() <= 1e-3)
        .count();
    assert!(good >= 3, "{summary}");
}

#[test]
fn tfd_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = wormhole(&["tfd", "--energies", "0,0,0,0", "--beta", "5"], dir.path());
    assert!(out.status.success());
    let dump = json(&out.stdout);
    assert!(
        (dump["a_side_entropy_nats"].as_f64().unwrap() - 2.0 * std::f64::consts::LN_2).abs()
            < 1e-10
    );

    let out = wormhole(
        &[
            "tfd",
            "--energies",
            "0,1",
            "--beta",
            "inf",
            "--out",
            "t.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let dump = json(&fs::read(dir.path().join("t.json")).unwrap());
    assert_eq!(dump["beta"], "inf");
    assert!(dump["a_side_entropy_nats"].as_f64().unwrap().abs() < 1e-12);
    let amps = dump["amplitudes"].as_array().unwrap();
    assert_eq!(amps[0][0].as_f64().unwrap(), 1.0);
}
