use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pulsesis::config::{load_scenario, ScenarioFile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pulsesis"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run_one(file: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(file).arg("--out").arg(out).args(extra).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn minimal() -> Value {
    serde_json::json!({
        "params": {
            "r": {"type": "constant", "value": 1.0},
            "d": {"type": "constant", "value": 0.5},
            "gamma": {"type": "constant", "value": 0.5},
            "beta": {"type": "constant", "value": 0.1},
            "delta1": {"type": "constant", "value": 1.0},
            "delta2": {"type": "constant", "value": 1.0},
            "K": {"type": "constant", "value": 100.0},
            "p0": {"type": "constant", "value": 0.0}
        },
        "initial": {"S": 20.0, "I": 5.0},
        "horizon": 10.0
    })
}

#[test]
fn run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_one(&scenario("seasonal_culling.json"), tmp.path(), &["--plot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "report.json", "summary.txt", "plot.svg"] {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,S,I,N,event\n"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",pre")).count(), 7);
    let r = report(tmp.path());
    assert_eq!(r["status"]["passed"], true);
    assert_eq!(r["integration"]["impulses"].as_array().unwrap().len(), 7);
    let kinds: Vec<&str> = r["files"].as_array().unwrap().iter().map(|f| f["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["trajectory", "plot", "summary", "report"]);
    assert!(fs::read_to_string(tmp.path().join("plot.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn repeated_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let file = scenario("seasonal_culling.json");
    run_one(&file, a.path(), &[]);
    run_one(&file, b.path(), &[]);
    for f in ["trajectory.csv", "report.json", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn batch_runs_get_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(scenario("endemic_stable.json"))
        .arg(scenario("impulse_extinction.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("endemic_stable/report.json").is_file());
    assert!(tmp.path().join("impulse_extinction/report.json").is_file());
}

#[test]
fn endemic_scenario_settles_on_the_stable_point() {
    let tmp = tempfile::tempdir().unwrap();
    run_one(&scenario("endemic_stable.json"), tmp.path(), &[]);
    let r = report(tmp.path());
    let endemic =
        r["analysis"]["equilibria"].as_array().unwrap().iter().find(|e| e["kind"] == "endemic").unwrap().clone();
    assert_eq!(endemic["classification"], "locally_asymptotically_stable");
    let (s, i) = (endemic["point"]["S"].as_f64().unwrap(), endemic["point"]["I"].as_f64().unwrap());
    assert!((s - 10.0).abs() < 1e-9 && (i - 15.0).abs() < 1e-9);
    let fin = &r["integration"]["final_state"];
    assert!((fin["S"].as_f64().unwrap() - 10.0).abs() < 1e-3);
    assert!((fin["I"].as_f64().unwrap() - 15.0).abs() < 1e-3);
}

#[test]
fn full_cull_leaves_an_empty_population() {
    let tmp = tempfile::tempdir().unwrap();
    run_one(&scenario("impulse_extinction.json"), tmp.path(), &[]);
    let r = report(tmp.path());
    assert_eq!(r["integration"]["final_state"]["S"], 0.0);
    assert_eq!(r["integration"]["final_state"]["I"], 0.0);
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let after: Vec<&str> =
        csv.lines().skip(1).filter(|l| l.split(',').next().unwrap().parse::<f64>().unwrap() > 3.0).collect();
    assert!(!after.is_empty());
    assert!(after.iter().all(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() == 0.0));
}

#[test]
fn periodic_capacity_is_recognised() {
    let tmp = tempfile::tempdir().unwrap();
    run_one(&scenario("periodic_capacity.json"), tmp.path(), &[]);
    let r = report(tmp.path());
    assert_eq!(r["analysis"]["periodicity"]["periodic"], true);
    assert_eq!(r["analysis"]["periodicity_period"], 2.0);
}

#[test]
fn check_selection_limits_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_one(&scenario("endemic_stable.json"), tmp.path(), &["--checks", "positivity,ultimate_boundedness"]);
    assert_eq!(out.status.code(), Some(0));
    let ids: Vec<String> = report(tmp.path())["monitors"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["check"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(ids, ["positivity", "ultimate_boundedness"]);

    let bad = run_one(&scenario("endemic_stable.json"), tmp.path(), &["--checks", "nonsense"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validation_reports_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["impulses"] =
        serde_json::json!({"T": 1.0, "events": [{"t": 1.0, "p": 0.2, "q": 0.2}, {"t": 1.5, "p": 1.5, "q": 0.2}]});
    v["params"]["d"] = serde_json::json!({"type": "constant", "value": -0.1});
    v["checks"] = serde_json::json!(["positivity", "not_a_check"]);
    let p = write_json(tmp.path(), "bad.json", &v);
    let out = bin().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for code in ["impulse-gap", "impulse-fraction", "negative-coefficient", "not_a_check"] {
        assert!(err.contains(code), "{code} not reported in {err}");
    }
    assert_eq!(run_one(&p, &tmp.path().join("out"), &[]).status.code(), Some(2));

    let good = write_json(tmp.path(), "good.json", &minimal());
    assert_eq!(bin().arg("validate").arg(&good).output().unwrap().status.code(), Some(0));
}

#[test]
fn malformed_input_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("broken.json");
    fs::write(&p, "{ \"params\": ").unwrap();
    assert_eq!(bin().arg("validate").arg(&p).output().unwrap().status.code(), Some(2));
    let missing = tmp.path().join("absent.json");
    assert_eq!(run_one(&missing, tmp.path(), &[]).status.code(), Some(2));
}

#[test]
fn integration_failure_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["tolerances"] = serde_json::json!({"max_steps": 5});
    let p = write_json(tmp.path(), "short.json", &v);
    let out = run_one(&p, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tmp.path().join("out");
    let r = report(&dir);
    assert_eq!(r["status"]["integration_failed"], true);
    assert_eq!(r["integration"]["complete"], false);
    let end = r["integration"]["end"].as_f64().unwrap();
    assert!(end > 0.0 && end < 10.0);
    let rows = fs::read_to_string(dir.join("trajectory.csv")).unwrap().lines().count();
    assert!(rows > 1);
}

#[test]
fn scenario_round_trips_through_json() {
    for name in ["seasonal_culling.json", "periodic_capacity.json", "negative_recovery.json"] {
        let l = load_scenario(&scenario(name)).unwrap();
        let text = ScenarioFile::from_loaded(&l).to_json();
        let back = ScenarioFile::from_json(&text).unwrap().resolve("unused").unwrap();
        assert_eq!(back.scenario, l.scenario, "{name}");
        assert_eq!(back.checks, l.checks);
        assert_eq!(back.name, l.name);
    }
}

#[test]
fn analyze_and_checks_subcommands() {
    let out = bin().arg("analyze").arg(scenario("endemic_stable.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["equilibria"].as_array().unwrap().len(), 2);

    let out = bin().arg("checks").output().unwrap();
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), pulsesis_core::CheckId::ALL.len());
    assert!(listed.lines().any(|l| l.starts_with("impulsive_log_contraction")));
}
