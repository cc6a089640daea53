use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use ultraglab::grid::GridBox;
use ultraglab::io::save_array;
use ultraglab::nets::sampled::SampledNet;
use ultraglab::scenario::Scenario;
use ultraglab::C64;

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn ultraglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultraglab")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, scenario: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join("out");
    let mut args = extra.to_vec();
    args.extend(["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (ultraglab(&args), out)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn delta_battery_runs_clean_and_finds_the_delta_wave_front() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = run_in(dir.path(), &scenarios_dir().join("delta_battery.json"), &[]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    for file in ["report.json", "fits.csv", "spectra.csv"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let r = report(&out);
    assert!(r["failures"].as_array().unwrap().is_empty());
    let index = r["scenario"]["analyses"]
        .as_array()
        .unwrap()
        .iter()
        .position(|a| a["kind"] == "wave_front" && a["net"] == "delta")
        .expect("delta wave front analysis");
    let wf = &r["analyses"][index];
    let entries = wf["result"]["entries"].as_array().unwrap();
    let mut pairs: Vec<(f64, u64)> = entries.iter().map(|e| (e["x"][0].as_f64().unwrap(), e["bin"].as_u64().unwrap())).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(pairs, vec![(0.0, 0), (0.0, 1)]);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let scenario = scenarios_dir().join("delta_battery.json");
    let (one, eight) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (a, out_a) = run_in(one.path(), &scenario, &["--threads", "1"]);
    let (b, out_b) = run_in(eight.path(), &scenario, &["--threads", "8"]);
    assert!(a.status.success() && b.status.success());
    for file in ["report.json", "fits.csv", "spectra.csv"] {
        assert_eq!(fs::read(out_a.join(file)).unwrap(), fs::read(out_b.join(file)).unwrap(), "{file} differs");
    }
}

#[test]
fn invalid_scenario_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), r#"{ "sigma": 0.5, "box": { "lo": -1, "hi": 1, "n": 64 }, "nets": [], "analyses": [] }"#);
    let (output, _) = run_in(dir.path(), &path, &[]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("sigma"));

    let path = write_scenario(dir.path(), "{ not json");
    assert_eq!(run_in(dir.path(), &path, &[]).0.status.code(), Some(2));
}

#[test]
fn analysis_failure_exits_three_and_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        r#"{ "sigma": 2, "box": { "lo": -1, "hi": 1, "n": 256 },
             "nets": [{ "kind": "builtin", "id": "g", "name": "gaussian" }],
             "analyses": [{ "kind": "classify", "net": "g" }, { "kind": "regularity", "net": "g" }] }"#,
    );
    let (output, out) = run_in(dir.path(), &path, &[]);
    assert_eq!(output.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["failures"], serde_json::json!(["analyses/1"]));
    assert_eq!(r["analyses"][0]["ok"], true);
    assert!(String::from_utf8_lossy(&output.stderr).contains("analyses/1"));
}

#[test]
fn empty_scenario_echoes_itself() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), r#"{ "sigma": 1.5, "box": { "lo": 0, "hi": 1, "n": 32 }, "nets": [], "analyses": [] }"#);
    let (output, out) = run_in(dir.path(), &path, &[]);
    assert!(output.status.success());
    let r = report(&out);
    assert_eq!(r["scenario"]["sigma"], 1.5);
    assert!(r["nets"].as_array().unwrap().is_empty());
    assert!(r["analyses"].as_array().unwrap().is_empty());
}

#[test]
fn array_nets_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridBox::line(-1.0, 1.0, 256).unwrap();
    let eps: Vec<f64> = ultraglab::asymptotics::EpsGrid::standard().values().to_vec();
    let data = eps.iter().map(|&e| vec![C64::new(e * e, 0.0); grid.len()]).collect();
    save_array(&SampledNet::new(grid, eps, data).unwrap(), &dir.path().join("square.ugna")).unwrap();
    let path = write_scenario(
        dir.path(),
        r#"{ "sigma": 2, "box": { "lo": -1, "hi": 1, "n": 256 },
             "nets": [{ "kind": "array", "id": "a", "path": "square.ugna" }],
             "analyses": [{ "kind": "classify", "net": "a", "max_order": 0 }] }"#,
    );
    let (output, out) = run_in(dir.path(), &path, &[]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let fit = &report(&out)["analyses"][0]["result"]["per_alpha"]["0_0"];
    assert_eq!(fit["sign"], "Decay");
}

#[test]
fn builtins_are_listed_in_order() {
    let output = ultraglab(&["list-builtins"]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.split(':').next()).collect();
    assert!(names.contains(&"cauchy") && names.contains(&"paper_sec3_counterexample"));
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn shipped_scenarios_round_trip() {
    let mut count = 0;
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let scenario = Scenario::load(&path).unwrap();
            let again = Scenario::from_json(&scenario.to_json().unwrap()).unwrap();
            assert_eq!(scenario, again, "{}", path.display());
            count += 1;
        }
    }
    assert!(count >= 3);
}

#[test]
fn shipped_scenarios_run_without_failures() {
    for name in ["algebra_tour.json", "product_2d.json"] {
        let dir = tempfile::tempdir().unwrap();
        let (output, out) = run_in(dir.path(), &scenarios_dir().join(name), &[]);
        assert_eq!(output.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&output.stderr));
        assert!(report(&out)["failures"].as_array().unwrap().is_empty());
    }
}
