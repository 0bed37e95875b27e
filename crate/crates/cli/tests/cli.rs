use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn baseline_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/baseline")
}

fn simcare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simcare")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates a small scenario: the five Roetgen physicians and 400
/// inhabitants in a handful of cells.
fn small_scenario(dir: &Path) -> PathBuf {
    let roster = fs::read_to_string(baseline_dir().join("physicians.csv")).unwrap();
    let physicians: String = roster.lines().take(6).map(|l| format!("{l}\n")).collect();
    fs::write(dir.join("physicians.csv"), physicians).unwrap();
    let mut cells = String::from("cell_id,municipality,centroid_lat,centroid_lon,cell_size_m,population\n");
    for k in 0..8 {
        cells.push_str(&format!("c{k},Roetgen,{:.5},{:.5},100,60\n", 50.64 + 0.003 * k as f64, 6.19 + 0.002 * k as f64));
    }
    fs::write(dir.join("cells.csv"), cells).unwrap();
    fs::write(dir.join("municipalities.csv"), "municipality,population,under_16\nRoetgen,480,80\n").unwrap();
    let out = dir.join("small.json");
    let status = simcare(&[
        "generate",
        "--cells",
        path(&dir.join("cells.csv")),
        "--municipalities",
        path(&dir.join("municipalities.csv")),
        "--physicians",
        path(&dir.join("physicians.csv")),
        "--params",
        path(&baseline_dir().join("params.json")),
        "--seed",
        "9",
        "--out",
        path(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out
}

fn run_report(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--scenario",
        path(scenario),
        "--warmup-years",
        "0.2",
        "--horizon-years",
        "0.3",
        "--out",
        path(out),
    ];
    args.extend_from_slice(extra);
    simcare(&args)
}

#[test]
fn repeated_runs_write_identical_reports() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run_report(&scenario, &a, &["--runs", "3", "--threads", "1"]).status.success());
    assert!(run_report(&scenario, &b, &["--runs", "3", "--threads", "2"]).status.success());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("indicator,mean,ci_low,ci_high,unit\n"));
    assert_eq!(text.lines().count(), 20);
}

#[test]
fn single_run_has_empty_interval() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("one.csv");
    assert!(run_report(&scenario, &out, &["--runs", "1"]).status.success());
    let text = fs::read_to_string(&out).unwrap();
    let row = text.lines().find(|l| l.starts_with("treatments_per_physician,")).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert!(fields[1].parse::<f64>().unwrap() > 0.0);
    assert_eq!((fields[2], fields[3]), ("", ""));
}

#[test]
fn per_year_and_json_outputs() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("r.json");
    let trace = dir.path().join("trace.tsv");
    let done = run_report(
        &scenario,
        &out,
        &["--runs", "2", "--format", "json", "--per-year", "--trace", path(&trace)],
    );
    assert!(done.status.success(), "{}", String::from_utf8_lossy(&done.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([1, 2]));
    let per_year = fs::read_to_string(dir.path().join("r.per_year.csv")).unwrap();
    assert!(per_year.starts_with("year,indicator,value\n"));
    assert!(fs::metadata(&trace).unwrap().len() > 0);
}

#[test]
fn compare_against_itself_has_zero_deltas() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(dir.path());
    let a = dir.path().join("base.csv");
    assert!(run_report(&scenario, &a, &["--runs", "2"]).status.success());
    let b = dir.path().join("again.csv");
    fs::copy(&a, &b).unwrap();
    let c = dir.path().join("third.csv");
    assert!(run_report(&scenario, &c, &["--runs", "2", "--seed", "5"]).status.success());

    let csv = simcare(&["compare", path(&a), path(&b), path(&c), "--format", "csv"]);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let again = header.iter().position(|h| h.starts_with("again") && h.contains("delta")).expect("delta column");
    for line in text.lines().skip(1) {
        let cell = line.split(',').nth(again).unwrap();
        if !cell.is_empty() {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
    let table = simcare(&["compare", path(&a), path(&c)]);
    assert!(table.status.success());
    assert!(String::from_utf8(table.stdout).unwrap().contains("treatments_per_physician"));
}

#[test]
fn whatif_removes_retired_physicians_and_reages() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("variant.json");
    let done = simcare(&[
        "whatif",
        "--scenario",
        path(&scenario),
        "--retired-by",
        "2023",
        "--age-distribution",
        "16-24=0.1051,25-65=0.6283,65+=0.2666",
        "--name",
        "older",
        "--out",
        path(&out),
    ]);
    assert!(done.status.success(), "{}", String::from_utf8_lossy(&done.stderr));
    let variant: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let ids: Vec<&str> = variant["physicians"].as_array().unwrap().iter().map(|p| p["id"].as_str().unwrap()).collect();
    assert!(!ids.contains(&"roetgen-1"));
    assert!(ids.contains(&"roetgen-2"));
    let report = dir.path().join("variant.csv");
    assert!(run_report(&out, &report, &["--runs", "1"]).status.success());
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = simcare(&["run", "--scenario", path(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());

    fs::write(dir.path().join("bad.json"), "{\"meta\": 1}").unwrap();
    let bad = simcare(&["run", "--scenario", path(&dir.path().join("bad.json"))]);
    assert_eq!(bad.status.code(), Some(1));

    let scenario = small_scenario(dir.path());
    let zero = simcare(&["run", "--scenario", path(&scenario), "--runs", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    let unknown = simcare(&["whatif", "--scenario", path(&scenario), "--remove", "nobody", "--out", path(&dir.path().join("x.json"))]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(simcare(&["run"]).status.code(), Some(2));
    assert_eq!(simcare(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(simcare(&["compare", "only-one.csv"]).status.code(), Some(2));
    assert!(simcare(&["--help"]).status.success());
}
