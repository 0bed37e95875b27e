#![allow(dead_code)]

pub mod checks;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use simcare_core::generate::{assemble_scenario, read_physicians, GeneratorParams};
use simcare_core::scenario::{from_scenario_file, load_scenario, PhysicianFile, Scenario};
use simcare_core::stochastics::{ServiceKind, Variates};
use simcare_core::time::TimePoint;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn baseline_dir() -> PathBuf {
    repo_root().join("scenarios/baseline")
}

pub fn baseline_params() -> GeneratorParams {
    let text = std::fs::read_to_string(baseline_dir().join("params.json")).expect("baseline parameters");
    serde_json::from_str(&text).expect("valid parameters")
}

pub fn load_baseline() -> Scenario {
    load_scenario(repo_root().join("scenarios/baseline.json")).expect("baseline scenario loads")
}

/// A small region: the first `physicians` baseline physicians and `patients`
/// inhabitants spread over a few cells around them, with baseline parameters.
pub fn micro_scenario(physicians: usize, patients: u32, seed: u64) -> Scenario {
    let params = baseline_params();
    let roster: Vec<PhysicianFile> = read_physicians(&baseline_dir().join("physicians.csv"), &params.strategies)
        .expect("baseline physicians")
        .into_iter()
        .take(physicians)
        .collect();
    let dir = tempfile::tempdir().expect("temp dir");
    let cells = dir.path().join("cells.csv");
    let municipalities = dir.path().join("municipalities.csv");
    let mut text = String::from("cell_id,municipality,centroid_lat,centroid_lon,cell_size_m,population\n");
    let per_cell = patients / 10;
    for k in 0..10u32 {
        let extra = if k == 0 { patients - 10 * per_cell } else { 0 };
        let p = &roster[k as usize % roster.len()].location;
        text.push_str(&format!(
            "c{k},town,{:.6},{:.6},100,{}\n",
            p.lat + 0.004 * (k as f64 - 4.5),
            p.lon + 0.003 * (k as f64 % 3.0),
            per_cell + extra
        ));
    }
    std::fs::write(&cells, text).unwrap();
    std::fs::write(&municipalities, format!("municipality,population,under_16\ntown,{patients},0\n")).unwrap();
    let file = assemble_scenario(&params, roster, &cells, &municipalities, seed, dir.path());
    from_scenario_file(&file, dir.path(), "micro").expect("micro scenario is valid")
}

/// Draws returned from fixed per-kind scripts; running out is a test bug.
#[derive(Default)]
pub struct Scripted {
    pub uniforms: VecDeque<f64>,
    pub gaps: VecDeque<f64>,
    pub families: VecDeque<usize>,
    pub seriousness: VecDeque<f64>,
    pub durations: VecDeque<f64>,
    pub willingness: VecDeque<f64>,
    pub deviations: VecDeque<f64>,
    pub walk_in_arrivals: VecDeque<(TimePoint, TimePoint, TimePoint)>,
    pub services: VecDeque<(ServiceKind, f64)>,
    pub coins: VecDeque<bool>,
}

fn next<T>(queue: &mut VecDeque<T>, what: &str) -> T {
    queue.pop_front().unwrap_or_else(|| panic!("script has no more {what}"))
}

impl Variates for Scripted {
    /// Fractions of `x`.
    fn uniform_below(&mut self, x: f64) -> f64 {
        next(&mut self.uniforms, "uniforms") * x
    }
    fn illness_gap(&mut self, _: f64) -> f64 {
        next(&mut self.gaps, "illness gaps")
    }
    fn illness_family(&mut self, _: &[f64]) -> usize {
        next(&mut self.families, "families")
    }
    fn seriousness(&mut self, _: f64) -> f64 {
        next(&mut self.seriousness, "seriousness values")
    }
    fn duration(&mut self, _: f64) -> f64 {
        next(&mut self.durations, "durations")
    }
    fn willingness(&mut self, _: f64) -> f64 {
        next(&mut self.willingness, "willingness values")
    }
    fn arrival_deviation(&mut self) -> f64 {
        next(&mut self.deviations, "arrival deviations")
    }
    /// Checks the offered interval against the script before answering.
    fn walkin_arrival(&mut self, start: TimePoint, end: TimePoint) -> TimePoint {
        let (a, b, t) = next(&mut self.walk_in_arrivals, "walk-in arrivals");
        assert!((start - a).abs() < 1e-9 && (end - b).abs() < 1e-9, "walk-in interval [{start}, {end}], expected [{a}, {b}]");
        t
    }
    fn service_time(&mut self, kind: ServiceKind) -> f64 {
        let (expected, days) = next(&mut self.services, "service times");
        assert_eq!(kind, expected);
        days
    }
    fn bernoulli(&mut self, _: f64) -> bool {
        next(&mut self.coins, "coins")
    }
}

impl Scripted {
    pub fn exhausted(&self) -> bool {
        self.uniforms.is_empty()
            && self.gaps.is_empty()
            && self.families.is_empty()
            && self.seriousness.is_empty()
            && self.durations.is_empty()
            && self.willingness.is_empty()
            && self.deviations.is_empty()
            && self.walk_in_arrivals.is_empty()
            && self.services.is_empty()
            && self.coins.is_empty()
    }
}
