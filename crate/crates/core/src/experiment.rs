//! Independent replications in parallel and their aggregation.

use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::engine::{RunOptions, Simulation};
use crate::metrics::{Report, RunKpis};
use crate::scenario::Scenario;
use crate::stochastics::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub runs: u32,
    pub base_seed: u64,
    pub options: RunOptions,
    /// Worker threads; `None` uses every logical core. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.base_seed;
        (0..self.runs as u64).map(move |i| base.wrapping_add(i))
    }
}

/// Runs every replication; the result is in seed order.
pub fn run_replications(scenario: &Scenario, config: &ExperimentConfig) -> Result<Vec<RunKpis>, rayon::ThreadPoolBuildError> {
    run_replications_traced(scenario, config, None)
}

/// Like [`run_replications`], writing the first replication's event trace to `trace`.
pub fn run_replications_traced(
    scenario: &Scenario,
    config: &ExperimentConfig,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<Vec<RunKpis>, rayon::ThreadPoolBuildError> {
    let trace = Mutex::new(trace);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let seeds: Vec<u64> = config.seeds().collect();
    Ok(pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                let out = if i == 0 { trace.lock().expect("trace lock").take() } else { None };
                match out {
                    Some(out) => run_traced(scenario, seed, &config.options, out),
                    None => crate::engine::run(scenario, seed, &config.options),
                }
            })
            .collect()
    }))
}

/// One replication that writes its event trace to `out`.
pub fn run_traced(scenario: &Scenario, seed: u64, options: &RunOptions, out: impl Write) -> RunKpis {
    let mut sim = Simulation::new(scenario, RngStream::new(seed), seed, options);
    sim.set_trace(Box::new(out));
    sim.run()
}

pub fn run_experiment(scenario: &Scenario, config: &ExperimentConfig) -> Result<Report, rayon::ThreadPoolBuildError> {
    let runs = run_replications(scenario, config)?;
    Ok(Report::from_runs(
        &scenario.name,
        config.options.warmup_years,
        config.options.horizon_years,
        &runs,
    ))
}
