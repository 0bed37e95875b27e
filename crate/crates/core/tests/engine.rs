mod common;

use proptest::prelude::*;

use common::checks::{check_invariants_run, check_oracle};
use common::micro_scenario;
use simcare_core::engine::{run, RunOptions};
use simcare_core::metrics::evaluate;

#[test]
fn scripted_week_matches_hand_trace() {
    check_oracle().unwrap();
}

#[test]
fn invariants_hold_for_a_year() {
    let events = check_invariants_run(7).unwrap();
    assert!(events >= 10_000, "only {events} events");
}

#[test]
fn same_seed_same_result() {
    let scenario = micro_scenario(2, 300, 3);
    let options = RunOptions::new(0.5, 0.5);
    let a = run(&scenario, 11, &options);
    let b = run(&scenario, 11, &options);
    assert_eq!(a, b);
    let c = run(&scenario, 12, &options);
    assert_ne!(a.totals, c.totals);
}

#[test]
fn empty_population_only_opens_and_closes() {
    let mut scenario = micro_scenario(2, 10, 1);
    scenario.patients.clear();
    scenario.generator = None;
    let kpis = run(&scenario, 1, &RunOptions::new(0.0, 1.0));
    assert_eq!(kpis.totals.treatments, 0);
    let values = evaluate(&kpis.totals, &kpis.population);
    assert!(values.iter().all(|v| v.is_finite() || v.is_nan()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]
    #[test]
    fn invariants_hold_for_any_seed(seed in 0u64..1_000_000) {
        let events = check_invariants_run(seed).map_err(TestCaseError::fail)?;
        prop_assert!(events > 0);
    }
}
