//! Engine checks shared by the engine tests and the acceptance suite.

use simcare_core::engine::{Event, RunOptions, Simulation};
use simcare_core::geo::Location;
use simcare_core::metrics::evaluate;
use simcare_core::scenario::{
    validate, Affine, AgeClass, IllnessDistribution, IllnessFamily, OpeningHours, PatientSpec, PhysicianSpec,
    RunConfig, Scenario, SessionHours, StrategyConfig,
};
use simcare_core::stochastics::{RngStream, ServiceKind};
use simcare_core::time::{Half, TimePoint, WeeklySession, DAYS_PER_YEAR, HOUR, MINUTE, QUARTER_HOUR};

use super::{micro_scenario, Scripted};

/// One physician open weekday mornings 08:00-12:00 and two healthy
/// neighbours who each fall ill once on Monday morning.
pub fn oracle_scenario() -> Scenario {
    let here = Location::new(50.6, 6.25);
    let morning = SessionHours {
        open: 8.0 * HOUR,
        close: 12.0 * HOUR,
    };
    let patient = |id: &str| PatientSpec {
        id: id.into(),
        location: here,
        health_condition: 0.5,
        age_class: 0,
        availability: [true; 14],
        chronic: None,
    };
    let scenario = Scenario {
        name: "oracle".into(),
        epoch_weekday: 0,
        seed: 0,
        age_classes: vec![AgeClass::nominal("adult")],
        families: vec![IllnessFamily {
            id: "J06".into(),
            name: Some("cold".into()),
            duration: Some(Affine::new(5.0, 4.0)),
            willingness: Affine::new(-2.0, 2.0),
            followup: None,
            chronic: false,
        }],
        distribution: IllnessDistribution {
            acute_families: vec![0],
            acute: vec![vec![1.0]],
            chronic_families: vec![],
            chronic: vec![],
        },
        physicians: vec![PhysicianSpec {
            id: "gp".into(),
            location: here,
            opening_hours: OpeningHours::uniform(&[0, 1, 2, 3, 4], Some(morning), None),
            strategies: StrategyConfig::default(),
            retirement_year: None,
        }],
        patients: vec![patient("a"), patient("b")],
        generator: None,
        run_config: RunConfig::default(),
    };
    validate(&scenario).expect("oracle scenario is valid");
    scenario
}

/// The script behind the hand trace. Patient a falls ill at 06:00 and is
/// willing to wait two days; patient b falls ill at 07:12 and wants care at
/// once. Neither falls ill again within the week.
pub fn oracle_script() -> Scripted {
    let t = TimePoint::new;
    Scripted {
        // Distances are all zero, so every rating draw scales zero.
        uniforms: vec![0.0; 12].into(),
        gaps: vec![0.25, 0.30, 100.0, 100.0].into(),
        families: vec![0, 0].into(),
        seriousness: vec![0.5, 0.5].into(),
        durations: vec![3.0, 2.0].into(),
        willingness: vec![2.0, 0.0].into(),
        deviations: vec![-5.0 * MINUTE].into(),
        walk_in_arrivals: vec![(t(8.0 * HOUR - QUARTER_HOUR), t(12.0 * HOUR), t(8.0 * HOUR + 5.0 * MINUTE))].into(),
        services: vec![(ServiceKind::Appointment, 20.0 * MINUTE), (ServiceKind::WalkIn, 6.0 * MINUTE)].into(),
        coins: Default::default(),
    }
}

fn kind_at(event: &Event) -> (&'static str, usize) {
    match *event {
        Event::Arrival { patient, .. }
        | Event::Illness { patient }
        | Event::Recovery { patient, .. }
        | Event::Release { patient, .. }
        | Event::FollowUp { patient, .. } => (event.kind(), patient),
        Event::Open { session, .. } | Event::Close { session, .. } => (event.kind(), session.day as usize),
    }
}

/// Hand-traced expectation: (time in days, event kind, patient or day).
pub fn oracle_trace() -> Vec<(f64, &'static str, usize)> {
    let (a, b) = (0, 1);
    let mut trace = vec![
        (0.25, "illness", a),
        (0.30, "illness", b),
        // Booked 08:00 at 06:00, arriving five minutes early.
        (8.0 * HOUR - 5.0 * MINUTE, "arrival", a),
        (8.0 * HOUR, "open", 0),
        // b's walk-in, widened to one day, targets Monday morning.
        (8.0 * HOUR + 5.0 * MINUTE, "arrival", b),
        (8.0 * HOUR + 20.0 * MINUTE, "release", a),
        (8.0 * HOUR + 26.0 * MINUTE, "release", b),
        (13.0 * HOUR, "close", 0),
        (1.0 + 8.0 * HOUR, "open", 1),
        (1.0 + 13.0 * HOUR, "close", 1),
        (2.30, "recovery", b),
        (2.0 + 8.0 * HOUR, "open", 2),
        (2.0 + 13.0 * HOUR, "close", 2),
        (3.25, "recovery", a),
    ];
    for day in [3usize, 4, 7] {
        trace.push((day as f64 + 8.0 * HOUR, "open", day));
        trace.push((day as f64 + 13.0 * HOUR, "close", day));
    }
    trace
}

/// Indicator values of the traced week, in report order.
pub fn oracle_indicators() -> Vec<(&'static str, f64)> {
    vec![
        ("treatments_per_physician", 2.0),
        ("walk_ins_per_physician", 1.0),
        ("standard_appointments_per_physician", 1.0),
        ("regular_appointments_per_physician", 0.0),
        // 26 of 300 minutes on Monday, idle the other four mornings.
        ("utilization", 100.0 * (26.0 / 300.0) / 5.0),
        ("daily_overtime", 0.0),
        ("rejected_walk_ins_per_physician", 0.0),
        ("rejected_appointments_per_physician", 0.0),
        // Earliest acceptable 06:30, booked 08:00.
        ("access_time", 0.0625),
        ("access_time_regular", 0.0),
        ("access_distance", 0.0),
        ("waiting_time_appointment", 0.0),
        // b waits from 08:05 until a leaves at 08:20.
        ("waiting_time_walk_in", 15.0),
        ("on_time_appointments", 100.0),
        ("acute_illnesses", 2.0),
        ("chronic_patients", 0.0),
        ("total_capacity", 25.0 * 52.0),
        ("walk_in_share", 50.0),
        ("contacts_per_patient", 1.0),
    ]
}

/// Replays the scripted week and compares it with the hand trace.
pub fn check_oracle() -> Result<String, String> {
    let scenario = oracle_scenario();
    let options = RunOptions::new(0.0, 7.0 / DAYS_PER_YEAR);
    let mut sim = Simulation::new(&scenario, oracle_script(), 0, &options);
    let mut seen = Vec::new();
    while let Some(done) = sim.step() {
        seen.push((done.time.days(), kind_at(&done.event)));
        sim.check_invariants()?;
    }
    let expected = oracle_trace();
    if seen.len() != expected.len() {
        return Err(format!("{} events processed, {} traced: {seen:?}", seen.len(), expected.len()));
    }
    for (k, ((t, (kind, who)), (et, ekind, ewho))) in seen.iter().zip(&expected).enumerate() {
        if (t - et).abs() > 1e-12 || kind != ekind || who != ewho {
            return Err(format!("event {k}: got ({t}, {kind}, {who}), traced ({et}, {ekind}, {ewho})"));
        }
    }
    if !sim.variates().exhausted() {
        return Err("script not fully consumed".into());
    }
    let a = sim.patient(0).considered(0).unwrap();
    let b = sim.patient(1).considered(0).unwrap();
    let monday = WeeklySession::new(0, Half::Morning).index();
    // a: 115 initial, +4 booked, +5 prompt treatment, +2 released.
    // b: failed request at zero willingness costs nothing; walk-in +3 on release.
    let ratings = [(a.appointment_rating, 126.0), (b.appointment_rating, 115.0), (b.walkin_ratings[monday], 103.0)];
    if ratings.iter().any(|(got, want)| (got - want).abs() > 1e-12) {
        return Err(format!("ratings {ratings:?}"));
    }
    let ledger = *sim.ledger();
    if (ledger.booked, ledger.attended, ledger.walk_ins_started, ledger.admissions, ledger.releases) != (1, 1, 1, 2, 2) {
        return Err(format!("ledger {ledger:?}"));
    }
    let kpis = sim.finish();
    let values = evaluate(&kpis.totals, &kpis.population);
    for ((name, want), got) in oracle_indicators().iter().zip(&values) {
        if (got - want).abs() > 1e-9 {
            return Err(format!("{name}: got {got}, traced {want}"));
        }
    }
    Ok(format!("{} events and {} indicators match", expected.len(), values.len()))
}

/// Runs a random micro-scenario for a year, checking the engine's invariants
/// after every event. Returns the number of processed events.
pub fn check_invariants_run(seed: u64) -> Result<usize, String> {
    let scenario = micro_scenario(3, 500, seed);
    let options = RunOptions::new(0.0, 1.0);
    let mut sim = Simulation::new(&scenario, RngStream::new(seed), seed, &options);
    let mut last = TimePoint::ZERO;
    let mut events = 0;
    while let Some(done) = sim.step() {
        events += 1;
        if done.time < last {
            return Err(format!("clock went back from {last} to {}", done.time));
        }
        last = done.time;
        sim.check_invariants().map_err(|e| format!("after event {events} at {}: {e}", done.time))?;
        for g in 0..scenario.physicians.len() {
            if let Some(t) = &sim.physician(g).treating {
                if t.start > done.time || t.release < done.time {
                    return Err(format!("physician {g} treatment outside [{}, {}]", t.start, t.release));
                }
            }
        }
        if let Event::Release { physician, .. } = done.event {
            // The next treatment, if any, starts at the release instant.
            if let Some(t) = &sim.physician(physician).treating {
                if t.start != done.time {
                    return Err(format!("physician {physician} overlapped treatments"));
                }
            }
        }
    }
    let kpis = sim.finish();
    if kpis.totals.treatments == 0 {
        return Err("no treatments in a year".into());
    }
    Ok(events)
}
