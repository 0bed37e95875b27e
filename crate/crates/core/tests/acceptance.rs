//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. `ACCEPTANCE_ONLY=2,3` runs a subset.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use common::checks::{check_invariants_run, check_oracle};
use common::load_baseline;
use simcare_core::engine::RunOptions;
use simcare_core::experiment::{run_experiment, ExperimentConfig};
use simcare_core::generate::{apply_whatif, retired_by, Transform};
use simcare_core::metrics::{indicator_index, Report};
use simcare_core::scenario::{evaluate_family, Affine, AgeClass, IllnessFamily, OpeningHours, Scenario, SessionHours};
use simcare_core::stochastics::{RngStream, ServiceKind};
use simcare_core::strategies::{
    AdmissionContext, AdmissionStrategy, AppointmentRequest, AppointmentStrategy, ArrivalRecord, Ibfi, IbfiParams,
    Pfcfs, PfcfsParams, Pt, PtParams, SlotRef, TreatmentStrategy, VisitDescriptor, VisitMode,
};
use simcare_core::time::{Half, Session, TimePoint, WeeklySession, HOUR, MINUTE, WEEKLY_SESSIONS};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn baseline() -> &'static Scenario {
    static SCENARIO: OnceLock<Scenario> = OnceLock::new();
    SCENARIO.get_or_init(load_baseline)
}

fn experiment(scenario: &Scenario, runs: u32, options: RunOptions, threads: Option<usize>) -> Report {
    let config = ExperimentConfig {
        runs,
        base_seed: 1,
        options,
        threads,
    };
    run_experiment(scenario, &config).expect("thread pool")
}

const STANDARD_RUNS: u32 = 5;

fn standard_options() -> RunOptions {
    RunOptions::new(60.0, 1.0)
}

/// Baseline with warm-up 60 and horizon 1, seeds 1 to 5; shared by the
/// reproduction and directionality checks.
fn baseline_report() -> &'static Report {
    static REPORT: OnceLock<Report> = OnceLock::new();
    REPORT.get_or_init(|| experiment(baseline(), STANDARD_RUNS, standard_options(), None))
}

fn determinism() -> Outcome {
    let scenario = baseline();
    let mut options = RunOptions::new(1.0, 1.0);
    options.per_year = true;
    let a = experiment(scenario, 3, options, Some(1));
    let b = experiment(scenario, 3, options, Some(1));
    let c = experiment(scenario, 3, options, Some(3));
    for (label, other) in [("repeat", &b), ("3 threads", &c)] {
        ensure(a.to_csv() == other.to_csv(), || format!("{label}: report differs"))?;
        ensure(a.per_year_csv() == other.per_year_csv(), || format!("{label}: per-year report differs"))?;
        ensure(a.to_json() == other.to_json(), || format!("{label}: json report differs"))?;
    }
    Ok(format!("{} report bytes identical across repeats and thread counts", a.to_csv().len()))
}

fn sampler_statistics() -> Outcome {
    const N: usize = 1_000_000;
    let mean = |mut draw: Box<dyn FnMut() -> f64>| (0..N).map(|_| draw()).sum::<f64>() / N as f64;
    let mut rng = RngStream::new(2024);
    let late = (0..N).filter(|_| rng.sample_arrival_deviation() > 0.0).count() as f64 / N as f64;
    ensure((late - 0.2023).abs() <= 0.01, || format!("late fraction {late}"))?;

    let expected_duration = 5.0;
    let mut rng = RngStream::new(2025);
    let duration = mean(Box::new(move || rng.sample_duration(expected_duration).unwrap()));
    ensure((duration / expected_duration - 1.0).abs() <= 0.01, || format!("duration mean {duration}"))?;

    let expected_willingness = 2.4;
    let mut rng = RngStream::new(2026);
    let willingness = mean(Box::new(move || rng.sample_willingness(expected_willingness).unwrap()));
    ensure((willingness / expected_willingness - 1.0).abs() <= 0.01, || format!("willingness mean {willingness}"))?;

    let mut rng = RngStream::new(2027);
    let appointment = mean(Box::new(move || rng.sample_service_time(ServiceKind::Appointment))) / MINUTE;
    ensure((appointment / 8.84 - 1.0).abs() <= 0.01, || format!("appointment service mean {appointment} min"))?;

    let mut rng = RngStream::new(2028);
    let walk_in = mean(Box::new(move || rng.sample_service_time(ServiceKind::WalkIn))) / MINUTE;
    ensure((walk_in / 5.55 - 1.0).abs() <= 0.01, || format!("walk-in service mean {walk_in} min"))?;

    let mut rng = RngStream::new(2029);
    let beta = mean(Box::new(move || {
        rng.sample_walkin_arrival(TimePoint::ZERO, TimePoint::new(1.0)).unwrap().days()
    }));
    ensure((beta - 0.3963).abs() <= 0.005, || format!("walk-in arrival mean {beta}"))?;

    Ok(format!(
        "late {late:.4}, duration {duration:.4}/{expected_duration}, willingness {willingness:.4}/{expected_willingness}, \
         service {appointment:.3}/{walk_in:.3} min, arrival {beta:.4}"
    ))
}

fn worked_example() -> Outcome {
    let cold = IllnessFamily {
        id: "J00".into(),
        name: Some("common cold".into()),
        duration: Some(Affine::new(10.0, 3.0)),
        willingness: Affine::new(-3.0, 3.0),
        followup: Some(Affine::new(-2.0, 7.0)),
        chronic: false,
    };
    let e = evaluate_family(&cold, 0.2, &AgeClass::nominal("nominal"));
    let got = (e.duration.unwrap_or(f64::NAN), e.willingness, e.followup.unwrap_or(f64::NAN));
    let exact = |a: f64, b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * b;
    ensure(exact(got.0, 5.0) && exact(got.1, 2.4) && exact(got.2, 6.6), || format!("got {got:?}"))?;
    Ok(format!("({}, {}, {}) days", got.0, got.1, got.2))
}

/// Weekday mornings 08:00-12:00, Tuesday and Thursday afternoons 14:00-17:00.
fn practice_hours() -> OpeningHours {
    let am = SessionHours {
        open: 8.0 * HOUR,
        close: 12.0 * HOUR,
    };
    let pm = SessionHours {
        open: 14.0 * HOUR,
        close: 17.0 * HOUR,
    };
    let mut hours = OpeningHours::uniform(&[0, 1, 2, 3, 4], Some(am), None);
    for day in [1, 3] {
        hours.set(WeeklySession::new(day, Half::Afternoon), Some(pm));
    }
    hours
}

fn request(earliest: f64, willingness: f64) -> AppointmentRequest {
    AppointmentRequest {
        patient: 0,
        earliest: TimePoint::new(earliest),
        willingness,
        regular: false,
        respect_availabilities: false,
        availability: [true; WEEKLY_SESSIONS],
    }
}

fn appointment_book_checks() -> Result<(), String> {
    let mut book = Ibfi::new(practice_hours(), IbfiParams::default())?;
    let at = |o: Option<simcare_core::strategies::Offer>| o.map(|o| o.time.days());
    let near = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() < 1e-9);
    ensure(near(at(book.find_appointment(&request(8.0 * HOUR, 10.0))), 8.0 * HOUR), || "first slot".into())?;
    ensure(near(at(book.find_appointment(&request(8.3 * HOUR, 10.0))), 8.5 * HOUR), || "round up to slot".into())?;
    ensure(near(at(book.find_appointment(&request(12.5 * HOUR, 10.0))), 1.0 + 8.0 * HOUR), || {
        "next open session".into()
    })?;
    ensure(book.find_appointment(&request(5.0 + 9.0 * HOUR, 1.0)).is_none(), || "weekend beyond willingness".into())?;

    let monday = Session::new(0, Half::Morning);
    for index in 0..16 {
        book.schedule_appointment(SlotRef { session: monday, index }, index as usize);
    }
    ensure(book.booked_count() == 16, || "occupancy after 16 bookings".into())?;
    ensure(book.find_appointment(&request(8.0 * HOUR, 4.0 * HOUR)).is_none(), || "full session offered".into())?;
    ensure(near(at(book.find_appointment(&request(8.0 * HOUR, 2.0))), 1.0 + 8.0 * HOUR), || {
        "earliest after full session".into()
    })?;
    ensure(book.upcoming_appointments_after(monday, TimePoint::new(9.25 * HOUR)) == 10, || "upcoming count".into())?;
    book.cancel_appointment(SlotRef { session: monday, index: 3 });
    ensure(book.booked_count() == 15, || "occupancy after cancelling".into())?;
    ensure(near(at(book.find_appointment(&request(8.0 * HOUR, 1.0))), 8.75 * HOUR), || "freed slot reoffered".into())?;

    let mut r = request(8.0 * HOUR, 10.0);
    r.availability[WeeklySession::new(0, Half::Morning).index()] = false;
    r.availability[WeeklySession::new(1, Half::Morning).index()] = false;
    r.availability[WeeklySession::new(2, Half::Morning).index()] = false;
    r.respect_availabilities = true;
    let offer = book.find_appointment(&r).ok_or("no offer respecting availabilities")?;
    ensure(offer.slot.session == Session::new(1, Half::Afternoon), || format!("availability offer {offer:?}"))
}

fn waiting_room_checks() -> Result<(), String> {
    let morning = Session::new(0, Half::Morning);
    let record = |patient: usize, mode: VisitMode| ArrivalRecord {
        patient,
        arrival: TimePoint::new(0.3 + patient as f64 * MINUTE),
        session: morning,
        visit: match mode {
            VisitMode::Appointment => VisitDescriptor::appointment(TimePoint::new(0.35), false),
            VisitMode::WalkIn => VisitDescriptor::walk_in(false),
        },
        emergency: false,
    };
    let mut queue = Pfcfs::new(PfcfsParams::default())?;
    queue.enqueue(record(1, VisitMode::WalkIn));
    ensure(queue.next_patient().is_none(), || "treated before session start".into())?;
    queue.session_started(morning);
    for (p, mode) in [(2, VisitMode::Appointment), (3, VisitMode::WalkIn), (4, VisitMode::Appointment)] {
        queue.enqueue(record(p, mode));
    }
    let order: Vec<usize> = std::iter::from_fn(|| queue.next_patient().map(|(r, _)| r.patient)).collect();
    ensure(order == [2, 4, 1, 3], || format!("treatment order {order:?}"))?;

    for p in 0..5 {
        queue.enqueue(record(p, VisitMode::WalkIn));
    }
    let speeds: Vec<f64> = std::iter::from_fn(|| queue.next_patient().map(|(_, s)| s)).collect();
    ensure(speeds == [0.8, 1.0, 1.0, 1.0, 1.0], || format!("speeds {speeds:?}"))
}

fn admission_checks() -> Result<(), String> {
    let ctx = |now_hours: f64, mode: VisitMode, waiting: usize, upcoming: usize| AdmissionContext {
        now: TimePoint::new(now_hours * HOUR),
        mode,
        emergency: false,
        open: TimePoint::new(8.0 * HOUR),
        close: TimePoint::new(12.0 * HOUR),
        waiting,
        upcoming_appointments: upcoming,
    };
    let mut pt = Pt::new(PtParams::default())?;
    let forty_left = 13.0 - 40.0 / 60.0;
    ensure(!pt.accept(&ctx(forty_left, VisitMode::WalkIn, 5, 2)), || "7 * 7 = 49 >= 40 admitted".into())?;
    ensure(pt.accept(&ctx(forty_left, VisitMode::WalkIn, 3, 2)), || "7 * 5 = 35 < 40 rejected".into())?;
    ensure(pt.accept(&ctx(12.99, VisitMode::Appointment, 50, 0)), || "appointment before buffer end".into())?;
    ensure(!pt.accept(&ctx(13.5, VisitMode::Appointment, 0, 0)), || "appointment after buffer end".into())?;
    let mut emergency = ctx(20.0, VisitMode::WalkIn, 1000, 64);
    emergency.emergency = true;
    ensure(pt.accept(&emergency), || "emergency rejected".into())?;

    // A walk-in was rejected above; idle at buffer end lowers the estimate by 20 s.
    pt.session_closed(0, true);
    let lowered = pt.expected_service_minutes();
    ensure((lowered - (7.0 - 20.0 / 60.0)).abs() < 1e-12, || format!("after idle close {lowered}"))?;
    pt.session_closed(3, false);
    let raised = pt.expected_service_minutes();
    ensure((raised - (8.0 - 20.0 / 60.0)).abs() < 1e-12, || format!("after busy close {raised}"))?;
    pt.session_closed(0, true);
    let unchanged = pt.expected_service_minutes();
    ensure(unchanged == raised, || "idle close without rejection changed the estimate".into())
}

fn strategy_suite() -> Outcome {
    appointment_book_checks().map_err(|e| format!("ibfi: {e}"))?;
    waiting_room_checks().map_err(|e| format!("pfcfs: {e}"))?;
    admission_checks().map_err(|e| format!("pt: {e}"))?;
    Ok("ibfi, pfcfs and pt checks exact".into())
}

fn invariants() -> Outcome {
    let start = Instant::now();
    let events = check_invariants_run(5)?;
    ensure(events >= 10_000, || format!("only {events} events"))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("{events} events checked in {elapsed:.1} s"))
}

fn baseline_reproduction() -> Outcome {
    let scenario = baseline();
    ensure(scenario.physicians.len() == 20 && scenario.patients.len() == 29975, || {
        format!("{} physicians, {} patients", scenario.physicians.len(), scenario.patients.len())
    })?;
    let report = baseline_report();
    let treatments = report.mean("treatments_per_physician");
    let share = report.mean("walk_in_share");
    let contacts = report.mean("contacts_per_patient");
    let utilization = report.mean("utilization");
    let summary = format!(
        "treatments {treatments:.1}, walk-in share {share:.2}%, contacts {contacts:.3}, utilization {utilization:.2}%"
    );
    ensure((treatments / 10122.16 - 1.0).abs() <= 0.10, || summary.clone())?;
    ensure((share - 47.0).abs() <= 5.0, || summary.clone())?;
    ensure((contacts - 6.75).abs() <= 0.7, || summary.clone())?;
    ensure((utilization - 72.15).abs() <= 5.0, || summary.clone())?;
    Ok(summary)
}

fn directionality() -> Outcome {
    let base = baseline();
    let retired = retired_by(base, 2023);
    ensure(retired.len() == 4, || format!("{} physicians retire by 2023", retired.len()))?;
    let decline = apply_whatif(base, &[Transform::RemovePhysicians(retired)]).map_err(|e| e.to_string())?;
    let shares: BTreeMap<String, f64> =
        [("16-24", 0.1051), ("25-65", 0.6283), ("65+", 0.2666)].map(|(k, v)| (k.to_string(), v)).into();
    let aging = apply_whatif(base, &[Transform::Reage(shares)]).map_err(|e| e.to_string())?;

    let base_report = baseline_report();
    let decline_report = experiment(&decline, STANDARD_RUNS, standard_options(), None);
    let aging_report = experiment(&aging, STANDARD_RUNS, standard_options(), None);

    let mut lines = Vec::new();
    for name in ["treatments_per_physician", "walk_in_share", "access_time", "waiting_time_walk_in", "utilization"] {
        let (b, d) = (base_report.mean(name), decline_report.mean(name));
        lines.push(format!("{name} {b:.3} -> {d:.3}"));
        ensure(d > b, || format!("{name} did not increase under decline: {b} -> {d}"))?;
    }
    let b = base_report.mean("treatments_per_physician");
    let decline_gain = decline_report.mean("treatments_per_physician") - b;
    let aging_gain = aging_report.mean("treatments_per_physician") - b;
    lines.push(format!("treatment gain decline {decline_gain:.1}, aging {aging_gain:.1}"));
    ensure(aging_gain > 0.0 && aging_gain < decline_gain, || lines.join("; "))?;
    Ok(lines.join("; "))
}

fn warm_up() -> Outcome {
    let mut options = RunOptions::new(0.0, 70.0);
    options.per_year = true;
    let report = experiment(baseline(), 3, options, None);
    ensure(report.per_year.len() == 70, || format!("{} years reported", report.per_year.len()))?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for name in ["access_time", "waiting_time_walk_in"] {
        let k = indicator_index(name).expect("known indicator");
        let mean = |first: usize, last: usize| {
            (first..=last).map(|y| report.per_year[y - 1][k]).sum::<f64>() / (last - first + 1) as f64
        };
        let settled = mean(61, 70);
        let previous = mean(51, 60);
        let first = report.per_year[0][k];
        let drift = (settled - previous).abs() / settled;
        let transient = (first - settled).abs() / settled;
        lines.push(format!(
            "{name}: year 1 {first:.3}, years 51-60 {previous:.3}, years 61-70 {settled:.3} \
             (late drift {:.1}%, year-1 gap {:.1}%)",
            100.0 * drift,
            100.0 * transient
        ));
        if drift >= 0.05 {
            failures.push(format!("{name} still drifting"));
        }
        if transient <= 0.20 {
            failures.push(format!("{name} year 1 within 20% of the settled mean"));
        }
    }
    let summary = lines.join("; ");
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}: {summary}", failures.join(", ")))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "determinism", determinism),
        (2, "sampler statistics", sampler_statistics),
        (3, "worked illness example", worked_example),
        (4, "strategy suite", strategy_suite),
        (5, "engine invariants", invariants),
        (6, "micro-oracle", check_oracle),
        (7, "baseline reproduction", baseline_reproduction),
        (8, "what-if directionality", directionality),
        (9, "warm-up behavior", warm_up),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
