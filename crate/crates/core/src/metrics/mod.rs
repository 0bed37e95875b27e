//! Performance indicators: recording during a run, per-run evaluation and
//! aggregation over runs.

mod report;

use serde::{Deserialize, Serialize};

use crate::strategies::VisitMode;
use crate::time::{TimePoint, DAYS_PER_YEAR, MINUTE};

pub use report::{aggregate, compare_reports, read_csv_report, Comparison, Estimate, IndicatorSummary, Report};

/// Raw totals over an observation window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub treatments: u64,
    pub walk_ins: u64,
    pub standard_appointments: u64,
    pub regular_appointments: u64,
    pub rejected_walk_ins: u64,
    pub rejected_appointments: u64,
    pub acute_arranged: u64,
    pub acute_access_days: f64,
    pub regular_arranged: u64,
    pub regular_access_days: f64,
    pub distance_km: f64,
    pub appointment_wait_days: f64,
    pub walk_in_wait_days: f64,
    pub on_time: u64,
    pub acute_illnesses: u64,
    pub sessions: u64,
    pub utilization: f64,
    pub overtime_days: f64,
    pub operated_days: u64,
}

impl Accumulator {
    pub fn attended_appointments(&self) -> u64 {
        self.standard_appointments + self.regular_appointments
    }
}

/// Feeds events into the main window and, optionally, into one
/// accumulator per simulated year.
#[derive(Clone, Debug)]
pub struct Recorder {
    start: TimePoint,
    end: TimePoint,
    main: Accumulator,
    yearly: Option<Vec<Accumulator>>,
}

impl Recorder {
    pub fn new(start: TimePoint, end: TimePoint, per_year: bool) -> Self {
        let years = (end.days() / DAYS_PER_YEAR).ceil().max(0.0) as usize;
        Recorder {
            start,
            end,
            main: Accumulator::default(),
            yearly: per_year.then(|| vec![Accumulator::default(); years]),
        }
    }

    fn record(&mut self, t: TimePoint, f: impl Fn(&mut Accumulator)) {
        if t >= self.end {
            return;
        }
        if t >= self.start {
            f(&mut self.main);
        }
        if let Some(yearly) = &mut self.yearly {
            let year = (t.days() / DAYS_PER_YEAR).floor();
            if year >= 0.0 {
                if let Some(acc) = yearly.get_mut(year as usize) {
                    f(acc);
                }
            }
        }
    }

    pub fn acute_illness(&mut self, t: TimePoint) {
        self.record(t, |a| a.acute_illnesses += 1);
    }

    /// Counts a treatment at its start. `wait` is in days; `on_time` is set
    /// for appointment visits.
    pub fn treatment(&mut self, t: TimePoint, mode: VisitMode, regular: bool, distance_km: f64, wait: f64, on_time: Option<bool>) {
        debug_assert!(wait >= 0.0);
        self.record(t, |a| {
            a.treatments += 1;
            a.distance_km += distance_km;
            match mode {
                VisitMode::WalkIn => {
                    a.walk_ins += 1;
                    a.walk_in_wait_days += wait;
                }
                VisitMode::Appointment => {
                    if regular {
                        a.regular_appointments += 1;
                    } else {
                        a.standard_appointments += 1;
                    }
                    a.appointment_wait_days += wait;
                    if on_time == Some(true) {
                        a.on_time += 1;
                    }
                }
            }
        });
    }

    pub fn rejection(&mut self, t: TimePoint, mode: VisitMode) {
        self.record(t, |a| match mode {
            VisitMode::WalkIn => a.rejected_walk_ins += 1,
            VisitMode::Appointment => a.rejected_appointments += 1,
        });
    }

    /// An appointment was arranged at `t` with access time `access` days.
    pub fn arranged(&mut self, t: TimePoint, regular: bool, access: f64) {
        assert!(access >= -1e-9, "negative access time {access}");
        let access = access.max(0.0);
        self.record(t, |a| {
            if regular {
                a.regular_arranged += 1;
                a.regular_access_days += access;
            } else {
                a.acute_arranged += 1;
                a.acute_access_days += access;
            }
        });
    }

    /// A finished session that opened at `opened`. Durations are in days.
    pub fn session(&mut self, opened: TimePoint, capacity: f64, service: f64, overtime: f64) {
        self.record(opened, |a| {
            a.sessions += 1;
            a.utilization += service / capacity;
            a.overtime_days += overtime;
        });
    }

    /// Overtime of a session that already ended its accounting.
    pub fn late_overtime(&mut self, opened: TimePoint, overtime: f64) {
        self.record(opened, |a| a.overtime_days += overtime);
    }

    pub fn operated_day(&mut self, t: TimePoint) {
        self.record(t, |a| a.operated_days += 1);
    }

    pub fn main(&self) -> &Accumulator {
        &self.main
    }

    pub fn into_parts(self) -> (Accumulator, Vec<Accumulator>) {
        (self.main, self.yearly.unwrap_or_default())
    }
}

/// Scenario quantities needed to turn totals into indicators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub physicians: usize,
    pub patients: usize,
    pub chronic_patients: usize,
    pub capacity_hours: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Indicator {
    pub name: &'static str,
    pub unit: &'static str,
}

const fn ind(name: &'static str, unit: &'static str) -> Indicator {
    Indicator { name, unit }
}

pub const INDICATORS: [Indicator; 19] = [
    ind("treatments_per_physician", "count"),
    ind("walk_ins_per_physician", "count"),
    ind("standard_appointments_per_physician", "count"),
    ind("regular_appointments_per_physician", "count"),
    ind("utilization", "%"),
    ind("daily_overtime", "min"),
    ind("rejected_walk_ins_per_physician", "count"),
    ind("rejected_appointments_per_physician", "count"),
    ind("access_time", "d"),
    ind("access_time_regular", "d"),
    ind("access_distance", "km"),
    ind("waiting_time_appointment", "min"),
    ind("waiting_time_walk_in", "min"),
    ind("on_time_appointments", "%"),
    ind("acute_illnesses", "count"),
    ind("chronic_patients", "count"),
    ind("total_capacity", "h"),
    ind("walk_in_share", "%"),
    ind("contacts_per_patient", "count"),
];

pub fn indicator_index(name: &str) -> Option<usize> {
    INDICATORS.iter().position(|i| i.name == name)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Indicator values in [`INDICATORS`] order.
pub fn evaluate(acc: &Accumulator, population: &Population) -> Vec<f64> {
    let per_physician = |x: u64| ratio(x as f64, population.physicians as f64);
    let attended = acc.attended_appointments() as f64;
    vec![
        per_physician(acc.treatments),
        per_physician(acc.walk_ins),
        per_physician(acc.standard_appointments),
        per_physician(acc.regular_appointments),
        100.0 * ratio(acc.utilization, acc.sessions as f64),
        ratio(acc.overtime_days / MINUTE, acc.operated_days as f64),
        per_physician(acc.rejected_walk_ins),
        per_physician(acc.rejected_appointments),
        ratio(acc.acute_access_days, acc.acute_arranged as f64),
        ratio(acc.regular_access_days, acc.regular_arranged as f64),
        ratio(acc.distance_km, acc.treatments as f64),
        ratio(acc.appointment_wait_days / MINUTE, attended),
        ratio(acc.walk_in_wait_days / MINUTE, acc.walk_ins as f64),
        100.0 * ratio(acc.on_time as f64, attended),
        acc.acute_illnesses as f64,
        population.chronic_patients as f64,
        population.capacity_hours,
        100.0 * ratio(acc.walk_ins as f64, acc.treatments as f64),
        ratio(acc.treatments as f64, population.patients as f64),
    ]
}

/// Everything one run reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunKpis {
    pub seed: u64,
    pub population: Population,
    pub totals: Accumulator,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub yearly: Vec<Accumulator>,
}

impl RunKpis {
    pub fn indicators(&self) -> Vec<f64> {
        evaluate(&self.totals, &self.population)
    }

    pub fn yearly_indicators(&self) -> Vec<Vec<f64>> {
        self.yearly.iter().map(|a| evaluate(a, &self.population)).collect()
    }

    pub fn value(&self, name: &str) -> f64 {
        self.indicators()[indicator_index(name).expect("known indicator")]
    }
}
