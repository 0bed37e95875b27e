//! Patient decisions: whom they consider, how they rate physicians, and how
//! they arrange appointments and walk-in visits.

mod requests;

use crate::engine::{Considered, Simulation};
use crate::geo::{distance_km, travel_time};
use crate::scenario::{OpeningHours, PatientSpec, PhysicianSpec};
use crate::stochastics::Variates;
use crate::strategies::{ArrivalRecord, VisitMode};
use crate::time::{Session, WeeklySession, WEEKLY_SESSIONS};

pub use requests::{choose_walk_in, walk_in_candidates, WalkInTarget};

/// Physicians within this driving distance are always considered.
pub const CONSIDERATION_RADIUS_KM: f64 = 15.0;
/// Family physicians change once another rating exceeds theirs by this factor.
pub const SWITCH_FACTOR: f64 = 1.2;

/// Number of weekly sessions in which the physician is open and the patient available.
pub fn matching_sessions(availability: &[bool; WEEKLY_SESSIONS], hours: &OpeningHours) -> usize {
    WeeklySession::all()
        .filter(|ws| availability[ws.index()] && hours.is_open(*ws))
        .count()
}

/// Physicians the patient considers, in roster order. Distant ones are
/// drawn in with a one-in-twenty chance; the nearest is forced in if the
/// set would be empty.
pub fn consideration_set(patient: &PatientSpec, physicians: &[PhysicianSpec], rng: &mut impl Variates) -> Vec<usize> {
    let mut set = Vec::new();
    for (g, phys) in physicians.iter().enumerate() {
        let d = distance_km(patient.location, phys.location);
        if d < CONSIDERATION_RADIUS_KM || rng.uniform_below(20.0) < 1.0 {
            set.push(g);
        }
    }
    if set.is_empty() {
        let nearest = physicians
            .iter()
            .enumerate()
            .map(|(g, phys)| (g, distance_km(patient.location, phys.location)))
            .fold(None, |best: Option<(usize, f64)>, (g, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((g, d)),
            });
        set.extend(nearest.map(|(g, _)| g));
    }
    set
}

/// Initial ratings of one considered physician.
pub fn initial_ratings(
    patient: &PatientSpec,
    physician: usize,
    spec: &PhysicianSpec,
    dist_max: f64,
    rng: &mut impl Variates,
) -> Considered {
    let distance = distance_km(patient.location, spec.location);
    let matches = matching_sessions(&patient.availability, &spec.opening_hours);
    let appointment_rating = if matches > 0 {
        (3.0 * matches as f64 - distance + rng.uniform_below(2.0 * dist_max) + 100.0).max(0.0)
    } else {
        0.0
    };
    let mut walkin_ratings = [0.0; WEEKLY_SESSIONS];
    for ws in WeeklySession::all() {
        if spec.opening_hours.is_open(ws) {
            walkin_ratings[ws.index()] = (rng.uniform_below(dist_max) - distance + 100.0).max(0.0);
        }
    }
    Considered {
        physician,
        distance_km: distance,
        travel: travel_time(patient.location, spec.location).days(),
        appointment_rating,
        walkin_ratings,
    }
}

/// Highest appointment rating, ties to the earliest in roster order.
pub fn best_rated(considered: &[Considered]) -> Option<usize> {
    considered
        .iter()
        .fold(None, |best: Option<&Considered>, c| match best {
            Some(b) if b.appointment_rating >= c.appointment_rating => best,
            _ => Some(c),
        })
        .map(|c| c.physician)
}

/// The family physician after reevaluation.
pub fn reevaluated_family(considered: &[Considered], current: usize) -> usize {
    let Some(best) = best_rated(considered) else {
        return current;
    };
    let rating = |g: usize| considered.iter().find(|c| c.physician == g).map_or(0.0, |c| c.appointment_rating);
    if best != current && rating(best) > rating(current) && rating(best) >= SWITCH_FACTOR * rating(current) {
        best
    } else {
        current
    }
}

impl<V: Variates> Simulation<'_, V> {
    pub(crate) fn initialize_patients(&mut self) {
        let scenario = self.scenario;
        for (p, spec) in scenario.patients.iter().enumerate() {
            let set = consideration_set(spec, &scenario.physicians, &mut self.rng);
            let considered: Vec<Considered> = set
                .into_iter()
                .map(|g| initial_ratings(spec, g, &scenario.physicians[g], self.dist_max, &mut self.rng))
                .collect();
            let state = &mut self.patients[p];
            if spec.chronic.is_some() {
                state.family_physician = best_rated(&considered);
            }
            state.considered = considered;
        }
    }

    fn reevaluate_family(&mut self, p: usize) {
        let state = &mut self.patients[p];
        if let Some(current) = state.family_physician {
            let next = reevaluated_family(&state.considered, current);
            if next != current {
                state.family_physician = Some(next);
                self.trace(|| {
                    format!(
                        "family\tpatient={}\tphysician={}",
                        self.scenario.patients[p].id, self.scenario.physicians[next].id
                    )
                });
            }
        }
    }

    pub(crate) fn adjust_appointment_rating(&mut self, p: usize, g: usize, delta: f64) {
        if let Some(c) = self.patients[p].considered_mut(g) {
            c.appointment_rating = (c.appointment_rating + delta).max(0.0);
            self.reevaluate_family(p);
        }
    }

    pub(crate) fn adjust_walkin_rating(&mut self, p: usize, g: usize, session: Session, delta: f64) {
        let ws = session.weekly_class().index();
        if let Some(c) = self.patients[p].considered_mut(g) {
            c.walkin_ratings[ws] = (c.walkin_ratings[ws] + delta).max(0.0);
        }
    }

    /// Adjusts the rating matching how the patient came to the practice.
    pub(crate) fn adjust_visit_rating(&mut self, p: usize, g: usize, record: &ArrivalRecord, delta: f64) {
        match record.visit.mode {
            VisitMode::Appointment => self.adjust_appointment_rating(p, g, delta),
            VisitMode::WalkIn => self.adjust_walkin_rating(p, g, record.session, delta),
        }
    }
}
