use crate::engine::{strictly_after, Booking, Considered, Event, Pursuit, Simulation};
use crate::scenario::PhysicianSpec;
use crate::stochastics::Variates;
use crate::strategies::{session_bounds, AppointmentRequest};
use crate::time::{Half, Session, TimePoint, HALF_DAY, HALF_HOUR, QUARTER_HOUR};

/// Availabilities only matter for requests less urgent than this many days.
const URGENT_WILLINGNESS: f64 = 3.0;
/// Existing appointments may exceed the willingness to wait by this much.
const GRACE: f64 = HALF_DAY;
const WALK_IN_DISCOUNT: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkInTarget {
    pub physician: usize,
    pub session: Session,
    /// Feasible arrival interval.
    pub start: TimePoint,
    pub end: TimePoint,
    pub score: f64,
    /// Willingness after any widening needed to find a session.
    pub willingness: f64,
}

/// Walk-in options for one willingness to wait, in roster then session
/// order. Only the earliest feasible occurrence of each weekly session is
/// listed: later ones share its rating and are discounted more.
pub fn walk_in_candidates(
    considered: &[Considered],
    physicians: &[PhysicianSpec],
    now: TimePoint,
    willingness: f64,
) -> Vec<WalkInTarget> {
    let mut out = Vec::new();
    for c in considered {
        let hours = &physicians[c.physician].opening_hours;
        let earliest = now + HALF_HOUR + c.travel;
        let latest = earliest + willingness;
        let first_day = earliest.day();
        let last_day = latest.day().min(first_day + 7);
        let mut seen = [false; crate::time::WEEKLY_SESSIONS];
        for day in first_day..=last_day {
            for half in Half::BOTH {
                let session = Session::new(day, half);
                let ws = session.weekly_class().index();
                let Some(h) = hours.get(session.weekly_class()) else {
                    continue;
                };
                if seen[ws] {
                    continue;
                }
                let (open, close) = session_bounds(h, session);
                let start = (open + -QUARTER_HOUR).max(earliest);
                let end = close.min(latest);
                if start > end {
                    continue;
                }
                seen[ws] = true;
                let lead = (close - earliest).max(0.0);
                out.push(WalkInTarget {
                    physician: c.physician,
                    session,
                    start,
                    end,
                    score: WALK_IN_DISCOUNT.powf(lead) * c.walkin_ratings[ws],
                    willingness,
                });
            }
        }
    }
    out
}

/// Best walk-in option, widening the willingness by a day at a time until
/// some session qualifies. Ties go to the earlier physician, then session.
pub fn choose_walk_in(considered: &[Considered], physicians: &[PhysicianSpec], now: TimePoint, willingness: f64) -> WalkInTarget {
    assert!(!considered.is_empty(), "walk-in without considered physicians");
    let mut willingness = willingness;
    loop {
        let best = walk_in_candidates(considered, physicians, now, willingness)
            .into_iter()
            .fold(None, |best: Option<WalkInTarget>, c| match best {
                Some(b) if b.score >= c.score => Some(b),
                _ => Some(c),
            });
        if let Some(target) = best {
            return target;
        }
        willingness += 1.0;
    }
}

/// The two best appointment ratings in descending order, ties to the
/// earlier physician.
fn top_two(considered: &[Considered]) -> Vec<usize> {
    let mut order: Vec<&Considered> = considered.iter().collect();
    order.sort_by(|a, b| {
        b.appointment_rating
            .total_cmp(&a.appointment_rating)
            .then(a.physician.cmp(&b.physician))
    });
    order.into_iter().take(2).map(|c| c.physician).collect()
}

impl<V: Variates> Simulation<'_, V> {
    /// Asks physician `g` for an appointment and books the offer if there
    /// is one; adjusts the appointment rating either way.
    fn book_with(&mut self, p: usize, g: usize, earliest: TimePoint, willingness: f64, regular: bool) -> Option<Booking> {
        let request = AppointmentRequest {
            patient: p,
            earliest,
            willingness,
            regular,
            respect_availabilities: willingness > URGENT_WILLINGNESS,
            availability: self.scenario.patients[p].availability,
        };
        let Some(offer) = self.physicians[g].strategies.appointment.find_appointment(&request) else {
            self.adjust_appointment_rating(p, g, -willingness);
            self.trace(|| {
                format!(
                    "request\tpatient={}\tphysician={}\tregular={regular}\tomega={willingness:.4}\tno offer",
                    self.scenario.patients[p].id, self.scenario.physicians[g].id
                )
            });
            return None;
        };
        self.physicians[g].strategies.appointment.schedule_appointment(offer.slot, p);
        let deviation = self.rng.arrival_deviation();
        let arrival = strictly_after(self.now, offer.time + deviation);
        let handle = self.schedule(
            arrival,
            Event::Arrival {
                patient: p,
                physician: g,
                session: offer.slot.session,
            },
        );
        self.ledger.booked += 1;
        self.adjust_appointment_rating(p, g, 4.0);
        self.recorder.arranged(self.now, regular, offer.time - earliest);
        self.trace(|| {
            format!(
                "request\tpatient={}\tphysician={}\tregular={regular}\tomega={willingness:.4}\tbooked={}",
                self.scenario.patients[p].id, self.scenario.physicians[g].id, offer.time
            )
        });
        Some(Booking {
            physician: g,
            time: offer.time,
            slot: offer.slot,
            arrival: handle,
        })
    }

    /// Whether an appointment already held is early enough, given the
    /// earliest visit time at each physician.
    fn holds_fitting_appointment(&self, p: usize, willingness: f64, earliest: impl Fn(usize) -> TimePoint) -> bool {
        let state = &self.patients[p];
        [state.acute_appointment, state.regular_appointment]
            .into_iter()
            .flatten()
            .any(|b| b.time <= earliest(b.physician) + willingness + GRACE)
    }

    /// Arranges an appointment for an acute need with one of the two best
    /// rated physicians.
    pub(crate) fn request_acute(&mut self, p: usize, willingness: f64) -> bool {
        if self.holds_fitting_appointment(p, willingness, |g| self.earliest_visit(p, g)) {
            return true;
        }
        self.cancel_acute_appointment(p);
        for g in top_two(&self.patients[p].considered) {
            let earliest = self.earliest_visit(p, g);
            if let Some(b) = self.book_with(p, g, earliest, willingness, false) {
                self.patients[p].acute_appointment = Some(b);
                return true;
            }
        }
        false
    }

    /// Arranges a follow-up with the physician who treated the illness.
    /// Right after treatment the search starts at the end of the follow-up
    /// interval; when a follow-up event fires it is urgent.
    pub(crate) fn request_followup(&mut self, p: usize, g: usize, interval: f64, urgent: bool) -> bool {
        let willingness = interval / 5.0 + 1.0;
        let now = self.now;
        let earliest = |sim: &Self, g: usize| if urgent { sim.earliest_visit(p, g) } else { now + interval };
        if self.holds_fitting_appointment(p, willingness, |h| earliest(self, h)) {
            return true;
        }
        self.cancel_acute_appointment(p);
        let t = earliest(self, g);
        match self.book_with(p, g, t, willingness, false) {
            Some(b) => {
                self.patients[p].acute_appointment = Some(b);
                true
            }
            None => false,
        }
    }

    /// Arranges the next regular appointment with the family physician.
    pub(crate) fn request_regular(&mut self, p: usize, urgent: bool) -> bool {
        let chronic = self.scenario.patients[p].chronic.as_ref().expect("regular care for a chronic patient");
        let family = self.patients[p].family_physician.expect("chronic patients have a family physician");
        let earliest = if urgent {
            self.earliest_visit(p, family)
        } else {
            self.now + chronic.followup
        };
        let willingness = chronic.willingness;
        let deadline = earliest + willingness + GRACE;

        if let Some(r) = self.patients[p].regular_appointment {
            if r.time <= deadline {
                return true;
            }
            self.patients[p].regular_appointment = None;
            self.cancel_booking(r);
        }
        if let Some(a) = self.patients[p].acute_appointment {
            if a.physician == family && a.time <= deadline {
                self.patients[p].regular_appointment = self.patients[p].acute_appointment.take();
                return true;
            }
        }
        let Some(b) = self.book_with(p, family, earliest, willingness, true) else {
            return false;
        };
        self.patients[p].regular_appointment = Some(b);
        if self.patients[p].acute_appointment.is_some_and(|a| b.time <= a.time + GRACE) {
            self.cancel_acute_appointment(p);
        }
        true
    }

    /// Picks a walk-in target and schedules the arrival.
    pub(crate) fn start_walk_in(&mut self, p: usize, willingness: f64, treat_chronic: bool) {
        assert!(self.patients[p].pursuit.is_none(), "patient {p} already pursues a walk-in");
        let target = choose_walk_in(&self.patients[p].considered, &self.scenario.physicians, self.now, willingness);
        let arrival = self.rng.walkin_arrival(target.start, target.end);
        let handle = self.schedule(
            strictly_after(self.now, arrival),
            Event::Arrival {
                patient: p,
                physician: target.physician,
                session: target.session,
            },
        );
        self.patients[p].pursuit = Some(Pursuit {
            physician: target.physician,
            session: target.session,
            arrival: handle,
            treat_chronic,
        });
        self.ledger.walk_ins_started += 1;
        self.trace(|| {
            format!(
                "walkin\tpatient={}\tphysician={}\tsession={}\tarrival={}",
                self.scenario.patients[p].id, self.scenario.physicians[target.physician].id, target.session, arrival
            )
        });
    }
}
