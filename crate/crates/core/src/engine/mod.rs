//! The discrete-event core: world state, event processing and the run loop.

mod queue;
mod state;

use std::io::Write;

use crate::geo::distance_km;
use crate::metrics::{Population, Recorder, RunKpis};
use crate::scenario::{evaluate_family, Scenario, SessionHours};
use crate::stochastics::{RngStream, ServiceKind, Variates};
use crate::strategies::{self, AdmissionContext, ArrivalRecord, VisitDescriptor, VisitMode};
use crate::time::{Half, Session, TimePoint, DAYS_PER_YEAR, HALF_HOUR, HOUR, MINUTE};

pub use queue::{strictly_after, EventHandle, EventQueue};
pub use state::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FollowUpTarget {
    Acute(u32),
    Chronic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Arrival { patient: usize, physician: usize, session: Session },
    FollowUp { patient: usize, target: FollowUpTarget, physician: usize },
    Release { physician: usize, patient: usize },
    Illness { patient: usize },
    Recovery { patient: usize, illness: u32 },
    Open { physician: usize, session: Session },
    Close { physician: usize, session: Session },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Arrival { .. } => "arrival",
            Event::FollowUp { .. } => "followup",
            Event::Release { .. } => "release",
            Event::Illness { .. } => "illness",
            Event::Recovery { .. } => "recovery",
            Event::Open { .. } => "open",
            Event::Close { .. } => "close",
        }
    }

    fn drains(&self) -> bool {
        matches!(self, Event::Release { .. } | Event::Close { .. } | Event::Open { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub warmup_years: f64,
    pub horizon_years: f64,
    pub per_year: bool,
}

impl RunOptions {
    pub fn new(warmup_years: f64, horizon_years: f64) -> Self {
        RunOptions {
            warmup_years,
            horizon_years,
            per_year: false,
        }
    }
}

/// An event as it was processed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Processed {
    pub time: TimePoint,
    pub event: Event,
}

/// Largest distance from any patient to their nearest physician.
pub fn max_nearest_distance(scenario: &Scenario) -> f64 {
    scenario
        .patients
        .iter()
        .map(|p| {
            scenario
                .physicians
                .iter()
                .map(|g| distance_km(p.location, g.location))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max)
}

pub struct Simulation<'a, V: Variates> {
    pub(crate) scenario: &'a Scenario,
    pub(crate) rng: V,
    pub(crate) now: TimePoint,
    pub(crate) queue: EventQueue<Event>,
    pub(crate) patients: Vec<PatientState>,
    pub(crate) physicians: Vec<PhysicianState>,
    pub(crate) recorder: Recorder,
    pub(crate) ledger: Ledger,
    pub(crate) dist_max: f64,
    end: TimePoint,
    draining: bool,
    seed: u64,
    trace: Option<Box<dyn Write + 'a>>,
}

/// Runs one replication with the production random stream.
pub fn run(scenario: &Scenario, seed: u64, options: &RunOptions) -> RunKpis {
    Simulation::new(scenario, RngStream::new(seed), seed, options).run()
}

impl<'a, V: Variates> Simulation<'a, V> {
    /// Builds the world, initializes patient preferences and seeds the
    /// queue. The scenario must be valid.
    pub fn new(scenario: &'a Scenario, rng: V, seed: u64, options: &RunOptions) -> Self {
        let physicians = scenario
            .physicians
            .iter()
            .map(|p| PhysicianState {
                strategies: strategies::build(&p.strategies, &p.opening_hours).expect("validated strategies"),
                treating: None,
                accounts: Vec::new(),
                last_operated_day: None,
                finalized_until: None,
                admitted: 0,
                released: 0,
            })
            .collect();
        let start = TimePoint::new(options.warmup_years * DAYS_PER_YEAR);
        let end = TimePoint::new((options.warmup_years + options.horizon_years) * DAYS_PER_YEAR);
        let mut sim = Simulation {
            scenario,
            rng,
            now: TimePoint::ZERO,
            queue: EventQueue::new(),
            patients: vec![PatientState::default(); scenario.patients.len()],
            physicians,
            recorder: Recorder::new(start, end, options.per_year),
            ledger: Ledger::default(),
            dist_max: max_nearest_distance(scenario),
            end,
            draining: false,
            seed,
            trace: None,
        };
        sim.initialize_patients();
        sim.seed_events();
        sim
    }

    /// Enables the textual event trace.
    pub fn set_trace(&mut self, out: Box<dyn Write + 'a>) {
        self.trace = Some(out);
    }

    pub(crate) fn trace(&mut self, line: impl FnOnce() -> String) {
        if let Some(out) = &mut self.trace {
            writeln!(out, "{:.6}\t{}", self.now.days(), line()).expect("trace output failed");
        }
    }

    fn seed_events(&mut self) {
        let scenario = self.scenario;
        for (p, spec) in scenario.patients.iter().enumerate() {
            let rate = scenario.age_classes[spec.age_class].annual_illness.eval(spec.health_condition);
            let gap = self.rng.illness_gap(rate);
            if gap.is_finite() {
                self.queue.schedule(TimePoint::new(gap), Event::Illness { patient: p });
            }
            if let Some(chronic) = &spec.chronic {
                let at = self.rng.uniform_below(chronic.followup);
                let physician = self.patients[p].family_physician.expect("chronic patients have a family physician");
                let handle = self.queue.schedule(
                    TimePoint::new(at),
                    Event::FollowUp {
                        patient: p,
                        target: FollowUpTarget::Chronic,
                        physician,
                    },
                );
                self.patients[p].chronic_followup = Some(handle);
            }
        }
        for g in 0..scenario.physicians.len() {
            let first = self.first_session(g);
            self.schedule_open(g, first);
        }
    }

    pub(crate) fn hours(&self, physician: usize, session: Session) -> Option<SessionHours> {
        self.scenario.physicians[physician].opening_hours.get(session.weekly_class())
    }

    pub(crate) fn bounds(&self, physician: usize, session: Session) -> (TimePoint, TimePoint) {
        let h = self.hours(physician, session).expect("session is operated");
        strategies::session_bounds(h, session)
    }

    fn first_session(&self, physician: usize) -> Session {
        let s = Session::new(0, Half::Morning);
        if self.hours(physician, s).is_some() {
            s
        } else {
            self.next_session(physician, s)
        }
    }

    fn next_session(&self, physician: usize, after: Session) -> Session {
        let mut s = after.next();
        while self.hours(physician, s).is_none() {
            s = s.next();
        }
        s
    }

    fn schedule_open(&mut self, physician: usize, session: Session) {
        let (open, _) = self.bounds(physician, session);
        self.queue.schedule(open, Event::Open { physician, session });
    }

    pub(crate) fn schedule(&mut self, time: TimePoint, event: Event) -> EventHandle {
        self.queue.schedule(time, event)
    }

    pub fn now(&self) -> TimePoint {
        self.now
    }

    pub fn end(&self) -> TimePoint {
        self.end
    }

    pub fn patient(&self, p: usize) -> &PatientState {
        &self.patients[p]
    }

    pub fn physician(&self, g: usize) -> &PhysicianState {
        &self.physicians[g]
    }

    pub fn variates(&self) -> &V {
        &self.rng
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn recorder(&self) -> &Recorder {
        &self.recorder
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Processes the next due event. Past the horizon only releases and
    /// session boundaries are processed, so that admitted patients are
    /// served; everything else is discarded.
    pub fn step(&mut self) -> Option<Processed> {
        loop {
            let (time, handle, event) = self.queue.pop()?;
            if time >= self.end {
                self.draining = true;
            }
            if self.draining && !event.drains() {
                continue;
            }
            debug_assert!(time >= self.now);
            self.now = time;
            self.dispatch(handle, event);
            return Some(Processed { time, event });
        }
    }

    pub fn run(mut self) -> RunKpis {
        while self.step().is_some() {}
        self.finish()
    }

    pub fn finish(self) -> RunKpis {
        let scenario = self.scenario;
        let (totals, yearly) = self.recorder.into_parts();
        RunKpis {
            seed: self.seed,
            population: Population {
                physicians: scenario.physicians.len(),
                patients: scenario.patients.len(),
                chronic_patients: scenario.patients.iter().filter(|p| p.chronic.is_some()).count(),
                capacity_hours: scenario.annual_capacity_hours(),
            },
            totals,
            yearly,
        }
    }

    fn dispatch(&mut self, handle: EventHandle, event: Event) {
        match event {
            Event::Arrival {
                patient,
                physician,
                session,
            } => self.on_arrival(handle, patient, physician, session),
            Event::FollowUp {
                patient,
                target,
                physician,
            } => self.on_followup(patient, target, physician),
            Event::Release { physician, patient } => self.on_release(physician, patient),
            Event::Illness { patient } => self.on_illness(patient),
            Event::Recovery { patient, illness } => self.on_recovery(patient, illness),
            Event::Open { physician, session } => self.on_open(physician, session),
            Event::Close { physician, session } => self.on_close(physician, session),
        }
    }

    fn on_illness(&mut self, p: usize) {
        let scenario = self.scenario;
        let spec = &scenario.patients[p];
        let age = &scenario.age_classes[spec.age_class];
        let column = self.rng.illness_family(&scenario.distribution.acute[spec.age_class]);
        let family = scenario.distribution.acute_families[column];
        let seriousness = self.rng.seriousness(spec.health_condition);
        let expected = evaluate_family(&scenario.families[family], seriousness, age);
        let duration = expected.duration.map(|e| self.rng.duration(e));
        let willingness = self.rng.willingness(expected.willingness);

        let id = self.patients[p].next_illness;
        self.patients[p].next_illness += 1;
        let recovery = duration.map(|d| self.schedule(self.now + d, Event::Recovery { patient: p, illness: id }));
        self.patients[p].illnesses.push(AcuteIllness {
            id,
            family,
            seriousness,
            duration,
            willingness,
            followup: expected.followup,
            onset: self.now,
            recovery,
            followup_event: None,
        });
        self.recorder.acute_illness(self.now);
        self.trace(|| {
            format!(
                "illness\tpatient={}\tfamily={}\ts={seriousness:.4}\tomega={willingness:.4}",
                scenario.patients[p].id, scenario.families[family].id
            )
        });

        let patient = &self.patients[p];
        if patient.pursuit.is_none() && patient.onsite.is_none() && !self.request_acute(p, willingness) {
            self.start_walk_in(p, willingness, false);
        }

        let rate = age.annual_illness.eval(spec.health_condition);
        let gap = self.rng.illness_gap(rate);
        if gap.is_finite() {
            self.schedule(self.now + gap, Event::Illness { patient: p });
        }
    }

    fn on_recovery(&mut self, p: usize, illness: u32) {
        let Some(i) = self.patients[p].illness_index(illness) else {
            return;
        };
        let removed = self.patients[p].illnesses.remove(i);
        if let Some(h) = removed.followup_event {
            self.queue.cancel(h);
        }
        self.trace(|| format!("recovery\tpatient={}\tillness={illness}", self.scenario.patients[p].id));
        if !self.patients[p].illnesses.is_empty() {
            return;
        }
        self.patients[p].emergency = false;
        if self.patients[p].acute_appointment.is_some() {
            let age = &self.scenario.age_classes[self.scenario.patients[p].age_class];
            if self.rng.bernoulli(age.cancel_probability) {
                self.cancel_acute_appointment(p);
            }
        }
        if let Some(pursuit) = self.patients[p].pursuit {
            if !pursuit.treat_chronic {
                self.queue.cancel(pursuit.arrival);
                self.patients[p].pursuit = None;
                self.ledger.walk_ins_cancelled += 1;
            }
        }
    }

    fn on_followup(&mut self, p: usize, target: FollowUpTarget, physician: usize) {
        let willingness = match target {
            FollowUpTarget::Acute(id) => {
                let Some(i) = self.patients[p].illness_index(id) else {
                    return;
                };
                let illness = &mut self.patients[p].illnesses[i];
                illness.followup_event = None;
                illness.followup.expect("follow-up events exist for illnesses with an interval") / 5.0 + 1.0
            }
            FollowUpTarget::Chronic => {
                self.patients[p].chronic_followup = None;
                self.scenario.patients[p].chronic.as_ref().expect("chronic patient").willingness
            }
        };
        let chronic = target == FollowUpTarget::Chronic;
        let patient = &mut self.patients[p];
        if patient.pursuit.is_some() || patient.onsite.is_some() {
            if chronic {
                if let Some(pursuit) = &mut patient.pursuit {
                    pursuit.treat_chronic = true;
                }
                if let Some(onsite) = &mut patient.onsite {
                    onsite.visit.treat_chronic = true;
                }
            }
            return;
        }
        self.trace(|| format!("followup\tpatient={}\tchronic={chronic}", self.scenario.patients[p].id));
        let arranged = match target {
            FollowUpTarget::Acute(id) => {
                let i = self.patients[p].illness_index(id).expect("illness still held");
                let interval = self.patients[p].illnesses[i].followup.expect("interval");
                self.request_followup(p, physician, interval, true)
            }
            FollowUpTarget::Chronic => self.request_regular(p, true),
        };
        if !arranged {
            self.start_walk_in(p, willingness, chronic);
        }
    }

    fn account_index(&mut self, g: usize, session: Session) -> usize {
        if let Some(i) = self.physicians[g].accounts.iter().position(|a| a.session == session) {
            return i;
        }
        let (open, close) = self.bounds(g, session);
        let late = self.physicians[g].finalized_until.is_some_and(|s| session <= s);
        let accounts = &mut self.physicians[g].accounts;
        accounts.push(SessionAccount {
            session,
            open,
            close,
            service: 0.0,
            pending: 0,
            last_release: None,
            closed: late,
            late,
        });
        accounts.len() - 1
    }

    fn settle_account(&mut self, g: usize, i: usize) {
        let a = self.physicians[g].accounts[i];
        if !(a.closed && a.pending == 0) {
            return;
        }
        self.physicians[g].accounts.swap_remove(i);
        let overtime = a.last_release.map_or(0.0, |r| (r - a.close - HOUR).max(0.0));
        if a.late {
            self.recorder.late_overtime(a.open, overtime);
        } else {
            let capacity = a.close - a.open + HOUR;
            self.recorder.session(a.open, capacity, a.service, overtime);
        }
    }

    fn on_open(&mut self, g: usize, session: Session) {
        let now = self.now;
        let day = session.day;
        if self.physicians[g].last_operated_day != Some(day) {
            self.physicians[g].last_operated_day = Some(day);
            self.recorder.operated_day(now);
        }
        self.account_index(g, session);
        let s = &mut self.physicians[g].strategies;
        s.appointment.advance_to(now);
        s.treatment.session_started(session);
        self.trace(|| format!("open\tphysician={}\tsession={session}", self.scenario.physicians[g].id));
        self.try_start_treatment(g);
        let (_, close) = self.bounds(g, session);
        self.schedule(close + HOUR, Event::Close { physician: g, session });
        if !self.draining {
            let next = self.next_session(g, session);
            self.schedule_open(g, next);
        }
    }

    fn on_close(&mut self, g: usize, session: Session) {
        let waiting = self.physicians[g].strategies.treatment.waiting_count();
        let idle = self.physicians[g].treating.is_none();
        self.physicians[g].strategies.admission.session_closed(waiting, idle);
        self.physicians[g].finalized_until = Some(self.physicians[g].finalized_until.map_or(session, |s| s.max(session)));
        let i = self.account_index(g, session);
        self.physicians[g].accounts[i].closed = true;
        self.trace(|| format!("close\tphysician={}\tsession={session}\twaiting={waiting}", self.scenario.physicians[g].id));
        self.settle_account(g, i);
    }

    fn on_arrival(&mut self, handle: EventHandle, p: usize, g: usize, session: Session) {
        let patient = &mut self.patients[p];
        let (visit, booking) = if patient.acute_appointment.is_some_and(|b| b.arrival == handle) {
            let b = patient.acute_appointment.take().unwrap();
            (VisitDescriptor::appointment(b.time, false), Some(b))
        } else if patient.regular_appointment.is_some_and(|b| b.arrival == handle) {
            let b = patient.regular_appointment.take().unwrap();
            (VisitDescriptor::appointment(b.time, true), Some(b))
        } else if patient.pursuit.is_some_and(|w| w.arrival == handle) {
            let w = patient.pursuit.take().unwrap();
            (VisitDescriptor::walk_in(w.treat_chronic), None)
        } else {
            unreachable!("arrival event without a matching booking or walk-in");
        };

        if let Some(onsite) = &mut patient.onsite {
            // Already in a practice: the visit in progress covers this one.
            onsite.visit.treat_chronic |= visit.treat_chronic;
            match booking {
                Some(b) => {
                    self.physicians[b.physician].strategies.appointment.cancel_appointment(b.slot);
                    self.ledger.absorbed += 1;
                }
                None => self.ledger.walk_ins_absorbed += 1,
            }
            self.trace(|| format!("arrival\tpatient={}\tphysician={}\tabsorbed", self.scenario.patients[p].id, self.scenario.physicians[g].id));
            return;
        }

        let emergency = patient.emergency;
        let (open, close) = self.bounds(g, session);
        let phys = &mut self.physicians[g];
        let ctx = AdmissionContext {
            now: self.now,
            mode: visit.mode,
            emergency,
            open,
            close,
            waiting: phys.strategies.treatment.waiting_count(),
            upcoming_appointments: phys.strategies.appointment.upcoming_appointments_after(session, self.now.max(open)),
        };
        let admitted = phys.strategies.admission.accept(&ctx);
        match visit.mode {
            VisitMode::Appointment => {
                if admitted {
                    self.ledger.attended += 1;
                } else {
                    self.ledger.rejected_appointments += 1;
                }
            }
            VisitMode::WalkIn => {
                self.ledger.walk_ins_arrived += 1;
                if !admitted {
                    self.ledger.walk_ins_rejected += 1;
                }
            }
        }
        self.trace(|| {
            format!(
                "arrival\tpatient={}\tphysician={}\tmode={:?}\t{}",
                self.scenario.patients[p].id,
                self.scenario.physicians[g].id,
                visit.mode,
                if admitted { "admitted" } else { "rejected" }
            )
        });

        if admitted {
            let record = ArrivalRecord {
                patient: p,
                arrival: self.now,
                session,
                visit,
                emergency,
            };
            let phys = &mut self.physicians[g];
            phys.strategies.treatment.enqueue(record);
            phys.admitted += 1;
            self.ledger.admissions += 1;
            self.patients[p].onsite = Some(OnSite {
                physician: g,
                session,
                visit,
            });
            let i = self.account_index(g, session);
            self.physicians[g].accounts[i].pending += 1;
            self.try_start_treatment(g);
        } else {
            self.recorder.rejection(self.now, visit.mode);
            match visit.mode {
                VisitMode::Appointment => self.adjust_appointment_rating(p, g, -20.0),
                VisitMode::WalkIn => self.adjust_walkin_rating(p, g, session, -10.0),
            }
            self.patients[p].emergency = true;
            match &mut self.patients[p].pursuit {
                Some(pursuit) => pursuit.treat_chronic |= visit.treat_chronic,
                None => self.start_walk_in(p, 0.0, visit.treat_chronic),
            }
        }
    }

    pub(crate) fn try_start_treatment(&mut self, g: usize) {
        if self.physicians[g].treating.is_some() {
            return;
        }
        let Some((mut record, speed)) = self.physicians[g].strategies.treatment.next_patient() else {
            return;
        };
        let p = record.patient;
        let kind = match record.visit.mode {
            VisitMode::Appointment => ServiceKind::Appointment,
            VisitMode::WalkIn => ServiceKind::WalkIn,
        };
        let service = self.rng.service_time(kind) * speed;
        let release = self.now + service;
        self.schedule(release, Event::Release { physician: g, patient: p });

        if let Some(pursuit) = self.patients[p].pursuit.take() {
            // A pending walk-in is superseded by the treatment.
            self.queue.cancel(pursuit.arrival);
            record.visit.treat_chronic |= pursuit.treat_chronic;
            self.ledger.walk_ins_merged += 1;
        }
        let onsite = self.patients[p].onsite.as_mut().expect("treated patients are on site");
        onsite.visit.treat_chronic |= record.visit.treat_chronic;
        record.visit = onsite.visit;

        self.physicians[g].treating = Some(Treatment {
            record,
            start: self.now,
            release,
            speed,
        });
        let i = self.account_index(g, record.session);
        self.physicians[g].accounts[i].service += service;

        let wait = match record.visit.scheduled {
            Some(t_b) => (self.now - record.arrival.max(t_b)).max(0.0),
            None => self.now - record.arrival,
        };
        if wait < 7.0 * MINUTE {
            self.adjust_visit_rating(p, g, &record, 5.0);
        } else if wait > 30.0 * MINUTE {
            self.adjust_visit_rating(p, g, &record, -10.0);
        }
        let distance = self.patients[p].considered(g).map_or(0.0, |c| c.distance_km);
        let on_time = record.visit.scheduled.map(|t_b| record.arrival <= t_b);
        self.recorder
            .treatment(self.now, record.visit.mode, record.visit.regular, distance, wait, on_time);
        self.trace(|| {
            format!(
                "treat\tpatient={}\tphysician={}\twait_min={:.3}\tservice_min={:.3}",
                self.scenario.patients[p].id,
                self.scenario.physicians[g].id,
                wait / MINUTE,
                service / MINUTE
            )
        });
    }

    fn on_release(&mut self, g: usize, p: usize) {
        let treatment = self.physicians[g].treating.take().expect("release of a patient in treatment");
        debug_assert_eq!(treatment.record.patient, p);
        self.physicians[g].released += 1;
        self.ledger.releases += 1;
        let i = self.account_index(g, treatment.record.session);
        let account = &mut self.physicians[g].accounts[i];
        account.pending -= 1;
        account.last_release = Some(self.now);
        self.settle_account(g, i);

        let visit = self.patients[p].onsite.take().expect("released patients were on site").visit;
        let gain = match visit.mode {
            VisitMode::Appointment => 2.0 * treatment.speed,
            VisitMode::WalkIn => 3.0 * treatment.speed,
        };
        self.adjust_visit_rating(p, g, &treatment.record, gain);

        // Every acute illness is treated; one-time treatments cure.
        let now = self.now;
        let mut illnesses = std::mem::take(&mut self.patients[p].illnesses);
        for illness in &mut illnesses {
            if let Some(h) = illness.followup_event.take() {
                self.queue.cancel(h);
            }
        }
        illnesses.retain(|i| i.duration.is_some());
        for illness in &mut illnesses {
            if let Some(nu) = illness.followup {
                illness.followup_event = Some(self.queue.schedule(
                    now + nu,
                    Event::FollowUp {
                        patient: p,
                        target: FollowUpTarget::Acute(illness.id),
                        physician: g,
                    },
                ));
            }
        }
        let next_followup = illnesses
            .iter()
            .filter_map(|i| i.followup)
            .fold(None, |best: Option<f64>, nu| Some(best.map_or(nu, |b| b.min(nu))));
        self.patients[p].illnesses = illnesses;

        let chronic = self.scenario.patients[p].chronic.as_ref();
        let treat_chronic = visit.treat_chronic && chronic.is_some();
        if treat_chronic {
            if let Some(h) = self.patients[p].chronic_followup.take() {
                self.queue.cancel(h);
            }
            let interval = chronic.unwrap().followup;
            let family = self.patients[p].family_physician.expect("chronic patients have a family physician");
            self.patients[p].chronic_followup = Some(self.queue.schedule(
                now + interval,
                Event::FollowUp {
                    patient: p,
                    target: FollowUpTarget::Chronic,
                    physician: family,
                },
            ));
        }
        self.patients[p].emergency = false;
        self.trace(|| format!("release\tpatient={}\tphysician={}", self.scenario.patients[p].id, self.scenario.physicians[g].id));
        if treat_chronic {
            self.request_regular(p, false);
        }
        if let Some(nu) = next_followup {
            self.request_followup(p, g, nu, false);
        }
        self.try_start_treatment(g);
    }

    /// Cancels the acute appointment, if any, with its arrival event.
    pub(crate) fn cancel_acute_appointment(&mut self, p: usize) {
        if let Some(b) = self.patients[p].acute_appointment.take() {
            self.cancel_booking(b);
        }
    }

    pub(crate) fn cancel_booking(&mut self, b: Booking) {
        self.queue.cancel(b.arrival);
        self.physicians[b.physician].strategies.appointment.cancel_appointment(b.slot);
        self.ledger.cancelled += 1;
    }

    /// Earliest time patient `p` can be at physician `g`.
    pub(crate) fn earliest_visit(&self, p: usize, g: usize) -> TimePoint {
        let travel = self.patients[p].considered(g).map_or(0.0, |c| c.travel);
        self.now + HALF_HOUR + travel
    }

    /// Checks structural invariants of the current state.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (g, phys) in self.physicians.iter().enumerate() {
            let waiting = phys.strategies.treatment.waiting_count() as u64;
            let treating = phys.treating.is_some() as u64;
            if phys.admitted != phys.released + treating + waiting {
                return Err(format!(
                    "physician {g}: admitted {} != released {} + treating {treating} + waiting {waiting}",
                    phys.admitted, phys.released
                ));
            }
            if let Some(t) = &phys.treating {
                if t.release < self.now {
                    return Err(format!("physician {g}: treatment overdue"));
                }
            }
        }
        let mut outstanding = 0u64;
        let mut pursuits = 0u64;
        for (p, patient) in self.patients.iter().enumerate() {
            for c in &patient.considered {
                if c.appointment_rating < 0.0 || c.walkin_ratings.iter().any(|r| *r < 0.0) {
                    return Err(format!("patient {p}: negative rating"));
                }
            }
            if patient.regular_appointment.is_some() && self.scenario.patients[p].chronic.is_none() {
                return Err(format!("patient {p}: regular appointment without chronic illness"));
            }
            // Arrivals are discarded while draining, so only check liveness before the end.
            if self.now < self.end {
                for b in [patient.acute_appointment, patient.regular_appointment].into_iter().flatten() {
                    if !self.queue.is_live(b.arrival) {
                        return Err(format!("patient {p}: appointment without a pending arrival"));
                    }
                }
                if patient.pursuit.is_some_and(|w| !self.queue.is_live(w.arrival)) {
                    return Err(format!("patient {p}: walk-in without a pending arrival"));
                }
            }
            outstanding += patient.acute_appointment.is_some() as u64 + patient.regular_appointment.is_some() as u64;
            pursuits += patient.pursuit.is_some() as u64;
            if let Some(o) = &patient.onsite {
                let phys = &self.physicians[o.physician];
                let in_treatment = phys.treating.is_some_and(|t| t.record.patient == p);
                if !in_treatment && !phys.strategies.treatment.waiting().iter().any(|r| r.patient == p) {
                    return Err(format!("patient {p}: on site but neither waiting nor treated"));
                }
            }
        }
        let l = &self.ledger;
        if l.booked != l.attended + l.cancelled + l.absorbed + l.rejected_appointments + outstanding {
            return Err(format!("appointment ledger unbalanced: {l:?}, outstanding {outstanding}"));
        }
        if l.walk_ins_started != l.walk_ins_arrived + l.walk_ins_cancelled + l.walk_ins_merged + l.walk_ins_absorbed + pursuits {
            return Err(format!("walk-in ledger unbalanced: {l:?}, pending {pursuits}"));
        }
        Ok(())
    }
}
