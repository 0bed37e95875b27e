//! Prioritized first-come first-served: appointment holders before walk-ins,
//! each class in arrival order, with faster consultations when the waiting
//! room fills up.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::time::Session;

use super::{ArrivalRecord, TreatmentStrategy, VisitMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PfcfsParams {
    /// Consultations speed up when more than this many patients wait.
    pub speed_threshold: usize,
    pub reduced_speed: f64,
}

impl Default for PfcfsParams {
    fn default() -> Self {
        PfcfsParams {
            speed_threshold: 3,
            reduced_speed: 0.8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Pfcfs {
    params: PfcfsParams,
    appointments: VecDeque<ArrivalRecord>,
    walk_ins: VecDeque<ArrivalRecord>,
    started: Option<Session>,
}

impl Pfcfs {
    pub fn new(params: PfcfsParams) -> Result<Self, String> {
        if !(params.reduced_speed > 0.0 && params.reduced_speed <= 1.0) {
            return Err("reduced_speed must lie in (0, 1]".into());
        }
        Ok(Pfcfs {
            params,
            appointments: VecDeque::new(),
            walk_ins: VecDeque::new(),
            started: None,
        })
    }

    fn take_first_eligible(queue: &mut VecDeque<ArrivalRecord>, started: Session) -> Option<ArrivalRecord> {
        let i = queue.iter().position(|r| r.session <= started)?;
        queue.remove(i)
    }

    /// Consultation speed given the number of patients left waiting.
    pub fn speed_for(&self, waiting: usize) -> f64 {
        if waiting > self.params.speed_threshold {
            self.params.reduced_speed
        } else {
            1.0
        }
    }
}

impl TreatmentStrategy for Pfcfs {
    fn enqueue(&mut self, record: ArrivalRecord) {
        match record.visit.mode {
            VisitMode::Appointment => self.appointments.push_back(record),
            VisitMode::WalkIn => self.walk_ins.push_back(record),
        }
    }

    fn session_started(&mut self, session: Session) {
        self.started = Some(self.started.map_or(session, |s| s.max(session)));
    }

    fn next_patient(&mut self) -> Option<(ArrivalRecord, f64)> {
        let started = self.started?;
        let record = Self::take_first_eligible(&mut self.appointments, started)
            .or_else(|| Self::take_first_eligible(&mut self.walk_ins, started))?;
        Some((record, self.speed_for(self.waiting_count())))
    }

    fn waiting_count(&self) -> usize {
        self.appointments.len() + self.walk_ins.len()
    }

    fn waiting(&self) -> Vec<ArrivalRecord> {
        self.appointments.iter().chain(&self.walk_ins).copied().collect()
    }
}
