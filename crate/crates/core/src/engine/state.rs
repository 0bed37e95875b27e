use serde::Serialize;

use crate::strategies::{ArrivalRecord, SlotRef, StrategySet, VisitDescriptor};
use crate::time::{Session, TimePoint, WEEKLY_SESSIONS};

use super::queue::EventHandle;

/// A physician in the patient's consideration set with the patient's ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct Considered {
    pub physician: usize,
    pub distance_km: f64,
    pub travel: f64,
    pub appointment_rating: f64,
    /// Zero and never consulted for sessions the physician does not operate.
    pub walkin_ratings: [f64; WEEKLY_SESSIONS],
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcuteIllness {
    pub id: u32,
    pub family: usize,
    pub seriousness: f64,
    pub duration: Option<f64>,
    pub willingness: f64,
    pub followup: Option<f64>,
    pub onset: TimePoint,
    pub recovery: Option<EventHandle>,
    pub followup_event: Option<EventHandle>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Booking {
    pub physician: usize,
    pub time: TimePoint,
    pub slot: SlotRef,
    pub arrival: EventHandle,
}

/// A scheduled walk-in arrival.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pursuit {
    pub physician: usize,
    pub session: Session,
    pub arrival: EventHandle,
    pub treat_chronic: bool,
}

/// The patient is in a waiting room or being treated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnSite {
    pub physician: usize,
    pub session: Session,
    pub visit: VisitDescriptor,
}

#[derive(Clone, Debug, Default)]
pub struct PatientState {
    pub considered: Vec<Considered>,
    pub family_physician: Option<usize>,
    pub illnesses: Vec<AcuteIllness>,
    pub next_illness: u32,
    pub emergency: bool,
    pub acute_appointment: Option<Booking>,
    pub regular_appointment: Option<Booking>,
    pub pursuit: Option<Pursuit>,
    pub onsite: Option<OnSite>,
    pub chronic_followup: Option<EventHandle>,
}

impl PatientState {
    pub fn considered(&self, physician: usize) -> Option<&Considered> {
        self.considered.iter().find(|c| c.physician == physician)
    }

    pub fn considered_mut(&mut self, physician: usize) -> Option<&mut Considered> {
        self.considered.iter_mut().find(|c| c.physician == physician)
    }

    pub fn illness_index(&self, id: u32) -> Option<usize> {
        self.illnesses.iter().position(|i| i.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Treatment {
    pub record: ArrivalRecord,
    pub start: TimePoint,
    pub release: TimePoint,
    pub speed: f64,
}

/// Bookkeeping of one concrete session until its last patient leaves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionAccount {
    pub session: Session,
    pub open: TimePoint,
    pub close: TimePoint,
    pub service: f64,
    pub pending: u32,
    pub last_release: Option<TimePoint>,
    pub closed: bool,
    /// Opened after the session's accounting had already been finalized.
    pub late: bool,
}

pub struct PhysicianState {
    pub strategies: StrategySet,
    pub treating: Option<Treatment>,
    pub accounts: Vec<SessionAccount>,
    pub last_operated_day: Option<u32>,
    pub finalized_until: Option<Session>,
    pub admitted: u64,
    pub released: u64,
}

/// Counters over the whole run used to check the engine's bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Ledger {
    pub booked: u64,
    pub attended: u64,
    pub cancelled: u64,
    pub absorbed: u64,
    pub rejected_appointments: u64,
    pub walk_ins_started: u64,
    pub walk_ins_arrived: u64,
    pub walk_ins_cancelled: u64,
    pub walk_ins_merged: u64,
    pub walk_ins_absorbed: u64,
    pub walk_ins_rejected: u64,
    pub admissions: u64,
    pub releases: u64,
}
