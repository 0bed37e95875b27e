//! Physician strategies: how appointments are scheduled, which waiting
//! patient is treated next, and which arrivals are admitted.

mod ibfi;
mod pfcfs;
mod pt;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::scenario::{OpeningHours, SessionHours, StrategyChoice, StrategyConfig};
use crate::time::{Session, TimePoint, WEEKLY_SESSIONS};

pub use ibfi::{Ibfi, IbfiParams};
pub use pfcfs::{Pfcfs, PfcfsParams};
pub use pt::{Pt, PtParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VisitMode {
    Appointment,
    WalkIn,
}

/// What a patient comes to the practice for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisitDescriptor {
    pub mode: VisitMode,
    /// Regular (chronic) appointment rather than an acute one.
    pub regular: bool,
    /// Appointment time; set exactly for appointment visits.
    pub scheduled: Option<TimePoint>,
    pub treat_chronic: bool,
}

impl VisitDescriptor {
    pub fn appointment(time: TimePoint, regular: bool) -> Self {
        VisitDescriptor {
            mode: VisitMode::Appointment,
            regular,
            scheduled: Some(time),
            treat_chronic: regular,
        }
    }

    pub fn walk_in(treat_chronic: bool) -> Self {
        VisitDescriptor {
            mode: VisitMode::WalkIn,
            regular: false,
            scheduled: None,
            treat_chronic,
        }
    }
}

/// An admitted patient in the waiting room.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalRecord {
    pub patient: usize,
    pub arrival: TimePoint,
    /// Session the visit belongs to.
    pub session: Session,
    pub visit: VisitDescriptor,
    pub emergency: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppointmentRequest {
    pub patient: usize,
    pub earliest: TimePoint,
    /// Willingness to wait in days.
    pub willingness: f64,
    pub regular: bool,
    pub respect_availabilities: bool,
    pub availability: [bool; WEEKLY_SESSIONS],
}

impl AppointmentRequest {
    pub fn latest(&self) -> TimePoint {
        self.earliest + self.willingness
    }
}

/// Position of an appointment in a physician's book.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SlotRef {
    pub session: Session,
    pub index: u8,
}

/// A non-binding appointment offer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Offer {
    pub time: TimePoint,
    pub slot: SlotRef,
}

pub trait AppointmentStrategy: Send {
    /// Earliest feasible appointment for the request, without reserving it.
    fn find_appointment(&self, request: &AppointmentRequest) -> Option<Offer>;
    /// Books a slot. Panics if the slot is taken.
    fn schedule_appointment(&mut self, slot: SlotRef, patient: usize);
    /// Frees a booked slot. Panics if the slot is free.
    fn cancel_appointment(&mut self, slot: SlotRef);
    /// Booked appointments in `session` scheduled strictly after `t`.
    fn upcoming_appointments_after(&self, session: Session, t: TimePoint) -> usize;
    /// Moves the booking horizon forward to the day of `now`.
    fn advance_to(&mut self, now: TimePoint);
}

pub trait TreatmentStrategy: Send {
    fn enqueue(&mut self, record: ArrivalRecord);
    /// Marks `session` as begun; its patients may now be treated.
    fn session_started(&mut self, session: Session);
    /// Removes the next patient to treat along with the consultation speed factor.
    fn next_patient(&mut self) -> Option<(ArrivalRecord, f64)>;
    fn waiting_count(&self) -> usize;
    fn waiting(&self) -> Vec<ArrivalRecord>;
}

/// State the admission decision may inspect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissionContext {
    pub now: TimePoint,
    pub mode: VisitMode,
    pub emergency: bool,
    pub open: TimePoint,
    pub close: TimePoint,
    pub waiting: usize,
    pub upcoming_appointments: usize,
}

pub trait AdmissionStrategy: Send {
    fn accept(&mut self, ctx: &AdmissionContext) -> bool;
    /// Called when a session's buffer ends.
    fn session_closed(&mut self, waiting: usize, idle: bool);
    fn expected_service_minutes(&self) -> f64;
}

pub struct StrategySet {
    pub appointment: Box<dyn AppointmentStrategy>,
    pub treatment: Box<dyn TreatmentStrategy>,
    pub admission: Box<dyn AdmissionStrategy>,
}

fn params<T: DeserializeOwned>(choice: &StrategyChoice) -> Result<T, String> {
    serde_json::from_value(Value::Object(choice.parameters.clone()))
        .map_err(|e| format!("{} parameters: {e}", choice.name))
}

fn unknown(kind: &str, name: &str) -> String {
    format!("unknown {kind} strategy {name:?}")
}

pub fn build_appointment(choice: &StrategyChoice, hours: &OpeningHours) -> Result<Box<dyn AppointmentStrategy>, String> {
    match choice.name.to_ascii_lowercase().as_str() {
        "ibfi" => Ok(Box::new(Ibfi::new(hours.clone(), params(choice)?)?)),
        _ => Err(unknown("appointment", &choice.name)),
    }
}

pub fn build_treatment(choice: &StrategyChoice) -> Result<Box<dyn TreatmentStrategy>, String> {
    match choice.name.to_ascii_lowercase().as_str() {
        "pfcfs" => Ok(Box::new(Pfcfs::new(params(choice)?)?)),
        _ => Err(unknown("treatment", &choice.name)),
    }
}

pub fn build_admission(choice: &StrategyChoice) -> Result<Box<dyn AdmissionStrategy>, String> {
    match choice.name.to_ascii_lowercase().as_str() {
        "pt" => Ok(Box::new(Pt::new(params(choice)?)?)),
        _ => Err(unknown("admission", &choice.name)),
    }
}

pub fn build(config: &StrategyConfig, hours: &OpeningHours) -> Result<StrategySet, String> {
    Ok(StrategySet {
        appointment: build_appointment(&config.appointment, hours)?,
        treatment: build_treatment(&config.treatment)?,
        admission: build_admission(&config.admission)?,
    })
}

pub fn validate_config(config: &StrategyConfig, hours: &OpeningHours) -> Result<(), String> {
    build(config, hours).map(drop)
}

/// Default parameters of every built-in strategy, for documentation output.
pub fn default_parameters() -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("ibfi".into(), serde_json::to_value(IbfiParams::default()).unwrap());
    m.insert("pfcfs".into(), serde_json::to_value(PfcfsParams::default()).unwrap());
    m.insert("pt".into(), serde_json::to_value(PtParams::default()).unwrap());
    m
}

/// Absolute opening and closing time of a concrete session.
pub fn session_bounds(hours: SessionHours, session: Session) -> (TimePoint, TimePoint) {
    let day = session.day as f64;
    (TimePoint::new(day + hours.open), TimePoint::new(day + hours.close))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn hours() -> OpeningHours {
        let h = SessionHours {
            open: 8.0 / 24.0,
            close: 12.0 / 24.0,
        };
        OpeningHours::uniform(&[0, 1, 2, 3, 4], Some(h), None)
    }

    #[test]
    fn factory_builds_defaults() {
        let set = build(&StrategyConfig::default(), &hours()).unwrap();
        assert_eq!(set.admission.expected_service_minutes(), 7.0);
        assert_eq!(set.treatment.waiting_count(), 0);
    }

    #[test]
    fn factory_rejects_unknown_names_and_parameters() {
        let mut cfg = StrategyConfig::default();
        cfg.treatment.name = "lifo".into();
        assert!(validate_config(&cfg, &hours()).unwrap_err().contains("lifo"));

        let mut cfg = StrategyConfig::default();
        cfg.admission.parameters = json!({"initial_expected_minutes": 9.0}).as_object().unwrap().clone();
        let set = build(&cfg, &hours()).unwrap();
        assert_eq!(set.admission.expected_service_minutes(), 9.0);

        cfg.admission.parameters = json!({"bogus": 1}).as_object().unwrap().clone();
        assert!(validate_config(&cfg, &hours()).is_err());
    }

    #[test]
    fn ibfi_rejects_sessions_with_too_many_slots() {
        let long = SessionHours {
            open: 0.0,
            close: 17.0 / 24.0,
        };
        let mut cfg = StrategyConfig::default();
        assert!(validate_config(&cfg, &OpeningHours::uniform(&[0], Some(long), None)).is_err());
        cfg.appointment.parameters = json!({"slot_minutes": 20.0}).as_object().unwrap().clone();
        assert!(validate_config(&cfg, &OpeningHours::uniform(&[0], Some(long), None)).is_ok());
    }
}
