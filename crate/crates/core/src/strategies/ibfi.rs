//! Individual block, fixed interval scheduling: every operated session is cut
//! into equal slots holding one appointment each, and every request is
//! offered the earliest free slot within the patient's willingness to wait.

use serde::{Deserialize, Serialize};

use crate::scenario::OpeningHours;
use crate::time::{Half, Session, TimePoint, MINUTE, WEEKLY_SESSIONS};

use super::{AppointmentRequest, AppointmentStrategy, Offer, SlotRef};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IbfiParams {
    pub slot_minutes: f64,
    pub horizon_days: u32,
}

impl Default for IbfiParams {
    fn default() -> Self {
        IbfiParams {
            slot_minutes: 15.0,
            horizon_days: 140,
        }
    }
}

const MAX_SLOTS: usize = 64;

#[derive(Clone, Debug)]
pub struct Ibfi {
    hours: OpeningHours,
    slot_len: f64,
    slot_counts: [u8; WEEKLY_SESSIONS],
    horizon_days: u32,
    first_day: u32,
    /// Occupancy bitmask per session, ring-indexed by `2 * (day % horizon) + half`.
    occupied: Vec<u64>,
}

impl Ibfi {
    pub fn new(hours: OpeningHours, params: IbfiParams) -> Result<Self, String> {
        if !(params.slot_minutes > 0.0) {
            return Err("slot_minutes must be positive".into());
        }
        if params.horizon_days == 0 {
            return Err("horizon_days must be positive".into());
        }
        let slot_len = params.slot_minutes * MINUTE;
        let mut slot_counts = [0u8; WEEKLY_SESSIONS];
        for (ws, h) in hours.operated() {
            // Tolerance keeps an exact multiple of the slot length from losing its last slot.
            let n = ((h.length() + 1e-9) / slot_len).floor() as usize;
            if n > MAX_SLOTS {
                return Err(format!("{ws:?} has {n} slots; at most {MAX_SLOTS} are supported"));
            }
            slot_counts[ws.index()] = n as u8;
        }
        Ok(Ibfi {
            hours,
            slot_len,
            slot_counts,
            horizon_days: params.horizon_days,
            first_day: 0,
            occupied: vec![0; 2 * params.horizon_days as usize],
        })
    }

    fn ring(&self, session: Session) -> usize {
        2 * (session.day % self.horizon_days) as usize + session.half.index()
    }

    fn in_horizon(&self, day: u32) -> bool {
        day >= self.first_day && day - self.first_day < self.horizon_days
    }

    fn slot_count(&self, session: Session) -> usize {
        self.slot_counts[session.weekly_class().index()] as usize
    }

    fn opening(&self, session: Session) -> Option<TimePoint> {
        self.hours
            .get(session.weekly_class())
            .map(|h| TimePoint::new(session.day as f64 + h.open))
    }

    pub fn slot_time(&self, slot: SlotRef) -> TimePoint {
        let open = self.opening(slot.session).expect("slot in an operated session");
        open + slot.index as f64 * self.slot_len
    }

    pub fn booked_count(&self) -> usize {
        self.occupied.iter().map(|m| m.count_ones() as usize).sum()
    }

    pub fn is_booked(&self, slot: SlotRef) -> bool {
        self.in_horizon(slot.session.day) && self.occupied[self.ring(slot.session)] & (1 << slot.index) != 0
    }

    fn session_offer(&self, session: Session, request: &AppointmentRequest) -> Option<Offer> {
        let n = self.slot_count(session);
        if n == 0 {
            return None;
        }
        let ws = session.weekly_class();
        if request.respect_availabilities && !request.availability[ws.index()] {
            return None;
        }
        let open = self.opening(session)?;
        let mut first = if request.earliest > open {
            ((request.earliest - open) / self.slot_len).floor() as usize
        } else {
            0
        };
        if first < n && open + first as f64 * self.slot_len < request.earliest {
            first += 1;
        }
        if first >= n {
            return None;
        }
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let free = !self.occupied[self.ring(session)] & all & !((1u64 << first) - 1);
        if free == 0 {
            return None;
        }
        let slot = SlotRef {
            session,
            index: free.trailing_zeros() as u8,
        };
        Some(Offer {
            time: self.slot_time(slot),
            slot,
        })
    }
}

impl AppointmentStrategy for Ibfi {
    fn find_appointment(&self, request: &AppointmentRequest) -> Option<Offer> {
        let latest = request.latest();
        if !latest.is_finite() && !request.earliest.is_finite() {
            return None;
        }
        let first_day = request.earliest.days().max(0.0).floor() as u32;
        let first_day = first_day.max(self.first_day);
        let horizon_end = self.first_day + self.horizon_days - 1;
        let last_day = if latest.days() >= horizon_end as f64 {
            horizon_end
        } else {
            latest.day()
        };
        for day in first_day..=last_day {
            for half in Half::BOTH {
                if let Some(offer) = self.session_offer(Session::new(day, half), request) {
                    return (offer.time <= latest).then_some(offer);
                }
            }
        }
        None
    }

    fn schedule_appointment(&mut self, slot: SlotRef, _patient: usize) {
        assert!(self.in_horizon(slot.session.day), "booking outside the horizon: {slot:?}");
        assert!((slot.index as usize) < self.slot_count(slot.session), "no such slot: {slot:?}");
        let i = self.ring(slot.session);
        assert!(self.occupied[i] & (1 << slot.index) == 0, "double booking of {slot:?}");
        self.occupied[i] |= 1 << slot.index;
    }

    fn cancel_appointment(&mut self, slot: SlotRef) {
        if !self.in_horizon(slot.session.day) {
            return;
        }
        let i = self.ring(slot.session);
        assert!(self.occupied[i] & (1 << slot.index) != 0, "cancelling free slot {slot:?}");
        self.occupied[i] &= !(1 << slot.index);
    }

    fn upcoming_appointments_after(&self, session: Session, t: TimePoint) -> usize {
        if !self.in_horizon(session.day) {
            return 0;
        }
        let mask = self.occupied[self.ring(session)];
        (0..self.slot_count(session))
            .filter(|&k| mask & (1 << k) != 0)
            .filter(|&k| {
                self.slot_time(SlotRef {
                    session,
                    index: k as u8,
                }) > t
            })
            .count()
    }

    fn advance_to(&mut self, now: TimePoint) {
        let day = now.day();
        if day <= self.first_day {
            return;
        }
        if day - self.first_day >= self.horizon_days {
            self.occupied.iter_mut().for_each(|m| *m = 0);
        } else {
            for d in self.first_day..day {
                for half in Half::BOTH {
                    let i = self.ring(Session::new(d, half));
                    self.occupied[i] = 0;
                }
            }
        }
        self.first_day = day;
    }
}
