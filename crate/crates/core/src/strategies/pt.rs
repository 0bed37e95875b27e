//! Production threshold admission: walk-ins are admitted while the estimated
//! workload fits into the rest of the session, with the estimate adapted at
//! the end of every session.

use serde::{Deserialize, Serialize};

use crate::time::{HOUR, MINUTE};

use super::{AdmissionContext, AdmissionStrategy, VisitMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PtParams {
    pub initial_expected_minutes: f64,
    /// Added when at least `busy_threshold` patients still wait at buffer end.
    pub increase_minutes: f64,
    pub busy_threshold: usize,
    /// Subtracted when idle at buffer end after rejecting a walk-in.
    pub decrease_seconds: f64,
    pub min_expected_seconds: f64,
}

impl Default for PtParams {
    fn default() -> Self {
        PtParams {
            initial_expected_minutes: 7.0,
            increase_minutes: 1.0,
            busy_threshold: 3,
            decrease_seconds: 20.0,
            min_expected_seconds: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Pt {
    params: PtParams,
    expected_minutes: f64,
    rejected_walk_in: bool,
}

impl Pt {
    pub fn new(params: PtParams) -> Result<Self, String> {
        if !(params.initial_expected_minutes > 0.0) {
            return Err("initial_expected_minutes must be positive".into());
        }
        if params.increase_minutes < 0.0 || params.decrease_seconds < 0.0 || !(params.min_expected_seconds > 0.0) {
            return Err("adaptation steps must be non-negative and the floor positive".into());
        }
        Ok(Pt {
            expected_minutes: params.initial_expected_minutes,
            params,
            rejected_walk_in: false,
        })
    }

    pub fn rejected_walk_in(&self) -> bool {
        self.rejected_walk_in
    }
}

impl AdmissionStrategy for Pt {
    fn accept(&mut self, ctx: &AdmissionContext) -> bool {
        if ctx.emergency {
            return true;
        }
        let buffer_end = ctx.close + HOUR;
        match ctx.mode {
            VisitMode::Appointment => ctx.now <= buffer_end,
            VisitMode::WalkIn => {
                let from = ctx.now.max(ctx.open);
                let workload = self.expected_minutes * MINUTE * (ctx.waiting + ctx.upcoming_appointments) as f64;
                let admit = workload < buffer_end - from;
                if !admit {
                    self.rejected_walk_in = true;
                }
                admit
            }
        }
    }

    fn session_closed(&mut self, waiting: usize, idle: bool) {
        if waiting >= self.params.busy_threshold {
            self.expected_minutes += self.params.increase_minutes;
        }
        if idle && self.rejected_walk_in {
            self.expected_minutes -= self.params.decrease_seconds / 60.0;
        }
        self.expected_minutes = self.expected_minutes.max(self.params.min_expected_seconds / 60.0);
        self.rejected_walk_in = false;
    }

    fn expected_service_minutes(&self) -> f64 {
        self.expected_minutes
    }
}
