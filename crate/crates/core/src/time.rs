//! Simulation time: points and durations measured in days.
//!
//! The integer part of a [`TimePoint`] is the day, the fractional part the
//! decimal time of day. Each day has a morning and an afternoon [`Session`];
//! sessions recur weekly, giving 14 [`WeeklySession`] classes.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// One minute in days.
pub const MINUTE: f64 = 1.0 / 1440.0;
/// Fifteen minutes in days (walk-in early-arrival allowance, slot length).
pub const QUARTER_HOUR: f64 = 1.0 / 96.0;
/// Thirty minutes in days (request lead time).
pub const HALF_HOUR: f64 = 1.0 / 48.0;
/// One hour in days (post-session buffer).
pub const HOUR: f64 = 1.0 / 24.0;
/// Twelve hours in days (grace for pre-existing appointments).
pub const HALF_DAY: f64 = 0.5;
/// Days per simulated year: 52 whole weeks.
pub const DAYS_PER_YEAR: f64 = 364.0;
/// Number of weekly session classes.
pub const WEEKLY_SESSIONS: usize = 14;

/// A point in time or a duration, in days. Always finite-or-infinite and never NaN.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoint(f64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0.0);
    pub const INFINITY: TimePoint = TimePoint(f64::INFINITY);

    pub fn new(days: f64) -> Self {
        debug_assert!(!days.is_nan(), "time must not be NaN");
        TimePoint(days)
    }

    pub fn from_minutes(minutes: f64) -> Self {
        TimePoint::new(minutes * MINUTE)
    }

    pub fn from_day_and_decimal(day: u32, decimal: f64) -> Self {
        TimePoint::new(day as f64 + decimal)
    }

    pub fn days(self) -> f64 {
        self.0
    }

    pub fn minutes(self) -> f64 {
        self.0 / MINUTE
    }

    /// Splits into (day, decimal time).
    pub fn decompose(self) -> (u32, f64) {
        let day = self.0.floor();
        (day as u32, self.0 - day)
    }

    pub fn day(self) -> u32 {
        self.0.floor() as u32
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn max(self, other: TimePoint) -> TimePoint {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: TimePoint) -> TimePoint {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

impl Eq for TimePoint {}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for TimePoint {
    type Output = TimePoint;
    fn add(self, rhs: TimePoint) -> TimePoint {
        TimePoint(self.0 + rhs.0)
    }
}

impl Add<f64> for TimePoint {
    type Output = TimePoint;
    fn add(self, rhs: f64) -> TimePoint {
        TimePoint(self.0 + rhs)
    }
}

impl AddAssign<f64> for TimePoint {
    fn add_assign(&mut self, rhs: f64) {
        self.0 += rhs;
    }
}

impl Sub for TimePoint {
    type Output = f64;
    fn sub(self, rhs: TimePoint) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.0.is_finite() {
            return write!(f, "inf");
        }
        let (day, decimal) = self.decompose();
        let total = (decimal * 1440.0 * 60.0).round() as u64;
        let (h, m, s) = (total / 3600, (total / 60) % 60, total % 60);
        write!(f, "d{day} {h:02}:{m:02}:{s:02}")
    }
}

/// Morning (`γ = 0`) or afternoon (`γ = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Morning,
    Afternoon,
}

impl Half {
    pub fn index(self) -> usize {
        match self {
            Half::Morning => 0,
            Half::Afternoon => 1,
        }
    }

    pub const BOTH: [Half; 2] = [Half::Morning, Half::Afternoon];
}

/// A concrete half-day session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Session {
    pub day: u32,
    pub half: Half,
}

impl Session {
    pub fn new(day: u32, half: Half) -> Self {
        Session { day, half }
    }

    pub fn weekly_class(self) -> WeeklySession {
        weekly_class(self)
    }

    /// The session following this one (regardless of whether it is operated).
    pub fn next(self) -> Session {
        match self.half {
            Half::Morning => Session::new(self.day, Half::Afternoon),
            Half::Afternoon => Session::new(self.day + 1, Half::Morning),
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let half = match self.half {
            Half::Morning => "am",
            Half::Afternoon => "pm",
        };
        write!(f, "d{}{}", self.day, half)
    }
}

/// Weekly equivalence class of sessions: `(day mod 7, half)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeeklySession {
    pub weekday: u8,
    pub half: Half,
}

impl WeeklySession {
    pub fn new(weekday: u8, half: Half) -> Self {
        assert!(weekday < 7, "weekday out of range: {weekday}");
        WeeklySession { weekday, half }
    }

    /// Dense index in `0..14`: `2 * weekday + half`.
    pub fn index(self) -> usize {
        2 * self.weekday as usize + self.half.index()
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < WEEKLY_SESSIONS);
        let half = if index.is_multiple_of(2) { Half::Morning } else { Half::Afternoon };
        WeeklySession::new((index / 2) as u8, half)
    }

    pub fn all() -> impl Iterator<Item = WeeklySession> {
        (0..WEEKLY_SESSIONS).map(WeeklySession::from_index)
    }
}

pub fn weekly_class(session: Session) -> WeeklySession {
    WeeklySession::new((session.day % 7) as u8, session.half)
}

/// Weekday names in calendar order, Monday first.
pub const WEEKDAY_NAMES: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

pub fn weekday_from_name(name: &str) -> Option<u8> {
    let lower = name.to_ascii_lowercase();
    WEEKDAY_NAMES
        .iter()
        .position(|w| lower.starts_with(w))
        .map(|p| p as u8)
}

/// Maps a calendar weekday (0 = Monday) onto the weekly class index given the
/// calendar weekday of day 0.
pub fn class_weekday(calendar_weekday: u8, epoch_weekday: u8) -> u8 {
    (calendar_weekday + 7 - epoch_weekday) % 7
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid time of day {0:?}: expected HH:MM between 00:00 and 24:00")]
pub struct ClockParseError(pub String);

/// Parses `"HH:MM"` into decimal time.
pub fn parse_clock(text: &str) -> Result<f64, ClockParseError> {
    let err = || ClockParseError(text.to_string());
    let (h, m) = text.trim().split_once(':').ok_or_else(err)?;
    let h: u32 = h.parse().map_err(|_| err())?;
    let m: u32 = m.parse().map_err(|_| err())?;
    if m >= 60 || h > 24 || (h == 24 && m != 0) {
        return Err(err());
    }
    Ok((h * 60 + m) as f64 * MINUTE)
}

/// Formats decimal time as `"HH:MM"`, rounding to the nearest minute.
pub fn format_clock(decimal: f64) -> String {
    let minutes = (decimal * 1440.0).round() as u32;
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}
