use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::geo::Location;
use crate::time::{Half, WeeklySession, HOUR, WEEKLY_SESSIONS};

/// `slope * s + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub const fn new(slope: f64, intercept: f64) -> Self {
        Affine { slope, intercept }
    }

    pub const fn constant(value: f64) -> Self {
        Affine::new(0.0, value)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.slope * s + self.intercept
    }

    /// Minimum over `[0, 1]`.
    pub fn min_on_unit(&self) -> f64 {
        self.eval(0.0).min(self.eval(1.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IllnessFamily {
    pub id: String,
    pub name: Option<String>,
    pub duration: Option<Affine>,
    pub willingness: Affine,
    pub followup: Option<Affine>,
    pub chronic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgeClass {
    pub id: String,
    pub annual_illness: Affine,
    pub duration_factor: f64,
    pub willingness_factor: f64,
    pub cancel_probability: f64,
}

impl AgeClass {
    /// Age class with all factors equal to one.
    pub fn nominal(id: &str) -> Self {
        AgeClass {
            id: id.to_string(),
            annual_illness: Affine::constant(0.0),
            duration_factor: 1.0,
            willingness_factor: 1.0,
            cancel_probability: 1.0,
        }
    }
}

/// Age-adjusted expectations of an illness of a given seriousness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyExpectations {
    pub duration: Option<f64>,
    pub willingness: f64,
    pub followup: Option<f64>,
}

/// Expected duration and willingness scaled by the age factors; the follow-up
/// interval is not age-dependent.
pub fn evaluate_family(family: &IllnessFamily, seriousness: f64, age: &AgeClass) -> FamilyExpectations {
    FamilyExpectations {
        duration: family.duration.map(|d| age.duration_factor * d.eval(seriousness)),
        willingness: age.willingness_factor * family.willingness.eval(seriousness),
        followup: family.followup.map(|n| n.eval(seriousness)),
    }
}

/// Categorical distributions of illness families per age class.
///
/// `acute[a][k]` is the probability that an acute illness of a patient in age
/// class `a` belongs to family `acute_families[k]`; likewise for chronic.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IllnessDistribution {
    pub acute_families: Vec<usize>,
    pub acute: Vec<Vec<f64>>,
    pub chronic_families: Vec<usize>,
    pub chronic: Vec<Vec<f64>>,
}

/// Opening and closing time of one session as decimal time of day.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionHours {
    pub open: f64,
    pub close: f64,
}

impl SessionHours {
    pub fn length(&self) -> f64 {
        self.close - self.open
    }

    /// Session length plus the post-session buffer.
    pub fn length_with_buffer(&self) -> f64 {
        self.length() + HOUR
    }
}

/// Opening hours per weekly session class.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OpeningHours(pub [Option<SessionHours>; WEEKLY_SESSIONS]);

impl OpeningHours {
    pub fn get(&self, ws: WeeklySession) -> Option<SessionHours> {
        self.0[ws.index()]
    }

    pub fn set(&mut self, ws: WeeklySession, hours: Option<SessionHours>) {
        self.0[ws.index()] = hours;
    }

    pub fn is_open(&self, ws: WeeklySession) -> bool {
        self.get(ws).is_some()
    }

    pub fn operated(&self) -> impl Iterator<Item = (WeeklySession, SessionHours)> + '_ {
        WeeklySession::all().filter_map(|ws| self.get(ws).map(|h| (ws, h)))
    }

    /// Weekly opening hours in days, excluding buffers.
    pub fn weekly_days(&self) -> f64 {
        self.operated().map(|(_, h)| h.length()).sum()
    }

    /// Weekly capacity in days, including the post-session buffers.
    pub fn weekly_capacity(&self) -> f64 {
        self.operated().map(|(_, h)| h.length_with_buffer()).sum()
    }

    /// Builds hours that are identical on the given weekdays.
    pub fn uniform(weekdays: &[u8], morning: Option<SessionHours>, afternoon: Option<SessionHours>) -> Self {
        let mut hours = OpeningHours::default();
        for &d in weekdays {
            hours.set(WeeklySession::new(d, Half::Morning), morning);
            hours.set(WeeklySession::new(d, Half::Afternoon), afternoon);
        }
        hours
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyChoice {
    pub name: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub parameters: Map<String, Value>,
}

impl StrategyChoice {
    pub fn named(name: &str) -> Self {
        StrategyChoice {
            name: name.to_string(),
            parameters: Map::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub appointment: StrategyChoice,
    pub treatment: StrategyChoice,
    pub admission: StrategyChoice,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            appointment: StrategyChoice::named("ibfi"),
            treatment: StrategyChoice::named("pfcfs"),
            admission: StrategyChoice::named("pt"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicianSpec {
    pub id: String,
    pub location: Location,
    pub opening_hours: OpeningHours,
    pub strategies: StrategyConfig,
    pub retirement_year: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChronicIllness {
    pub family: usize,
    pub seriousness: f64,
    /// Willingness to wait for regular appointments, in days.
    pub willingness: f64,
    /// Interval between regular appointments, in days.
    pub followup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatientSpec {
    pub id: String,
    pub location: Location,
    pub health_condition: f64,
    pub age_class: usize,
    /// Availability per weekly session class.
    pub availability: [bool; WEEKLY_SESSIONS],
    pub chronic: Option<ChronicIllness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub warmup_years: f64,
    pub horizon_years: f64,
    pub runs: u32,
    pub base_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            warmup_years: 60.0,
            horizon_years: 1.0,
            runs: 20,
            base_seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaShape {
    pub alpha: f64,
    pub beta: f64,
}

/// Per-age-class population parameters, in age class order.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationParams {
    pub age_distribution: Vec<f64>,
    pub availability_probability: Vec<f64>,
    pub chronic_probability: Vec<f64>,
    pub health_condition: BetaShape,
}

/// Reference to population cell data from which patients are synthesized.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientGenerator {
    pub cells: PathBuf,
    pub municipalities: PathBuf,
    pub seed: u64,
    pub population: PopulationParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Calendar weekday of day 0, Monday = 0.
    pub epoch_weekday: u8,
    pub seed: u64,
    pub age_classes: Vec<AgeClass>,
    pub families: Vec<IllnessFamily>,
    pub distribution: IllnessDistribution,
    pub physicians: Vec<PhysicianSpec>,
    pub patients: Vec<PatientSpec>,
    pub generator: Option<PatientGenerator>,
    pub run_config: RunConfig,
}

impl Scenario {
    pub fn age_class_index(&self, id: &str) -> Option<usize> {
        self.age_classes.iter().position(|a| a.id == id)
    }

    pub fn family_index(&self, id: &str) -> Option<usize> {
        self.families.iter().position(|f| f.id == id)
    }

    pub fn physician_index(&self, id: &str) -> Option<usize> {
        self.physicians.iter().position(|p| p.id == id)
    }

    /// Annual capacity over all physicians in hours, buffers included.
    pub fn annual_capacity_hours(&self) -> f64 {
        let weeks = crate::time::DAYS_PER_YEAR / 7.0;
        self.physicians
            .iter()
            .map(|p| p.opening_hours.weekly_capacity() * 24.0 * weeks)
            .sum()
    }
}
