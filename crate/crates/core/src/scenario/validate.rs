use std::collections::HashSet;
use std::fmt;

use crate::time::{WeeklySession, HOUR, WEEKLY_SESSIONS};

use super::model::{OpeningHours, Scenario};

/// One violated constraint, located by a JSON-path-like string.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl Issue {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Issue {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

const ROW_TOLERANCE: f64 = 1e-9;

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn check_row(issues: &mut Vec<Issue>, location: String, row: &[f64]) {
    if row.iter().any(|p| !unit(*p)) {
        issues.push(Issue::new(&location, "probabilities must lie in [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        issues.push(Issue::new(location, format!("probabilities sum to {sum}, expected 1")));
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    ids.filter(|id| !seen.insert(*id)).collect()
}

/// Checks that sessions are well-formed and that each session's buffer ends
/// before the next session of the week starts.
pub fn check_opening_hours(hours: &OpeningHours) -> Result<(), String> {
    let mut spans = Vec::new();
    for (ws, h) in hours.operated() {
        if !(0.0..=1.0).contains(&h.open) || !(0.0..=1.0).contains(&h.close) {
            return Err(format!("{ws:?}: times must lie within the day"));
        }
        if h.open >= h.close {
            return Err(format!("{ws:?}: opening time must precede closing time"));
        }
        let day = ws.weekday as f64;
        spans.push((ws, day + h.open, day + h.close));
    }
    for (i, (ws, _, end)) in spans.iter().enumerate() {
        let (next_ws, next_start) = match spans.get(i + 1) {
            Some((n, s, _)) => (*n, *s),
            None => (spans[0].0, spans[0].1 + 7.0),
        };
        if spans.len() > 1 && end + HOUR > next_start + 1e-12 {
            return Err(format!(
                "{ws:?}: session buffer overlaps the following session {next_ws:?}"
            ));
        }
    }
    Ok(())
}

/// Validates a fully resolved scenario. All problems are reported at once.
pub fn validate(scenario: &Scenario) -> Result<(), Vec<Issue>> {
    let mut issues = Vec::new();
    let s = scenario;

    if s.epoch_weekday > 6 {
        issues.push(Issue::new("meta.epoch_weekday", "must be a weekday"));
    }

    if s.age_classes.is_empty() {
        issues.push(Issue::new("age_classes", "at least one age class is required"));
    }
    for id in duplicates(s.age_classes.iter().map(|a| a.id.as_str())) {
        issues.push(Issue::new("age_classes", format!("duplicate id {id:?}")));
    }
    for (i, a) in s.age_classes.iter().enumerate() {
        let loc = format!("age_classes[{i}] ({})", a.id);
        if !(a.duration_factor > 0.0) {
            issues.push(Issue::new(&loc, "duration_factor must be positive"));
        }
        if !(a.willingness_factor >= 0.0) {
            issues.push(Issue::new(&loc, "willingness_factor must be non-negative"));
        }
        if !unit(a.cancel_probability) {
            issues.push(Issue::new(&loc, "cancel_probability must lie in [0, 1]"));
        }
        if !(a.annual_illness.min_on_unit() >= 0.0) {
            issues.push(Issue::new(&loc, "annual_illness must be non-negative on [0, 1]"));
        }
    }

    if s.families.is_empty() {
        issues.push(Issue::new("illness_families", "at least one family is required"));
    }
    for id in duplicates(s.families.iter().map(|f| f.id.as_str())) {
        issues.push(Issue::new("illness_families", format!("duplicate id {id:?}")));
    }
    for (i, f) in s.families.iter().enumerate() {
        let loc = format!("illness_families[{i}] ({})", f.id);
        if !(f.willingness.min_on_unit() >= 0.0) {
            issues.push(Issue::new(&loc, "willingness must be non-negative on [0, 1]"));
        }
        if let Some(d) = f.duration {
            if !(d.min_on_unit() > 0.0) {
                issues.push(Issue::new(&loc, "duration must be positive on [0, 1]"));
            }
        }
        if let Some(n) = f.followup {
            if !(n.min_on_unit() > 0.0) {
                issues.push(Issue::new(&loc, "followup must be positive on [0, 1]"));
            }
        }
        if f.chronic && f.duration.is_some() {
            issues.push(Issue::new(&loc, "chronic families have no duration"));
        }
        if f.chronic && f.followup.is_none() {
            issues.push(Issue::new(&loc, "chronic families need a followup interval"));
        }
    }

    let d = &s.distribution;
    let n_age = s.age_classes.len();
    for (kind, families, rows, chronic) in [
        ("acute", &d.acute_families, &d.acute, false),
        ("chronic", &d.chronic_families, &d.chronic, true),
    ] {
        for &f in families.iter() {
            match s.families.get(f) {
                None => issues.push(Issue::new(format!("distributions.{kind}"), "unknown family")),
                Some(fam) if fam.chronic != chronic => issues.push(Issue::new(
                    format!("distributions.{kind}"),
                    format!("family {:?} is {}chronic", fam.id, if chronic { "not " } else { "" }),
                )),
                _ => {}
            }
        }
        let required = !chronic || !families.is_empty();
        if required && rows.len() != n_age {
            issues.push(Issue::new(
                format!("distributions.{kind}"),
                "one row per age class is required",
            ));
            continue;
        }
        for (a, row) in rows.iter().enumerate() {
            let loc = format!("distributions.{kind}.{}", s.age_classes[a].id);
            if row.len() != families.len() {
                issues.push(Issue::new(&loc, "row length does not match family list"));
            } else {
                check_row(&mut issues, loc, row);
            }
        }
    }

    if s.physicians.is_empty() {
        issues.push(Issue::new("physicians", "at least one physician is required"));
    }
    for id in duplicates(s.physicians.iter().map(|p| p.id.as_str())) {
        issues.push(Issue::new("physicians", format!("duplicate id {id:?}")));
    }
    for (i, p) in s.physicians.iter().enumerate() {
        let loc = format!("physicians[{i}] ({})", p.id);
        if !p.location.is_valid() {
            issues.push(Issue::new(format!("{loc}.location"), "invalid coordinates"));
        }
        if p.opening_hours.operated().next().is_none() {
            issues.push(Issue::new(format!("{loc}.opening_hours"), "no operated session"));
        }
        if let Err(e) = check_opening_hours(&p.opening_hours) {
            issues.push(Issue::new(format!("{loc}.opening_hours"), e));
        }
        if let Err(e) = crate::strategies::validate_config(&p.strategies, &p.opening_hours) {
            issues.push(Issue::new(format!("{loc}.strategies"), e));
        }
    }

    for id in duplicates(s.patients.iter().map(|p| p.id.as_str())) {
        issues.push(Issue::new("patients", format!("duplicate id {id:?}")));
    }
    for (i, p) in s.patients.iter().enumerate() {
        let loc = format!("patients[{i}] ({})", p.id);
        if !p.location.is_valid() {
            issues.push(Issue::new(format!("{loc}.location"), "invalid coordinates"));
        }
        if !unit(p.health_condition) {
            issues.push(Issue::new(&loc, "health_condition must lie in [0, 1]"));
        }
        if p.age_class >= n_age {
            issues.push(Issue::new(&loc, "unknown age class"));
        }
        if let Some(c) = &p.chronic {
            match s.families.get(c.family) {
                Some(f) if f.chronic => {}
                _ => issues.push(Issue::new(format!("{loc}.chronic"), "family must be chronic")),
            }
            if !unit(c.seriousness) {
                issues.push(Issue::new(format!("{loc}.chronic"), "seriousness must lie in [0, 1]"));
            }
            if !(c.willingness >= 0.0) {
                issues.push(Issue::new(format!("{loc}.chronic"), "willingness must be non-negative"));
            }
            if !(c.followup > 0.0) {
                issues.push(Issue::new(format!("{loc}.chronic"), "followup must be positive"));
            }
        }
    }

    if let Some(g) = &s.generator {
        let pop = &g.population;
        for (name, row) in [
            ("availability_probability", &pop.availability_probability),
            ("chronic_probability", &pop.chronic_probability),
        ] {
            if row.len() != n_age || row.iter().any(|p| !unit(*p)) {
                issues.push(Issue::new(
                    format!("patient_generator.population.{name}"),
                    "one probability in [0, 1] per age class is required",
                ));
            }
        }
        if pop.age_distribution.len() != n_age {
            issues.push(Issue::new(
                "patient_generator.population.age_distribution",
                "one probability per age class is required",
            ));
        } else {
            check_row(
                &mut issues,
                "patient_generator.population.age_distribution".into(),
                &pop.age_distribution,
            );
        }
        if !(pop.health_condition.alpha > 0.0 && pop.health_condition.beta > 0.0) {
            issues.push(Issue::new(
                "patient_generator.population.health_condition_beta",
                "shape parameters must be positive",
            ));
        }
    }

    let rc = &s.run_config;
    if !(rc.warmup_years >= 0.0) || !rc.warmup_years.is_finite() {
        issues.push(Issue::new("run_config.warmup_years", "must be non-negative"));
    }
    if !(rc.horizon_years > 0.0) || !rc.horizon_years.is_finite() {
        issues.push(Issue::new("run_config.horizon_years", "must be positive"));
    }
    if rc.runs == 0 {
        issues.push(Issue::new("run_config.runs", "at least one run is required"));
    }

    debug_assert_eq!(WeeklySession::all().count(), WEEKLY_SESSIONS);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}
