//! The JSON representation of a scenario and its conversion to and from the
//! resolved model.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geo::Location;
use crate::time::{
    class_weekday, format_clock, parse_clock, weekday_from_name, Half, WeeklySession, WEEKDAY_NAMES,
    WEEKLY_SESSIONS,
};

use super::model::*;
use super::validate::Issue;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub meta: MetaFile,
    pub age_classes: Vec<AgeClassFile>,
    pub illness_families: Vec<FamilyFile>,
    pub distributions: DistributionsFile,
    pub physicians: Vec<PhysicianFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patients: Option<Vec<PatientFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_generator: Option<GeneratorFile>,
    pub run_config: RunConfig,
}

fn default_epoch() -> String {
    "monday".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaFile {
    pub name: String,
    #[serde(default = "default_epoch")]
    pub epoch_weekday: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeClassFile {
    pub id: String,
    pub annual_illness: Affine,
    pub duration_factor: f64,
    pub willingness_factor: f64,
    pub cancel_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub duration: Option<Affine>,
    pub willingness: Affine,
    pub followup: Option<Affine>,
    pub chronic: bool,
}

pub type ProbabilityTable = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionsFile {
    pub acute: ProbabilityTable,
    #[serde(default)]
    pub chronic: ProbabilityTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoursFile {
    pub open: String,
    pub close: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DayHoursFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morning: Option<HoursFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub afternoon: Option<HoursFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicianFile {
    pub id: String,
    pub location: Location,
    pub opening_hours: BTreeMap<String, DayHoursFile>,
    #[serde(default)]
    pub strategies: StrategyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retirement_year: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChronicFile {
    pub family: String,
    pub seriousness: f64,
    pub willingness: f64,
    pub followup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientFile {
    pub id: String,
    pub location: Location,
    pub health_condition: f64,
    pub age_class: String,
    /// Fourteen `0`/`1` characters: Monday morning, Monday afternoon, ...
    pub availability: String,
    #[serde(default)]
    pub chronic: Option<ChronicFile>,
}

fn default_health_beta() -> BetaShape {
    BetaShape {
        alpha: 25.0,
        beta: 25.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationFile {
    pub age_distribution: BTreeMap<String, f64>,
    pub availability_probability: BTreeMap<String, f64>,
    pub chronic_probability: BTreeMap<String, f64>,
    #[serde(default = "default_health_beta")]
    pub health_condition_beta: BetaShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub cells: String,
    pub municipalities: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub population: PopulationFile,
}

fn session_key(half: Half) -> &'static str {
    match half {
        Half::Morning => "morning",
        Half::Afternoon => "afternoon",
    }
}

/// Per-age-class values keyed by age class id, in age class order.
fn per_age(
    issues: &mut Vec<Issue>,
    location: &str,
    map: &BTreeMap<String, f64>,
    ages: &[AgeClass],
) -> Vec<f64> {
    for key in map.keys() {
        if !ages.iter().any(|a| &a.id == key) {
            issues.push(Issue::new(location, format!("unknown age class {key:?}")));
        }
    }
    ages.iter()
        .map(|a| match map.get(&a.id) {
            Some(v) => *v,
            None => {
                issues.push(Issue::new(location, format!("missing age class {:?}", a.id)));
                0.0
            }
        })
        .collect()
}

fn table_rows(
    issues: &mut Vec<Issue>,
    kind: &str,
    table: &ProbabilityTable,
    ages: &[AgeClass],
    families: &[IllnessFamily],
    chronic: bool,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let columns: Vec<usize> = families
        .iter()
        .enumerate()
        .filter(|(_, f)| f.chronic == chronic)
        .map(|(i, _)| i)
        .collect();
    for (age, row) in table {
        if !ages.iter().any(|a| &a.id == age) {
            issues.push(Issue::new(
                format!("distributions.{kind}"),
                format!("unknown age class {age:?}"),
            ));
        }
        for fam in row.keys() {
            match families.iter().find(|f| &f.id == fam) {
                None => issues.push(Issue::new(
                    format!("distributions.{kind}.{age}"),
                    format!("unknown family {fam:?}"),
                )),
                Some(f) if f.chronic != chronic => issues.push(Issue::new(
                    format!("distributions.{kind}.{age}"),
                    format!("family {fam:?} does not belong in the {kind} table"),
                )),
                _ => {}
            }
        }
    }
    if table.is_empty() && (chronic || columns.is_empty()) {
        return (columns, Vec::new());
    }
    let rows = ages
        .iter()
        .map(|a| match table.get(&a.id) {
            Some(row) => columns
                .iter()
                .map(|&f| row.get(&families[f].id).copied().unwrap_or(0.0))
                .collect(),
            None => {
                issues.push(Issue::new(
                    format!("distributions.{kind}"),
                    format!("missing row for age class {:?}", a.id),
                ));
                vec![0.0; columns.len()]
            }
        })
        .collect();
    (columns, rows)
}

fn parse_opening_hours(
    issues: &mut Vec<Issue>,
    location: &str,
    days: &BTreeMap<String, DayHoursFile>,
    epoch_weekday: u8,
) -> OpeningHours {
    let mut hours = OpeningHours::default();
    for (day, sessions) in days {
        let Some(calendar) = weekday_from_name(day) else {
            issues.push(Issue::new(location, format!("unknown weekday {day:?}")));
            continue;
        };
        let weekday = class_weekday(calendar, epoch_weekday);
        for (half, h) in [(Half::Morning, &sessions.morning), (Half::Afternoon, &sessions.afternoon)] {
            let Some(h) = h else { continue };
            let loc = format!("{location}.{day}.{}", session_key(half));
            match (parse_clock(&h.open), parse_clock(&h.close)) {
                (Ok(open), Ok(close)) => {
                    hours.set(WeeklySession::new(weekday, half), Some(SessionHours { open, close }))
                }
                (Err(e), _) | (_, Err(e)) => issues.push(Issue::new(loc, e.to_string())),
            }
        }
    }
    hours
}

fn parse_availability(issues: &mut Vec<Issue>, location: &str, text: &str, epoch_weekday: u8) -> [bool; WEEKLY_SESSIONS] {
    let mut out = [false; WEEKLY_SESSIONS];
    let chars: Vec<char> = text.chars().collect();
    if chars.len() != WEEKLY_SESSIONS || chars.iter().any(|c| *c != '0' && *c != '1') {
        issues.push(Issue::new(location, "availability must be 14 characters of 0 or 1"));
        return out;
    }
    for (i, c) in chars.iter().enumerate() {
        let weekday = class_weekday((i / 2) as u8, epoch_weekday);
        out[2 * weekday as usize + i % 2] = *c == '1';
    }
    out
}

fn format_availability(availability: &[bool; WEEKLY_SESSIONS], epoch_weekday: u8) -> String {
    (0..WEEKLY_SESSIONS)
        .map(|i| {
            let weekday = class_weekday((i / 2) as u8, epoch_weekday);
            if availability[2 * weekday as usize + i % 2] {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn resolve_path(base_dir: &Path, path: &str) -> PathBuf {
    let joined = base_dir.join(path);
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.components().next_back(), Some(Component::Normal(_))) => {
                out.pop();
            }
            c => out.push(c),
        }
    }
    out
}

/// Result of converting a file: a scenario whose patients may still have to
/// be synthesized from the generator.
pub(crate) struct Converted {
    pub scenario: Scenario,
    pub issues: Vec<Issue>,
}

/// Resolves ids and parses formatted fields. `base_dir` anchors relative
/// generator paths.
pub(crate) fn from_file(file: &ScenarioFile, base_dir: &Path) -> Converted {
    let mut issues = Vec::new();

    let epoch_weekday = weekday_from_name(&file.meta.epoch_weekday).unwrap_or_else(|| {
        issues.push(Issue::new("meta.epoch_weekday", "unknown weekday"));
        0
    });

    let age_classes: Vec<AgeClass> = file
        .age_classes
        .iter()
        .map(|a| AgeClass {
            id: a.id.clone(),
            annual_illness: a.annual_illness,
            duration_factor: a.duration_factor,
            willingness_factor: a.willingness_factor,
            cancel_probability: a.cancel_probability,
        })
        .collect();

    let families: Vec<IllnessFamily> = file
        .illness_families
        .iter()
        .map(|f| IllnessFamily {
            id: f.id.clone(),
            name: f.name.clone(),
            duration: f.duration,
            willingness: f.willingness,
            followup: f.followup,
            chronic: f.chronic,
        })
        .collect();

    let (acute_families, acute) =
        table_rows(&mut issues, "acute", &file.distributions.acute, &age_classes, &families, false);
    let (chronic_families, chronic) =
        table_rows(&mut issues, "chronic", &file.distributions.chronic, &age_classes, &families, true);

    let physicians = file
        .physicians
        .iter()
        .enumerate()
        .map(|(i, p)| PhysicianSpec {
            id: p.id.clone(),
            location: p.location,
            opening_hours: parse_opening_hours(
                &mut issues,
                &format!("physicians[{i}] ({}).opening_hours", p.id),
                &p.opening_hours,
                epoch_weekday,
            ),
            strategies: p.strategies.clone(),
            retirement_year: p.retirement_year,
        })
        .collect();

    let patients = file
        .patients
        .iter()
        .flatten()
        .enumerate()
        .map(|(i, p)| {
            let loc = format!("patients[{i}] ({})", p.id);
            let age_class = age_classes.iter().position(|a| a.id == p.age_class).unwrap_or_else(|| {
                issues.push(Issue::new(&loc, format!("unknown age class {:?}", p.age_class)));
                0
            });
            let chronic = p.chronic.as_ref().map(|c| ChronicIllness {
                family: families.iter().position(|f| f.id == c.family).unwrap_or_else(|| {
                    issues.push(Issue::new(format!("{loc}.chronic"), format!("unknown family {:?}", c.family)));
                    usize::MAX
                }),
                seriousness: c.seriousness,
                willingness: c.willingness,
                followup: c.followup,
            });
            PatientSpec {
                id: p.id.clone(),
                location: p.location,
                health_condition: p.health_condition,
                age_class,
                availability: parse_availability(&mut issues, &format!("{loc}.availability"), &p.availability, epoch_weekday),
                chronic,
            }
        })
        .collect();

    match (&file.patients, &file.patient_generator) {
        (Some(_), Some(_)) => issues.push(Issue::new(
            "patients",
            "give either patients or patient_generator, not both",
        )),
        (None, None) => issues.push(Issue::new("patients", "patients or patient_generator is required")),
        _ => {}
    }

    let generator = file.patient_generator.as_ref().map(|g| {
        let loc = "patient_generator.population";
        PatientGenerator {
            cells: resolve_path(base_dir, &g.cells),
            municipalities: resolve_path(base_dir, &g.municipalities),
            seed: g.seed.unwrap_or(file.meta.seed),
            population: PopulationParams {
                age_distribution: per_age(&mut issues, &format!("{loc}.age_distribution"), &g.population.age_distribution, &age_classes),
                availability_probability: per_age(
                    &mut issues,
                    &format!("{loc}.availability_probability"),
                    &g.population.availability_probability,
                    &age_classes,
                ),
                chronic_probability: per_age(&mut issues, &format!("{loc}.chronic_probability"), &g.population.chronic_probability, &age_classes),
                health_condition: g.population.health_condition_beta.clone(),
            },
        }
    });

    Converted {
        scenario: Scenario {
            name: file.meta.name.clone(),
            epoch_weekday,
            seed: file.meta.seed,
            age_classes,
            families,
            distribution: IllnessDistribution {
                acute_families,
                acute,
                chronic_families,
                chronic,
            },
            physicians,
            patients,
            generator,
            run_config: file.run_config,
        },
        issues,
    }
}

fn relative_to(path: &Path, base_dir: &Path) -> String {
    pathdiff::diff_paths(path, base_dir)
        .unwrap_or_else(|| path.to_path_buf())
        .to_string_lossy()
        .replace('\\', "/")
}

fn table_file(
    ages: &[AgeClass],
    families: &[IllnessFamily],
    columns: &[usize],
    rows: &[Vec<f64>],
) -> ProbabilityTable {
    rows.iter()
        .zip(ages)
        .map(|(row, a)| {
            let entries = columns
                .iter()
                .zip(row)
                .filter(|(_, p)| **p != 0.0)
                .map(|(&f, p)| (families[f].id.clone(), *p))
                .collect();
            (a.id.clone(), entries)
        })
        .collect()
}

fn per_age_file(ages: &[AgeClass], values: &[f64]) -> BTreeMap<String, f64> {
    ages.iter().zip(values).map(|(a, v)| (a.id.clone(), *v)).collect()
}

/// Converts a scenario back to its file form. Scenarios with a generator are
/// written with the generator reference unless `materialize` is set; generator
/// paths are written relative to `base_dir`.
pub fn to_file(s: &Scenario, base_dir: &Path, materialize: bool) -> ScenarioFile {
    let physicians = s
        .physicians
        .iter()
        .map(|p| {
            let mut days: BTreeMap<String, DayHoursFile> = BTreeMap::new();
            for (ws, h) in p.opening_hours.operated() {
                let calendar = (ws.weekday + s.epoch_weekday) % 7;
                let entry = days.entry(WEEKDAY_NAMES[calendar as usize].to_string()).or_default();
                let hf = Some(HoursFile {
                    open: format_clock(h.open),
                    close: format_clock(h.close),
                });
                match ws.half {
                    Half::Morning => entry.morning = hf,
                    Half::Afternoon => entry.afternoon = hf,
                }
            }
            PhysicianFile {
                id: p.id.clone(),
                location: p.location,
                opening_hours: days,
                strategies: p.strategies.clone(),
                retirement_year: p.retirement_year,
            }
        })
        .collect();

    let write_generator = s.generator.is_some() && !materialize;
    let patients = (!write_generator).then(|| {
        s.patients
            .iter()
            .map(|p| PatientFile {
                id: p.id.clone(),
                location: p.location,
                health_condition: p.health_condition,
                age_class: s.age_classes[p.age_class].id.clone(),
                availability: format_availability(&p.availability, s.epoch_weekday),
                chronic: p.chronic.as_ref().map(|c| ChronicFile {
                    family: s.families[c.family].id.clone(),
                    seriousness: c.seriousness,
                    willingness: c.willingness,
                    followup: c.followup,
                }),
            })
            .collect()
    });
    let patient_generator = s.generator.as_ref().filter(|_| write_generator).map(|g| GeneratorFile {
        cells: relative_to(&g.cells, base_dir),
        municipalities: relative_to(&g.municipalities, base_dir),
        seed: (g.seed != s.seed).then_some(g.seed),
        population: PopulationFile {
            age_distribution: per_age_file(&s.age_classes, &g.population.age_distribution),
            availability_probability: per_age_file(&s.age_classes, &g.population.availability_probability),
            chronic_probability: per_age_file(&s.age_classes, &g.population.chronic_probability),
            health_condition_beta: g.population.health_condition.clone(),
        },
    });

    ScenarioFile {
        meta: MetaFile {
            name: s.name.clone(),
            epoch_weekday: WEEKDAY_NAMES[s.epoch_weekday as usize].to_string(),
            seed: s.seed,
        },
        age_classes: s
            .age_classes
            .iter()
            .map(|a| AgeClassFile {
                id: a.id.clone(),
                annual_illness: a.annual_illness,
                duration_factor: a.duration_factor,
                willingness_factor: a.willingness_factor,
                cancel_probability: a.cancel_probability,
            })
            .collect(),
        illness_families: s
            .families
            .iter()
            .map(|f| FamilyFile {
                id: f.id.clone(),
                name: f.name.clone(),
                duration: f.duration,
                willingness: f.willingness,
                followup: f.followup,
                chronic: f.chronic,
            })
            .collect(),
        distributions: DistributionsFile {
            acute: table_file(&s.age_classes, &s.families, &s.distribution.acute_families, &s.distribution.acute),
            chronic: table_file(
                &s.age_classes,
                &s.families,
                &s.distribution.chronic_families,
                &s.distribution.chronic,
            ),
        },
        physicians,
        patients,
        patient_generator,
        run_config: s.run_config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn availability_string_round_trip_with_epoch() {
        let mut issues = Vec::new();
        let text = "10000000000001";
        for epoch in 0..7 {
            let a = parse_availability(&mut issues, "x", text, epoch);
            assert_eq!(format_availability(&a, epoch), text);
        }
        // Day 0 is a Wednesday: Monday morning becomes class 5 morning.
        let a = parse_availability(&mut issues, "x", text, 2);
        assert!(a[10]);
        assert!(a[9]);
        assert_eq!(a.iter().filter(|x| **x).count(), 2);
        assert!(issues.is_empty());
        parse_availability(&mut issues, "x", "101", 0);
        assert_eq!(issues.len(), 1);
    }
}
