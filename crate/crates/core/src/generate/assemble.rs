use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geo::Location;
use crate::scenario::{
    AgeClassFile, DayHoursFile, DistributionsFile, FamilyFile, GeneratorFile, HoursFile, MetaFile, PhysicianFile,
    PopulationFile, RunConfig, ScenarioFile, StrategyConfig,
};
use crate::time::WEEKDAY_NAMES;

use super::{read_csv, GenerateError};

/// Everything a generated scenario needs besides the physician and cell tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub meta: MetaFile,
    pub age_classes: Vec<AgeClassFile>,
    pub illness_families: Vec<FamilyFile>,
    pub distributions: DistributionsFile,
    pub population: PopulationFile,
    #[serde(default)]
    pub strategies: StrategyConfig,
    #[serde(default)]
    pub run_config: RunConfig,
}

#[derive(Debug, Deserialize)]
struct PhysicianRow {
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    retirement_year: Option<u32>,
    #[serde(default)]
    mon: String,
    #[serde(default)]
    tue: String,
    #[serde(default)]
    wed: String,
    #[serde(default)]
    thu: String,
    #[serde(default)]
    fri: String,
    #[serde(default)]
    sat: String,
    #[serde(default)]
    sun: String,
}

fn parse_range(text: &str) -> Result<Option<HoursFile>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    let (open, close) = text.split_once('-').ok_or_else(|| format!("expected HH:MM-HH:MM, got {text:?}"))?;
    Ok(Some(HoursFile {
        open: open.trim().to_string(),
        close: close.trim().to_string(),
    }))
}

/// `"08:00-12:00|15:00-18:00"`; either side of the bar may be empty.
fn parse_day(text: &str) -> Result<Option<DayHoursFile>, String> {
    let (morning, afternoon) = text.split_once('|').unwrap_or((text, ""));
    let day = DayHoursFile {
        morning: parse_range(morning)?,
        afternoon: parse_range(afternoon)?,
    };
    Ok((day.morning.is_some() || day.afternoon.is_some()).then_some(day))
}

/// Reads physicians from a CSV table with columns `id, lat, lon,
/// retirement_year, mon, ..., sun`; day cells hold `morning|afternoon` ranges.
pub fn read_physicians(path: &Path, strategies: &StrategyConfig) -> Result<Vec<PhysicianFile>, GenerateError> {
    let rows: Vec<PhysicianRow> = read_csv(path)?;
    rows.into_iter()
        .map(|r| {
            let days = [&r.mon, &r.tue, &r.wed, &r.thu, &r.fri, &r.sat, &r.sun];
            let mut opening_hours = BTreeMap::new();
            for (name, text) in WEEKDAY_NAMES.iter().zip(days) {
                let day = parse_day(text)
                    .map_err(|e| GenerateError::Input(format!("{}: physician {}: {name}: {e}", path.display(), r.id)))?;
                if let Some(day) = day {
                    opening_hours.insert(name.to_string(), day);
                }
            }
            Ok(PhysicianFile {
                id: r.id,
                location: Location::new(r.lat, r.lon),
                opening_hours,
                strategies: strategies.clone(),
                retirement_year: r.retirement_year,
            })
        })
        .collect()
}

fn relative(path: &Path, base_dir: &Path) -> String {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    pathdiff::diff_paths(abs(path), abs(base_dir))
        .unwrap_or_else(|| abs(path))
        .to_string_lossy()
        .into_owned()
}

/// Combines parameters, physicians and population inputs into a scenario
/// document whose generator paths are relative to `out_dir`.
pub fn assemble_scenario(
    params: &GeneratorParams,
    physicians: Vec<PhysicianFile>,
    cells: &Path,
    municipalities: &Path,
    seed: u64,
    out_dir: &Path,
) -> ScenarioFile {
    let mut meta = params.meta.clone();
    meta.seed = seed;
    ScenarioFile {
        meta,
        age_classes: params.age_classes.clone(),
        illness_families: params.illness_families.clone(),
        distributions: params.distributions.clone(),
        physicians,
        patients: None,
        patient_generator: Some(GeneratorFile {
            cells: relative(cells, out_dir),
            municipalities: relative(municipalities, out_dir),
            seed: None,
            population: params.population.clone(),
        }),
        run_config: params.run_config,
    }
}
