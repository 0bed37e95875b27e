//! Synthesis of patient populations from gridded census cells, and the
//! scenario transformations used for what-if studies.

mod assemble;
mod whatif;

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::geo::Location;
use crate::scenario::{ChronicIllness, PatientGenerator, PatientSpec, PopulationParams, Scenario};
use crate::stochastics::{BetaQuantiles, RngStream};
use crate::time::WEEKLY_SESSIONS;

pub use assemble::{assemble_scenario, read_physicians, GeneratorParams};
pub use whatif::{apply_whatif, retired_by, Transform};

const METERS_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Input(String),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Cell {
    pub cell_id: String,
    pub municipality: String,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
    pub cell_size_m: f64,
    pub population: u32,
}

impl Cell {
    /// Latitude and longitude half-extents of the square cell, in degrees.
    pub fn half_extent(&self) -> (f64, f64) {
        let dlat = self.cell_size_m / 2.0 / METERS_PER_DEGREE;
        let dlon = dlat / self.centroid_lat.to_radians().cos();
        (dlat, dlon)
    }

    pub fn contains(&self, loc: Location) -> bool {
        let (dlat, dlon) = self.half_extent();
        (loc.lat - self.centroid_lat).abs() <= dlat && (loc.lon - self.centroid_lon).abs() <= dlon
    }

    fn sample_location(&self, rng: &mut RngStream) -> Location {
        let (dlat, dlon) = self.half_extent();
        let lat = self.centroid_lat + (2.0 * rng.uniform() - 1.0) * dlat;
        let lon = self.centroid_lon + (2.0 * rng.uniform() - 1.0) * dlon;
        Location::new(lat, lon)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Municipality {
    pub municipality: String,
    pub population: u32,
    pub under_16: u32,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, GenerateError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| GenerateError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|source| GenerateError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

pub fn read_cells(path: &Path) -> Result<Vec<Cell>, GenerateError> {
    read_csv(path)
}

pub fn read_municipalities(path: &Path) -> Result<Vec<Municipality>, GenerateError> {
    read_csv(path)
}

/// Number of patients per cell after fixing one adult per cell and removing
/// the under-16 inhabitants uniformly from the remaining ones.
fn adult_counts(cells: &[&Cell], under_16: u32, rng: &mut RngStream) -> Vec<u32> {
    let mut remainder: Vec<usize> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat_n(i, c.population as usize - 1))
        .collect();
    let n = remainder.len();
    let removed = under_16 as usize;
    // Partial Fisher-Yates: the first `removed` entries become a uniform
    // sample without replacement.
    for i in 0..removed {
        let j = i + ((rng.uniform() * (n - i) as f64) as usize).min(n - i - 1);
        remainder.swap(i, j);
    }
    let mut counts: Vec<u32> = cells.iter().map(|c| c.population).collect();
    for &i in &remainder[..removed] {
        counts[i] -= 1;
    }
    counts
}

fn municipality_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn synthesize_patient(
    scenario: &Scenario,
    params: &PopulationParams,
    health: &BetaQuantiles,
    id: String,
    cell: &Cell,
    rng: &mut RngStream,
) -> PatientSpec {
    let location = cell.sample_location(rng);
    let health_condition = health.quantile(rng.uniform());
    let age_class = rng
        .sample_categorical(&params.age_distribution)
        .expect("validated age distribution");
    let p_available = params.availability_probability[age_class];
    let mut availability = [false; WEEKLY_SESSIONS];
    for slot in availability.iter_mut() {
        *slot = rng.bernoulli(p_available).expect("validated probability");
    }
    let chronic = if rng.bernoulli(params.chronic_probability[age_class]).expect("validated probability") {
        let dist = &scenario.distribution;
        let column = rng
            .sample_categorical(&dist.chronic[age_class])
            .expect("validated chronic distribution");
        let family = dist.chronic_families[column];
        let seriousness = rng.sample_seriousness(health_condition).expect("health condition in [0, 1]");
        let f = &scenario.families[family];
        Some(ChronicIllness {
            family,
            seriousness,
            willingness: f.willingness.eval(seriousness),
            followup: f.followup.expect("chronic families have a follow-up interval").eval(seriousness),
        })
    } else {
        None
    };
    PatientSpec {
        id,
        location,
        health_condition,
        age_class,
        availability,
        chronic,
    }
}

/// Synthesizes patients from explicit cell and municipality tables.
pub fn synthesize_from(
    scenario: &Scenario,
    params: &PopulationParams,
    cells: &[Cell],
    municipalities: &[Municipality],
    seed: u64,
) -> Result<Vec<PatientSpec>, GenerateError> {
    if params.age_distribution.len() != scenario.age_classes.len() {
        return Err(GenerateError::Input("population parameters do not cover every age class".into()));
    }
    if let Some(m) = municipalities.iter().find(|m| !cells.iter().any(|c| c.municipality == m.municipality)) {
        return Err(GenerateError::Input(format!("municipality {:?} has no cells", m.municipality)));
    }
    if let Some(c) = cells.iter().find(|c| !municipalities.iter().any(|m| m.municipality == c.municipality)) {
        return Err(GenerateError::Input(format!(
            "cell {:?} belongs to unknown municipality {:?}",
            c.cell_id, c.municipality
        )));
    }
    let health = BetaQuantiles::new(params.health_condition.alpha, params.health_condition.beta);
    let mut patients = Vec::new();
    for (k, m) in municipalities.iter().enumerate() {
        let local: Vec<&Cell> = cells.iter().filter(|c| c.municipality == m.municipality).collect();
        if let Some(c) = local.iter().find(|c| c.population == 0 || !(c.cell_size_m > 0.0)) {
            return Err(GenerateError::Input(format!(
                "cell {:?} needs at least one inhabitant and a positive size",
                c.cell_id
            )));
        }
        let total: u64 = local.iter().map(|c| c.population as u64).sum();
        if total != m.population as u64 {
            return Err(GenerateError::Input(format!(
                "municipality {:?}: cells hold {total} inhabitants, table states {}",
                m.municipality, m.population
            )));
        }
        let removable = total - local.len() as u64;
        if m.under_16 as u64 > removable {
            return Err(GenerateError::Input(format!(
                "municipality {:?}: cannot remove {} under-16 inhabitants from {removable} after fixing one adult per cell",
                m.municipality, m.under_16
            )));
        }
        let mut rng = RngStream::new(municipality_seed(seed, k));
        let counts = adult_counts(&local, m.under_16, &mut rng);
        for (cell, count) in local.iter().zip(counts) {
            for n in 0..count {
                let id = format!("{}-{}", cell.cell_id, n);
                patients.push(synthesize_patient(scenario, params, &health, id, cell, &mut rng));
            }
        }
    }
    Ok(patients)
}

/// Reads the generator's input tables and synthesizes the patient population.
pub fn synthesize(scenario: &Scenario, generator: &PatientGenerator) -> Result<Vec<PatientSpec>, GenerateError> {
    let cells = read_cells(&generator.cells)?;
    let municipalities = read_municipalities(&generator.municipalities)?;
    synthesize_from(scenario, &generator.population, &cells, &municipalities, generator.seed)
}
