//! Static scenario data and the JSON scenario format.

mod file;
mod model;
mod validate;

use std::path::{Path, PathBuf};

pub use file::{
    to_file, AgeClassFile, ChronicFile, DayHoursFile, DistributionsFile, FamilyFile, GeneratorFile, HoursFile,
    MetaFile, PatientFile, PhysicianFile, PopulationFile, ProbabilityTable, ScenarioFile,
};
pub use model::*;
pub use validate::{check_opening_hours, validate, Issue};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: invalid scenario\n{}", format_issues(.issues))]
    Invalid { origin: String, issues: Vec<Issue> },
    #[error("{origin}: patient generation failed: {source}")]
    Generate {
        origin: String,
        #[source]
        source: crate::generate::GenerateError,
    },
}

fn format_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl ScenarioError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            ScenarioError::Invalid { issues, .. } => issues,
            _ => &[],
        }
    }
}

/// Parses, resolves, materializes and validates a scenario document.
/// Relative generator paths are resolved against `base_dir`.
pub fn from_json_str(text: &str, base_dir: &Path, origin: &str) -> Result<Scenario, ScenarioError> {
    let parsed: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_scenario_file(&parsed, base_dir, origin)
}

pub fn from_scenario_file(parsed: &ScenarioFile, base_dir: &Path, origin: &str) -> Result<Scenario, ScenarioError> {
    let file::Converted { mut scenario, mut issues } = file::from_file(parsed, base_dir);
    if issues.is_empty() {
        if let Err(more) = validate(&scenario) {
            issues.extend(more);
        }
    }
    if !issues.is_empty() {
        return Err(ScenarioError::Invalid {
            origin: origin.to_string(),
            issues,
        });
    }
    if let Some(generator) = &scenario.generator {
        scenario.patients =
            crate::generate::synthesize(&scenario, generator).map_err(|source| ScenarioError::Generate {
                origin: origin.to_string(),
                source,
            })?;
        validate(&scenario).map_err(|issues| ScenarioError::Invalid {
            origin: origin.to_string(),
            issues,
        })?;
    }
    Ok(scenario)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dir = parent_dir(path);
    let dir = std::path::absolute(&dir).unwrap_or(dir);
    from_json_str(&text, &dir, &path.display().to_string())
}

pub fn to_json_string(scenario: &Scenario, base_dir: &Path, materialize: bool) -> String {
    let mut text = serde_json::to_string_pretty(&to_file(scenario, base_dir, materialize))
        .expect("scenario serialization cannot fail");
    text.push('\n');
    text
}

/// Writes the scenario as JSON. Generator references are kept unless
/// `materialize` is set, in which case the patient list is written out.
pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>, materialize: bool) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let dir = parent_dir(path);
    let base = std::path::absolute(&dir).unwrap_or(dir);
    std::fs::write(path, to_json_string(scenario, &base, materialize)).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}
