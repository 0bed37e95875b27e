use std::collections::BTreeMap;

use crate::scenario::Scenario;

use super::{synthesize, GenerateError};

#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    /// Drops the listed physicians; patients are kept as they are.
    RemovePhysicians(Vec<String>),
    /// Regenerates the population with a new age class distribution, keyed
    /// by age class id.
    Reage(BTreeMap<String, f64>),
}

/// Ids of physicians whose retirement year is `year` or earlier.
pub fn retired_by(scenario: &Scenario, year: u32) -> Vec<String> {
    scenario
        .physicians
        .iter()
        .filter(|p| p.retirement_year.is_some_and(|y| y <= year))
        .map(|p| p.id.clone())
        .collect()
}

fn remove_physicians(scenario: &mut Scenario, ids: &[String]) -> Result<(), GenerateError> {
    if let Some(id) = ids.iter().find(|id| scenario.physician_index(id).is_none()) {
        return Err(GenerateError::Input(format!("unknown physician {id:?}")));
    }
    scenario.physicians.retain(|p| !ids.contains(&p.id));
    if scenario.physicians.is_empty() {
        return Err(GenerateError::Input("no physician left".into()));
    }
    Ok(())
}

fn reage(scenario: &mut Scenario, shares: &BTreeMap<String, f64>) -> Result<(), GenerateError> {
    if let Some(id) = shares.keys().find(|id| scenario.age_class_index(id).is_none()) {
        return Err(GenerateError::Input(format!("unknown age class {id:?}")));
    }
    let distribution = scenario
        .age_classes
        .iter()
        .map(|a| {
            shares
                .get(&a.id)
                .copied()
                .ok_or_else(|| GenerateError::Input(format!("missing share for age class {:?}", a.id)))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let total: f64 = distribution.iter().sum();
    if (total - 1.0).abs() > 1e-9 || distribution.iter().any(|p| !(*p >= 0.0)) {
        return Err(GenerateError::Input(format!("age shares must be non-negative and sum to 1, got {total}")));
    }
    let Some(generator) = scenario.generator.as_mut() else {
        return Err(GenerateError::Input("re-aging needs a scenario with a patient generator".into()));
    };
    generator.population.age_distribution = distribution;
    let generator = generator.clone();
    scenario.patients = synthesize(scenario, &generator)?;
    Ok(())
}

/// Applies the transforms in order to a copy of the scenario.
pub fn apply_whatif(scenario: &Scenario, transforms: &[Transform]) -> Result<Scenario, GenerateError> {
    let mut out = scenario.clone();
    for t in transforms {
        match t {
            Transform::RemovePhysicians(ids) => remove_physicians(&mut out, ids)?,
            Transform::Reage(shares) => reage(&mut out, shares)?,
        }
    }
    Ok(out)
}
