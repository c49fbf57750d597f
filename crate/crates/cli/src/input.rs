//! Loading JSON inputs from files or the fixture catalog.

use std::path::Path;

use isodisplay::diagnostics::GroupSource;
use isodisplay::fixtures;
use isodisplay::free_space::{FiniteMetricSpace, Molecule};
use isodisplay::graphs::{Graph, GraphRecord};
use isodisplay::group::{MatrixGroup, MatrixGroupRecord, PermGroup, PermGroupRecord, DEFAULT_GROUP_CAP};
use isodisplay::scalar::Scalar;
use isodisplay::space::NormedSpace;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

const FIXTURE_PREFIX: &str = "fixture:";

/// Raw JSON behind `source`, which is a path or `fixture:NAME`.
pub fn load_value(source: &str) -> Result<Value, CliError> {
    if let Some(name) = source.strip_prefix(FIXTURE_PREFIX) {
        return Ok(fixtures::fixture_json(name)?);
    }
    let text = std::fs::read_to_string(Path::new(source)).map_err(|e| CliError::Io(format!("{source}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{source}: {e}")))
}

pub fn load<T: DeserializeOwned>(source: &str) -> Result<T, CliError> {
    serde_json::from_value(load_value(source)?).map_err(|e| CliError::Invalid(format!("{source}: {e}")))
}

pub fn graph(source: &str) -> Result<Graph, CliError> {
    Ok(Graph::from_record(&load::<GraphRecord>(source)?)?)
}

pub fn perm_group(source: &str) -> Result<PermGroup, CliError> {
    Ok(PermGroup::from_record(&load::<PermGroupRecord>(source)?)?)
}

pub fn matrix_group(source: &str, tol: f64) -> Result<MatrixGroup<f64>, CliError> {
    Ok(load::<MatrixGroupRecord>(source)?.decode(DEFAULT_GROUP_CAP, tol)?.to_f64())
}

/// A finite group record, or a sampler for a continuous group.
#[derive(Deserialize)]
#[serde(untagged)]
enum GroupInput {
    Finite(MatrixGroupRecord),
    Rotations { rotations2: usize },
    Orthogonal { orthogonal: usize, samples: usize },
}

pub fn group_source(source: &str, seed: u64, tol: f64) -> Result<GroupSource, CliError> {
    Ok(match load::<GroupInput>(source)? {
        GroupInput::Finite(rec) => GroupSource::Finite(rec.decode(DEFAULT_GROUP_CAP, tol)?.to_f64()),
        GroupInput::Rotations { rotations2 } => GroupSource::Rotations2 { angles: rotations2 },
        GroupInput::Orthogonal { orthogonal, samples } => GroupSource::Orthogonal { dim: orthogonal, samples, seed },
    })
}

pub fn space(source: &str) -> Result<NormedSpace, CliError> {
    load(source)
}

pub fn metric(source: &str) -> Result<FiniteMetricSpace, CliError> {
    load(source)
}

pub fn molecule(source: &str) -> Result<Molecule, CliError> {
    load(source)
}

/// A vector of scalars in either arithmetic mode.
pub fn vector(source: &str) -> Result<Vec<Scalar>, CliError> {
    load(source)
}

pub fn float_vector(source: &str) -> Result<Vec<f64>, CliError> {
    Ok(vector(source)?.iter().map(Scalar::to_f64).collect())
}

pub fn vectors(source: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let rows: Vec<Vec<Scalar>> = load(source)?;
    Ok(rows.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect())
}
