//! Reading and writing instance JSON.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::qp_model::{Instance, Validate, ValidationReport};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed instance JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

/// Parses, validates and symmetrizes an instance.
pub fn parse_instance<S: Scalar + DeserializeOwned>(text: &str) -> Result<(Instance<S>, ValidationReport), LoadError> {
    let raw: Instance<S> = serde_json::from_str(text)?;
    Ok(raw.validated()?)
}

pub fn load_instance<S: Scalar + DeserializeOwned>(path: &Path) -> Result<(Instance<S>, ValidationReport), LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Read { path: path.display().to_string(), source })?;
    parse_instance(&text)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}
