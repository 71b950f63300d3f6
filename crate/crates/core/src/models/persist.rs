//! Versioned JSON envelope for trained models.
//!
//! Floats are written with shortest round-trip formatting, so a reloaded
//! model predicts bit-identically.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "teleop-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<M> {
    pub format: String,
    pub version: u32,
    /// Hash of the configuration that produced the model, if known.
    pub config_hash: Option<String>,
    pub model: M,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn to_json<M: Serialize>(model: &M, config_hash: Option<&str>) -> Result<String> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        config_hash: config_hash.map(str::to_string),
        model,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json<M: DeserializeOwned>(text: &str) -> Result<ModelFile<M>> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Schema {
            column: "format".into(),
            message: format!("expected `{MODEL_FORMAT}`, found `{}`", header.format),
        });
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Version {
            found: header.version,
            supported: MODEL_VERSION,
            detail: String::new(),
        });
    }
    Ok(serde_json::from_str(text)?)
}

pub fn save_model<M: Serialize>(
    path: impl AsRef<Path>,
    model: &M,
    config_hash: Option<&str>,
) -> Result<()> {
    std::fs::write(path, to_json(model, config_hash)?)?;
    Ok(())
}

pub fn load_model<M: DeserializeOwned>(path: impl AsRef<Path>) -> Result<ModelFile<M>> {
    from_json(&std::fs::read_to_string(path)?)
}
