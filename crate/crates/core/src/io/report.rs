use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_text, write_text};
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// JSON run report: inputs with content hashes, every effective setting, and
/// results.
///
/// Floats are written in their shortest exact decimal form, so reading a
/// report back yields bit-identical numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: String,
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>, inputs: Vec<InputRecord>, config: impl Serialize, results: impl Serialize) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.into(),
            inputs,
            config: serde_json::to_value(config)?,
            results: serde_json::to_value(results)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_report(doc: &ReportDocument, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &doc.to_json()?)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    ReportDocument::from_json(&read_text(path.as_ref())?)
}
