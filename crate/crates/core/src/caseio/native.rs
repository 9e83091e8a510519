use serde::{Deserialize, Serialize};

use super::{grid_checksum, CaseDocument};
use crate::error::{Error, Result};
use crate::grid::GridCase;

const FORMAT_TAG: &str = "gridrisk-case";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeDocument {
    format: String,
    version: u32,
    #[serde(default)]
    name: String,
    #[serde(default)]
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checksum: Option<String>,
    grid: GridCase,
}

/// Parses a native JSON case document and validates the grid.
///
/// A `checksum` field, when present, must match the grid content.
pub fn parse_native_case(text: &str) -> Result<CaseDocument> {
    let doc: NativeDocument = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    if doc.format != FORMAT_TAG {
        return Err(Error::parse(
            "field `format`",
            format!("expected \"{FORMAT_TAG}\", found \"{}\"", doc.format),
        ));
    }
    if doc.version != FORMAT_VERSION {
        return Err(Error::parse(
            "field `version`",
            format!("unsupported version {}", doc.version),
        ));
    }
    let parsed = CaseDocument::new(doc.grid, doc.name, doc.source, Vec::new())?;
    if let Some(declared) = doc.checksum {
        if declared != parsed.metadata.checksum {
            return Err(Error::Validation(vec![format!(
                "checksum mismatch: document declares {declared}, content hashes to {}",
                parsed.metadata.checksum
            )]));
        }
    }
    Ok(parsed)
}

pub fn serialize_native_case(doc: &CaseDocument) -> Result<String> {
    let out = NativeDocument {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        name: doc.metadata.name.clone(),
        source: doc.metadata.source.clone(),
        checksum: Some(grid_checksum(&doc.grid)?),
        grid: doc.grid.clone(),
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(text)
}
