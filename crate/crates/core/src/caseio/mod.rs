//! Case, reliability and dynamics file formats.

mod dynamics;
mod matpower;
mod native;
mod reliability;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridCase;

pub use dynamics::{apply_dynamics, load_dynamics, DynamicsRow};
pub use matpower::parse_matpower_case;
pub use native::{parse_native_case, serialize_native_case};
pub use reliability::{load_reliability, ReliabilityTable};

/// Default dynamic parameters for machines whose source format has none:
/// inertia in seconds, damping in per unit, transient reactance in per unit
/// on machine base.
pub const DEFAULT_INERTIA_H: f64 = 4.0;
pub const DEFAULT_DAMPING_D: f64 = 2.0;
pub const DEFAULT_XD_TRANSIENT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CaseMetadata {
    pub name: String,
    pub source: String,
    /// `sha256:<hex>` of the canonical serialized grid.
    pub checksum: String,
    /// Non-fatal import notes (ignored blocks and similar).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDocument {
    pub grid: GridCase,
    pub metadata: CaseMetadata,
}

impl CaseDocument {
    pub(crate) fn new(grid: GridCase, name: String, source: String, warnings: Vec<String>) -> Result<Self> {
        grid.validate()?;
        let checksum = grid_checksum(&grid)?;
        Ok(CaseDocument {
            grid,
            metadata: CaseMetadata {
                name,
                source,
                checksum,
                warnings,
            },
        })
    }
}

/// Content hash of the canonical (compact JSON) serialization of a grid.
pub fn grid_checksum(grid: &GridCase) -> Result<String> {
    let bytes = serde_json::to_vec(grid)?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a case file, choosing the parser by extension (`.m` is MATPOWER,
/// anything else native JSON).
pub fn read_case(path: &Path) -> Result<CaseDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_matpower = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("m"))
        .unwrap_or(false);
    if is_matpower {
        parse_matpower_case(&text)
    } else {
        parse_native_case(&text)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
