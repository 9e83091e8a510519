//! Component failure rates.
//!
//! CSV with header `kind,target,value,unit`. `kind` is `lambda` (failures
//! per year) or `mttf` (mean time to failure); `target` is a class (`line`,
//! `transformer`, `generator`) or a single component (`line:39`). Rows are
//! applied in file order, later rows winning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComponentKind, ComponentRef, GridCase};

const HOURS_PER_YEAR: f64 = 8760.0;

/// Failure rates in failures per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub class_defaults: BTreeMap<ComponentKind, f64>,
    pub overrides: BTreeMap<ComponentRef, f64>,
}

impl Default for ReliabilityTable {
    /// Lines 0.05/yr (MTTF 20 y), transformers 0.02/yr (50 y), generators
    /// 0.10/yr (10 y).
    fn default() -> Self {
        let class_defaults = BTreeMap::from([
            (ComponentKind::Line, 0.05),
            (ComponentKind::Transformer, 0.02),
            (ComponentKind::Generator, 0.10),
        ]);
        ReliabilityTable {
            class_defaults,
            overrides: BTreeMap::new(),
        }
    }
}

impl ReliabilityTable {
    pub fn lambda(&self, component: &ComponentRef) -> f64 {
        self.overrides
            .get(component)
            .or_else(|| self.class_defaults.get(&component.kind))
            .copied()
            .unwrap_or(0.0)
    }

    /// Returns a copy with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ReliabilityTable {
            class_defaults: self.class_defaults.iter().map(|(k, v)| (*k, v * factor)).collect(),
            overrides: self.overrides.iter().map(|(k, v)| (*k, v * factor)).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    kind: String,
    target: String,
    value: f64,
    unit: String,
}

/// Reads a reliability CSV against `case`. Classes the file does not
/// mention keep the defaults of [`ReliabilityTable::default`].
pub fn load_reliability(text: &str, case: &GridCase) -> Result<ReliabilityTable> {
    let mut table = ReliabilityTable::default();
    if text.trim().is_empty() {
        return Ok(table);
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("reliability header", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["kind", "target", "value", "unit"] {
        return Err(Error::parse(
            "reliability header",
            format!("expected `kind,target,value,unit`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut errs = Vec::new();
    for (k, rec) in reader.deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = rec.map_err(|e| Error::parse(format!("reliability line {line}"), e.to_string()))?;
        let lambda = match to_lambda(&row) {
            Ok(l) => l,
            Err(msg) => {
                errs.push(format!("line {line}: {msg}"));
                continue;
            }
        };
        if row.target.contains(':') {
            let component: ComponentRef = row
                .target
                .parse()
                .map_err(|_| Error::parse(format!("reliability line {line}"), format!("bad target `{}`", row.target)))?;
            if !case.contains(&component) {
                errs.push(format!("line {line}: override references unknown component {component}"));
                continue;
            }
            table.overrides.insert(component, lambda);
        } else {
            let class: ComponentKind = row
                .target
                .parse()
                .map_err(|_| Error::parse(format!("reliability line {line}"), format!("bad target `{}`", row.target)))?;
            table.class_defaults.insert(class, lambda);
        }
    }
    if errs.is_empty() {
        Ok(table)
    } else {
        Err(Error::Validation(errs))
    }
}

fn to_lambda(row: &Row) -> std::result::Result<f64, String> {
    if !(row.value > 0.0) || !row.value.is_finite() {
        return Err(format!("value must be positive and finite, got {}", row.value));
    }
    let unit = row.unit.to_ascii_lowercase();
    match row.kind.to_ascii_lowercase().as_str() {
        "lambda" => match unit.as_str() {
            "per_year" | "1/yr" | "1/year" | "/yr" => Ok(row.value),
            "per_hour" | "1/h" => Ok(row.value * HOURS_PER_YEAR),
            _ => Err(format!("unknown failure-rate unit `{}`", row.unit)),
        },
        "mttf" => match unit.as_str() {
            "years" | "year" | "yr" | "y" => Ok(1.0 / row.value),
            "hours" | "hour" | "h" => Ok(HOURS_PER_YEAR / row.value),
            _ => Err(format!("unknown MTTF unit `{}`", row.unit)),
        },
        other => Err(format!("kind must be `lambda` or `mttf`, got `{other}`")),
    }
}
