//! Per-machine dynamic parameters, CSV header
//! `generator_id,h_seconds,d_pu,xd_transient_pu`. Machines without a row
//! keep the values already in the case.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{ComponentRef, GridCase};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DynamicsRow {
    pub generator_id: usize,
    pub h_seconds: f64,
    pub d_pu: f64,
    pub xd_transient_pu: f64,
}

pub fn load_dynamics(text: &str) -> Result<Vec<DynamicsRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("dynamics header", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["generator_id", "h_seconds", "d_pu", "xd_transient_pu"] {
        return Err(Error::parse(
            "dynamics header",
            "expected `generator_id,h_seconds,d_pu,xd_transient_pu`",
        ));
    }
    reader
        .deserialize::<DynamicsRow>()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| Error::parse(format!("dynamics line {}", k + 2), e.to_string())))
        .collect()
}

/// Returns a copy of `case` with the rows applied.
pub fn apply_dynamics(case: &GridCase, rows: &[DynamicsRow]) -> Result<GridCase> {
    let mut out = case.clone();
    let mut errs = Vec::new();
    for row in rows {
        let r = ComponentRef::generator(row.generator_id);
        match case.generator_index(&r) {
            Ok(k) => {
                let g = &mut out.generators[k];
                g.inertia_h = row.h_seconds;
                g.damping_d = row.d_pu;
                g.xd_transient = row.xd_transient_pu;
            }
            Err(_) => errs.push(format!("dynamics row references unknown generator {r}")),
        }
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    out.validate()?;
    Ok(out)
}
