//! MATPOWER version 2 case files (`baseMVA`, `bus`, `gen` and `branch`).
//!
//! The text is read statement by statement: `mpc.<name> = <scalar>;` or
//! `mpc.<name> = [ rows ];`. Other blocks (gencost, dcline, areas, ...) are
//! skipped with a warning.

use std::collections::HashMap;

use super::{CaseDocument, DEFAULT_DAMPING_D, DEFAULT_INERTIA_H, DEFAULT_XD_TRANSIENT};
use crate::error::{Error, Result};
use crate::grid::{Branch, BranchKind, Bus, BusKind, Generator, GridCase};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;
const DEFAULT_FREQUENCY_HZ: f64 = 60.0;

enum Value {
    Scalar(String),
    Matrix(Vec<Vec<f64>>),
}

/// Parses MATPOWER text into a validated case. Branches with a nonzero
/// ratio column are transformers, the rest lines; each class is numbered
/// from 0 in row order, as are generators.
pub fn parse_matpower_case(text: &str) -> Result<CaseDocument> {
    let mut warnings = Vec::new();
    let mut name = String::from("matpower");
    let stripped = strip_comments(text);

    let mut values: HashMap<String, Value> = HashMap::new();
    let mut rest = stripped.as_str();
    while let Some(pos) = rest.find("mpc.") {
        // `function mpc = name` header
        if let Some(fpos) = rest[..pos].find("function") {
            let header = &rest[fpos..pos];
            if let Some(eq) = header.find('=') {
                let n = header[eq + 1..].trim();
                if !n.is_empty() {
                    name = n.to_string();
                }
            }
        }
        rest = &rest[pos + 4..];
        let ident_len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let ident = rest[..ident_len].to_string();
        rest = rest[ident_len..].trim_start();
        let Some(after_eq) = rest.strip_prefix('=') else {
            return Err(Error::parse(format!("mpc.{ident}"), "expected `=`"));
        };
        let after_eq = after_eq.trim_start();
        if let Some(body) = after_eq.strip_prefix('[') {
            let close = body
                .find(']')
                .ok_or_else(|| Error::parse(format!("mpc.{ident}"), "unterminated matrix"))?;
            let rows = if matches!(ident.as_str(), "bus" | "gen" | "branch") {
                parse_matrix(&ident, &body[..close])?
            } else {
                Vec::new()
            };
            values.insert(ident, Value::Matrix(rows));
            rest = &body[close + 1..];
        } else if after_eq.starts_with('{') {
            // cell arrays such as bus_name
            let close = after_eq
                .find('}')
                .ok_or_else(|| Error::parse(format!("mpc.{ident}"), "unterminated cell array"))?;
            values.insert(ident, Value::Scalar(String::new()));
            rest = &after_eq[close + 1..];
        } else {
            let end = after_eq.find([';', '\n']).unwrap_or(after_eq.len());
            values.insert(ident, Value::Scalar(after_eq[..end].trim().to_string()));
            rest = &after_eq[end..];
        }
    }

    let mut known = ["version", "baseMVA", "bus", "gen", "branch"].to_vec();
    known.sort_unstable();
    let mut ignored: Vec<&String> = values
        .keys()
        .filter(|k| known.binary_search(&k.as_str()).is_err())
        .collect();
    ignored.sort();
    for k in ignored {
        warnings.push(format!("ignored unsupported block `mpc.{k}`"));
    }

    if let Some(Value::Scalar(v)) = values.get("version") {
        let v = v.trim_matches(|c| c == '\'' || c == '"');
        if v != "2" {
            return Err(Error::parse("mpc.version", format!("unsupported case version `{v}`")));
        }
    }
    let base_mva = match values.get("baseMVA") {
        Some(Value::Scalar(s)) => s
            .parse::<f64>()
            .map_err(|_| Error::parse("mpc.baseMVA", format!("`{s}` is not a number")))?,
        _ => return Err(Error::parse("mpc.baseMVA", "missing")),
    };
    if !(base_mva > 0.0) {
        return Err(Error::parse("mpc.baseMVA", "must be positive"));
    }
    let bus_rows = matrix(&values, "bus")?;
    let gen_rows = matrix(&values, "gen")?;
    let branch_rows = matrix(&values, "branch")?;

    // dense bus ids in row order
    let mut bus_index: HashMap<i64, usize> = HashMap::new();
    for (k, row) in bus_rows.iter().enumerate() {
        let ext = as_id(row[0], "bus", k)?;
        if bus_index.insert(ext, k).is_some() {
            return Err(Error::parse(format!("bus row {}", k + 1), format!("duplicate bus number {ext}")));
        }
    }
    let lookup = |ext: f64, block: &str, row: usize| -> Result<usize> {
        let id = as_id(ext, block, row)?;
        bus_index.get(&id).copied().ok_or_else(|| {
            Error::parse(format!("{block} row {}", row + 1), format!("references unknown bus {id}"))
        })
    };

    let mut buses = Vec::with_capacity(bus_rows.len());
    for (k, row) in bus_rows.iter().enumerate() {
        let kind = match row[1] as i64 {
            1 => BusKind::PQ,
            2 => BusKind::PV,
            3 => BusKind::Slack,
            4 => {
                warnings.push(format!("bus {} is marked isolated (type 4); treated as PQ", row[0]));
                BusKind::PQ
            }
            other => {
                return Err(Error::parse(format!("bus row {}", k + 1), format!("invalid bus type {other}")))
            }
        };
        buses.push(Bus {
            id: k,
            external_id: row[0] as i64,
            kind,
            voltage_setpoint: if row[7] > 0.0 { row[7] } else { 1.0 },
            load_p: row[2] / base_mva,
            load_q: row[3] / base_mva,
            shunt_g: row[4] / base_mva,
            shunt_b: row[5] / base_mva,
            vmin: row[12],
            vmax: row[11],
        });
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    let mut setpoint_taken = vec![false; buses.len()];
    for (k, row) in gen_rows.iter().enumerate() {
        let bus = lookup(row[0], "gen", k)?;
        let in_service = row[7] > 0.0;
        if in_service && !setpoint_taken[bus] {
            buses[bus].voltage_setpoint = row[5];
            setpoint_taken[bus] = true;
        }
        generators.push(Generator {
            id: k,
            bus,
            p_set: row[1] / base_mva,
            p_min: row[9] / base_mva,
            p_max: row[8] / base_mva,
            q_min: row[4] / base_mva,
            q_max: row[3] / base_mva,
            mva_base: if row[6] > 0.0 { row[6] } else { base_mva },
            inertia_h: DEFAULT_INERTIA_H,
            damping_d: DEFAULT_DAMPING_D,
            xd_transient: DEFAULT_XD_TRANSIENT,
            in_service,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    let (mut n_line, mut n_trafo) = (0usize, 0usize);
    for (k, row) in branch_rows.iter().enumerate() {
        let from_bus = lookup(row[0], "branch", k)?;
        let to_bus = lookup(row[1], "branch", k)?;
        if row[9] != 0.0 {
            return Err(Error::parse(
                format!("branch row {}", k + 1),
                "phase-shifting transformers are not supported",
            ));
        }
        let (kind, id) = if row[8] != 0.0 {
            n_trafo += 1;
            (BranchKind::Transformer, n_trafo - 1)
        } else {
            n_line += 1;
            (BranchKind::Line, n_line - 1)
        };
        branches.push(Branch {
            id,
            from_bus,
            to_bus,
            kind,
            r: row[2],
            x: row[3],
            b_shunt: row[4],
            tap_ratio: if row[8] != 0.0 { row[8] } else { 1.0 },
            rating: if row[5] > 0.0 { Some(row[5] / base_mva) } else { None },
            in_service: row[10] > 0.0,
        });
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    let grid = GridCase {
        base_mva,
        frequency: DEFAULT_FREQUENCY_HZ,
        buses,
        branches,
        generators,
    };
    CaseDocument::new(grid, name, "matpower".to_string(), warnings)
}

fn matrix<'a>(values: &'a HashMap<String, Value>, name: &str) -> Result<&'a Vec<Vec<f64>>> {
    match values.get(name) {
        Some(Value::Matrix(rows)) => Ok(rows),
        _ => Err(Error::parse(format!("mpc.{name}"), "missing matrix block")),
    }
}

fn as_id(v: f64, block: &str, row: usize) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::parse(format!("{block} row {}", row + 1), format!("`{v}` is not an integer bus number")));
    }
    Ok(v as i64)
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_quote = false;
        for c in line.chars() {
            match c {
                '\'' => in_quote = !in_quote,
                '%' if !in_quote => break,
                _ => {}
            }
            out.push(c);
        }
        out.push('\n');
    }
    out
}

fn parse_matrix(block: &str, body: &str) -> Result<Vec<Vec<f64>>> {
    let min_cols = match block {
        "bus" => BUS_COLS,
        "gen" => GEN_COLS,
        _ => BRANCH_COLS,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for raw in body.split([';', '\n']) {
        let raw = raw.trim();
        if raw.is_empty() || raw == "..." {
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::new();
        for tok in raw.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v = match tok {
                "Inf" | "inf" => f64::INFINITY,
                "-Inf" | "-inf" => f64::NEG_INFINITY,
                _ => tok.parse::<f64>().map_err(|_| {
                    Error::parse(format!("{block} row {row_no}"), format!("`{tok}` is not a number"))
                })?,
            };
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    format!("{block} row {row_no}"),
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        } else if row.len() < min_cols {
            return Err(Error::parse(
                format!("{block} row {row_no}"),
                format!("expected at least {min_cols} columns, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}
