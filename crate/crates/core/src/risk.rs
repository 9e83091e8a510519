//! Risk index: per-component sums of scenario frequency times severity,
//! split into single-outage and pair contributions, with ranked reports.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::caseio::ReliabilityTable;
use crate::engine::ScenarioResult;
use crate::error::{Error, Result};
use crate::grid::{ComponentKind, ComponentRef, GridCase};

/// How a severe pair is attributed to its two components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairAccounting {
    /// Every ordered scenario `(i, j)` adds `λ_i·λ_j` to both `R_i` and
    /// `R_j`, so a pair severe in both orders counts twice.
    #[default]
    Ordered,
    /// Half of the ordered contribution.
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEntry {
    pub component: ComponentRef,
    pub class: ComponentKind,
    /// Failure rate, 1/year.
    pub lambda: f64,
    /// Failure events per year from the single outage.
    pub n1_contribution: f64,
    /// Failure events per year from pairs containing the component.
    pub n2_contribution: f64,
    pub r_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRanking {
    pub accounting: PairAccounting,
    /// Descending by `r_total`; ties keep component order.
    pub entries: Vec<RiskEntry>,
}

impl RiskRanking {
    pub fn by_class(&self, class: ComponentKind) -> Vec<&RiskEntry> {
        self.entries.iter().filter(|e| e.class == class).collect()
    }

    pub fn top(&self, k: usize) -> &[RiskEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn get(&self, component: &ComponentRef) -> Option<&RiskEntry> {
        self.entries.iter().find(|e| &e.component == component)
    }
}

/// Frequency of an outage set: `λ_i` for one component, `λ_i·λ_j` for two.
pub fn scenario_frequency(outages: &[ComponentRef], table: &ReliabilityTable) -> Result<f64> {
    match outages {
        [a] => Ok(table.lambda(a)),
        [a, b] => Ok(table.lambda(a) * table.lambda(b)),
        [] => Err(Error::Contract("the base case has no frequency".into())),
        _ => Err(Error::Contract(format!("{} outages in one scenario", outages.len()))),
    }
}

/// Largest attainable index of `component`: `λ_i·(1 + 2·Σ_{j≠i} λ_j)`.
pub fn saturation_bound(component: &ComponentRef, universe: &[ComponentRef], table: &ReliabilityTable) -> f64 {
    let li = table.lambda(component);
    let others: f64 = universe
        .iter()
        .filter(|c| *c != component)
        .map(|c| table.lambda(c))
        .sum();
    li * (1.0 + 2.0 * others)
}

/// Aggregates severities into per-component indices. The results must cover
/// every single outage of the case and either no pairs or every ordered
/// pair; the base record, if present, is ignored.
pub fn compute_risk(
    results: &[ScenarioResult],
    table: &ReliabilityTable,
    case: &GridCase,
    accounting: PairAccounting,
) -> Result<RiskRanking> {
    let universe = case.component_universe();
    let n = universe.len();
    let position: HashMap<ComponentRef, usize> = universe.iter().enumerate().map(|(k, c)| (*c, k)).collect();
    let locate = |r: &ComponentRef| {
        position
            .get(r)
            .copied()
            .ok_or_else(|| Error::Consistency(format!("results mention {r}, which is not in the case")))
    };

    let mut single: Vec<Option<bool>> = vec![None; n];
    let mut pair: Vec<Option<bool>> = vec![None; n * n];
    let mut pairs_seen = 0usize;
    for r in results {
        let (slot, label) = match r.outages.as_slice() {
            [] => continue,
            [a] => (&mut single[locate(a)?], r.id.as_str()),
            [a, b] => {
                let (i, j) = (locate(a)?, locate(b)?);
                if i == j {
                    return Err(Error::Consistency(format!("record `{}` repeats a component", r.id)));
                }
                pairs_seen += 1;
                (&mut pair[i * n + j], r.id.as_str())
            }
            _ => return Err(Error::Consistency(format!("record `{}` has more than two outages", r.id))),
        };
        if slot.is_some() {
            return Err(Error::Consistency(format!("record `{label}` appears twice")));
        }
        *slot = Some(r.is_severe());
    }
    let missing_single = single.iter().filter(|s| s.is_none()).count();
    if missing_single > 0 {
        return Err(Error::Consistency(format!(
            "results cover {} of {n} single outages; ranking needs a complete run",
            n - missing_single
        )));
    }
    let expected_pairs = n * n.saturating_sub(1);
    if pairs_seen != 0 && pairs_seen != expected_pairs {
        return Err(Error::Consistency(format!(
            "results cover {pairs_seen} of {expected_pairs} ordered pairs; ranking needs a complete run"
        )));
    }
    let severe_pair = |i: usize, j: usize| pair[i * n + j] == Some(true);

    // pair terms are accumulated in enumeration order
    let lambdas: Vec<f64> = universe.iter().map(|c| table.lambda(c)).collect();
    let mut n2 = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if j != i && severe_pair(i, j) {
                let f = lambdas[i] * lambdas[j];
                n2[i] += f;
                n2[j] += f;
            }
        }
    }
    let mut entries: Vec<RiskEntry> = (0..n)
        .map(|i| {
            let n1 = if single[i] == Some(true) { lambdas[i] } else { 0.0 };
            let n2 = match accounting {
                PairAccounting::Ordered => n2[i],
                PairAccounting::Unordered => n2[i] * 0.5,
            };
            RiskEntry {
                component: universe[i],
                class: universe[i].kind,
                lambda: lambdas[i],
                n1_contribution: n1,
                n2_contribution: n2,
                r_total: n1 + n2,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.r_total.total_cmp(&a.r_total));
    Ok(RiskRanking { accounting, entries })
}

pub const RANKING_HEADER: [&str; 7] = [
    "rank",
    "component",
    "class",
    "lambda_per_year",
    "n1_risk",
    "n2_risk",
    "total_risk",
];

fn write_ranking_csv(path: &Path, entries: &[&RiskEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(RANKING_HEADER).map_err(|e| csv_error(path, e))?;
    for (k, e) in entries.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            e.component.to_string(),
            e.class.name().to_string(),
            e.lambda.to_string(),
            e.n1_contribution.to_string(),
            e.n2_contribution.to_string(),
            e.r_total.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Contract(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `ranking.csv` (the first `top_k` entries, or all),
/// `ranking_<class>.csv` for each class, `ranking.json` and `plotdata.csv`
/// into `dir`. Returns the written paths.
pub fn emit_reports(ranking: &RiskRanking, dir: &Path, top_k: Option<usize>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let combined: Vec<&RiskEntry> = ranking.top(top_k.unwrap_or(usize::MAX)).iter().collect();
    let path = dir.join("ranking.csv");
    write_ranking_csv(&path, &combined)?;
    written.push(path);

    for class in ComponentKind::ALL {
        let path = dir.join(format!("ranking_{}.csv", class.name()));
        write_ranking_csv(&path, &ranking.by_class(class))?;
        written.push(path);
    }

    let path = dir.join("ranking.json");
    let mut json = serde_json::to_string_pretty(ranking)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join("plotdata.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["label", "class", "n1", "n2"]).map_err(|e| csv_error(&path, e))?;
    for e in &ranking.entries {
        w.write_record([
            e.component.to_string(),
            e.class.name().to_string(),
            e.n1_contribution.to_string(),
            e.n2_contribution.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
