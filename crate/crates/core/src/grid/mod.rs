//! Immutable network model.
//!
//! All electrical quantities are per-unit on the case `base_mva`, angles are
//! radians. Bus ids are dense (`0..n_bus`); the id each bus carried in its
//! source file is kept in [`Bus::external_id`] for reporting.

mod ybus;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ybus::{build_ybus, AdmittanceMatrix};
pub(crate) use ybus::{branch_admittances, build_ybus_resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    pub external_id: i64,
    pub kind: BusKind,
    /// Voltage magnitude setpoint, used for PV and slack buses.
    #[serde(rename = "voltage_setpoint_pu")]
    pub voltage_setpoint: f64,
    #[serde(rename = "load_p_pu")]
    pub load_p: f64,
    #[serde(rename = "load_q_pu")]
    pub load_q: f64,
    /// Fixed shunt conductance at nominal voltage.
    #[serde(rename = "shunt_g_pu", default)]
    pub shunt_g: f64,
    /// Fixed shunt susceptance at nominal voltage (positive = capacitive).
    #[serde(rename = "shunt_b_pu", default)]
    pub shunt_b: f64,
    #[serde(rename = "vmin_pu")]
    pub vmin: f64,
    #[serde(rename = "vmax_pu")]
    pub vmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Line,
    Transformer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    /// Id within the branch's class: lines and transformers are numbered
    /// independently.
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub kind: BranchKind,
    #[serde(rename = "r_pu")]
    pub r: f64,
    #[serde(rename = "x_pu")]
    pub x: f64,
    /// Total line charging susceptance, split evenly between the ends.
    #[serde(rename = "b_shunt_pu")]
    pub b_shunt: f64,
    /// Off-nominal turns ratio on the from side (1.0 for lines).
    pub tap_ratio: f64,
    /// Thermal limit; `None` means unlimited.
    #[serde(rename = "rating_pu")]
    pub rating: Option<f64>,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    #[serde(rename = "p_set_pu")]
    pub p_set: f64,
    #[serde(rename = "p_min_pu")]
    pub p_min: f64,
    #[serde(rename = "p_max_pu")]
    pub p_max: f64,
    #[serde(rename = "q_min_pu")]
    pub q_min: f64,
    #[serde(rename = "q_max_pu")]
    pub q_max: f64,
    /// Machine rating in MVA; dynamic parameters are on this base.
    pub mva_base: f64,
    /// Inertia constant in seconds.
    pub inertia_h: f64,
    /// Damping, per-unit torque per per-unit speed on machine base.
    pub damping_d: f64,
    /// Transient reactance on machine base.
    pub xd_transient: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCase {
    pub base_mva: f64,
    pub frequency: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// The three classes of outageable components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Line,
    Transformer,
    Generator,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 3] = [
        ComponentKind::Line,
        ComponentKind::Transformer,
        ComponentKind::Generator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Line => "line",
            ComponentKind::Transformer => "transformer",
            ComponentKind::Generator => "generator",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            ComponentKind::Line => "line",
            ComponentKind::Transformer => "transformer",
            ComponentKind::Generator => "gen",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" | "lines" => Ok(ComponentKind::Line),
            "transformer" | "transformers" | "trafo" => Ok(ComponentKind::Transformer),
            "generator" | "generators" | "gen" => Ok(ComponentKind::Generator),
            other => Err(Error::parse("component class", format!("unknown class `{other}`"))),
        }
    }
}

impl From<BranchKind> for ComponentKind {
    fn from(kind: BranchKind) -> Self {
        match kind {
            BranchKind::Line => ComponentKind::Line,
            BranchKind::Transformer => ComponentKind::Transformer,
        }
    }
}

/// Reference to one outageable component, printed as `line:17`,
/// `transformer:3` or `gen:41`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentRef {
    pub kind: ComponentKind,
    pub id: usize,
}

impl ComponentRef {
    pub fn new(kind: ComponentKind, id: usize) -> Self {
        ComponentRef { kind, id }
    }

    pub fn line(id: usize) -> Self {
        Self::new(ComponentKind::Line, id)
    }

    pub fn transformer(id: usize) -> Self {
        Self::new(ComponentKind::Transformer, id)
    }

    pub fn generator(id: usize) -> Self {
        Self::new(ComponentKind::Generator, id)
    }
}

impl fmt::Display for ComponentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.prefix(), self.id)
    }
}

impl FromStr for ComponentRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, id) = s
            .split_once(':')
            .ok_or_else(|| Error::parse("component reference", format!("`{s}` is not <class>:<id>")))?;
        let kind: ComponentKind = kind.parse()?;
        let id = id.trim().parse::<usize>().map_err(|_| {
            Error::parse("component reference", format!("`{s}` has a non-numeric id"))
        })?;
        Ok(ComponentRef { kind, id })
    }
}

impl Serialize for ComponentRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComponentRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outages resolved to positions in the case's branch and generator lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Outages {
    branches: Vec<usize>,
    generators: Vec<usize>,
}

impl Outages {
    pub(crate) fn resolve(case: &GridCase, refs: &[ComponentRef]) -> Result<Self> {
        let mut out = Outages::default();
        for r in refs {
            match r.kind {
                ComponentKind::Generator => out.generators.push(case.generator_index(r)?),
                _ => out.branches.push(case.branch_index(r)?),
            }
        }
        Ok(out)
    }

    pub(crate) fn branch_out(&self, index: usize) -> bool {
        self.branches.contains(&index)
    }

    pub(crate) fn generator_out(&self, index: usize) -> bool {
        self.generators.contains(&index)
    }

    pub(crate) fn generators(&self) -> &[usize] {
        &self.generators
    }
}

impl GridCase {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.count_branches(BranchKind::Line)
    }

    pub fn n_transformers(&self) -> usize {
        self.count_branches(BranchKind::Transformer)
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    fn count_branches(&self, kind: BranchKind) -> usize {
        self.branches.iter().filter(|b| b.kind == kind).count()
    }

    /// Every outageable component: lines by id, then transformers by id,
    /// then generators by id.
    pub fn component_universe(&self) -> Vec<ComponentRef> {
        let mut lines: Vec<usize> = Vec::new();
        let mut transformers: Vec<usize> = Vec::new();
        for b in &self.branches {
            match b.kind {
                BranchKind::Line => lines.push(b.id),
                BranchKind::Transformer => transformers.push(b.id),
            }
        }
        let mut gens: Vec<usize> = self.generators.iter().map(|g| g.id).collect();
        lines.sort_unstable();
        transformers.sort_unstable();
        gens.sort_unstable();
        lines
            .into_iter()
            .map(ComponentRef::line)
            .chain(transformers.into_iter().map(ComponentRef::transformer))
            .chain(gens.into_iter().map(ComponentRef::generator))
            .collect()
    }

    pub fn branch_index(&self, r: &ComponentRef) -> Result<usize> {
        let kind = match r.kind {
            ComponentKind::Line => BranchKind::Line,
            ComponentKind::Transformer => BranchKind::Transformer,
            ComponentKind::Generator => return Err(Error::UnknownComponent(r.to_string())),
        };
        self.branches
            .iter()
            .position(|b| b.kind == kind && b.id == r.id)
            .ok_or_else(|| Error::UnknownComponent(r.to_string()))
    }

    pub fn generator_index(&self, r: &ComponentRef) -> Result<usize> {
        if r.kind != ComponentKind::Generator {
            return Err(Error::UnknownComponent(r.to_string()));
        }
        self.generators
            .iter()
            .position(|g| g.id == r.id)
            .ok_or_else(|| Error::UnknownComponent(r.to_string()))
    }

    pub fn contains(&self, r: &ComponentRef) -> bool {
        match r.kind {
            ComponentKind::Generator => self.generator_index(r).is_ok(),
            _ => self.branch_index(r).is_ok(),
        }
    }

    pub fn branch_ref(&self, index: usize) -> ComponentRef {
        let b = &self.branches[index];
        ComponentRef::new(b.kind.into(), b.id)
    }

    /// Index of the (unique) slack bus, if any.
    pub fn slack_bus(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Checks every model invariant and reports all breaches at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let n = self.buses.len();

        if !(self.base_mva > 0.0) {
            errs.push(format!("base_mva must be positive, got {}", self.base_mva));
        }
        if !(self.frequency > 0.0) {
            errs.push(format!("frequency must be positive, got {}", self.frequency));
        }

        let slacks: Vec<i64> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.external_id)
            .collect();
        match slacks.len() {
            0 => errs.push("no slack bus".to_string()),
            1 => {}
            _ => errs.push(format!(
                "multiple slack buses: {}",
                slacks.iter().map(|s| format!("bus {s}")).collect::<Vec<_>>().join(", ")
            )),
        }

        for (pos, b) in self.buses.iter().enumerate() {
            if b.id != pos {
                errs.push(format!(
                    "bus ids must be dense and ordered: position {pos} holds id {}",
                    b.id
                ));
            }
            if !(b.vmin > 0.0 && b.vmin < b.vmax) {
                errs.push(format!(
                    "bus {}: voltage bounds must satisfy 0 < vmin < vmax (vmin={}, vmax={})",
                    b.external_id, b.vmin, b.vmax
                ));
            }
            if matches!(b.kind, BusKind::Slack | BusKind::PV) && !(b.voltage_setpoint > 0.0) {
                errs.push(format!(
                    "bus {}: voltage setpoint must be positive",
                    b.external_id
                ));
            }
            if ![b.voltage_setpoint, b.load_p, b.load_q, b.shunt_g, b.shunt_b]
                .iter()
                .all(|v| v.is_finite())
            {
                errs.push(format!("bus {}: non-finite value", b.external_id));
            }
        }
        let ext: HashSet<i64> = self.buses.iter().map(|b| b.external_id).collect();
        if ext.len() != n {
            errs.push("external bus ids are not unique".to_string());
        }

        let mut branch_ids: HashSet<(BranchKind, usize)> = HashSet::new();
        for b in &self.branches {
            let label = format!("{}", ComponentRef::new(b.kind.into(), b.id));
            if !branch_ids.insert((b.kind, b.id)) {
                errs.push(format!("{label}: duplicate id"));
            }
            if b.from_bus >= n || b.to_bus >= n {
                errs.push(format!("{label}: endpoint references a missing bus"));
            }
            if b.from_bus == b.to_bus {
                errs.push(format!("{label}: from_bus equals to_bus"));
            }
            if b.x == 0.0 || !b.x.is_finite() || !b.r.is_finite() || !b.b_shunt.is_finite() {
                errs.push(format!("{label}: series reactance must be finite and nonzero"));
            }
            if !(b.tap_ratio > 0.0 && b.tap_ratio.is_finite()) {
                errs.push(format!("{label}: tap ratio must be positive"));
            }
            if let Some(rating) = b.rating {
                if !(rating > 0.0) {
                    errs.push(format!("{label}: rating must be positive"));
                }
            }
        }

        let mut gen_ids: BTreeSet<usize> = BTreeSet::new();
        for g in &self.generators {
            let label = format!("{}", ComponentRef::generator(g.id));
            if !gen_ids.insert(g.id) {
                errs.push(format!("{label}: duplicate id"));
            }
            if g.bus >= n {
                errs.push(format!("{label}: references a missing bus"));
            }
            if !(g.p_min <= g.p_set && g.p_set <= g.p_max) {
                errs.push(format!(
                    "{label}: requires p_min <= p_set <= p_max ({} <= {} <= {})",
                    g.p_min, g.p_set, g.p_max
                ));
            }
            if g.q_min > g.q_max {
                errs.push(format!("{label}: q_min exceeds q_max"));
            }
            if !(g.mva_base > 0.0) {
                errs.push(format!("{label}: mva_base must be positive"));
            }
            if !(g.inertia_h > 0.0) {
                errs.push(format!("{label}: inertia_h must be positive"));
            }
            if !(g.xd_transient > 0.0) {
                errs.push(format!("{label}: xd_transient must be positive"));
            }
            if !(g.damping_d >= 0.0) {
                errs.push(format!("{label}: damping_d must be non-negative"));
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}
