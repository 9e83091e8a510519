use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{ComponentRef, GridCase, Outages};

/// Active-power schedule and voltage setpoints of available generators,
/// keyed by generator id. Values are per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub gen_p: BTreeMap<usize, f64>,
    pub gen_v: BTreeMap<usize, f64>,
}

impl Dispatch {
    /// The case's own schedule for every in-service generator.
    pub fn base(case: &GridCase) -> Self {
        let mut gen_p = BTreeMap::new();
        let mut gen_v = BTreeMap::new();
        for g in case.generators.iter().filter(|g| g.in_service) {
            gen_p.insert(g.id, g.p_set);
            gen_v.insert(g.id, case.buses[g.bus].voltage_setpoint);
        }
        Dispatch { gen_p, gen_v }
    }

    pub fn total(&self) -> f64 {
        self.gen_p.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RedispatchOutcome {
    Feasible(Dispatch),
    /// Remaining units cannot cover the lost output; `shortfall` is in pu.
    Infeasible { shortfall: f64 },
}

/// Removes outaged generators and spreads their scheduled output over the
/// remaining units in proportion to headroom (`p_max - p`).
pub fn redispatch(case: &GridCase, outaged: &[ComponentRef]) -> Result<RedispatchOutcome> {
    let resolved = Outages::resolve(case, outaged)?;
    Ok(redispatch_resolved(case, &resolved))
}

/// Like [`redispatch`] but takes the generator outages one at a time in the
/// given order, each redistribution starting from the previous schedule.
pub fn redispatch_sequential(case: &GridCase, outaged: &[ComponentRef]) -> Result<RedispatchOutcome> {
    let resolved = Outages::resolve(case, outaged)?;
    Ok(redispatch_sequential_resolved(case, &resolved))
}

pub(crate) fn redispatch_resolved(case: &GridCase, outages: &Outages) -> RedispatchOutcome {
    let mut dispatch = Dispatch::base(case);
    let lost: Vec<usize> = outages.generators().to_vec();
    match redistribute(case, &mut dispatch, &lost) {
        Ok(()) => RedispatchOutcome::Feasible(dispatch),
        Err(shortfall) => RedispatchOutcome::Infeasible { shortfall },
    }
}

pub(crate) fn redispatch_sequential_resolved(case: &GridCase, outages: &Outages) -> RedispatchOutcome {
    let mut dispatch = Dispatch::base(case);
    for &k in outages.generators() {
        if let Err(shortfall) = redistribute(case, &mut dispatch, &[k]) {
            return RedispatchOutcome::Infeasible { shortfall };
        }
    }
    RedispatchOutcome::Feasible(dispatch)
}

fn redistribute(case: &GridCase, dispatch: &mut Dispatch, lost_units: &[usize]) -> std::result::Result<(), f64> {
    let mut lost = 0.0;
    for &k in lost_units {
        let id = case.generators[k].id;
        if let Some(p) = dispatch.gen_p.remove(&id) {
            lost += p;
        }
        dispatch.gen_v.remove(&id);
    }
    if lost == 0.0 {
        return Ok(());
    }
    let headroom: Vec<(usize, f64)> = case
        .generators
        .iter()
        .filter_map(|g| dispatch.gen_p.get(&g.id).map(|p| (g.id, (g.p_max - p).max(0.0))))
        .collect();
    let total: f64 = headroom.iter().map(|(_, h)| h).sum();
    if lost > total {
        return Err(lost - total);
    }
    for (id, h) in headroom {
        if h > 0.0 {
            let p = dispatch.gen_p.get_mut(&id).expect("unit present");
            let p_max = case.generators.iter().find(|g| g.id == id).map(|g| g.p_max).unwrap_or(*p);
            *p = (*p + lost * h / total).min(p_max);
        }
    }
    Ok(())
}
