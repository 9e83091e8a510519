use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComponentRef, GridCase};

/// An outage set of zero, one or two components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    /// `base`, `n1:<ref>` or `n2:<ref>+<ref>`.
    pub id: String,
    pub outages: Vec<ComponentRef>,
    /// Position in the full enumeration.
    pub order_index: usize,
}

impl Scenario {
    pub fn order(&self) -> usize {
        self.outages.len()
    }
}

pub fn scenario_id(outages: &[ComponentRef]) -> String {
    match outages {
        [] => "base".to_string(),
        [a] => format!("n1:{a}"),
        [a, b] => format!("n2:{a}+{b}"),
        _ => unreachable!("scenarios hold at most two outages"),
    }
}

/// Random-access view of the scenario sequence: optional base case, every
/// single outage in component order, then every ordered pair `(i, j)` with
/// `j != i`, lexicographic by position in the component universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioEnumeration {
    universe: Vec<ComponentRef>,
    max_order: usize,
    include_base: bool,
}

impl ScenarioEnumeration {
    pub fn universe(&self) -> &[ComponentRef] {
        &self.universe
    }

    pub fn base_count(&self) -> usize {
        usize::from(self.include_base)
    }

    pub fn n1_count(&self) -> usize {
        self.universe.len()
    }

    pub fn n2_count(&self) -> usize {
        let n = self.universe.len();
        if self.max_order >= 2 {
            n * n.saturating_sub(1)
        } else {
            0
        }
    }

    pub fn len(&self) -> usize {
        self.base_count() + self.n1_count() + self.n2_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Universe positions of the outages of scenario `index`.
    pub fn positions(&self, index: usize) -> Option<Vec<usize>> {
        if index >= self.len() {
            return None;
        }
        let mut k = index;
        if self.include_base {
            if k == 0 {
                return Some(vec![]);
            }
            k -= 1;
        }
        let n = self.universe.len();
        if k < n {
            return Some(vec![k]);
        }
        k -= n;
        let i = k / (n - 1);
        let r = k % (n - 1);
        let j = if r < i { r } else { r + 1 };
        Some(vec![i, j])
    }

    /// Enumeration index of the scenario with the given universe positions.
    pub fn index_of(&self, positions: &[usize]) -> Option<usize> {
        let n = self.universe.len();
        let base = self.base_count();
        match *positions {
            [] if self.include_base => Some(0),
            [i] if i < n => Some(base + i),
            [i, j] if self.max_order >= 2 && i < n && j < n && i != j => {
                let r = if j < i { j } else { j - 1 };
                Some(base + n + i * (n - 1) + r)
            }
            _ => None,
        }
    }

    pub fn get(&self, index: usize) -> Option<Scenario> {
        let positions = self.positions(index)?;
        let outages: Vec<ComponentRef> = positions.iter().map(|&p| self.universe[p]).collect();
        Some(Scenario {
            id: scenario_id(&outages),
            outages,
            order_index: index,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Scenario> + '_ {
        (0..self.len()).map(move |k| self.get(k).expect("index in range"))
    }
}

pub fn enumerate_scenarios(case: &GridCase, max_order: usize, include_base: bool) -> Result<ScenarioEnumeration> {
    if !(1..=2).contains(&max_order) {
        return Err(Error::Contract(format!("max_order must be 1 or 2, got {max_order}")));
    }
    Ok(ScenarioEnumeration {
        universe: case.component_universe(),
        max_order,
        include_base,
    })
}
