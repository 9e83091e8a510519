//! Post-contingency connectivity: islands of the bus graph.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{ComponentRef, GridCase, Outages};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandPartition {
    /// Island index of every bus. Islands are numbered in order of their
    /// smallest bus id.
    pub labels: Vec<usize>,
    pub island_count: usize,
    /// The island containing the slack bus, or the island with the most
    /// available generation capacity when the slack bus has no available
    /// generator or is cut off on its own.
    pub main_island: usize,
    /// Load outside the main island, MW.
    pub islanded_load_mw: f64,
}

impl IslandPartition {
    pub fn buses_in(&self, island: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == island)
            .map(|(b, _)| b)
    }

    pub fn in_main(&self, bus: usize) -> bool {
        self.labels[bus] == self.main_island
    }
}

/// Labels connected components of an undirected graph on `n` vertices with
/// an iterative depth-first search.
pub fn connected_components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> (Vec<usize>, usize) {
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = count;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if labels[w] == usize::MAX {
                    labels[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

/// Islands of the network with `outages` removed. Only in-service,
/// non-outaged branches connect buses; generator outages affect the choice
/// of main island but never the partition.
pub fn find_islands(case: &GridCase, outages: &[ComponentRef]) -> Result<IslandPartition> {
    let resolved = Outages::resolve(case, outages)?;
    Ok(find_islands_resolved(case, &resolved))
}

pub(crate) fn find_islands_resolved(case: &GridCase, outages: &Outages) -> IslandPartition {
    let edges = case
        .branches
        .iter()
        .enumerate()
        .filter(|(k, b)| b.in_service && !outages.branch_out(*k))
        .map(|(_, b)| (b.from_bus, b.to_bus));
    let (labels, island_count) = connected_components(case.n_bus(), edges);

    let mut capacity = vec![0.0; island_count];
    let mut has_unit = vec![false; island_count];
    for (k, g) in case.generators.iter().enumerate() {
        if g.in_service && !outages.generator_out(k) {
            capacity[labels[g.bus]] += g.p_max;
            has_unit[labels[g.bus]] = true;
        }
    }

    let home = case.slack_bus().map(|s| labels[s]);
    let slack_island = home.filter(|&isl| {
        let slack_has_unit = case.generators.iter().enumerate().any(|(k, g)| {
            g.in_service && !outages.generator_out(k) && Some(g.bus) == case.slack_bus()
        });
        let size = labels.iter().filter(|&&l| l == isl).count();
        slack_has_unit && (size > 1 || island_count == 1)
    });
    let main_island = slack_island.unwrap_or_else(|| {
        let mut best: Option<usize> = None;
        for isl in 0..island_count {
            if !has_unit[isl] || Some(isl) == home {
                continue;
            }
            if best.map_or(true, |b| capacity[isl] > capacity[b]) {
                best = Some(isl);
            }
        }
        best.or(home).unwrap_or(0)
    });

    let islanded_load_mw = case
        .buses
        .iter()
        .enumerate()
        .filter(|(b, _)| labels[*b] != main_island)
        .map(|(_, bus)| bus.load_p * case.base_mva)
        .sum();

    IslandPartition {
        labels,
        island_count,
        main_island,
        islanded_load_mw,
    }
}

/// Any fragmentation of the network is a failure of maximum severity.
pub fn is_severe_islanding(partition: &IslandPartition) -> bool {
    partition.island_count > 1
}
