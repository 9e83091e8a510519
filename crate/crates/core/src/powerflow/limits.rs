use serde::{Deserialize, Serialize};

use super::PowerFlowSolution;
use crate::error::{Error, Result};
use crate::grid::{ComponentRef, GridCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchEnd {
    From,
    To,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalViolation {
    pub branch: ComponentRef,
    pub end: BranchEnd,
    /// |S| / rating, always above 1.
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageViolation {
    pub bus: usize,
    pub v: f64,
    /// The bound that was crossed.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub thermal: Vec<ThermalViolation>,
    pub voltage: Vec<VoltageViolation>,
    pub any: bool,
}

/// Thermal overloads per branch end and voltage excursions per energized
/// bus, in case order.
pub fn check_limits(solution: &PowerFlowSolution, case: &GridCase) -> Result<ViolationReport> {
    if !solution.converged {
        return Err(Error::Contract("check_limits needs a converged power flow".into()));
    }
    let mut report = ViolationReport::default();
    for (k, br) in case.branches.iter().enumerate() {
        let Some(rating) = br.rating else { continue };
        let flow = &solution.branch_flow[k];
        for (end, s) in [(BranchEnd::From, flow.from), (BranchEnd::To, flow.to)] {
            let loading = s.norm() / rating;
            if loading > 1.0 {
                report.thermal.push(ThermalViolation {
                    branch: case.branch_ref(k),
                    end,
                    loading,
                });
            }
        }
    }
    for (b, bus) in case.buses.iter().enumerate() {
        if !solution.energized[b] {
            continue;
        }
        let v = solution.v_mag[b];
        let bound = if v < bus.vmin {
            bus.vmin
        } else if v > bus.vmax {
            bus.vmax
        } else {
            continue;
        };
        report.voltage.push(VoltageViolation { bus: b, v, bound });
    }
    report.any = !report.thermal.is_empty() || !report.voltage.is_empty();
    Ok(report)
}
