//! Post-contingency feasibility: redispatch of lost generation, AC power
//! flow and operating-limit checks.

mod limits;
mod newton;
mod redispatch;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use limits::{check_limits, BranchEnd, ThermalViolation, ViolationReport, VoltageViolation};
pub use newton::{select_slack, solve_power_flow, solve_power_flow_anchored};
pub(crate) use newton::{select_slack_resolved, solve_resolved};
pub use redispatch::{redispatch, redispatch_sequential, Dispatch, RedispatchOutcome};
pub(crate) use redispatch::{redispatch_resolved, redispatch_sequential_resolved};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowOptions {
    /// Convergence threshold on the infinity norm of the P/Q mismatch, pu.
    pub tol: f64,
    /// Newton iterations allowed per solve.
    pub max_iter: usize,
    /// Switch PV buses to PQ when their units hit a reactive limit.
    pub enforce_q_limits: bool,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tol: 1e-8,
            max_iter: 20,
            enforce_q_limits: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfFailure {
    Singular,
    MaxIterations,
    Diverged,
    QLimitCycling,
}

/// Complex power entering the branch at each end, pu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub from: Complex64,
    pub to: Complex64,
}

/// Operating point of the solved island. Buses outside it are reported
/// with zero voltage and `energized = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    pub energized: Vec<bool>,
    /// Final bus roles of energized buses (PV buses that hit a reactive
    /// limit appear as PQ).
    pub bus_kinds: Vec<Option<crate::BusKind>>,
    /// Flows derived from the voltages; zero for open branches.
    pub branch_flow: Vec<BranchFlow>,
    /// Active output per generator (case order), pu. Zero when unavailable.
    pub gen_p: Vec<f64>,
    /// Reactive output per generator (case order), pu.
    pub gen_q: Vec<f64>,
    pub slack_bus: usize,
    /// Active injection of the slack bus units, pu.
    pub slack_p: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub failure: Option<PfFailure>,
}

impl PowerFlowSolution {
    pub fn voltage(&self, bus: usize) -> Complex64 {
        Complex64::from_polar(self.v_mag[bus], self.v_ang[bus])
    }
}
