//! Scenario enumeration, per-scenario evaluation and persisted parallel
//! runs.

mod evaluate;
mod run;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powerflow::PowerFlowOptions;
use crate::smallsignal::DEFAULT_EPS_STAB;

pub use evaluate::{evaluate_scenario, Evaluator, Reason, ScenarioDetail, ScenarioResult, ViolationCounts};
pub use run::{
    plan_indices, read_manifest, read_results, run_all, ConfigEcho, OutcomeCounts, RunManifest, RunOutput,
    ScenarioCounts, CHECKPOINT_FILE, MANIFEST_FILE, RESULTS_FILE,
};
pub use scenario::{enumerate_scenarios, scenario_id, Scenario, ScenarioEnumeration};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// 1 for single outages only, 2 to add ordered pairs.
    pub max_order: usize,
    pub include_base: bool,
    pub pf: PowerFlowOptions,
    /// Guard band of the stability test: unstable when the spectral
    /// abscissa is at or above `-eps_stab`.
    pub eps_stab: f64,
    /// Evaluate each ordered pair on its own, redispatching after the first
    /// outage and then after the second. When off, a pair and its mirror
    /// share one evaluation.
    pub sequential_redispatch: bool,
    /// Start every power flow from the base-case solution instead of flat.
    pub warm_start: bool,
    pub workers: usize,
    /// Evaluate an evenly strided sample of this many scenarios.
    pub limit: Option<usize>,
    /// Record wall-clock time per scenario; when off `runtime_ms` is 0 and
    /// results files are byte-for-byte reproducible.
    pub record_runtime: bool,
    /// Maximum number of scenarios in flight ahead of the writer; 0 picks
    /// four per worker.
    pub reorder_window: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_order: 2,
            include_base: true,
            pf: PowerFlowOptions::default(),
            eps_stab: DEFAULT_EPS_STAB,
            sequential_redispatch: false,
            warm_start: false,
            workers: 1,
            limit: None,
            record_runtime: true,
            reorder_window: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(1..=2).contains(&self.max_order) {
            problems.push(format!("order must be 1 or 2, got {}", self.max_order));
        }
        if self.workers == 0 {
            problems.push("workers must be at least 1".to_string());
        }
        if !(self.pf.tol > 0.0) {
            problems.push(format!("power-flow tolerance must be positive, got {}", self.pf.tol));
        }
        if self.pf.max_iter == 0 {
            problems.push("max_iter must be positive".to_string());
        }
        if !(self.eps_stab > 0.0) {
            problems.push(format!("eps_stab must be positive, got {}", self.eps_stab));
        }
        if self.limit == Some(0) {
            problems.push("limit must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub(crate) fn window(&self) -> usize {
        let floor = 2 * self.workers;
        if self.reorder_window == 0 {
            (4 * self.workers).max(16)
        } else {
            self.reorder_window.max(floor)
        }
    }
}
