use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{EngineConfig, Scenario};
use crate::error::{Error, Result};
use crate::grid::{ComponentRef, GridCase, Outages};
use crate::powerflow::{
    check_limits, redispatch_resolved, select_slack_resolved, redispatch_sequential_resolved,
    solve_resolved, Dispatch, PowerFlowSolution, RedispatchOutcome, ViolationReport,
};
use crate::smallsignal::{eigenvalues, linearize_resolved, DynamicParams, Linearization, SpectralReport, StateMatrix};
use crate::topology::find_islands_resolved;

/// Causes of a severe classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    PfDiverged,
    LimitViolation,
    Islanding,
    SmallSignal,
    LinearizationFailed,
    RedispatchInfeasible,
    EigensolveFailed,
    InternalError,
}

impl Reason {
    pub const ALL: [Reason; 8] = [
        Reason::PfDiverged,
        Reason::LimitViolation,
        Reason::Islanding,
        Reason::SmallSignal,
        Reason::LinearizationFailed,
        Reason::RedispatchInfeasible,
        Reason::EigensolveFailed,
        Reason::InternalError,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub thermal: usize,
    pub voltage: usize,
}

impl From<&ViolationReport> for ViolationCounts {
    fn from(r: &ViolationReport) -> Self {
        ViolationCounts {
            thermal: r.thermal.len(),
            voltage: r.voltage.len(),
        }
    }
}

/// One persisted record per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioResult {
    pub id: String,
    pub outages: Vec<ComponentRef>,
    pub pf_converged: bool,
    pub island_count: usize,
    pub spectral_abscissa: Option<f64>,
    pub severity: u8,
    pub reason: Vec<Reason>,
    pub violations: ViolationCounts,
    pub runtime_ms: f64,
}

impl ScenarioResult {
    pub fn is_severe(&self) -> bool {
        self.severity == 1
    }
}

/// Intermediate artifacts of an evaluation, for inspection and testing.
#[derive(Debug, Clone)]
pub struct ScenarioDetail {
    pub result: ScenarioResult,
    pub dispatch: Option<Dispatch>,
    pub solution: Option<PowerFlowSolution>,
    pub violations: Option<ViolationReport>,
    pub state_matrix: Option<StateMatrix>,
    pub spectrum: Option<SpectralReport>,
}

/// Evaluates scenarios against one immutable case. Construction solves the
/// base case once so it can seed warm starts.
pub struct Evaluator<'a> {
    case: &'a GridCase,
    config: EngineConfig,
    params: DynamicParams,
    base_solution: Option<PowerFlowSolution>,
}

impl<'a> Evaluator<'a> {
    pub fn new(case: &'a GridCase, config: &EngineConfig) -> Result<Self> {
        let params = DynamicParams::from_case(case)?;
        let mut evaluator = Evaluator {
            case,
            config: config.clone(),
            params,
            base_solution: None,
        };
        if config.warm_start {
            let base = evaluator.detail(&[])?;
            evaluator.base_solution = base.solution.filter(|s| s.converged);
        }
        Ok(evaluator)
    }

    pub fn case(&self) -> &GridCase {
        self.case
    }

    /// Never fails: numerical breakdowns and panics become severe results.
    pub fn evaluate(&self, scenario: &Scenario) -> ScenarioResult {
        let start = Instant::now();
        let mut result = match catch_unwind(AssertUnwindSafe(|| self.detail(&scenario.outages))) {
            Ok(Ok(detail)) => detail.result,
            Ok(Err(e)) => {
                log::warn!("scenario {}: {e}", scenario.id);
                failed_result(Reason::InternalError)
            }
            Err(_) => {
                log::warn!("scenario {}: evaluation panicked", scenario.id);
                failed_result(Reason::InternalError)
            }
        };
        result.id = scenario.id.clone();
        result.outages = scenario.outages.clone();
        if self.config.record_runtime {
            result.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        }
        result
    }

    /// Full pipeline with intermediate artifacts. Errors only on unknown
    /// component references.
    pub fn evaluate_detailed(&self, scenario: &Scenario) -> Result<ScenarioDetail> {
        let mut detail = self.detail(&scenario.outages)?;
        detail.result.id = scenario.id.clone();
        Ok(detail)
    }

    fn detail(&self, outages: &[ComponentRef]) -> Result<ScenarioDetail> {
        let case = self.case;
        let resolved = Outages::resolve(case, outages)?;
        let mut reasons = Vec::new();
        let mut detail = ScenarioDetail {
            result: failed_result(Reason::InternalError),
            dispatch: None,
            solution: None,
            violations: None,
            state_matrix: None,
            spectrum: None,
        };
        detail.result.outages = outages.to_vec();
        detail.result.id = super::scenario_id(outages);

        let partition = find_islands_resolved(case, &resolved);
        detail.result.island_count = partition.island_count;
        if partition.island_count > 1 {
            reasons.push(Reason::Islanding);
        }

        let outcome = if self.config.sequential_redispatch {
            redispatch_sequential_resolved(case, &resolved)
        } else {
            redispatch_resolved(case, &resolved)
        };
        let dispatch = match outcome {
            RedispatchOutcome::Feasible(d) => d,
            RedispatchOutcome::Infeasible { .. } => {
                reasons.push(Reason::RedispatchInfeasible);
                return Ok(finish(detail, reasons));
            }
        };

        let Some(slack) = select_slack_resolved(case, &resolved, &partition, &dispatch) else {
            reasons.push(Reason::PfDiverged);
            detail.dispatch = Some(dispatch);
            return Ok(finish(detail, reasons));
        };
        let warm = if self.config.warm_start {
            self.base_solution.as_ref()
        } else {
            None
        };
        let solution = solve_resolved(case, &resolved, &partition, &dispatch, slack, &self.config.pf, warm);
        detail.dispatch = Some(dispatch);
        detail.result.pf_converged = solution.converged;
        if !solution.converged {
            reasons.push(Reason::PfDiverged);
            detail.solution = Some(solution);
            return Ok(finish(detail, reasons));
        }

        let report = check_limits(&solution, case)?;
        detail.result.violations = ViolationCounts::from(&report);
        if report.any {
            reasons.push(Reason::LimitViolation);
        }
        detail.violations = Some(report);

        match linearize_resolved(case, &resolved, &solution, &self.params) {
            Ok(Linearization::Degenerate { .. }) => {}
            Ok(Linearization::Model(state)) => {
                match eigenvalues(&state, self.config.eps_stab) {
                    Ok(spectrum) => {
                        detail.result.spectral_abscissa = Some(spectrum.spectral_abscissa);
                        if spectrum.unstable {
                            reasons.push(Reason::SmallSignal);
                        }
                        detail.spectrum = Some(spectrum);
                    }
                    Err(Error::Numerical(_)) => reasons.push(Reason::EigensolveFailed),
                    Err(e) => return Err(e),
                }
                detail.state_matrix = Some(state);
            }
            Err(Error::Numerical(_)) => reasons.push(Reason::LinearizationFailed),
            Err(e) => return Err(e),
        }
        detail.solution = Some(solution);
        Ok(finish(detail, reasons))
    }
}

fn failed_result(reason: Reason) -> ScenarioResult {
    ScenarioResult {
        id: String::new(),
        outages: Vec::new(),
        pf_converged: false,
        island_count: 1,
        spectral_abscissa: None,
        severity: 1,
        reason: vec![reason],
        violations: ViolationCounts::default(),
        runtime_ms: 0.0,
    }
}

fn finish(mut detail: ScenarioDetail, mut reasons: Vec<Reason>) -> ScenarioDetail {
    reasons.sort();
    reasons.dedup();
    detail.result.severity = u8::from(!reasons.is_empty());
    detail.result.reason = reasons;
    detail
}

/// Evaluates a single scenario outside a run.
pub fn evaluate_scenario(case: &GridCase, scenario: &Scenario, config: &EngineConfig) -> Result<ScenarioResult> {
    let evaluator = Evaluator::new(case, config)?;
    for r in &scenario.outages {
        if !case.contains(r) {
            return Err(Error::UnknownComponent(r.to_string()));
        }
    }
    Ok(evaluator.evaluate(scenario))
}
