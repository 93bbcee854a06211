use alloc::vec::Vec;

use super::{comoga_tabular_step, evaluate, EvaluationReport, SoftmaxPolicyTable, TabularCMOMDP};
use crate::aggregator::{robbins_monro, AggregatorConfig, Mode};
use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::preference::Preference;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub aggregator: AggregatorConfig,
    /// `ε₀` of the schedule `εₜ = ε₀/(1 + t)^0.6`.
    pub epsilon0: f64,
    pub steps: usize,
    /// Stop once `‖Δθ‖_∞` stays below this for `patience` consecutive
    /// non-zero-mode steps; `patience = 0` always runs the full budget.
    pub stop_tolerance: f64,
    pub patience: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.aggregator.validate()?;
        if !(self.epsilon0 > 0.0) || !self.epsilon0.is_finite() {
            return Err(Error::InvalidArgument("epsilon0 must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::InvalidArgument("stop tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub objective_returns: Vec<f64>,
    pub constraint_returns: Vec<f64>,
    pub step_norm: f64,
    pub mode: Mode,
    /// `ν/Σν` of the step (zero outside normal mode).
    pub nu_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub policy: SoftmaxPolicyTable,
    pub final_report: EvaluationReport,
    pub history: Vec<StepRecord>,
    pub conflicts: usize,
    pub converged: bool,
}

/// Repeated modified-aggregation steps with a Robbins–Monro region size.
pub fn train_comoga_tabular(
    mdp: &TabularCMOMDP,
    preference: &Preference,
    initial: &SoftmaxPolicyTable,
    config: &TrainConfig,
) -> Result<TrainingRun> {
    config.validate()?;
    let mut policy = initial.clone();
    let mut history = Vec::new();
    let mut conflicts = 0;
    let mut quiet = 0;
    let mut converged = false;
    for t in 0..config.steps {
        let step = comoga_tabular_step(mdp, &policy, preference, &config.aggregator, robbins_monro(config.epsilon0, t as u64))?;
        let step_norm = norm_inf(&step.aggregation.gradient);
        let total: f64 = step.aggregation.duals_nu.iter().sum();
        let nu_weights = step.aggregation.duals_nu.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
        history.push(StepRecord {
            objective_returns: step.report.objective_returns,
            constraint_returns: step.report.constraint_returns,
            step_norm,
            mode: step.aggregation.mode,
            nu_weights,
        });
        conflicts += usize::from(step.conflict);
        policy = step.policy;
        // A zero step only says the QP was infeasible at this region size;
        // the shrinking schedule can make it feasible again.
        if step.aggregation.mode != Mode::Zero {
            quiet = if step_norm < config.stop_tolerance { quiet + 1 } else { 0 };
        }
        if config.patience > 0 && quiet >= config.patience {
            converged = true;
            break;
        }
    }
    let final_report = evaluate(mdp, &policy)?;
    Ok(TrainingRun { policy, final_report, history, conflicts, converged })
}
