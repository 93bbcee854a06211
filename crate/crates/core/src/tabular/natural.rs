use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{evaluate, policy_gradient, EvaluationReport, SoftmaxPolicyTable, TabularCMOMDP};
use crate::aggregator::{aggregate_modified, conflict_check, AggregationResult, AggregatorConfig, Variant};
use crate::bundle::GradientBundle;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metric::Metric;
use crate::preference::Preference;

/// Fisher information of a softmax table under its own occupancy measure,
/// `F = blockdiag_s d(s)·(diag π_s − π_s π_sᵀ)`, applied in closed form.
///
/// Each block annihilates the all-ones vector, so the pseudo-inverse acts on
/// the per-state centred subspace. `inv_apply` is exact on the range of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularFisher {
    n_actions: usize,
    occupancy: Vec<f64>,
    policy: Vec<f64>,
}

impl TabularFisher {
    pub fn from_report(report: &EvaluationReport) -> Self {
        let n_actions = report.policy.len() / report.occupancy.len();
        Self { n_actions, occupancy: report.occupancy.clone(), policy: report.policy.clone() }
    }

    /// Orthogonal projection onto the row space (per-state centring, and zero
    /// on unvisited states).
    pub fn project_row_space(&self, v: &[f64]) -> Vec<f64> {
        let na = self.n_actions;
        let mut out = vec![0.0; v.len()];
        for (s, (o, x)) in out.chunks_mut(na).zip(v.chunks(na)).enumerate() {
            if self.occupancy[s] > 0.0 {
                let mean = x.iter().sum::<f64>() / na as f64;
                for (y, xi) in o.iter_mut().zip(x) {
                    *y = xi - mean;
                }
            }
        }
        out
    }
}

impl Metric for TabularFisher {
    fn dim(&self) -> usize {
        self.policy.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let na = self.n_actions;
        let mut out = vec![0.0; x.len()];
        for s in 0..self.occupancy.len() {
            let (p, xs) = (&self.policy[s * na..(s + 1) * na], &x[s * na..(s + 1) * na]);
            let px: f64 = p.iter().zip(xs).map(|(a, b)| a * b).sum();
            for a in 0..na {
                out[s * na + a] = self.occupancy[s] * p[a] * (xs[a] - px);
            }
        }
        out
    }

    fn inv_apply(&self, v: &[f64]) -> Vec<f64> {
        let na = self.n_actions;
        let mut out = vec![0.0; v.len()];
        for s in 0..self.occupancy.len() {
            let d = self.occupancy[s];
            let (p, vs) = (&self.policy[s * na..(s + 1) * na], &v[s * na..(s + 1) * na]);
            if !(d > 0.0) || p.iter().any(|x| !(*x > 0.0)) {
                continue;
            }
            let w: Vec<f64> = vs.iter().zip(p).map(|(x, pa)| x / (d * pa)).collect();
            let wmean = w.iter().sum::<f64>() / na as f64;
            for a in 0..na {
                out[s * na + a] = w[a] - wmean;
            }
        }
        out
    }

    fn norm_sq(&self, x: &[f64]) -> f64 {
        let na = self.n_actions;
        let mut total = 0.0;
        for s in 0..self.occupancy.len() {
            let (p, xs) = (&self.policy[s * na..(s + 1) * na], &x[s * na..(s + 1) * na]);
            let mean: f64 = p.iter().zip(xs).map(|(a, b)| a * b).sum();
            let var: f64 = p.iter().zip(xs).map(|(a, b)| a * (b - mean) * (b - mean)).sum();
            total += self.occupancy[s] * var;
        }
        total.max(0.0)
    }
}

/// `E_{s∼d, a∼π}[∇log π ∇log πᵀ]` built term by term from score vectors.
pub fn fisher_matrix(report: &EvaluationReport) -> Matrix {
    let ns = report.occupancy.len();
    let na = report.policy.len() / ns;
    let n = ns * na;
    let mut f = Matrix::zeros(n, n);
    for s in 0..ns {
        let p = &report.policy[s * na..(s + 1) * na];
        for a in 0..na {
            let w = report.occupancy[s] * p[a];
            let score: Vec<f64> = (0..na).map(|b| if a == b { 1.0 - p[b] } else { -p[b] }).collect();
            for i in 0..na {
                for j in 0..na {
                    f[(s * na + i, s * na + j)] += w * score[i] * score[j];
                }
            }
        }
    }
    f
}

/// Natural-gradient increment in advantage form,
/// `α/(1 − γ)·(Σᵢ νᵢ A_{Rᵢ} − Σₖ λₖ A_{Cₖ})`.
pub fn natural_increment(
    mdp: &TabularCMOMDP,
    report: &EvaluationReport,
    nu: &[f64],
    lambda: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    if nu.len() != mdp.n_objectives() {
        return Err(Error::DimensionMismatch { expected: mdp.n_objectives(), found: nu.len() });
    }
    if lambda.len() != mdp.n_constraints() {
        return Err(Error::DimensionMismatch { expected: mdp.n_constraints(), found: lambda.len() });
    }
    let scale = alpha / (1.0 - mdp.gamma());
    let mut out = vec![0.0; mdp.dim()];
    for (w, adv) in nu.iter().zip(&report.reward_advantages) {
        for (o, x) in out.iter_mut().zip(adv) {
            *o += scale * w * x;
        }
    }
    for (w, adv) in lambda.iter().zip(&report.cost_advantages) {
        for (o, x) in out.iter_mut().zip(adv) {
            *o -= scale * w * x;
        }
    }
    Ok(out)
}

/// Weight sequences of the generalized update at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSequences {
    pub nu_a: Vec<f64>,
    pub nu_b: Vec<f64>,
    pub lambda_a: Vec<f64>,
    pub lambda_b: Vec<f64>,
}

const SEQUENCE_TOLERANCE: f64 = 1e-9;

fn check_weights(name: &str, w: &[f64], len: usize) -> Result<()> {
    if w.len() != len {
        return Err(Error::DimensionMismatch { expected: len, found: w.len() });
    }
    if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} must be finite and nonnegative")));
    }
    Ok(())
}

fn check_sum_one(name: &str, w: &[f64]) -> Result<()> {
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > SEQUENCE_TOLERANCE {
        return Err(Error::InvalidArgument(format!("{name} must sum to 1, got {total}")));
    }
    Ok(())
}

/// One step of the generalized update.
///
/// Feasible policies move by `α/(1 − γ)·(Σ ν_a A_R − α Σ λ_a A_C)`; when some
/// constraint is violated the step is `α/(1 − γ)·(α Σ ν_b A_R − Σ λ_b A_C)`.
/// `ν_a` must sum to one in the feasible case; in the violated case `λ_b`
/// must sum to one and only weight violated constraints.
pub fn generalized_update(
    mdp: &TabularCMOMDP,
    policy: &SoftmaxPolicyTable,
    sequences: &UpdateSequences,
    alpha: f64,
) -> Result<SoftmaxPolicyTable> {
    let (n, m) = (mdp.n_objectives(), mdp.n_constraints());
    check_weights("nu_a", &sequences.nu_a, n)?;
    check_weights("nu_b", &sequences.nu_b, n)?;
    check_weights("lambda_a", &sequences.lambda_a, m)?;
    check_weights("lambda_b", &sequences.lambda_b, m)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    let report = evaluate(mdp, policy)?;
    let delta = if report.is_feasible(mdp.thresholds()) {
        check_sum_one("nu_a", &sequences.nu_a)?;
        let lambda: Vec<f64> = sequences.lambda_a.iter().map(|l| alpha * l).collect();
        natural_increment(mdp, &report, &sequences.nu_a, &lambda, alpha)?
    } else {
        check_sum_one("lambda_b", &sequences.lambda_b)?;
        for (k, (l, slack)) in sequences.lambda_b.iter().zip(report.slacks(mdp.thresholds())).enumerate() {
            if l * -slack < -SEQUENCE_TOLERANCE {
                return Err(Error::InvalidArgument(format!("lambda_b weights satisfied constraint {k}")));
            }
        }
        let nu: Vec<f64> = sequences.nu_b.iter().map(|v| alpha * v).collect();
        natural_increment(mdp, &report, &nu, &sequences.lambda_b, alpha)?
    };
    policy.shifted(&delta)
}

/// Result of one aggregated tabular step.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularStep {
    pub policy: SoftmaxPolicyTable,
    /// Evaluation of the policy before the step.
    pub report: EvaluationReport,
    pub aggregation: AggregationResult,
    /// A normal-mode update that conflicts with some objective gradient.
    pub conflict: bool,
}

/// The objective and constraint gradients of a policy as a bundle.
pub fn tabular_bundle(mdp: &TabularCMOMDP, report: &EvaluationReport) -> GradientBundle {
    let grads = policy_gradient(mdp, report);
    GradientBundle {
        objective_grads: grads.objectives,
        constraint_grads: grads.constraints,
        constraint_values: report.constraint_returns.clone(),
        thresholds: mdp.thresholds().to_vec(),
    }
}

/// One modified-aggregation step in the Fisher geometry.
pub fn comoga_tabular_step(
    mdp: &TabularCMOMDP,
    policy: &SoftmaxPolicyTable,
    preference: &Preference,
    config: &AggregatorConfig,
    epsilon_t: f64,
) -> Result<TabularStep> {
    if config.variant != Variant::Modified {
        return Err(Error::InvalidArgument("tabular steps use the modified aggregator".into()));
    }
    let report = evaluate(mdp, policy)?;
    let bundle = tabular_bundle(mdp, &report);
    let metric = TabularFisher::from_report(&report);
    let aggregation = aggregate_modified(&bundle, preference, &metric, config, epsilon_t)?;
    let conflict = aggregation.mode == crate::aggregator::Mode::Normal && conflict_check(&bundle, &aggregation.gradient);
    let policy = policy.shifted(&aggregation.gradient)?;
    Ok(TabularStep { policy, report, aggregation, conflict })
}
