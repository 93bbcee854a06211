//! Finite constrained multi-objective MDPs solved exactly.
//!
//! Policies are softmax tables over `(state, action)` logits. Evaluation
//! solves the Bellman linear systems directly, so returns, advantages,
//! occupancy measures and policy gradients are exact up to round-off.

mod natural;
mod oracle;
mod random;
mod train;
mod universal;

pub use natural::{
    comoga_tabular_step, fisher_matrix, generalized_update, natural_increment, tabular_bundle, TabularFisher, TabularStep,
    UpdateSequences,
};
pub use oracle::{cp_front_oracle, deterministic_policy, CpFront, OracleOptions};
pub use random::{random_cmomdp, RandomModelSpec};
pub use train::{train_comoga_tabular, StepRecord, TrainConfig, TrainingRun};
pub use universal::{kl_divergence, distill_universal, UniversalPolicy};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

const SUM_TOLERANCE: f64 = 1e-12;

/// The raw tensors of a model, all flattened row-major.
///
/// `transition[(s·A + a)·S + s']`, and likewise for every reward and cost
/// tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<f64>,
    pub rewards: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
    pub gamma: f64,
    pub thresholds: Vec<f64>,
    /// Declared bound on every reward and cost entry; the observed maximum
    /// when absent.
    pub reward_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularCMOMDP {
    parts: ModelParts,
    reward_bound: f64,
    /// `Σ_{s'} P(s'|s,a) R(s,a,s')`, indexed `[i][s·A + a]`.
    exp_rewards: Vec<Vec<f64>>,
    exp_costs: Vec<Vec<f64>>,
}

fn expected(transition: &[f64], tensor: &[f64], n_states: usize) -> Vec<f64> {
    transition.chunks(n_states).zip(tensor.chunks(n_states)).map(|(p, r)| p.iter().zip(r).map(|(a, b)| a * b).sum()).collect()
}

fn check_distribution(what: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidModel(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl TabularCMOMDP {
    pub fn new(parts: ModelParts) -> Result<Self> {
        let (s, a) = (parts.n_states, parts.n_actions);
        if s == 0 || a == 0 {
            return Err(Error::InvalidModel("n_states and n_actions must be positive".into()));
        }
        let size = s * a * s;
        if parts.transition.len() != size {
            return Err(Error::InvalidModel(format!("transition has {} entries, expected {size}", parts.transition.len())));
        }
        if parts.rewards.is_empty() {
            return Err(Error::InvalidModel("at least one reward tensor is required".into()));
        }
        for (name, tensors) in [("reward", &parts.rewards), ("cost", &parts.costs)] {
            for (i, t) in tensors.iter().enumerate() {
                if t.len() != size {
                    return Err(Error::InvalidModel(format!("{name} {i} has {} entries, expected {size}", t.len())));
                }
                if t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidModel(format!("{name} {i} has a non-finite entry")));
                }
            }
        }
        for (k, row) in parts.transition.chunks(s).enumerate() {
            check_distribution(&format!("transition row (s={}, a={})", k / a, k % a), row)?;
        }
        if parts.initial_dist.len() != s {
            return Err(Error::InvalidModel(format!("rho has {} entries, expected {s}", parts.initial_dist.len())));
        }
        check_distribution("rho", &parts.initial_dist)?;
        if !(parts.gamma > 0.0 && parts.gamma < 1.0) {
            return Err(Error::InvalidModel(format!("gamma must lie in (0, 1), got {}", parts.gamma)));
        }
        if parts.thresholds.len() != parts.costs.len() {
            return Err(Error::InvalidModel(format!(
                "{} cost tensors but {} thresholds",
                parts.costs.len(),
                parts.thresholds.len()
            )));
        }
        if parts.thresholds.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidModel("thresholds must be finite".into()));
        }
        let observed = parts.rewards.iter().chain(&parts.costs).flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let reward_bound = match parts.reward_bound {
            Some(b) if !(b >= observed) => {
                return Err(Error::InvalidModel(format!("entry of magnitude {observed} exceeds the declared bound {b}")));
            }
            Some(b) => b,
            None => observed,
        };
        let exp_rewards = parts.rewards.iter().map(|r| expected(&parts.transition, r, s)).collect();
        let exp_costs = parts.costs.iter().map(|c| expected(&parts.transition, c, s)).collect();
        Ok(Self { parts, reward_bound, exp_rewards, exp_costs })
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn n_states(&self) -> usize {
        self.parts.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.parts.n_actions
    }

    pub fn n_objectives(&self) -> usize {
        self.parts.rewards.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.parts.costs.len()
    }

    /// Number of policy parameters, `S·A`.
    pub fn dim(&self) -> usize {
        self.parts.n_states * self.parts.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.parts.gamma
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.parts.thresholds
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.parts.initial_dist
    }

    pub fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    /// `P(s'|s,a)`.
    pub fn p(&self, s: usize, a: usize, s2: usize) -> f64 {
        let n = self.parts.n_states;
        self.parts.transition[(s * self.parts.n_actions + a) * n + s2]
    }

    /// Expected one-step rewards `r_i(s,a)`, indexed `[s·A + a]`.
    pub fn expected_rewards(&self, i: usize) -> &[f64] {
        &self.exp_rewards[i]
    }

    pub fn expected_costs(&self, k: usize) -> &[f64] {
        &self.exp_costs[k]
    }

    /// Copy of this model with different thresholds.
    pub fn with_thresholds(&self, thresholds: Vec<f64>) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.thresholds = thresholds;
        Self::new(parts)
    }
}

/// Logits `θ[s·A + a]` of a softmax policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicyTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub logits: Vec<f64>,
}

impl SoftmaxPolicyTable {
    pub fn new(n_states: usize, n_actions: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch { expected: n_states * n_actions, found: logits.len() });
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("logits must be finite".into()));
        }
        Ok(Self { n_states, n_actions, logits })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, logits: vec![0.0; n_states * n_actions] }
    }

    /// `π(·|s)`, computed with the usual max shift.
    pub fn probs(&self, s: usize) -> Vec<f64> {
        let row = &self.logits[s * self.n_actions..(s + 1) * self.n_actions];
        let m = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let e: Vec<f64> = row.iter().map(|x| libm::exp(x - m)).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }

    /// All action probabilities, indexed `[s·A + a]`.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.n_states).flat_map(|s| self.probs(s)).collect()
    }

    pub fn check_model(&self, mdp: &TabularCMOMDP) -> Result<()> {
        if self.n_states != mdp.n_states() || self.n_actions != mdp.n_actions() {
            return Err(Error::DimensionMismatch { expected: mdp.dim(), found: self.logits.len() });
        }
        Ok(())
    }

    /// `θ + Δ`.
    pub fn shifted(&self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.logits.len() {
            return Err(Error::DimensionMismatch { expected: self.logits.len(), found: delta.len() });
        }
        Self::new(self.n_states, self.n_actions, self.logits.iter().zip(delta).map(|(a, b)| a + b).collect())
    }
}

/// Exact quantities of one policy on one model.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// `π[s·A + a]`.
    pub policy: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub cost_values: Vec<Vec<f64>>,
    pub objective_returns: Vec<f64>,
    pub constraint_returns: Vec<f64>,
    /// `A_{R_i}[s·A + a]`.
    pub reward_advantages: Vec<Vec<f64>>,
    pub cost_advantages: Vec<Vec<f64>>,
    /// `d_ρ^π = (1 − γ) Σ_t γᵗ Pr(s_t = ·)`.
    pub occupancy: Vec<f64>,
    /// Largest absolute residual over all solved linear systems.
    pub residual: f64,
}

impl EvaluationReport {
    /// `d_k − J_Ck`; negative means violated.
    pub fn slacks(&self, thresholds: &[f64]) -> Vec<f64> {
        thresholds.iter().zip(&self.constraint_returns).map(|(d, j)| d - j).collect()
    }

    pub fn is_feasible(&self, thresholds: &[f64]) -> bool {
        self.constraint_returns.iter().zip(thresholds).all(|(j, d)| j <= d)
    }
}

fn check_policy(mdp: &TabularCMOMDP, policy: &[f64]) -> Result<()> {
    if policy.len() != mdp.dim() {
        return Err(Error::DimensionMismatch { expected: mdp.dim(), found: policy.len() });
    }
    for (s, row) in policy.chunks(mdp.n_actions()).enumerate() {
        if row.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("policy row {s} has a negative entry")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("policy row {s} sums to {total}")));
        }
    }
    Ok(())
}

/// `I − γ P^π` for the state chain induced by `policy`.
fn bellman_matrix(mdp: &TabularCMOMDP, policy: &[f64]) -> Matrix {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut m = Matrix::identity(ns);
    for s in 0..ns {
        for a in 0..na {
            let pa = policy[s * na + a];
            if pa == 0.0 {
                continue;
            }
            for s2 in 0..ns {
                m[(s, s2)] -= g * pa * mdp.p(s, a, s2);
            }
        }
    }
    m
}

/// `Σ_a π(a|s) r(s,a)`.
fn policy_reward(policy: &[f64], r: &[f64], na: usize) -> Vec<f64> {
    policy.chunks(na).zip(r.chunks(na)).map(|(p, r)| p.iter().zip(r).map(|(a, b)| a * b).sum()).collect()
}

fn residual(m: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    m.mul_vec(x).iter().zip(b).fold(0.0, |acc, (y, b)| acc.max((y - b).abs()))
}

/// Discounted state occupancy of a stochastic policy table.
pub fn occupancy(mdp: &TabularCMOMDP, policy: &[f64]) -> Result<Vec<f64>> {
    check_policy(mdp, policy)?;
    let mt = bellman_matrix(mdp, policy).transpose();
    let y = Lu::new(&mt)?.solve(mdp.initial_dist());
    Ok(y.into_iter().map(|v| (1.0 - mdp.gamma()) * v).collect())
}

/// `(J_R, J_C)` of a stochastic policy table, from the occupancy measure.
pub fn returns(mdp: &TabularCMOMDP, policy: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = occupancy(mdp, policy)?;
    let na = mdp.n_actions();
    let scale = 1.0 / (1.0 - mdp.gamma());
    let ret = |r: &[f64]| -> f64 { policy_reward(policy, r, na).iter().zip(&d).map(|(x, w)| x * w).sum::<f64>() * scale };
    Ok((mdp.exp_rewards.iter().map(|r| ret(r)).collect(), mdp.exp_costs.iter().map(|c| ret(c)).collect()))
}

/// Evaluate an arbitrary stochastic policy table `π[s·A + a]`.
pub fn evaluate_probs(mdp: &TabularCMOMDP, policy: &[f64]) -> Result<EvaluationReport> {
    check_policy(mdp, policy)?;
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let m = bellman_matrix(mdp, policy);
    let lu = Lu::new(&m)?;
    let mut worst: f64 = 0.0;
    let mut solve_values = |r: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let rp = policy_reward(policy, r, na);
        let v = lu.solve(&rp);
        worst = worst.max(residual(&m, &v, &rp));
        let mut adv = vec![0.0; ns * na];
        for s in 0..ns {
            for a in 0..na {
                let next: f64 = (0..ns).map(|s2| mdp.p(s, a, s2) * v[s2]).sum();
                adv[s * na + a] = r[s * na + a] + g * next - v[s];
            }
        }
        (v, adv)
    };
    let (values, reward_advantages): (Vec<_>, Vec<_>) = mdp.exp_rewards.iter().map(|r| solve_values(r)).unzip();
    let (cost_values, cost_advantages): (Vec<_>, Vec<_>) = mdp.exp_costs.iter().map(|c| solve_values(c)).unzip();

    let mt = m.transpose();
    let y = Lu::new(&mt)?.solve(mdp.initial_dist());
    worst = worst.max(residual(&mt, &y, mdp.initial_dist()));
    let occupancy: Vec<f64> = y.into_iter().map(|v| (1.0 - g) * v).collect();

    let rho = mdp.initial_dist();
    let j = |v: &Vec<f64>| -> f64 { rho.iter().zip(v).map(|(a, b)| a * b).sum() };
    Ok(EvaluationReport {
        policy: policy.to_vec(),
        objective_returns: values.iter().map(j).collect(),
        constraint_returns: cost_values.iter().map(j).collect(),
        values,
        cost_values,
        reward_advantages,
        cost_advantages,
        occupancy,
        residual: worst,
    })
}

pub fn evaluate(mdp: &TabularCMOMDP, policy: &SoftmaxPolicyTable) -> Result<EvaluationReport> {
    policy.check_model(mdp)?;
    evaluate_probs(mdp, &policy.probabilities())
}

/// Exact softmax policy gradients, `∂J/∂θ[s,a] = d(s)·π(a|s)·A(s,a)/(1 − γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradients {
    pub objectives: Vec<Vec<f64>>,
    pub constraints: Vec<Vec<f64>>,
}

pub fn policy_gradient(mdp: &TabularCMOMDP, report: &EvaluationReport) -> PolicyGradients {
    let na = mdp.n_actions();
    let scale = 1.0 / (1.0 - mdp.gamma());
    let grad = |adv: &Vec<f64>| -> Vec<f64> {
        adv.iter().enumerate().map(|(k, a)| scale * report.occupancy[k / na] * report.policy[k] * a).collect()
    };
    PolicyGradients {
        objectives: report.reward_advantages.iter().map(grad).collect(),
        constraints: report.cost_advantages.iter().map(grad).collect(),
    }
}
