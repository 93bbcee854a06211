use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{evaluate, ModelParts, SoftmaxPolicyTable, TabularCMOMDP};
use crate::error::{Error, Result};

/// Shape of a randomly generated model.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_objectives: usize,
    pub n_constraints: usize,
    pub gamma: f64,
    /// Thresholds sit this far above the costs of a random reference policy,
    /// which is then strictly feasible.
    pub slater_margin: f64,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Exponential spacings give a uniform point on the simplex.
    let e: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - unit(rng))).collect();
    let total: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|x| x / total).collect();
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    p
}

/// A random model with rewards and costs in `[0, 1)` and thresholds that
/// satisfy Slater's condition with the requested margin.
pub fn random_cmomdp(spec: &RandomModelSpec, seed: u64) -> Result<TabularCMOMDP> {
    if !(spec.slater_margin >= 0.0) {
        return Err(Error::InvalidArgument("slater margin must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, na) = (spec.n_states, spec.n_actions);
    let size = ns * na * ns;
    let transition: Vec<f64> = (0..ns * na).flat_map(|_| simplex(&mut rng, ns)).collect();
    let mut tensor = |count: usize| -> Vec<Vec<f64>> { (0..count).map(|_| (0..size).map(|_| unit(&mut rng)).collect()).collect() };
    let rewards = tensor(spec.n_objectives);
    let costs = tensor(spec.n_constraints);
    let initial_dist = simplex(&mut rng, ns);
    let reference_logits: Vec<f64> = (0..ns * na).map(|_| 2.0 * unit(&mut rng) - 1.0).collect();
    let base = TabularCMOMDP::new(ModelParts {
        n_states: ns,
        n_actions: na,
        transition,
        rewards,
        costs,
        initial_dist,
        gamma: spec.gamma,
        thresholds: alloc::vec![0.0; spec.n_constraints],
        reward_bound: Some(1.0),
    })?;
    let reference = SoftmaxPolicyTable::new(ns, na, reference_logits)?;
    let report = evaluate(&base, &reference)?;
    base.with_thresholds(report.constraint_returns.iter().map(|c| c + spec.slater_margin).collect())
}
