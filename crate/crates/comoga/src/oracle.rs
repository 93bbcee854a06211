//! Independent reference solvers used to check the core routines.
//!
//! The QP oracle enumerates active sets in the primal KKT system with
//! nalgebra; the LP oracle optimises over discounted occupancy measures with
//! a simplex solver.

use comoga_core::tabular::{evaluate_probs, TabularCMOMDP};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, Result};

/// Minimiser of `xᵀHx` under `aᵢᵀx ≥ cᵢ` (lower) and `bₖᵀx ≤ dₖ` (upper).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleQpSolution {
    pub primal: DVector<f64>,
    pub objective: f64,
}

/// Brute-force active-set enumeration: for every subset `S` solve
/// `[2H −Ã_Sᵀ; Ã_S 0][x; μ] = [0; c̃_S]` and keep the cheapest primal- and
/// dual-feasible point. `None` when the region is empty.
pub fn brute_force_qp(
    h: &DMatrix<f64>,
    lower: &[(DVector<f64>, f64)],
    upper: &[(DVector<f64>, f64)],
) -> Option<OracleQpSolution> {
    let n = h.nrows();
    let cons: Vec<(DVector<f64>, f64)> =
        lower.iter().cloned().chain(upper.iter().map(|(b, d)| (-b, -d))).collect();
    let m = cons.len();
    let scale = 1.0 + cons.iter().map(|(a, c)| a.amax().max(c.abs())).fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    let mut best: Option<OracleQpSolution> = None;
    for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let k = active.len();
        let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&(h * 2.0));
        let mut rhs = DVector::<f64>::zeros(n + k);
        for (r, &j) in active.iter().enumerate() {
            let (a, c) = &cons[j];
            for i in 0..n {
                kkt[(i, n + r)] = -a[i];
                kkt[(n + r, i)] = a[i];
            }
            rhs[n + r] = *c;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        if sol.rows(n, k).iter().any(|mu| *mu < -tol) {
            continue;
        }
        if cons.iter().any(|(a, c)| a.dot(&x) < c - tol) {
            continue;
        }
        let objective = x.dot(&(h * &x));
        if best.as_ref().map_or(true, |b| objective < b.objective - 1e-15 * (1.0 + objective.abs())) {
            best = Some(OracleQpSolution { primal: x, objective });
        }
    }
    best
}

/// Optimum of the occupancy LP together with the policy it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub weights: Vec<f64>,
    /// `x[s·A + a]`, summing to one.
    pub occupancy: Vec<f64>,
    /// `π[s·A + a] = x[s·A + a] / Σ_b x[s·A + b]`, uniform on unvisited states.
    pub policy: Vec<f64>,
    pub objective_returns: Vec<f64>,
    pub constraint_returns: Vec<f64>,
}

/// `max Σᵢ wᵢ J_Rᵢ` over occupancy measures subject to `J_Cₖ ≤ dₖ`.
///
/// `x(s, a) ≥ 0`, `Σₐ x(s', a) − γ Σ_{s,a} P(s'|s,a) x(s,a) = (1 − γ) ρ(s')`,
/// and `J = Σ x r / (1 − γ)`. Returns `None` when no policy is feasible.
pub fn occupancy_lp(mdp: &TabularCMOMDP, weights: &[f64]) -> Result<Option<LpSolution>> {
    let (ns, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    if weights.len() != mdp.n_objectives() {
        return Err(CliError::invalid("weights", format!("expected {} entries", mdp.n_objectives())));
    }
    let scale = 1.0 / (1.0 - gamma);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..ns * na)
        .map(|k| {
            let c: f64 = weights.iter().enumerate().map(|(i, w)| w * mdp.expected_rewards(i)[k]).sum();
            lp.add_var(scale * c, (0.0, f64::INFINITY))
        })
        .collect();
    for s2 in 0..ns {
        let mut row = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let own = if s == s2 { 1.0 } else { 0.0 };
                row.push((vars[s * na + a], own - gamma * mdp.p(s, a, s2)));
            }
        }
        lp.add_constraint(row, ComparisonOp::Eq, (1.0 - gamma) * mdp.initial_dist()[s2]);
    }
    for (k, d) in mdp.thresholds().iter().enumerate() {
        let row: Vec<_> = vars.iter().enumerate().map(|(j, v)| (*v, scale * mdp.expected_costs(k)[j])).collect();
        lp.add_constraint(row, ComparisonOp::Le, *d);
    }
    let solution = match lp.solve() {
        Ok(outcome) => outcome.into_solution().map_err(|_| CliError::ResourceCap("LP solve interrupted".into()))?,
        Err(microlp::Error::Infeasible) => return Ok(None),
        Err(e) => return Err(CliError::Validation(format!("LP oracle failed: {e}"))),
    };
    let occupancy: Vec<f64> = vars.iter().map(|v| solution.var_value(*v).max(0.0)).collect();
    let mut policy = vec![0.0; ns * na];
    for s in 0..ns {
        let row = &occupancy[s * na..(s + 1) * na];
        let total: f64 = row.iter().sum();
        for a in 0..na {
            policy[s * na + a] = if total > 0.0 { row[a] / total } else { 1.0 / na as f64 };
        }
    }
    let ret = |r: &[f64]| occupancy.iter().zip(r).map(|(x, y)| x * y).sum::<f64>() * scale;
    Ok(Some(LpSolution {
        weights: weights.to_vec(),
        objective_returns: (0..mdp.n_objectives()).map(|i| ret(mdp.expected_rewards(i))).collect(),
        constraint_returns: (0..mdp.n_constraints()).map(|k| ret(mdp.expected_costs(k))).collect(),
        occupancy,
        policy,
    }))
}

/// Strictly positive two-objective weights `(cos φ, sin φ)` for `count`
/// angles inside `(0, π/2)`.
pub fn sweep_weights(count: usize) -> Vec<Vec<f64>> {
    (1..=count)
        .map(|k| {
            let phi = std::f64::consts::FRAC_PI_2 * k as f64 / (count + 1) as f64;
            vec![phi.cos(), phi.sin()]
        })
        .collect()
}

/// Returns of the LP policy recomputed by exact policy evaluation.
pub fn evaluate_lp_policy(mdp: &TabularCMOMDP, sol: &LpSolution) -> Result<(Vec<f64>, Vec<f64>)> {
    let report = evaluate_probs(mdp, &sol.policy)?;
    Ok((report.objective_returns, report.constraint_returns))
}
