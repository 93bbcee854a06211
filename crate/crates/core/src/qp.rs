//! Exact solver for `min ΔᵀHΔ` under a handful of linear inequalities.
//!
//! Every constraint is brought to the form `ãᵀΔ ≥ c̃`. Stationarity gives
//! `Δ = ½ H⁻¹ Σ μ_j ã_j`, so each candidate active set `S` reduces to the
//! Gram system `G_SS μ_S = 2 c̃_S` with `G_ij = ãᵢᵀ H⁻¹ ãⱼ`. All `2^m` active
//! sets are enumerated; the cheapest one that satisfies every KKT condition
//! wins. The cost is independent of the parameter dimension once `G` is built.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Matrix, SymmetricEigen};
use crate::metric::Metric;

/// Upper bound on the total number of constraints.
pub const MAX_CONSTRAINTS: usize = 16;

/// `normalᵀΔ ≥ offset` (lower) or `normalᵀΔ ≤ offset` (upper).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl LinearConstraint {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QpInstance {
    pub lower: Vec<LinearConstraint>,
    pub upper: Vec<LinearConstraint>,
}

impl QpInstance {
    pub fn new(lower: Vec<LinearConstraint>, upper: Vec<LinearConstraint>) -> Self {
        Self { lower, upper }
    }

    pub fn n_constraints(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let count = self.n_constraints();
        if count > MAX_CONSTRAINTS {
            return Err(Error::TooManyConstraints { count, max: MAX_CONSTRAINTS });
        }
        for c in self.lower.iter().chain(&self.upper) {
            if c.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.normal.len() });
            }
        }
        Ok(())
    }

    /// Constraints as `(ã, c̃)` with `ãᵀΔ ≥ c̃`, lower ones first.
    fn signed(&self) -> Vec<(Vec<f64>, f64)> {
        self.lower
            .iter()
            .map(|c| (c.normal.clone(), c.offset))
            .chain(self.upper.iter().map(|c| (c.normal.iter().map(|x| -x).collect(), -c.offset)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub primal: Vec<f64>,
    pub duals_lower: Vec<f64>,
    pub duals_upper: Vec<f64>,
    pub status: QpStatus,
}

impl QpSolution {
    fn infeasible(dim: usize, instance: &QpInstance) -> Self {
        Self {
            primal: vec![0.0; dim],
            duals_lower: vec![0.0; instance.lower.len()],
            duals_upper: vec![0.0; instance.upper.len()],
            status: QpStatus::Infeasible,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    fn signed_duals(&self) -> impl Iterator<Item = f64> + '_ {
        self.duals_lower.iter().chain(&self.duals_upper).copied()
    }
}

/// Solve the QP. An empty feasible region yields `Infeasible` with a zero
/// primal and zero duals.
///
/// With linearly dependent active constraints the duals are not unique; any
/// member of the dual solution set may be returned.
pub fn solve(instance: &QpInstance, metric: &impl Metric) -> Result<QpSolution> {
    let dim = metric.dim();
    instance.validate(dim)?;
    let cons = instance.signed();
    let m = cons.len();
    let n_lower = instance.lower.len();

    let w: Vec<Vec<f64>> = cons.iter().map(|(a, _)| metric.inv_apply(a)).collect();
    let mut gram = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let g = 0.5 * (dot(&cons[i].0, &w[j]) + dot(&cons[j].0, &w[i]));
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let offsets: Vec<f64> = cons.iter().map(|(_, c)| *c).collect();
    let c_scale = norm_inf(&offsets);
    let g_scale = (0..m).fold(0.0f64, |s, i| s.max(gram[(i, i)]));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|&j| mask & (1 << j) != 0).collect();
        let Some(mu_active) = solve_active(&gram, &offsets, &active, c_scale) else {
            continue;
        };
        let mu_inf = norm_inf(&mu_active);
        if mu_active.iter().any(|&x| x < -1e-10 * (1.0 + mu_inf)) {
            continue;
        }
        let mut mu = vec![0.0; m];
        for (&j, &x) in active.iter().zip(&mu_active) {
            mu[j] = x.max(0.0);
        }
        // ãⱼᵀΔ = ½ Σ_l G_jl μ_l
        let tol = 1e-12 * (1.0 + c_scale + g_scale * mu_inf);
        let feasible = (0..m).all(|j| {
            let lhs = 0.5 * (0..m).map(|l| gram[(j, l)] * mu[l]).sum::<f64>();
            lhs >= offsets[j] - tol
        });
        if !feasible {
            continue;
        }
        let objective = 0.25 * (0..m).map(|i| mu[i] * (0..m).map(|l| gram[(i, l)] * mu[l]).sum::<f64>()).sum::<f64>();
        let better = match &best {
            None => true,
            Some((b, _)) => objective < *b - 1e-12 * (1.0 + b.abs()),
        };
        if better {
            best = Some((objective, mu));
        }
    }

    let Some((_, mu)) = best else {
        return Ok(QpSolution::infeasible(dim, instance));
    };
    let mut primal = vec![0.0; dim];
    for (j, wj) in w.iter().enumerate() {
        if mu[j] != 0.0 {
            for (p, x) in primal.iter_mut().zip(wj) {
                *p += 0.5 * mu[j] * x;
            }
        }
    }
    Ok(QpSolution {
        primal,
        duals_lower: mu[..n_lower].to_vec(),
        duals_upper: mu[n_lower..].to_vec(),
        status: QpStatus::Optimal,
    })
}

/// Solve `G_SS μ = 2 c̃_S`; least squares when `G_SS` is singular, rejecting
/// inconsistent systems.
fn solve_active(gram: &Matrix, offsets: &[f64], active: &[usize], c_scale: f64) -> Option<Vec<f64>> {
    let k = active.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let mut sub = Matrix::zeros(k, k);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            sub[(a, b)] = gram[(i, j)];
        }
    }
    let rhs: Vec<f64> = active.iter().map(|&i| 2.0 * offsets[i]).collect();
    let max_diag = (0..k).fold(0.0f64, |s, i| s.max(sub[(i, i)]));
    let min_diag = (0..k).fold(f64::INFINITY, |s, i| s.min(sub[(i, i)]));
    let well_posed = min_diag > 1e-10 * max_diag.max(f64::MIN_POSITIVE);
    let mu = match Cholesky::new(&sub) {
        Ok(chol) if well_posed => {
            let mu = chol.solve(&rhs);
            // A tiny pivot can slip through Cholesky; fall back if the solve is off.
            let back = sub.mul_vec(&mu);
            let res = back.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if res <= 1e-9 * (1.0 + c_scale) {
                mu
            } else {
                least_squares(&sub, &rhs)?
            }
        }
        _ => least_squares(&sub, &rhs)?,
    };
    let back = sub.mul_vec(&mu);
    let res = back.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if res > 1e-9 * (1.0 + c_scale) {
        return None;
    }
    Some(mu)
}

fn least_squares(sub: &Matrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let eig = SymmetricEigen::new(sub).ok()?;
    let largest = eig.values.first().copied().unwrap_or(0.0);
    if !(largest > 0.0) {
        return Some(vec![0.0; rhs.len()]);
    }
    let cutoff = 1e-12 * largest;
    Some(eig.apply_spectral(rhs, |l| if l > cutoff { 1.0 / l } else { 0.0 }))
}

/// Max-norm residuals of the three KKT blocks, plus the scale they should be
/// compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    /// `‖2HΔ − Σνᵢaᵢ + Σλₖaₖ‖_∞`
    pub stationarity: f64,
    /// Largest constraint violation.
    pub feasibility: f64,
    /// Largest `|dual × slack|`.
    pub complementarity: f64,
    /// `max(1, max|c|, ‖2HΔ‖_∞, max μⱼ‖aⱼ‖_∞)`.
    pub scale: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }

    pub fn within(&self, rel_tol: f64) -> bool {
        self.max() <= rel_tol * self.scale
    }
}

pub fn kkt_residual(instance: &QpInstance, metric: &impl Metric, solution: &QpSolution) -> Result<KktResidual> {
    let dim = metric.dim();
    instance.validate(dim)?;
    metric.check_dim(&solution.primal)?;
    if solution.duals_lower.len() != instance.lower.len() || solution.duals_upper.len() != instance.upper.len() {
        return Err(Error::InvalidArgument("dual count does not match constraint count".into()));
    }
    let cons = instance.signed();
    let duals: Vec<f64> = solution.signed_duals().collect();

    let two_h_delta: Vec<f64> = metric.apply(&solution.primal).into_iter().map(|x| 2.0 * x).collect();
    let mut stat = two_h_delta.clone();
    let mut feas = 0.0f64;
    let mut comp = 0.0f64;
    let mut scale = 1.0f64.max(norm_inf(&two_h_delta));
    for ((a, c), &mu) in cons.iter().zip(&duals) {
        for (s, x) in stat.iter_mut().zip(a) {
            *s -= mu * x;
        }
        let slack = dot(a, &solution.primal) - c;
        feas = feas.max(-slack);
        comp = comp.max((mu * slack).abs());
        scale = scale.max(c.abs()).max(mu * norm_inf(a));
    }
    Ok(KktResidual { stationarity: norm_inf(&stat), feasibility: feas.max(0.0), complementarity: comp, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::LocalMetric;
    use approx::assert_abs_diff_eq;

    fn lower(normal: &[f64], offset: f64) -> LinearConstraint {
        LinearConstraint::new(normal.to_vec(), offset)
    }

    #[test]
    fn unconstrained_minimum_is_zero() {
        let sol = solve(&QpInstance::default(), &LocalMetric::identity(3)).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.primal, vec![0.0; 3]);
        let r = kkt_residual(&QpInstance::default(), &LocalMetric::identity(3), &sol).unwrap();
        assert_eq!((r.stationarity, r.feasibility, r.complementarity), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_lower_constraint_closed_form() {
        let inst = QpInstance::new(vec![lower(&[1.0, 0.0], 1.0)], vec![]);
        let sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_abs_diff_eq!(sol.primal[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.primal[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.duals_lower[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn contradictory_half_spaces_are_infeasible() {
        let inst = QpInstance::new(vec![lower(&[1.0, 0.0], 1.0), lower(&[-1.0, 0.0], 1.0)], vec![]);
        let sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
        assert_eq!(sol.primal, vec![0.0, 0.0]);
        assert_eq!(sol.duals_lower, vec![0.0, 0.0]);
    }

    #[test]
    fn two_orthogonal_constraints() {
        let inst = QpInstance::new(vec![lower(&[1.0, 0.0], 1.0), lower(&[0.0, 1.0], 1.0)], vec![]);
        let sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        assert_abs_diff_eq!(sol.primal[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.primal[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn upper_constraint_duals() {
        // Δ₁ ≤ -1 pushes the minimiser to (-1, 0) with λ = 2.
        let inst = QpInstance::new(vec![], vec![lower(&[1.0, 0.0], -1.0)]);
        let sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        assert_abs_diff_eq!(sol.primal[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.duals_upper[0], 2.0, epsilon = 1e-14);
        // Slack upper constraint has zero dual.
        let slack = QpInstance::new(vec![], vec![lower(&[1.0, 0.0], 1.0)]);
        let sol = solve(&slack, &LocalMetric::identity(2)).unwrap();
        assert_eq!(sol.primal, vec![0.0, 0.0]);
        assert_eq!(sol.duals_upper, vec![0.0]);
    }

    #[test]
    fn duplicated_constraint_is_degenerate_but_solved() {
        let inst = QpInstance::new(vec![lower(&[1.0, 0.0], 1.0), lower(&[2.0, 0.0], 2.0)], vec![]);
        let sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.primal[0], 1.0, epsilon = 1e-12);
        let r = kkt_residual(&inst, &LocalMetric::identity(2), &sol).unwrap();
        assert!(r.within(1e-8), "{r:?}");
    }

    #[test]
    fn perturbed_primal_shows_complementarity_gap() {
        let inst = QpInstance::new(vec![lower(&[1.0, 0.0], 1.0)], vec![]);
        let mut sol = solve(&inst, &LocalMetric::identity(2)).unwrap();
        sol.primal[0] += 0.1;
        let r = kkt_residual(&inst, &LocalMetric::identity(2), &sol).unwrap();
        assert_abs_diff_eq!(r.complementarity, 0.2, epsilon = 1e-12);
        assert_eq!(r.feasibility, 0.0);
    }

    #[test]
    fn rejects_too_many_constraints_and_bad_dims() {
        let many = QpInstance::new(vec![lower(&[1.0], 0.0); 17], vec![]);
        assert_eq!(
            solve(&many, &LocalMetric::identity(1)),
            Err(Error::TooManyConstraints { count: 17, max: 16 })
        );
        let bad = QpInstance::new(vec![lower(&[1.0, 2.0], 0.0)], vec![]);
        assert!(matches!(solve(&bad, &LocalMetric::identity(3)), Err(Error::DimensionMismatch { .. })));
    }
}
