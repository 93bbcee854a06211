//! Constrained multi-objective gradient aggregation.
//!
//! Each objective `i` becomes the improvement constraint
//! `ωᵢ·ε·‖gᵢ‖_{H⁻¹} ≤ gᵢᵀΔθ`; together with the linearised safety
//! constraints `bₖᵀΔθ + J_Cₖ ≤ dₖ` this gives a QP whose minimum-`H`-norm
//! solution improves every objective at once. When a safety constraint is
//! already violated the objective constraints are dropped and the QP only
//! looks for the cheapest step back toward the safe set.
//!
//! Two update rules sit on top of the QP:
//!
//! * [`aggregate_plain`] clips the QP solution to the local region.
//! * [`aggregate_modified`] rebuilds the direction from the normalised duals
//!   and rescales it by a clamped norm, which is the form that admits the
//!   constrained-Pareto convergence guarantee when `H` is the Fisher matrix.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bundle::GradientBundle;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::metric::Metric;
use crate::preference::Preference;
use crate::qp::{self, LinearConstraint, QpInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Plain,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorConfig {
    /// Local region size `ε`.
    pub epsilon: f64,
    /// Lower clamp on the direction norm (modified variant only).
    pub g_min: f64,
    /// Upper clamp on the direction norm (modified variant only).
    pub g_max: f64,
    /// Cap on the rescaled constraint multipliers (modified variant only).
    pub lambda_max: f64,
    pub variant: Variant,
}

impl AggregatorConfig {
    pub fn plain(epsilon: f64) -> Self {
        Self { epsilon, g_min: 0.0, g_max: f64::INFINITY, lambda_max: f64::INFINITY, variant: Variant::Plain }
    }

    pub fn modified(epsilon: f64, g_min: f64, g_max: f64, lambda_max: f64) -> Self {
        Self { epsilon, g_min, g_max, lambda_max, variant: Variant::Modified }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.g_min >= 0.0) || !(self.g_max >= self.g_min) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= g_min <= g_max, got g_min={} g_max={}",
                self.g_min, self.g_max
            )));
        }
        if !(self.lambda_max >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda_max must be >= 0, got {}", self.lambda_max)));
        }
        Ok(())
    }
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        Self::plain(0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// All constraints satisfied; objectives and constraints aggregated.
    Normal,
    /// Some constraint violated; constraints-only recovery step.
    Recovery,
    /// The QP was infeasible or its duals degenerate; no update.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    /// The step actually applied, `g^ag`.
    pub gradient: Vec<f64>,
    /// The direction before clipping or rescaling, `ḡ^ag`.
    pub raw_gradient: Vec<f64>,
    pub duals_nu: Vec<f64>,
    pub duals_lambda: Vec<f64>,
    pub mode: Mode,
}

impl AggregationResult {
    fn zero(dim: usize, n: usize, m: usize) -> Self {
        Self {
            gradient: vec![0.0; dim],
            raw_gradient: vec![0.0; dim],
            duals_nu: vec![0.0; n],
            duals_lambda: vec![0.0; m],
            mode: Mode::Zero,
        }
    }
}

/// `ωᵢ·ε·‖gᵢ‖_{H⁻¹}` for every objective.
pub fn transform_offsets(
    bundle: &GradientBundle,
    preference: &Preference,
    metric: &impl Metric,
    epsilon: f64,
) -> Result<Vec<f64>> {
    check_inputs(bundle, preference, metric)?;
    Ok(bundle
        .objective_grads
        .iter()
        .zip(preference.weights())
        .map(|(g, w)| w * epsilon * metric.inv_norm(g))
        .collect())
}

fn check_inputs(bundle: &GradientBundle, preference: &Preference, metric: &impl Metric) -> Result<()> {
    bundle.validate()?;
    if preference.len() != bundle.n_objectives() {
        return Err(Error::DimensionMismatch { expected: bundle.n_objectives(), found: preference.len() });
    }
    if bundle.dim() != metric.dim() {
        return Err(Error::DimensionMismatch { expected: metric.dim(), found: bundle.dim() });
    }
    Ok(())
}

fn safety_constraints(bundle: &GradientBundle) -> Vec<LinearConstraint> {
    bundle
        .constraint_grads
        .iter()
        .zip(bundle.slacks())
        .map(|(b, slack)| LinearConstraint::new(b.clone(), slack))
        .collect()
}

/// Solve the aggregation QP (or the recovery QP when any constraint is
/// violated). Returns the QP solution and whether it was the recovery one.
fn solve_aggregation_qp(
    bundle: &GradientBundle,
    preference: &Preference,
    metric: &impl Metric,
    epsilon: f64,
) -> Result<(qp::QpSolution, bool)> {
    let upper = safety_constraints(bundle);
    if bundle.all_satisfied() {
        let offsets = transform_offsets(bundle, preference, metric, epsilon)?;
        let lower = bundle
            .objective_grads
            .iter()
            .zip(offsets)
            .map(|(g, e)| LinearConstraint::new(g.clone(), e))
            .collect();
        Ok((qp::solve(&QpInstance::new(lower, upper), metric)?, false))
    } else {
        Ok((qp::solve(&QpInstance::new(Vec::new(), upper), metric)?, true))
    }
}

/// The clipped update `g^ag = min(1, ε/‖ḡ‖_H)·ḡ`.
pub fn aggregate_plain(
    bundle: &GradientBundle,
    preference: &Preference,
    metric: &impl Metric,
    config: &AggregatorConfig,
) -> Result<AggregationResult> {
    config.validate()?;
    check_inputs(bundle, preference, metric)?;
    let (n, m, dim) = (bundle.n_objectives(), bundle.n_constraints(), bundle.dim());
    let (sol, recovery) = solve_aggregation_qp(bundle, preference, metric, config.epsilon)?;
    if !sol.is_optimal() {
        return Ok(AggregationResult::zero(dim, n, m));
    }
    let raw = sol.primal;
    let norm = metric.norm(&raw);
    let factor = if norm > config.epsilon { config.epsilon / norm } else { 1.0 };
    let gradient = raw.iter().map(|x| factor * x).collect();
    let duals_nu = if recovery { vec![0.0; n] } else { sol.duals_lower };
    Ok(AggregationResult {
        gradient,
        raw_gradient: raw,
        duals_nu,
        duals_lambda: sol.duals_upper,
        mode: if recovery { Mode::Recovery } else { Mode::Normal },
    })
}

/// The dual-normalised update with clamped rescaling.
///
/// Feasible case: `ḡ = H⁻¹(Σᵢ ν̂ᵢ gᵢ − εₜ Σₖ min(λₖ/(εₜΣν), λ_max) bₖ)` with
/// `ν̂ = ν/Σν`. Violated case: `ḡ = −H⁻¹ Σₖ (λₖ/Σλ) bₖ`. In both cases the
/// step is `εₜ·ḡ / min(max(‖ḡ‖_H, g_min), g_max)`. The improvement offsets of
/// the QP use `εₜ` as the local region size.
pub fn aggregate_modified(
    bundle: &GradientBundle,
    preference: &Preference,
    metric: &impl Metric,
    config: &AggregatorConfig,
    epsilon_t: f64,
) -> Result<AggregationResult> {
    config.validate()?;
    check_inputs(bundle, preference, metric)?;
    if !(epsilon_t > 0.0) || !epsilon_t.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon_t must be positive, got {epsilon_t}")));
    }
    let (n, m, dim) = (bundle.n_objectives(), bundle.n_constraints(), bundle.dim());
    let (sol, recovery) = solve_aggregation_qp(bundle, preference, metric, epsilon_t)?;
    if !sol.is_optimal() {
        return Ok(AggregationResult::zero(dim, n, m));
    }

    let mut combo = vec![0.0; dim];
    let duals_nu;
    if recovery {
        let total: f64 = sol.duals_upper.iter().sum();
        if !(total > 0.0) {
            return Ok(AggregationResult::zero(dim, n, m));
        }
        for (b, lam) in bundle.constraint_grads.iter().zip(&sol.duals_upper) {
            add_scaled(&mut combo, -lam / total, b);
        }
        duals_nu = vec![0.0; n];
    } else {
        let total: f64 = sol.duals_lower.iter().sum();
        if !(total > 0.0) {
            return Ok(AggregationResult::zero(dim, n, m));
        }
        for (g, nu) in bundle.objective_grads.iter().zip(&sol.duals_lower) {
            add_scaled(&mut combo, nu / total, g);
        }
        for (b, lam) in bundle.constraint_grads.iter().zip(&sol.duals_upper) {
            let weight = (lam / (epsilon_t * total)).min(config.lambda_max);
            add_scaled(&mut combo, -epsilon_t * weight, b);
        }
        duals_nu = sol.duals_lower;
    }

    let raw = metric.inv_apply(&combo);
    let denom = metric.norm(&raw).max(config.g_min).min(config.g_max);
    if !(denom > 0.0) {
        return Ok(AggregationResult::zero(dim, n, m));
    }
    let gradient = raw.iter().map(|x| epsilon_t * x / denom).collect();
    Ok(AggregationResult {
        gradient,
        raw_gradient: raw,
        duals_nu,
        duals_lambda: sol.duals_upper,
        mode: if recovery { Mode::Recovery } else { Mode::Normal },
    })
}

/// Dispatch on `config.variant`; the plain variant ignores `epsilon_t`.
pub fn aggregate(
    bundle: &GradientBundle,
    preference: &Preference,
    metric: &impl Metric,
    config: &AggregatorConfig,
    epsilon_t: f64,
) -> Result<AggregationResult> {
    match config.variant {
        Variant::Plain => aggregate_plain(bundle, preference, metric, config),
        Variant::Modified => aggregate_modified(bundle, preference, metric, config, epsilon_t),
    }
}

fn add_scaled(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

/// Tolerance below which an inner product counts as a conflict.
pub const CONFLICT_TOLERANCE: f64 = 1e-9;

/// True iff some objective gradient has `gᵢᵀg < −1e-9` against the update.
pub fn conflict_check(bundle: &GradientBundle, gradient: &[f64]) -> bool {
    bundle
        .objective_grads
        .iter()
        .any(|g| g.len() == gradient.len() && dot(g, gradient) < -CONFLICT_TOLERANCE)
}

/// `ε₀ / (1 + t)^0.6`: divergent sum, convergent sum of squares.
pub fn robbins_monro(epsilon0: f64, t: u64) -> f64 {
    epsilon0 / libm::pow(1.0 + t as f64, 0.6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::LocalMetric;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn pref(w: &[f64]) -> Preference {
        Preference::new(w.to_vec()).unwrap()
    }

    #[test]
    fn offsets_follow_dual_norms() {
        let b = GradientBundle::unconstrained(vec![vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap();
        let id = LocalMetric::identity(2);
        assert_eq!(transform_offsets(&b, &pref(&[1.0, 1.0]), &id, 1.0).unwrap(), vec![5.0, 1.0]);
        assert_eq!(transform_offsets(&b, &pref(&[1.0, 0.0]), &id, 1.0).unwrap()[1], 0.0);
        let single = GradientBundle::unconstrained(vec![vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(transform_offsets(&single, &pref(&[1.0]), &id, 0.05).unwrap()[0], 0.05);
    }

    #[test]
    fn offsets_reject_mismatched_preference() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0]]).unwrap();
        assert!(transform_offsets(&b, &pref(&[1.0, 1.0]), &LocalMetric::identity(2), 1.0).is_err());
    }

    #[test]
    fn single_objective_plain_step_is_trust_region_step() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0]]).unwrap();
        let r = aggregate_plain(&b, &pref(&[1.0]), &LocalMetric::identity(2), &AggregatorConfig::plain(0.05)).unwrap();
        assert_eq!(r.mode, Mode::Normal);
        assert_abs_diff_eq!(r.gradient[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradient[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn violated_constraint_triggers_recovery() {
        let b = GradientBundle::new(vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]], vec![1.0], vec![0.5]).unwrap();
        let r = aggregate_plain(&b, &pref(&[1.0]), &LocalMetric::identity(2), &AggregatorConfig::plain(1.0)).unwrap();
        assert_eq!(r.mode, Mode::Recovery);
        assert!(dot(&b.constraint_grads[0], &r.gradient) <= -0.5 + 1e-12);
        assert_eq!(r.duals_nu, vec![0.0]);
    }

    #[test]
    fn symmetric_two_objective_plain_step() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = aggregate_plain(&b, &pref(&[1.0, 1.0]), &LocalMetric::identity(2), &AggregatorConfig::plain(1.0)).unwrap();
        let x = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(r.gradient[0], x, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gradient[1], x, epsilon = 1e-14);
        // Unclipped QP solution is (1, 1).
        assert_abs_diff_eq!(r.raw_gradient[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn modified_single_objective() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0]]).unwrap();
        let cfg = AggregatorConfig::modified(0.1, 0.0, f64::INFINITY, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0]), &LocalMetric::identity(2), &cfg, 0.1).unwrap();
        assert_abs_diff_eq!(r.gradient[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradient[1], 0.0, epsilon = 1e-15);
        let total: f64 = r.duals_nu.iter().sum();
        assert_abs_diff_eq!(r.duals_nu[0] / total, 1.0);
    }

    #[test]
    fn modified_violated_case_descends_constraint() {
        let b = GradientBundle::new(vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]], vec![1.0], vec![0.0]).unwrap();
        let cfg = AggregatorConfig::modified(0.1, 0.0, f64::INFINITY, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0]), &LocalMetric::identity(2), &cfg, 0.1).unwrap();
        assert_eq!(r.mode, Mode::Recovery);
        assert_abs_diff_eq!(r.gradient[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradient[1], -0.1, epsilon = 1e-15);
    }

    #[test]
    fn modified_symmetric_two_objectives() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let cfg = AggregatorConfig::modified(1.0, 0.0, f64::INFINITY, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0, 1.0]), &LocalMetric::identity(2), &cfg, 1.0).unwrap();
        let x = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(r.gradient[0], x, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gradient[1], x, epsilon = 1e-14);
    }

    #[test]
    fn zero_gradients_give_zero_mode() {
        let b = GradientBundle::unconstrained(vec![vec![0.0, 0.0]]).unwrap();
        let cfg = AggregatorConfig::modified(0.1, 0.0, f64::INFINITY, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0]), &LocalMetric::identity(2), &cfg, 0.1).unwrap();
        assert_eq!(r.mode, Mode::Zero);
        assert_eq!(r.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn modified_norm_clamps() {
        let b = GradientBundle::unconstrained(vec![vec![2.0, 0.0]]).unwrap();
        let id = LocalMetric::identity(2);
        // ‖ḡ‖ = 2; with g_max = 1 the step is 2·εₜ.
        let cfg = AggregatorConfig::modified(0.1, 0.0, 1.0, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0]), &id, &cfg, 0.1).unwrap();
        assert_abs_diff_eq!(r.gradient[0], 0.2, epsilon = 1e-14);
        // With g_min = 4 the step is εₜ/2.
        let cfg = AggregatorConfig::modified(0.1, 4.0, 10.0, f64::INFINITY);
        let r = aggregate_modified(&b, &pref(&[1.0]), &id, &cfg, 0.1).unwrap();
        assert_abs_diff_eq!(r.gradient[0], 0.05, epsilon = 1e-14);
    }

    #[test]
    fn conflicts_are_detected() {
        let b = GradientBundle::unconstrained(vec![vec![1.0, 0.0]]).unwrap();
        assert!(!conflict_check(&b, &[1.0, 0.0]));
        assert!(conflict_check(&b, &[-1.0, 0.0]));
    }

    #[test]
    fn config_validation() {
        assert!(AggregatorConfig::plain(0.0).validate().is_err());
        assert!(AggregatorConfig::modified(0.1, 2.0, 1.0, 1.0).validate().is_err());
        assert!(AggregatorConfig::modified(0.1, 0.0, f64::INFINITY, f64::INFINITY).validate().is_ok());
    }

    #[test]
    fn schedule_decays() {
        assert_eq!(robbins_monro(0.5, 0), 0.5);
        assert!(robbins_monro(0.5, 100) < robbins_monro(0.5, 99));
    }
}
