//! Two-objective analytic benchmark with a quadratic safety constraint.
//!
//! Both objectives are minimised. `L₁` has a deep local valley that pulls
//! linear scalarisation away from the constrained-Pareto set when started
//! at `(−10, 7.5)`; conflict-free aggregation reaches the set from every
//! standard start.

use alloc::vec;
use alloc::vec::Vec;

use crate::aggregator::{aggregate_plain, conflict_check, AggregatorConfig, Mode};
use crate::bundle::GradientBundle;
use crate::error::{Error, Result};
use crate::metric::LocalMetric;
use crate::preference::Preference;

/// Floor inside the logarithms of `f₁`, `f₂`.
const LOG_FLOOR: f64 = 0.000005;

/// The four standard starting points.
pub const STANDARD_STARTS: [ToyPoint; 4] = [
    ToyPoint { x1: -10.0, x2: 0.0 },
    ToyPoint { x1: -10.0, x2: 7.5 },
    ToyPoint { x1: 0.0, x2: 7.5 },
    ToyPoint { x1: 10.0, x2: 10.0 },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyPoint {
    pub x1: f64,
    pub x2: f64,
}

impl ToyPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn distance(&self, other: &ToyPoint) -> f64 {
        libm::hypot(self.x1 - other.x1, self.x2 - other.x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyValues {
    pub l1: f64,
    pub l2: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyGradients {
    pub l1: [f64; 2],
    pub l2: [f64; 2],
    pub c: [f64; 2],
}

fn gate_up(x: f64) -> f64 {
    libm::tanh(0.5 * x).max(0.0)
}

fn gate_down(x: f64) -> f64 {
    libm::tanh(-0.5 * x).max(0.0)
}

fn sech2(x: f64) -> f64 {
    let t = libm::tanh(x);
    1.0 - t * t
}

pub fn constraint(p: ToyPoint) -> f64 {
    p.x1 * p.x1 + 0.3 * (p.x2 - 10.0) * (p.x2 - 10.0) - 10.5 * 10.5
}

pub fn eval_toy(p: ToyPoint) -> ToyValues {
    let (x1, x2) = (p.x1, p.x2);
    let u1 = 0.5 * (-x1 - 7.0) - libm::tanh(-x2);
    let u2 = 0.5 * (-x1 + 3.0) + libm::tanh(-x2 + 2.0);
    let f1 = libm::log(u1.abs().max(LOG_FLOOR)) + 6.0;
    let f2 = libm::log(u2.abs().max(LOG_FLOOR)) + 6.0;
    let q = 0.1 * (-x2 - 8.0) * (-x2 - 8.0);
    let g1 = ((-x1 + 7.0) * (-x1 + 7.0) + q) / 10.0 - 20.0;
    let g2 = ((-x1 - 7.0) * (-x1 - 7.0) + q) / 10.0 - 20.0;
    let (up, down) = (gate_up(x2), gate_down(x2));
    ToyValues { l1: up * f1 + down * g1, l2: up * f2 + down * g2, c: constraint(p) }
}

/// Analytic gradients; on a seam the derivative of the active branch is used.
pub fn grad_toy(p: ToyPoint) -> ToyGradients {
    let (x1, x2) = (p.x1, p.x2);
    let up = gate_up(x2);
    let down = gate_down(x2);
    let d_up = if x2 > 0.0 { 0.5 * sech2(0.5 * x2) } else { 0.0 };
    let d_down = if x2 < 0.0 { -0.5 * sech2(0.5 * x2) } else { 0.0 };

    let u1 = 0.5 * (-x1 - 7.0) - libm::tanh(-x2);
    let u2 = 0.5 * (-x1 + 3.0) + libm::tanh(-x2 + 2.0);
    let f1 = libm::log(u1.abs().max(LOG_FLOOR)) + 6.0;
    let f2 = libm::log(u2.abs().max(LOG_FLOOR)) + 6.0;
    // d log|u| = du / u on the branch where |u| exceeds the floor.
    let (f1_x1, f1_x2) = if u1.abs() > LOG_FLOOR { (-0.5 / u1, sech2(-x2) / u1) } else { (0.0, 0.0) };
    let (f2_x1, f2_x2) = if u2.abs() > LOG_FLOOR { (-0.5 / u2, -sech2(-x2 + 2.0) / u2) } else { (0.0, 0.0) };

    let q = 0.1 * (-x2 - 8.0) * (-x2 - 8.0);
    let g1 = ((-x1 + 7.0) * (-x1 + 7.0) + q) / 10.0 - 20.0;
    let g2 = ((-x1 - 7.0) * (-x1 - 7.0) + q) / 10.0 - 20.0;
    let g1_x1 = (x1 - 7.0) / 5.0;
    let g2_x1 = (x1 + 7.0) / 5.0;
    let g_x2 = (x2 + 8.0) / 50.0;

    ToyGradients {
        l1: [up * f1_x1 + down * g1_x1, d_up * f1 + up * f1_x2 + d_down * g1 + down * g_x2],
        l2: [up * f2_x1 + down * g2_x1, d_up * f2 + up * f2_x2 + d_down * g2 + down * g_x2],
        c: [2.0 * x1, 0.6 * (x2 - 10.0)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyMethod {
    Comoga,
    Ls,
    Lagrangian,
}

impl ToyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToyMethod::Comoga => "comoga",
            ToyMethod::Ls => "ls",
            ToyMethod::Lagrangian => "lagrangian",
        }
    }
}

/// What produced a trajectory point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Start,
    Aggregated(Mode),
    Gradient,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Start => "start",
            StepKind::Aggregated(Mode::Normal) => "normal",
            StepKind::Aggregated(Mode::Recovery) => "recovery",
            StepKind::Aggregated(Mode::Zero) => "zero",
            StepKind::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: ToyMethod,
    pub preference: Preference,
    pub points: Vec<ToyPoint>,
    pub objective_values: Vec<(f64, f64)>,
    pub constraint_values: Vec<f64>,
    /// `kinds[t]` describes the step that produced `points[t]`.
    pub kinds: Vec<StepKind>,
    /// Normal-mode steps whose update conflicted with an objective.
    pub conflicts: usize,
}

impl Trajectory {
    fn new(method: ToyMethod, preference: Preference, start: ToyPoint) -> Self {
        let mut t = Self {
            method,
            preference,
            points: Vec::new(),
            objective_values: Vec::new(),
            constraint_values: Vec::new(),
            kinds: Vec::new(),
            conflicts: 0,
        };
        t.push(start, StepKind::Start);
        t
    }

    fn push(&mut self, p: ToyPoint, kind: StepKind) {
        let v = eval_toy(p);
        self.points.push(p);
        self.objective_values.push((v.l1, v.l2));
        self.constraint_values.push(v.c);
        self.kinds.push(kind);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> ToyPoint {
        *self.points.last().expect("trajectory always holds its start")
    }

    pub fn final_constraint(&self) -> f64 {
        *self.constraint_values.last().expect("trajectory always holds its start")
    }
}

/// Objectives negated (maximisation form) against the constraint `C ≤ 0`.
pub fn toy_bundle(p: ToyPoint) -> GradientBundle {
    let g = grad_toy(p);
    GradientBundle {
        objective_grads: vec![vec![-g.l1[0], -g.l1[1]], vec![-g.l2[0], -g.l2[1]]],
        constraint_grads: vec![g.c.to_vec()],
        constraint_values: vec![constraint(p)],
        thresholds: vec![0.0],
    }
}

fn check_run(start: ToyPoint, preference: &Preference, steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !start.is_finite() {
        return Err(Error::InvalidArgument("start point must be finite".into()));
    }
    if preference.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: preference.len() });
    }
    Ok(())
}

/// Plain conflict-averse aggregation with the identity metric.
///
/// A zero-mode step leaves the point unchanged, and every later step would
/// repeat it, so the run stops there.
pub fn run_comoga_toy(
    start: ToyPoint,
    preference: &Preference,
    config: &AggregatorConfig,
    steps: usize,
) -> Result<Trajectory> {
    check_run(start, preference, steps)?;
    config.validate()?;
    let metric = LocalMetric::identity(2);
    let mut traj = Trajectory::new(ToyMethod::Comoga, preference.clone(), start);
    let mut p = start;
    for _ in 0..steps {
        let bundle = toy_bundle(p);
        let res = aggregate_plain(&bundle, preference, &metric, config)?;
        if res.mode == Mode::Normal && conflict_check(&bundle, &res.gradient) {
            traj.conflicts += 1;
        }
        p = ToyPoint::new(p.x1 + res.gradient[0], p.x2 + res.gradient[1]);
        traj.push(p, StepKind::Aggregated(res.mode));
        if res.mode == Mode::Zero {
            break;
        }
    }
    Ok(traj)
}

/// Lagrange multipliers with projected ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub multipliers: Vec<f64>,
    pub multiplier_lr: f64,
}

impl LagrangianState {
    pub fn new(n_constraints: usize, multiplier_lr: f64) -> Self {
        Self { multipliers: vec![0.0; n_constraints], multiplier_lr }
    }

    /// `λₖ ← max(0, λₖ + lr·(J_Cₖ − dₖ))`, given the constraint excesses.
    pub fn update(&mut self, excess: &[f64]) {
        for (lam, c) in self.multipliers.iter_mut().zip(excess) {
            *lam = (*lam + self.multiplier_lr * c).max(0.0);
        }
    }
}

/// Gradient ascent on `Σ ωᵢ(−Lᵢ) − λ·C`, updating `λ` concurrently when a
/// Lagrangian state is supplied; without one the constraint is ignored.
pub fn run_ls_toy(
    start: ToyPoint,
    preference: &Preference,
    lr: f64,
    lagrangian: Option<LagrangianState>,
    steps: usize,
) -> Result<Trajectory> {
    check_run(start, preference, steps)?;
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    let method = if lagrangian.is_some() { ToyMethod::Lagrangian } else { ToyMethod::Ls };
    let mut state = lagrangian;
    if let Some(s) = &state {
        if s.multipliers.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: s.multipliers.len() });
        }
        if !(s.multiplier_lr > 0.0) {
            return Err(Error::InvalidArgument("multiplier learning rate must be positive".into()));
        }
    }
    let w = preference.weights();
    let mut traj = Trajectory::new(method, preference.clone(), start);
    let mut p = start;
    for _ in 0..steps {
        let g = grad_toy(p);
        let lam = state.as_ref().map_or(0.0, |s| s.multipliers[0]);
        let d1 = -(w[0] * g.l1[0] + w[1] * g.l2[0]) - lam * g.c[0];
        let d2 = -(w[0] * g.l1[1] + w[1] * g.l2[1]) - lam * g.c[1];
        if let Some(s) = state.as_mut() {
            s.update(&[constraint(p)]);
        }
        p = ToyPoint::new(p.x1 + lr * d1, p.x2 + lr * d2);
        traj.push(p, StepKind::Gradient);
    }
    Ok(traj)
}

/// One point of the dense-grid constrained-Pareto set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyFrontPoint {
    pub point: ToyPoint,
    pub l1: f64,
    pub l2: f64,
}

/// Feasible, non-dominated (minimising `L₁`, `L₂`) points of a
/// `resolution × resolution` grid over `[−11, 11]²`.
pub fn cp_front_oracle_toy(resolution: usize) -> Result<Vec<ToyFrontPoint>> {
    if resolution < 100 {
        return Err(Error::InvalidArgument("grid resolution must be at least 100".into()));
    }
    let step = 22.0 / (resolution - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            let p = ToyPoint::new(-11.0 + step * i as f64, -11.0 + step * j as f64);
            let v = eval_toy(p);
            if v.c <= 0.0 {
                pts.push(ToyFrontPoint { point: p, l1: v.l1, l2: v.l2 });
            }
        }
    }
    pts.sort_by(|a, b| a.l1.total_cmp(&b.l1).then(a.l2.total_cmp(&b.l2)));
    let mut front: Vec<ToyFrontPoint> = Vec::new();
    let mut best_l2 = f64::INFINITY;
    let mut i = 0;
    while i < pts.len() {
        let mut j = i;
        while j < pts.len() && pts[j].l1 == pts[i].l1 {
            j += 1;
        }
        // pts[i] has the smallest L2 of this L1 group.
        let group_min = pts[i].l2;
        if group_min < best_l2 {
            front.extend(pts[i..j].iter().filter(|q| q.l2 == group_min));
            best_l2 = group_min;
        }
        i = j;
    }
    Ok(front)
}

/// Euclidean distance from `p` to the nearest oracle point.
pub fn distance_to_front(p: ToyPoint, front: &[ToyFrontPoint]) -> f64 {
    front.iter().map(|q| p.distance(&q.point)).fold(f64::INFINITY, f64::min)
}
