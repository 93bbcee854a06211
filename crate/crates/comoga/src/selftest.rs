//! Self-check suites comparing the core routines with independent oracles.

use std::time::Instant;

use comoga_core::aggregator::transform_offsets;
use comoga_core::front::{hypervolume, hypervolume_mc, pareto_filter, FrontPoint};
use comoga_core::linalg::Matrix;
use comoga_core::qp::{kkt_residual, solve, LinearConstraint, QpInstance};
use comoga_core::tabular::{evaluate, policy_gradient, random_cmomdp, RandomModelSpec, SoftmaxPolicyTable};
use comoga_core::toy::{eval_toy, grad_toy, ToyPoint};
use comoga_core::{GradientBundle, LocalMetric, Preference};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SelftestConfig;
use crate::oracle::brute_force_qp;

/// Outcome of one suite. `worst` is the largest error seen and `limit` the
/// bound it is checked against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub worst: f64,
    pub limit: f64,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl SuiteOutcome {
    fn finish(name: &'static str, start: Instant, checked: usize, worst: f64, limit: f64, time_limit: Option<f64>, mut failures: Vec<String>) -> Self {
        let seconds = start.elapsed().as_secs_f64();
        if let Some(t) = time_limit {
            if seconds > t {
                failures.push(format!("took {seconds:.2} s, budget {t} s"));
            }
        }
        if !(worst <= limit) {
            failures.push(format!("worst error {worst:e} exceeds {limit:e}"));
        }
        let detail = failures.first().cloned().unwrap_or_default();
        Self { name, passed: failures.is_empty(), checked, worst, limit, detail, seconds }
    }
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.5..1.5));
    a.transpose() * &a + DMatrix::identity(dim, dim) * 0.1
}

fn to_core(h: &DMatrix<f64>) -> LocalMetric {
    let n = h.nrows();
    let data = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| h[(i, j)]).collect();
    LocalMetric::spd(Matrix::from_row_major(n, n, data).expect("square")).expect("spd by construction")
}

fn h_norm(h: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(h * v)).max(0.0).sqrt()
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Core QP solver against brute-force primal-KKT enumeration.
pub fn qp_oracle_suite(instances: usize, seed: u64) -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut failures) = (0.0f64, Vec::new());
    for k in 0..instances {
        let dim = rng.random_range(1..=6);
        let m = rng.random_range(1..=4);
        let n_lower = rng.random_range(0..=m);
        let h = random_spd(&mut rng, dim);
        let cons: Vec<(Vec<f64>, f64)> = (0..m).map(|_| (random_vec(&mut rng, dim, 2.0), rng.random_range(-1.0..1.0))).collect();
        let lower: Vec<LinearConstraint> = cons[..n_lower].iter().map(|(a, c)| LinearConstraint::new(a.clone(), *c)).collect();
        let upper: Vec<LinearConstraint> = cons[n_lower..].iter().map(|(a, c)| LinearConstraint::new(a.clone(), *c)).collect();
        let metric = to_core(&h);
        let inst = QpInstance::new(lower, upper);
        let sol = match solve(&inst, &metric) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let nal = |(a, c): &(Vec<f64>, f64)| (DVector::from_vec(a.clone()), *c);
        let lo: Vec<_> = cons[..n_lower].iter().map(nal).collect();
        let up: Vec<_> = cons[n_lower..].iter().map(nal).collect();
        match (brute_force_qp(&h, &lo, &up), sol.is_optimal()) {
            (None, false) => {}
            (Some(o), true) => {
                let diff = DVector::from_vec(sol.primal.clone()) - &o.primal;
                worst = worst.max(h_norm(&h, &diff));
                match kkt_residual(&inst, &metric, &sol) {
                    Ok(r) if r.within(1e-8) => {}
                    Ok(r) => failures.push(format!("instance {k}: KKT residual {:e} above 1e-8 x {:e}", r.max(), r.scale)),
                    Err(e) => failures.push(format!("instance {k}: {e}")),
                }
            }
            (Some(_), false) => failures.push(format!("instance {k}: solver reports infeasible, oracle found a solution")),
            (None, true) => failures.push(format!("instance {k}: oracle finds no solution, solver returned one")),
        }
    }
    SuiteOutcome::finish("qp_oracle", start, instances, worst, 1e-7, Some(10.0), failures)
}

/// Single-objective transformed QP against `ε·H⁻¹g/‖g‖_{H⁻¹}`.
pub fn transformation_suite(instances: usize, seed: u64) -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut failures) = (0.0f64, Vec::new());
    let mut checked = 0;
    while checked < instances {
        let dim = rng.random_range(1..=6);
        let h = random_spd(&mut rng, dim);
        let g = random_vec(&mut rng, dim, 2.0);
        let eps = rng.random_range(0.01..2.0);
        let chol = h.clone().cholesky().expect("spd by construction");
        let gv = DVector::from_vec(g.clone());
        let hinv_g = chol.solve(&gv);
        let inv_norm = gv.dot(&hinv_g).sqrt();
        if inv_norm < 1e-6 {
            continue;
        }
        checked += 1;
        let closed = hinv_g * (eps / inv_norm);
        let metric = to_core(&h);
        let result = GradientBundle::unconstrained(vec![g.clone()])
            .and_then(|b| transform_offsets(&b, &Preference::uniform(1), &metric, eps))
            .and_then(|e| solve(&QpInstance::new(vec![LinearConstraint::new(g, e[0])], Vec::new()), &metric));
        match result {
            Ok(sol) if sol.is_optimal() => {
                let diff = DVector::from_vec(sol.primal) - &closed;
                worst = worst.max(h_norm(&h, &diff));
            }
            Ok(_) => failures.push(format!("instance {checked}: transformed QP reported infeasible")),
            Err(e) => failures.push(format!("instance {checked}: {e}")),
        }
    }
    SuiteOutcome::finish("transformation", start, instances, worst, 1e-7, Some(5.0), failures)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-12)
}

/// Within `1e-3` of a kink of the toy functions.
fn near_toy_seam(p: ToyPoint) -> bool {
    let u1 = 0.5 * (-p.x1 - 7.0) - (-p.x2).tanh();
    let u2 = 0.5 * (-p.x1 + 3.0) + (-p.x2 + 2.0).tanh();
    p.x2.abs() < 1e-3 || u1.abs() < 1e-3 || u2.abs() < 1e-3
}

/// Analytic toy gradients against central differences with `h = 1e-6`.
pub fn toy_gradient_suite(points: usize, seed: u64) -> SuiteOutcome {
    const H: f64 = 1e-6;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < points {
        let p = ToyPoint::new(rng.random_range(-11.0..11.0), rng.random_range(-11.0..11.0));
        if near_toy_seam(p) {
            continue;
        }
        checked += 1;
        let g = grad_toy(p);
        let at = |dx: f64, dy: f64| eval_toy(ToyPoint::new(p.x1 + dx, p.x2 + dy));
        let (xp, xm, yp, ym) = (at(H, 0.0), at(-H, 0.0), at(0.0, H), at(0.0, -H));
        let fd = |f: fn(&comoga_core::toy::ToyValues) -> f64| [(f(&xp) - f(&xm)) / (2.0 * H), (f(&yp) - f(&ym)) / (2.0 * H)];
        worst = worst.max(rel_err(&g.l1, &fd(|v| v.l1)));
        worst = worst.max(rel_err(&g.l2, &fd(|v| v.l2)));
        worst = worst.max(rel_err(&g.c, &fd(|v| v.c)));
    }
    SuiteOutcome::finish("toy_gradient", start, points, worst, 1e-5, None, Vec::new())
}

/// Exact softmax policy gradients against central differences of the exact
/// returns with `h = 1e-5`, on random 3-state, 2-action models.
pub fn tabular_gradient_suite(points: usize, seed: u64) -> SuiteOutcome {
    const H: f64 = 1e-5;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomModelSpec { n_states: 3, n_actions: 2, n_objectives: 2, n_constraints: 1, gamma: 0.8, slater_margin: 0.05 };
    let (mut worst, mut failures) = (0.0f64, Vec::new());
    let mut model = None;
    for k in 0..points {
        if k % 25 == 0 {
            model = random_cmomdp(&spec, seed.wrapping_add(k as u64)).ok();
        }
        let Some(mdp) = &model else {
            failures.push(format!("model for point {k} could not be built"));
            continue;
        };
        let dim = mdp.dim();
        let logits = random_vec(&mut rng, dim, 1.5);
        let run = || -> comoga_core::error::Result<f64> {
            let policy = SoftmaxPolicyTable::new(3, 2, logits.clone())?;
            let grads = policy_gradient(mdp, &evaluate(mdp, &policy)?);
            let analytic: Vec<&Vec<f64>> = grads.objectives.iter().chain(&grads.constraints).collect();
            let mut numeric = vec![vec![0.0; dim]; analytic.len()];
            for j in 0..dim {
                let mut e = vec![0.0; dim];
                e[j] = H;
                let plus = evaluate(mdp, &policy.shifted(&e)?)?;
                e[j] = -H;
                let minus = evaluate(mdp, &policy.shifted(&e)?)?;
                let jp = plus.objective_returns.iter().chain(&plus.constraint_returns);
                let jm = minus.objective_returns.iter().chain(&minus.constraint_returns);
                for (i, (a, b)) in jp.zip(jm).enumerate() {
                    numeric[i][j] = (a - b) / (2.0 * H);
                }
            }
            Ok(analytic.iter().zip(&numeric).map(|(a, n)| rel_err(a, n)).fold(0.0, f64::max))
        };
        match run() {
            Ok(e) => worst = worst.max(e),
            Err(e) => failures.push(format!("point {k}: {e}")),
        }
    }
    SuiteOutcome::finish("tabular_gradient", start, points, worst, 1e-4, None, failures)
}

/// Exact hypervolume against the Monte-Carlo estimate on random 2-D and
/// 3-D archives. `worst` is the largest deviation in standard errors.
pub fn hv_mc_suite(archives: usize, samples: usize, seed: u64) -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut failures) = (0.0f64, Vec::new());
    for k in 0..archives {
        let dim = 2 + k % 2;
        let count = rng.random_range(1..=20);
        let pts: Vec<FrontPoint> = (0..count).map(|_| FrontPoint::new(random_vec(&mut rng, dim, 1.0).iter().map(|x| 5.0 * (x + 1.0)).collect())).collect();
        let archive = pareto_filter(&pts);
        let reference = vec![0.0; dim];
        let outcome = hypervolume(&archive, &reference)
            .and_then(|exact| hypervolume_mc(&archive, &reference, samples, seed.wrapping_add(k as u64)).map(|mc| (exact, mc)));
        match outcome {
            Ok((exact, (est, se))) => {
                let dev = (exact - est).abs();
                let sigmas = if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(sigmas);
            }
            Err(e) => failures.push(format!("archive {k}: {e}")),
        }
    }
    SuiteOutcome::finish("hv_monte_carlo", start, archives, worst, 3.0, None, failures)
}

/// All suites with the configured sizes.
pub fn run_all(config: &SelftestConfig) -> Vec<SuiteOutcome> {
    let s = config.seed;
    vec![
        qp_oracle_suite(config.instances, s),
        transformation_suite(config.instances, s.wrapping_add(1)),
        toy_gradient_suite(config.gradient_points, s.wrapping_add(2)),
        tabular_gradient_suite(config.gradient_points, s.wrapping_add(3)),
        hv_mc_suite(config.hv_archives, config.mc_samples, s.wrapping_add(4)),
    ]
}

/// Fixed-width pass/fail table.
pub fn format_table(outcomes: &[SuiteOutcome]) -> String {
    let mut out = format!("{:<18} {:<6} {:>8} {:>12} {:>12}  {}\n", "suite", "status", "checked", "worst", "limit", "detail");
    for o in outcomes {
        out.push_str(&format!(
            "{:<18} {:<6} {:>8} {:>12.3e} {:>12.3e}  {}\n",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.checked,
            o.worst,
            o.limit,
            o.detail
        ));
    }
    out
}
