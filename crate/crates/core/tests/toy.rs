use comoga_core::toy::*;
use comoga_core::{AggregatorConfig, Mode, Preference};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn near_seam(p: ToyPoint) -> bool {
    let u1 = 0.5 * (-p.x1 - 7.0) - (-p.x2).tanh();
    let u2 = 0.5 * (-p.x1 + 3.0) + (-p.x2 + 2.0).tanh();
    p.x2.abs() < 1e-3 || u1.abs() < 1e-3 || u2.abs() < 1e-3
}

fn central(f: impl Fn(ToyPoint) -> f64, p: ToyPoint) -> [f64; 2] {
    [
        (f(ToyPoint::new(p.x1 + H, p.x2)) - f(ToyPoint::new(p.x1 - H, p.x2))) / (2.0 * H),
        (f(ToyPoint::new(p.x1, p.x2 + H)) - f(ToyPoint::new(p.x1, p.x2 - H))) / (2.0 * H),
    ]
}

fn rel_err(a: [f64; 2], b: [f64; 2]) -> f64 {
    let diff = (a[0] - b[0]).hypot(a[1] - b[1]);
    diff / a[0].hypot(a[1]).max(b[0].hypot(b[1])).max(1e-12)
}

/// Straight transcription of the benchmark formulas.
fn reference_eval(x1: f64, x2: f64) -> (f64, f64, f64) {
    let c1 = (0.5 * x2).tanh().max(0.0);
    let c2 = (-0.5 * x2).tanh().max(0.0);
    let f1 = (0.5 * (-x1 - 7.0) - (-x2).tanh()).abs().max(0.000005).ln() + 6.0;
    let f2 = (0.5 * (-x1 + 3.0) + (-x2 + 2.0).tanh()).abs().max(0.000005).ln() + 6.0;
    let g1 = ((-x1 + 7.0).powi(2) + 0.1 * (-x2 - 8.0).powi(2)) / 10.0 - 20.0;
    let g2 = ((-x1 - 7.0).powi(2) + 0.1 * (-x2 - 8.0).powi(2)) / 10.0 - 20.0;
    let c = x1 * x1 + 0.3 * (x2 - 10.0).powi(2) - 10.5 * 10.5;
    (c1 * f1 + c2 * g1, c1 * f2 + c2 * g2, c)
}

#[test]
fn values_agree_with_a_direct_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pts = vec![ToyPoint::new(-10.0, 7.5), ToyPoint::new(0.0, 0.0), ToyPoint::new(0.0, 10.0)];
    pts.extend((0..200).map(|_| ToyPoint::new(rng.random_range(-11.0..11.0), rng.random_range(-11.0..11.0))));
    for p in pts {
        let v = eval_toy(p);
        let (l1, l2, c) = reference_eval(p.x1, p.x2);
        for (a, b) in [(v.l1, l1), (v.l2, l2), (v.c, c)] {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{p:?}: {a} vs {b}");
        }
    }
    assert_eq!(eval_toy(ToyPoint::new(0.0, 10.0)).c, -110.25);
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 500 {
        let p = ToyPoint::new(rng.random_range(-11.0..11.0), rng.random_range(-11.0..11.0));
        if near_seam(p) {
            continue;
        }
        let g = grad_toy(p);
        worst = worst.max(rel_err(g.l1, central(|q| eval_toy(q).l1, p)));
        worst = worst.max(rel_err(g.l2, central(|q| eval_toy(q).l2, p)));
        worst = worst.max(rel_err(g.c, central(|q| eval_toy(q).c, p)));
        checked += 1;
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn start_gradients_match_central_differences() {
    let p = ToyPoint::new(-10.0, 7.5);
    let g = grad_toy(p);
    assert!(rel_err(g.l1, central(|q| eval_toy(q).l1, p)) <= 1e-5);
    assert!(rel_err(g.l2, central(|q| eval_toy(q).l2, p)) <= 1e-5);
}

#[test]
fn comoga_trajectories_are_conflict_free_and_deterministic() {
    let pref = Preference::normalized(&[0.5, 0.5]).unwrap();
    let cfg = AggregatorConfig::plain(0.05);
    for start in STANDARD_STARTS {
        let a = run_comoga_toy(start, &pref, &cfg, 4000).unwrap();
        let b = run_comoga_toy(start, &pref, &cfg, 4000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.conflicts, 0);
        assert_eq!(a.points.len(), a.objective_values.len());
        assert_eq!(a.points.len(), a.constraint_values.len());
        for w in a.points.windows(2) {
            assert!(w[0].distance(&w[1]) <= 0.05 * (1.0 + 1e-9));
        }
    }
}

#[test]
fn infeasible_start_takes_recovery_steps() {
    let pref = Preference::uniform(2);
    let t = run_comoga_toy(ToyPoint::new(-10.0, 0.0), &pref, &AggregatorConfig::plain(0.05), 50).unwrap();
    assert_eq!(t.kinds[1], StepKind::Aggregated(Mode::Recovery));
    assert!(t.final_constraint() < t.constraint_values[0]);
}

#[test]
fn linear_scalarisation_misses_the_front_from_the_valley_start() {
    let front = cp_front_oracle_toy(400).unwrap();
    let pref = Preference::normalized(&[0.5, 0.5]).unwrap();
    let t = run_ls_toy(ToyPoint::new(-10.0, 7.5), &pref, 0.01, None, 20000).unwrap();
    let last = t.last();
    assert!(!last.is_finite() || distance_to_front(last, &front) > 0.5);
}

#[test]
fn lagrangian_run_tracks_the_multiplier() {
    let pref = Preference::uniform(2);
    let t = run_ls_toy(ToyPoint::new(-10.0, 0.0), &pref, 0.01, Some(LagrangianState::new(1, 0.1)), 2000).unwrap();
    assert_eq!(t.method, ToyMethod::Lagrangian);
    assert!(t.final_constraint() < t.constraint_values[0]);
}

#[test]
fn oracle_refines_consistently() {
    let coarse = cp_front_oracle_toy(400).unwrap();
    let fine = cp_front_oracle_toy(800).unwrap();
    let spacing = 22.0 / 399.0;
    let one_sided = |a: &[ToyFrontPoint], b: &[ToyFrontPoint]| {
        a.iter().map(|p| distance_to_front(p.point, b)).fold(0.0, f64::max)
    };
    let hausdorff = one_sided(&coarse, &fine).max(one_sided(&fine, &coarse));
    assert!(hausdorff <= 2.0 * spacing, "{hausdorff}");
    assert!(cp_front_oracle_toy(99).is_err());
}
