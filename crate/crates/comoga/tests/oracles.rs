use comoga::commands::tabular::BUNDLED_MODEL;
use comoga::formats::{parse_json, ArchiveFile, ModelFile};
use comoga::oracle::{brute_force_qp, evaluate_lp_policy, occupancy_lp, sweep_weights};
use comoga_core::tabular::{cp_front_oracle, random_cmomdp, OracleOptions, RandomModelSpec, TabularCMOMDP};
use nalgebra::{DMatrix, DVector};

fn spec(ns: usize) -> RandomModelSpec {
    RandomModelSpec { n_states: ns, n_actions: 2, n_objectives: 2, n_constraints: 1, gamma: 0.8, slater_margin: 0.05 }
}

fn bundled() -> TabularCMOMDP {
    parse_json::<ModelFile>(BUNDLED_MODEL).unwrap().to_model().unwrap()
}

#[test]
fn brute_force_qp_examples() {
    let h = DMatrix::identity(2, 2);
    let lower = vec![(DVector::from_vec(vec![1.0, 0.0]), 1.0)];
    let sol = brute_force_qp(&h, &lower, &[]).unwrap();
    assert!((sol.primal - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
    assert!((sol.objective - 1.0).abs() < 1e-12);

    let two = vec![(DVector::from_vec(vec![1.0, 0.0]), 1.0), (DVector::from_vec(vec![0.0, 1.0]), 1.0)];
    let sol = brute_force_qp(&h, &two, &[]).unwrap();
    assert!((sol.primal - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);

    let clash = vec![(DVector::from_vec(vec![1.0]), 1.0)];
    let cap = vec![(DVector::from_vec(vec![1.0]), 0.0)];
    assert!(brute_force_qp(&DMatrix::identity(1, 1), &clash, &cap).is_none());
    let slack = vec![(DVector::from_vec(vec![1.0]), -1.0)];
    assert_eq!(brute_force_qp(&DMatrix::identity(1, 1), &slack, &[]).unwrap().objective, 0.0);
}

#[test]
fn lp_policies_reproduce_their_returns() {
    for seed in 0..5 {
        let mdp = random_cmomdp(&spec(3), seed).unwrap();
        for w in sweep_weights(7) {
            let sol = occupancy_lp(&mdp, &w).unwrap().expect("Slater models are feasible");
            assert!((sol.occupancy.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let (r, c) = evaluate_lp_policy(&mdp, &sol).unwrap();
            for (a, b) in r.iter().zip(&sol.objective_returns).chain(c.iter().zip(&sol.constraint_returns)) {
                assert!((a - b).abs() < 1e-8, "seed {seed}: {a} vs {b}");
            }
            assert!(c[0] <= mdp.thresholds()[0] + 1e-9);
        }
    }
}

#[test]
fn lp_sweep_matches_the_enumeration_front() {
    for seed in 0..10 {
        let mdp = random_cmomdp(&spec(3), seed).unwrap();
        let front = cp_front_oracle(&mdp, &OracleOptions::default()).unwrap();
        for w in sweep_weights(25) {
            let sol = occupancy_lp(&mdp, &w).unwrap().unwrap();
            let lp_value: f64 = w.iter().zip(&sol.objective_returns).map(|(a, b)| a * b).sum();
            let front_value = front
                .vertices
                .iter()
                .map(|v| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((lp_value - front_value).abs() <= 1e-6, "seed {seed}: {lp_value} vs {front_value}");
            assert!(front.distance(&sol.objective_returns) <= 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn ls_optimal_points_are_not_dominated_by_the_front() {
    for seed in 0..10 {
        let mdp = random_cmomdp(&spec(3), seed).unwrap();
        let front = cp_front_oracle(&mdp, &OracleOptions::default()).unwrap();
        for w in sweep_weights(25) {
            let sol = occupancy_lp(&mdp, &w).unwrap().unwrap();
            assert!(!front.dominates_point(&sol.objective_returns, 1e-8), "seed {seed} {w:?}");
        }
    }
}

#[test]
fn infeasible_thresholds_give_no_lp_solution() {
    let mdp = random_cmomdp(&spec(3), 1).unwrap().with_thresholds(vec![-1.0]).unwrap();
    assert!(occupancy_lp(&mdp, &[0.5, 0.5]).unwrap().is_none());
    assert!(cp_front_oracle(&mdp, &OracleOptions::default()).unwrap().is_empty());
}

#[test]
fn lp_rejects_wrong_weight_count() {
    let mdp = random_cmomdp(&spec(3), 1).unwrap();
    assert_eq!(occupancy_lp(&mdp, &[1.0]).unwrap_err().exit_code(), 2);
}

#[test]
fn bundled_front_is_frozen() {
    let mdp = bundled();
    let front = cp_front_oracle(&mdp, &OracleOptions::default()).unwrap();
    let frozen: ArchiveFile = parse_json(include_str!("../data/five_state_front.json")).unwrap();
    assert_eq!(frozen.points.len(), front.vertices.len());
    for (p, v) in frozen.points.iter().zip(&front.vertices) {
        for (a, b) in p.objectives.iter().zip(v) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    for w in sweep_weights(25) {
        let sol = occupancy_lp(&mdp, &w).unwrap().unwrap();
        assert!(front.distance(&sol.objective_returns) <= 1e-6);
    }
}
