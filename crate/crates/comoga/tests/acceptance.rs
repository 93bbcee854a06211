//! Acceptance suite: evaluates criteria 1 to 9 as stated and prints one
//! PASS/FAIL line for each.
//!
//! Criteria 1 and 7 are known to fail as stated; the target succeeds when the
//! failing set is exactly {1, 7}.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use comoga::commands::toy;
use comoga::config::{ToyConfig, ToyMethodName};
use comoga::oracle::{occupancy_lp, sweep_weights};
use comoga::selftest::{hv_mc_suite, qp_oracle_suite, tabular_gradient_suite, toy_gradient_suite, transformation_suite};
use comoga_core::front::{hypervolume, normalized_sparsity, pareto_filter, FrontPoint, ParetoArchive};
use comoga_core::preference::{preference_grid, GridSpacing};
use comoga_core::tabular::{
    cp_front_oracle, random_cmomdp, train_comoga_tabular, CpFront, OracleOptions, RandomModelSpec, SoftmaxPolicyTable, TabularCMOMDP,
    TrainConfig,
};
use comoga_core::AggregatorConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPECTED_FAILURES: [usize; 2] = [1, 7];

struct Verdict {
    id: usize,
    passed: bool,
    detail: String,
}

fn report(id: usize, passed: bool, detail: String) -> Verdict {
    println!("{} criterion {id}: {detail}", if passed { "PASS" } else { "FAIL" });
    Verdict { id, passed, detail }
}

fn archive(points: &[&[f64]]) -> ParetoArchive {
    pareto_filter(&points.iter().map(|p| FrontPoint::new(p.to_vec())).collect::<Vec<_>>())
}

fn test_models() -> Vec<(TabularCMOMDP, CpFront)> {
    let spec = RandomModelSpec { n_states: 3, n_actions: 2, n_objectives: 2, n_constraints: 1, gamma: 0.8, slater_margin: 0.05 };
    (0..10)
        .map(|seed| {
            let mdp = random_cmomdp(&spec, seed).expect("valid spec");
            let front = cp_front_oracle(&mdp, &OracleOptions::default()).expect("small model");
            (mdp, front)
        })
        .collect()
}

/// Criterion 1; returns the verdict and the CoMOGA conflict count.
fn toy_reproduction() -> (Verdict, usize) {
    let start = Instant::now();
    let comoga_cfg = ToyConfig { methods: vec![ToyMethodName::Comoga], ..ToyConfig::default() };
    let ls_cfg = ToyConfig { methods: vec![ToyMethodName::Ls], starts: vec![[-10.0, 7.5]], ..ToyConfig::default() };
    let (comoga, _) = toy::run(&comoga_cfg).expect("valid toy config");
    let (ls, _) = toy::run(&ls_cfg).expect("valid toy config");
    let seconds = start.elapsed().as_secs_f64();
    let conflicts: usize = comoga.runs.iter().map(|r| r.conflicts).sum();
    let misses: Vec<String> = comoga
        .runs
        .iter()
        .filter(|r| !r.reached_cp_set)
        .map(|r| format!("({}, {}) C={:.2e} d={}", r.start[0], r.start[1], r.final_constraint, r.distance_to_cp_set.map_or("inf".into(), |d| format!("{d:.3}"))))
        .collect();
    let ls_fails = !ls.runs[0].reached_cp_set;
    let passed = misses.is_empty() && ls_fails && seconds <= 30.0;
    let detail = format!(
        "toy CP-set reach: {}/4 CoMOGA starts reached{}; LS from (-10, 7.5) {}; {seconds:.1} s",
        4 - misses.len(),
        if misses.is_empty() { String::new() } else { format!(" (missed {})", misses.join(", ")) },
        if ls_fails { "fails the distance test" } else { "reached the CP set" }
    );
    (report(1, passed, detail), conflicts)
}

/// Criterion 5; returns the verdict and the tabular conflict count.
fn tabular_convergence(models: &[(TabularCMOMDP, CpFront)]) -> (Verdict, usize) {
    let start = Instant::now();
    let config = TrainConfig {
        aggregator: AggregatorConfig::modified(0.1, 0.1, 10.0, 1e6),
        epsilon0: 0.1,
        steps: 200_000,
        stop_tolerance: 1e-8,
        patience: 100,
    };
    let grid = preference_grid(2, 5, GridSpacing::OneNorm).expect("valid grid");
    let (mut worst_distance, mut worst_slack, mut conflicts, mut max_steps, mut failures) = (0.0f64, f64::INFINITY, 0, 0, 0);
    for (mdp, front) in models {
        let initial = SoftmaxPolicyTable::uniform(mdp.n_states(), mdp.n_actions());
        for w in &grid {
            let run = train_comoga_tabular(mdp, w, &initial, &config).expect("valid training config");
            let report = &run.final_report;
            let distance = front.distance_inf(&report.objective_returns);
            let slack = report.slacks(mdp.thresholds()).into_iter().fold(f64::INFINITY, f64::min);
            worst_distance = worst_distance.max(distance);
            worst_slack = worst_slack.min(slack);
            conflicts += run.conflicts;
            max_steps = max_steps.max(run.history.len());
            if !(distance <= 2e-2 && slack >= -1e-3) {
                failures += 1;
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let passed = failures == 0 && max_steps <= 200_000 && seconds <= 600.0;
    let detail = format!(
        "tabular convergence: {}/{} runs within 2e-2 of the oracle front with slack >= -1e-3 (worst distance {worst_distance:.2e}, worst slack {worst_slack:.2e}, max steps {max_steps}); {seconds:.1} s",
        models.len() * grid.len() - failures,
        models.len() * grid.len()
    );
    (report(5, passed, detail), conflicts)
}

fn lemma_one(models: &[(TabularCMOMDP, CpFront)]) -> Verdict {
    let (mut checked, mut dominated, mut missing) = (0, 0, 0);
    for (mdp, front) in models {
        for w in sweep_weights(25) {
            match occupancy_lp(mdp, &w) {
                Ok(Some(sol)) => {
                    checked += 1;
                    if front.dominates_point(&sol.objective_returns, 1e-8) {
                        dominated += 1;
                    }
                }
                _ => missing += 1,
            }
        }
    }
    report(
        6,
        dominated == 0 && missing == 0,
        format!("LS-optimal LP points non-dominated within the oracle front: {dominated} dominated, {missing} unsolved, {checked} checked"),
    )
}

fn metrics() -> Verdict {
    let two = hypervolume(&archive(&[&[1.0, 2.0], &[2.0, 1.0]]), &[0.0, 0.0]).expect("2-D");
    let three = hypervolume(&archive(&[&[1.0, 1.0, 1.0], &[2.0, 0.5, 0.5]]), &[0.0, 0.0, 0.0]).expect("3-D");
    let mc = hv_mc_suite(50, 1_000_000, 0);
    let sp_three = normalized_sparsity(&archive(&[&[0.0, 1.0], &[0.5, 0.5], &[1.0, 0.0]]));
    let sp_two = normalized_sparsity(&archive(&[&[0.0, 1.0], &[1.0, 0.0]]));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut affine_worst = 0.0f64;
    for k in 0..200 {
        let dim = 2 + k % 2;
        let pts: Vec<Vec<f64>> = (0..rng.random_range(2..20)).map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let scales: Vec<f64> = (0..dim).map(|_| rng.random_range(0.01..100.0)).collect();
        let shifts: Vec<f64> = (0..dim).map(|_| rng.random_range(-50.0..50.0)).collect();
        let base = pareto_filter(&pts.iter().map(|p| FrontPoint::new(p.clone())).collect::<Vec<_>>());
        let moved: Vec<FrontPoint> = base
            .objectives()
            .map(|p| FrontPoint::new(p.iter().enumerate().map(|(j, x)| scales[j] * x + shifts[j]).collect()))
            .collect();
        if let (Some(a), Some(b)) = (normalized_sparsity(&base), normalized_sparsity(&pareto_filter(&moved))) {
            affine_worst = affine_worst.max((a - b).abs());
        }
    }
    let checks = [
        (two == 3.0, format!("2-D HV {two} (expected 3)")),
        (three == 1.375, format!("3-D HV {three} (expected 1.375)")),
        (mc.passed, format!("MC agreement worst {:.2} sigma over {} archives", mc.worst, mc.checked)),
        (sp_three == Some(0.5), format!("SP {sp_three:?} (expected 0.5)")),
        (sp_two == Some(2.0), format!("SP {sp_two:?} (expected 2)")),
        (affine_worst <= 1e-12, format!("affine invariance worst {affine_worst:.1e}")),
    ];
    let passed = checks.iter().all(|(ok, _)| *ok);
    let detail: Vec<String> = checks.iter().map(|(ok, d)| if *ok { d.clone() } else { format!("{d} MISMATCH") }).collect();
    report(7, passed, format!("metrics: {}", detail.join("; ")))
}

fn gradients() -> Verdict {
    let toy = toy_gradient_suite(500, 11);
    let tab = tabular_gradient_suite(500, 12);
    report(
        8,
        toy.passed && tab.passed,
        format!("gradient fidelity: toy worst {:.2e} (limit 1e-5), tabular worst {:.2e} (limit 1e-4), 500 points each", toy.worst, tab.worst),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory exists")
        .map(|e| {
            let e = e.expect("readable entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable file"))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().expect("temp dir");
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    std::fs::write(&a, r#"{"points": [{"objectives": [1, 2]}, {"objectives": [2, 1]}]}"#).expect("write");
    std::fs::write(&b, r#"{"points": [{"objectives": [0.5, 3]}, {"objectives": [1.5, 1.5]}]}"#).expect("write");
    let (a, b) = (a.to_str().expect("utf-8 path").to_string(), b.to_str().expect("utf-8 path").to_string());
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("toy", ["toy", "--method", "comoga", "--method", "ls", "--method", "lagrangian", "--steps", "2000", "--grid-count", "4", "--oracle-resolution", "200", "--seed", "3"].map(String::from).to_vec()),
        ("tabular", ["tabular", "--grid-count", "3", "--steps", "500", "--history-stride", "100", "--seed", "3"].map(String::from).to_vec()),
        ("metrics", vec!["metrics".into(), a, b, "--mc-samples".into(), "20000".into(), "--seed".into(), "3".into()]),
        ("selftest", ["selftest", "--instances", "50", "--gradient-points", "20", "--hv-archives", "2", "--mc-samples", "20000", "--seed", "3"].map(String::from).to_vec()),
    ];
    let mut differing = Vec::new();
    for (name, args) in &commands {
        let mut snapshots = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{name}{rep}"));
            let run = Command::new(env!("CARGO_BIN_EXE_comoga")).args(args).arg("--out").arg(&out).output().expect("binary runs");
            if !run.status.success() {
                differing.push(format!("{name} exited {:?}", run.status.code()));
            }
            snapshots.push((run.stdout, snapshot(&out)));
        }
        if snapshots[0] != snapshots[1] || snapshots[0].1.is_empty() {
            differing.push(format!("{name} outputs differ"));
        }
    }
    report(
        9,
        differing.is_empty(),
        if differing.is_empty() {
            "determinism: toy, tabular, metrics and selftest produce byte-identical files and stdout across two invocations".into()
        } else {
            format!("determinism: {}", differing.join(", "))
        },
    )
}

fn main() {
    let models = test_models();
    let mut verdicts = Vec::new();
    let (v1, toy_conflicts) = toy_reproduction();
    verdicts.push(v1);

    let (v5, tabular_conflicts) = tabular_convergence(&models);
    verdicts.push(report(
        2,
        toy_conflicts + tabular_conflicts == 0,
        format!("no-conflict property: {toy_conflicts} toy and {tabular_conflicts} tabular conflicting feasible-mode steps"),
    ));

    let t = transformation_suite(1000, 5);
    verdicts.push(report(3, t.passed, format!("transformation equivalence: worst {:.2e} in H-norm over {} instances, {:.2} s {}", t.worst, t.checked, t.seconds, t.detail)));
    let q = qp_oracle_suite(1000, 6);
    verdicts.push(report(4, q.passed, format!("QP oracle equivalence: worst {:.2e} in H-norm over {} instances, {:.2} s {}", q.worst, q.checked, q.seconds, q.detail)));
    verdicts.push(v5);
    verdicts.push(lemma_one(&models));
    verdicts.push(metrics());
    verdicts.push(gradients());
    verdicts.push(determinism());

    verdicts.sort_by_key(|v| v.id);
    let failing: BTreeSet<usize> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id).collect();
    let expected: BTreeSet<usize> = EXPECTED_FAILURES.into_iter().collect();
    println!("failing criteria: {failing:?} (known unattainable as stated: {expected:?})");
    if failing != expected {
        for v in verdicts.iter().filter(|v| failing.contains(&v.id) != expected.contains(&v.id)) {
            eprintln!("unexpected outcome for criterion {}: {}", v.id, v.detail);
        }
        std::process::exit(1);
    }
}
