//! `toy`: trajectories on the analytic two-objective benchmark.

use comoga_core::front::{build_front, hypervolume, normalized_sparsity, reference_point, Evaluation};
use comoga_core::preference::{preference_grid, GridSpacing};
use comoga_core::toy::{
    cp_front_oracle_toy, distance_to_front, run_comoga_toy, run_ls_toy, LagrangianState, ToyFrontPoint, ToyPoint, Trajectory,
};
use comoga_core::{AggregatorConfig, Preference};
use serde::Serialize;

use super::Outputs;
use crate::config::{ToyConfig, ToyMethodName};
use crate::error::Result;
use crate::formats::{to_json_string, trajectory_csv, ArchiveFile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyRunSummary {
    pub method: &'static str,
    pub start: [f64; 2],
    pub preference: Vec<f64>,
    pub steps_taken: usize,
    pub final_point: [f64; 2],
    pub final_objectives: [f64; 2],
    pub final_constraint: f64,
    pub constraint_satisfied: bool,
    /// `None` when the iterate diverged.
    pub distance_to_cp_set: Option<f64>,
    pub reached_cp_set: bool,
    pub conflicts: usize,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontSummary {
    pub archive: ArchiveFile,
    pub reference: Option<Vec<f64>>,
    pub hypervolume: f64,
    pub normalized_sparsity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyReport {
    pub config: ToyConfig,
    pub oracle_points: usize,
    pub runs: Vec<ToyRunSummary>,
    pub sweep: Option<FrontSummary>,
}

fn run_one(config: &ToyConfig, method: ToyMethodName, start: ToyPoint, preference: &Preference) -> Result<Trajectory> {
    Ok(match method {
        ToyMethodName::Comoga => run_comoga_toy(start, preference, &AggregatorConfig::plain(config.epsilon), config.steps)?,
        ToyMethodName::Ls => run_ls_toy(start, preference, config.ls_lr, None, config.steps)?,
        ToyMethodName::Lagrangian => {
            run_ls_toy(start, preference, config.ls_lr, Some(LagrangianState::new(1, config.multiplier_lr)), config.steps)?
        }
    })
}

fn summarise(config: &ToyConfig, traj: &Trajectory, oracle: &[ToyFrontPoint], csv: String) -> ToyRunSummary {
    let p = traj.last();
    let (l1, l2) = *traj.objective_values.last().expect("trajectory always holds its start");
    let c = traj.final_constraint();
    let constraint_satisfied = c <= config.constraint_tolerance;
    let distance = p.is_finite().then(|| distance_to_front(p, oracle)).filter(|d| d.is_finite());
    let start = traj.points[0];
    ToyRunSummary {
        method: traj.method.as_str(),
        start: [start.x1, start.x2],
        preference: traj.preference.weights().to_vec(),
        steps_taken: traj.len() - 1,
        final_point: [p.x1, p.x2],
        final_objectives: [l1, l2],
        final_constraint: c,
        constraint_satisfied,
        distance_to_cp_set: distance,
        reached_cp_set: constraint_satisfied && distance.is_some_and(|d| d <= config.success_radius),
        conflicts: traj.conflicts,
        csv,
    }
}

/// Runs every requested method from every start, plus the optional
/// preference sweep.
pub fn run(config: &ToyConfig) -> Result<(ToyReport, Outputs)> {
    config.validate()?;
    let oracle = cp_front_oracle_toy(config.oracle_resolution)?;
    let preference = Preference::normalized(&config.preference)?;
    let mut outputs = Outputs::default();
    let mut runs = Vec::new();
    for &method in &config.methods {
        for (i, s) in config.starts.iter().enumerate() {
            let traj = run_one(config, method, ToyPoint::new(s[0], s[1]), &preference)?;
            let name = format!("{}_start{i}.csv", traj.method.as_str());
            outputs.add(name.clone(), trajectory_csv(&traj));
            runs.push(summarise(config, &traj, &oracle, name));
        }
    }
    let sweep = match config.grid_count {
        Some(count) => {
            let start = ToyPoint::new(config.sweep_start[0], config.sweep_start[1]);
            let mut evaluations = Vec::with_capacity(count);
            for (k, w) in preference_grid(2, count, GridSpacing::OneNorm)?.into_iter().enumerate() {
                let traj = run_one(config, ToyMethodName::Comoga, start, &w)?;
                let name = format!("sweep_pref{k}.csv");
                outputs.add(name.clone(), trajectory_csv(&traj));
                runs.push(summarise(config, &traj, &oracle, name));
                let (l1, l2) = *traj.objective_values.last().expect("trajectory always holds its start");
                evaluations.push(Evaluation { preference: w, objectives: vec![-l1, -l2], constraints: vec![traj.final_constraint()] });
            }
            let mut archive = build_front(&evaluations, &[config.constraint_tolerance])?;
            let (reference, hv) = if archive.is_empty() {
                (None, 0.0)
            } else {
                let r = reference_point(std::slice::from_ref(&archive))?;
                let hv = hypervolume(&archive, &r)?;
                (Some(r), hv)
            };
            archive.reference = reference.clone();
            let file = ArchiveFile::from_archive(&archive);
            outputs.add("sweep_front.json", to_json_string(&file));
            Some(FrontSummary { normalized_sparsity: normalized_sparsity(&archive), archive: file, reference, hypervolume: hv })
        }
        None => None,
    };
    let report = ToyReport { config: config.clone(), oracle_points: oracle.len(), runs, sweep };
    outputs.add("report.json", to_json_string(&report));
    Ok((report, outputs))
}
