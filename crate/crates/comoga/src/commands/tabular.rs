//! `tabular`: preference-grid training on an exact CMOMDP, checked against
//! the enumeration oracle.

use comoga_core::aggregator::robbins_monro;
use comoga_core::front::{build_front, hypervolume, normalized_sparsity, reference_point, Evaluation, FrontPoint, ParetoArchive};
use comoga_core::linalg::norm_inf;
use comoga_core::preference::preference_grid;
use comoga_core::tabular::{
    cp_front_oracle, evaluate, generalized_update, random_cmomdp, train_comoga_tabular, CpFront, OracleOptions, SoftmaxPolicyTable,
    StepRecord, TabularCMOMDP, TrainConfig, UpdateSequences,
};
use comoga_core::{AggregatorConfig, Mode, Preference};
use serde::Serialize;

use super::Outputs;
use crate::config::{TabularConfig, TabularMethod};
use crate::error::{CliError, Result};
use crate::formats::{parse_json, read_json, to_json_string, ArchiveFile, ModelFile};

/// The five-state, two-action, two-objective, one-constraint model used when
/// no model is given.
pub const BUNDLED_MODEL: &str = include_str!("../../data/five_state.json");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub objective_returns: Vec<f64>,
    pub constraint_returns: Vec<f64>,
    pub step_norm: f64,
    pub mode: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabularRunSummary {
    pub preference: Vec<f64>,
    pub steps_taken: usize,
    pub converged: bool,
    pub objective_returns: Vec<f64>,
    pub constraint_returns: Vec<f64>,
    pub slacks: Vec<f64>,
    pub slack_ok: bool,
    /// Max-norm distance to the oracle front; `None` when the front is empty.
    pub front_distance: Option<f64>,
    pub within_tolerance: bool,
    pub conflicts: usize,
    /// Largest spread of any normalized `ν` weight over the normal-mode steps
    /// in the last tenth of the run.
    pub nu_weight_oscillation: Option<f64>,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabularReport {
    pub config: TabularConfig,
    pub model: ModelSummary,
    pub oracle_vertices: Vec<Vec<f64>>,
    pub runs: Vec<TabularRunSummary>,
    pub all_slacks_ok: bool,
    pub all_within_tolerance: bool,
    pub total_conflicts: usize,
    pub front: FrontMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_objectives: usize,
    pub n_constraints: usize,
    pub gamma: f64,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontMetrics {
    pub n_points: usize,
    /// Joint reference of the trained front and the oracle vertices.
    pub reference: Option<Vec<f64>>,
    pub hypervolume: f64,
    pub oracle_hypervolume: f64,
    pub normalized_sparsity: Option<f64>,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Normal => "normal",
        Mode::Recovery => "recovery",
        Mode::Zero => "zero",
    }
}

pub fn load_model(config: &TabularConfig) -> Result<TabularCMOMDP> {
    match (&config.model, &config.random_model) {
        (Some(path), _) => read_json::<ModelFile>(path)?.to_model(),
        (None, Some(spec)) => Ok(random_cmomdp(&spec.into(), config.seed)?),
        (None, None) => parse_json::<ModelFile>(BUNDLED_MODEL).map_err(CliError::Validation)?.to_model(),
    }
}

fn preferences(config: &TabularConfig, n_objectives: usize) -> Result<Vec<Preference>> {
    match &config.preferences {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if w.len() != n_objectives {
                    return Err(CliError::invalid(&format!("preferences[{i}]"), format!("expected {n_objectives} weights")));
                }
                Preference::normalized(w).map_err(|e| CliError::invalid(&format!("preferences[{i}]"), e))
            })
            .collect(),
        None => preference_grid(n_objectives, config.grid_count, config.grid_spacing.into()).map_err(|e| CliError::invalid("grid_count", e)),
    }
}

struct RunOutcome {
    policy: SoftmaxPolicyTable,
    history: Vec<StepRecord>,
    conflicts: usize,
    converged: bool,
}

fn run_generalized(mdp: &TabularCMOMDP, config: &TabularConfig) -> Result<RunOutcome> {
    let seq = config.sequences.as_ref().expect("validated");
    let sequences = UpdateSequences {
        nu_a: seq.nu_a.clone(),
        nu_b: seq.nu_b.clone(),
        lambda_a: seq.lambda_a.clone(),
        lambda_b: seq.lambda_b.clone(),
    };
    let mut policy = SoftmaxPolicyTable::uniform(mdp.n_states(), mdp.n_actions());
    let (mut history, mut quiet, mut converged) = (Vec::new(), 0, false);
    for t in 0..config.steps {
        let report = evaluate(mdp, &policy)?;
        let next = generalized_update(mdp, &policy, &sequences, robbins_monro(config.alpha0, t as u64))
            .map_err(|e| CliError::invalid("sequences", e))?;
        let delta: Vec<f64> = next.logits.iter().zip(&policy.logits).map(|(a, b)| a - b).collect();
        let step_norm = norm_inf(&delta);
        let feasible = report.is_feasible(mdp.thresholds());
        history.push(StepRecord {
            objective_returns: report.objective_returns,
            constraint_returns: report.constraint_returns,
            step_norm,
            mode: if feasible { Mode::Normal } else { Mode::Recovery },
            nu_weights: if feasible { sequences.nu_a.clone() } else { vec![0.0; mdp.n_objectives()] },
        });
        policy = next;
        quiet = if step_norm < config.stop_tolerance { quiet + 1 } else { 0 };
        if config.patience > 0 && quiet >= config.patience {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome { policy, history, conflicts: 0, converged })
}

fn run_comoga(mdp: &TabularCMOMDP, preference: &Preference, config: &TabularConfig) -> Result<RunOutcome> {
    let train = TrainConfig {
        aggregator: AggregatorConfig::modified(config.epsilon0, config.g_min, config.g_max, config.lambda_max),
        epsilon0: config.epsilon0,
        steps: config.steps,
        stop_tolerance: config.stop_tolerance,
        patience: config.patience,
    };
    let start = SoftmaxPolicyTable::uniform(mdp.n_states(), mdp.n_actions());
    let run = train_comoga_tabular(mdp, preference, &start, &train)?;
    Ok(RunOutcome { policy: run.policy, history: run.history, conflicts: run.conflicts, converged: run.converged })
}

fn oscillation(history: &[StepRecord]) -> Option<f64> {
    let tail = &history[history.len() - history.len() / 10..];
    let normal: Vec<&StepRecord> = tail.iter().filter(|r| r.mode == Mode::Normal).collect();
    let n = normal.first()?.nu_weights.len();
    Some((0..n).fold(0.0f64, |worst, i| {
        let (lo, hi) = normal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.nu_weights[i]), hi.max(r.nu_weights[i])));
        worst.max(hi - lo)
    }))
}

fn strided_history(history: &[StepRecord], stride: usize) -> Vec<HistoryEntry> {
    if stride == 0 {
        return Vec::new();
    }
    history
        .iter()
        .enumerate()
        .filter(|(t, _)| t % stride == 0 || *t + 1 == history.len())
        .map(|(t, r)| HistoryEntry {
            step: t,
            objective_returns: r.objective_returns.clone(),
            constraint_returns: r.constraint_returns.clone(),
            step_norm: r.step_norm,
            mode: mode_name(r.mode),
        })
        .collect()
}

fn oracle_archive(front: &CpFront) -> ParetoArchive {
    ParetoArchive { points: front.vertices.iter().map(|v| FrontPoint::new(v.clone())).collect(), reference: None }
}

/// Trains one policy per preference and compares each with the oracle.
pub fn run(config: &TabularConfig) -> Result<(TabularReport, Outputs)> {
    config.validate()?;
    let mdp = load_model(config)?;
    if let (Some(seq), TabularMethod::Generalized) = (&config.sequences, config.method) {
        let (n, m) = (mdp.n_objectives(), mdp.n_constraints());
        for (key, v, len) in [("nu_a", &seq.nu_a, n), ("nu_b", &seq.nu_b, n), ("lambda_a", &seq.lambda_a, m), ("lambda_b", &seq.lambda_b, m)] {
            if v.len() != len {
                return Err(CliError::invalid(&format!("sequences.{key}"), format!("expected {len} entries")));
            }
        }
    }
    let prefs = preferences(config, mdp.n_objectives())?;
    let options = OracleOptions { max_policies: config.max_policies as u128, ..OracleOptions::default() };
    let oracle = cp_front_oracle(&mdp, &options)?;
    let thresholds = mdp.thresholds().to_vec();

    let mut runs = Vec::with_capacity(prefs.len());
    let mut evaluations = Vec::with_capacity(prefs.len());
    for w in &prefs {
        let outcome = match config.method {
            TabularMethod::Comoga => run_comoga(&mdp, w, config)?,
            TabularMethod::Generalized => run_generalized(&mdp, config)?,
        };
        let report = evaluate(&mdp, &outcome.policy)?;
        let slacks = report.slacks(&thresholds);
        let slack_ok = slacks.iter().all(|s| *s >= -config.slack_tolerance);
        let front_distance = (!oracle.is_empty()).then(|| oracle.distance_inf(&report.objective_returns));
        evaluations.push(Evaluation {
            preference: w.clone(),
            objectives: report.objective_returns.clone(),
            constraints: report.constraint_returns.clone(),
        });
        runs.push(TabularRunSummary {
            preference: w.weights().to_vec(),
            steps_taken: outcome.history.len(),
            converged: outcome.converged,
            within_tolerance: slack_ok && front_distance.is_some_and(|d| d <= config.distance_tolerance),
            objective_returns: report.objective_returns,
            constraint_returns: report.constraint_returns,
            slacks,
            slack_ok,
            front_distance,
            conflicts: outcome.conflicts,
            nu_weight_oscillation: oscillation(&outcome.history),
            history: strided_history(&outcome.history, config.history_stride),
        });
    }

    let relaxed: Vec<f64> = thresholds.iter().map(|d| d + config.slack_tolerance).collect();
    let mut archive = build_front(&evaluations, &relaxed)?;
    let oracle_pts = oracle_archive(&oracle);
    let nonempty: Vec<ParetoArchive> = [archive.clone(), oracle_pts.clone()].into_iter().filter(|a| !a.is_empty()).collect();
    let reference = if nonempty.is_empty() { None } else { Some(reference_point(&nonempty)?) };
    let (hv, oracle_hv) = match &reference {
        Some(r) => (hypervolume(&archive, r)?, hypervolume(&oracle_pts, r)?),
        None => (0.0, 0.0),
    };
    archive.reference = reference.clone();
    let front = FrontMetrics {
        n_points: archive.len(),
        reference,
        hypervolume: hv,
        oracle_hypervolume: oracle_hv,
        normalized_sparsity: normalized_sparsity(&archive),
    };

    let report = TabularReport {
        config: config.clone(),
        model: ModelSummary {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            n_objectives: mdp.n_objectives(),
            n_constraints: mdp.n_constraints(),
            gamma: mdp.gamma(),
            thresholds,
        },
        oracle_vertices: oracle.vertices.clone(),
        all_slacks_ok: runs.iter().all(|r| r.slack_ok),
        all_within_tolerance: runs.iter().all(|r| r.within_tolerance),
        total_conflicts: runs.iter().map(|r| r.conflicts).sum(),
        runs,
        front,
    };
    let mut outputs = Outputs::default();
    outputs.add("report.json", to_json_string(&report));
    outputs.add("archive.json", to_json_string(&ArchiveFile::from_archive(&archive)));
    outputs.add("oracle_front.json", to_json_string(&ArchiveFile::from_archive(&oracle_pts)));
    outputs.add("model.json", to_json_string(&ModelFile::from_model(&mdp)));
    Ok((report, outputs))
}
