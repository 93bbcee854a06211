//! On-disk formats: model JSON, archive JSON, metric reports and trajectory
//! CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use comoga_core::front::{pareto_filter, FrontPoint, ParetoArchive};
use comoga_core::tabular::{ModelParts, TabularCMOMDP};
use comoga_core::toy::Trajectory;
use comoga_core::Preference;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// `{n_states, n_actions, gamma, rho, thresholds, P, R, C}` with nested
/// `[s][a][s']` tensors, `R` and `C` carrying a leading objective or
/// constraint index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(rename = "P")]
    pub transition: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub rewards: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "C", default)]
    pub costs: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_bound: Option<f64>,
}

fn flatten3(name: &str, t: &[Vec<Vec<f64>>], s: usize, a: usize) -> Result<Vec<f64>> {
    if t.len() != s || t.iter().any(|x| x.len() != a || x.iter().any(|y| y.len() != s)) {
        return Err(CliError::invalid(name, format!("expected shape [{s}][{a}][{s}]")));
    }
    Ok(t.iter().flatten().flatten().copied().collect())
}

fn nest3(flat: &[f64], s: usize, a: usize) -> Vec<Vec<Vec<f64>>> {
    flat.chunks(a * s).map(|row| row.chunks(s).map(<[f64]>::to_vec).collect()).collect()
}

impl ModelFile {
    pub fn to_model(&self) -> Result<TabularCMOMDP> {
        let (s, a) = (self.n_states, self.n_actions);
        if s == 0 || a == 0 {
            return Err(CliError::invalid("n_states", "n_states and n_actions must be positive"));
        }
        let transition = flatten3("P", &self.transition, s, a)?;
        let rewards = self.rewards.iter().enumerate().map(|(i, r)| flatten3(&format!("R[{i}]"), r, s, a)).collect::<Result<_>>()?;
        let costs = self.costs.iter().enumerate().map(|(k, c)| flatten3(&format!("C[{k}]"), c, s, a)).collect::<Result<_>>()?;
        let parts = ModelParts {
            n_states: s,
            n_actions: a,
            transition,
            rewards,
            costs,
            initial_dist: self.rho.clone(),
            gamma: self.gamma,
            thresholds: self.thresholds.clone(),
            reward_bound: self.reward_bound,
        };
        Ok(TabularCMOMDP::new(parts)?)
    }

    pub fn from_model(mdp: &TabularCMOMDP) -> Self {
        let p = mdp.parts();
        let (s, a) = (p.n_states, p.n_actions);
        Self {
            n_states: s,
            n_actions: a,
            gamma: p.gamma,
            rho: p.initial_dist.clone(),
            thresholds: p.thresholds.clone(),
            transition: nest3(&p.transition, s, a),
            rewards: p.rewards.iter().map(|r| nest3(r, s, a)).collect(),
            costs: p.costs.iter().map(|c| nest3(c, s, a)).collect(),
            reward_bound: p.reward_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchivePoint {
    pub objectives: Vec<f64>,
    #[serde(default = "default_true")]
    pub feasible: bool,
    #[serde(default)]
    pub preference: Option<Vec<f64>>,
}

fn default_true() -> bool {
    true
}

/// `{points: [{objectives, feasible, preference}], reference}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveFile {
    pub points: Vec<ArchivePoint>,
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
}

impl ArchiveFile {
    pub fn from_archive(archive: &ParetoArchive) -> Self {
        Self {
            points: archive
                .points
                .iter()
                .map(|p| ArchivePoint {
                    objectives: p.objectives.clone(),
                    feasible: p.feasible,
                    preference: p.preference.as_ref().map(|w| w.weights().to_vec()),
                })
                .collect(),
            reference: archive.reference.clone(),
        }
    }

    /// Validates the points and returns their feasible non-dominated subset.
    pub fn to_archive(&self) -> Result<ParetoArchive> {
        let dim = self.points.first().map(|p| p.objectives.len());
        let mut pts = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            if Some(p.objectives.len()) != dim || p.objectives.is_empty() {
                return Err(CliError::invalid(&format!("points[{i}].objectives"), "inconsistent dimension"));
            }
            if p.objectives.iter().any(|x| !x.is_finite()) {
                return Err(CliError::invalid(&format!("points[{i}].objectives"), "non-finite value"));
            }
            let preference = match &p.preference {
                Some(w) => Some(Preference::new(w.clone()).map_err(|e| CliError::invalid(&format!("points[{i}].preference"), e))?),
                None => None,
            };
            pts.push(FrontPoint { objectives: p.objectives.clone(), feasible: p.feasible, preference });
        }
        let mut archive = pareto_filter(&pts);
        if let (Some(r), Some(d)) = (&self.reference, dim) {
            if r.len() != d {
                return Err(CliError::invalid("reference", format!("expected {d} entries, got {}", r.len())));
            }
        }
        archive.reference = self.reference.clone();
        Ok(archive)
    }
}

/// `{hypervolume, normalized_sparsity, n_points, reference}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hypervolume: f64,
    pub normalized_sparsity: Option<f64>,
    pub n_points: usize,
    pub reference: Option<Vec<f64>>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// JSON parse whose errors name the offending key path.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> std::result::Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        }
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory as CSV with columns `step, x1, x2, L1, L2, C, mode`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "x1", "x2", "L1", "L2", "C", "mode"]).expect("in-memory write");
    for (i, p) in traj.points.iter().enumerate() {
        let (l1, l2) = traj.objective_values[i];
        let c = traj.constraint_values[i];
        w.write_record([i.to_string(), sci(p.x1), sci(p.x2), sci(l1), sci(l2), sci(c), traj.kinds[i].as_str().to_string()])
            .expect("in-memory write");
    }
    let mut bytes = w.into_inner().expect("in-memory flush");
    bytes.flush().expect("in-memory flush");
    String::from_utf8(bytes).expect("ascii output")
}
