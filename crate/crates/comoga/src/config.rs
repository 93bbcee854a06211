//! Run configurations: a JSON file merged with flag overrides, then
//! validated before anything runs.
//!
//! Precedence is flags over file over defaults. Unknown keys are rejected and
//! every diagnostic names the offending key.

use std::path::{Path, PathBuf};

use comoga_core::preference::GridSpacing;
use comoga_core::tabular::RandomModelSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Reads `file` (if any), applies `overrides` on top and deserializes.
pub fn resolve<T: DeserializeOwned>(file: Option<&Path>, overrides: Vec<(&str, Value)>) -> Result<T> {
    let mut map = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Validation(format!("{}: config must be a JSON object", path.display()))),
                Err(e) => return Err(CliError::Validation(format!("{}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    for (key, value) in overrides {
        map.insert(key.to_string(), value);
    }
    serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Validation(e.inner().to_string())
        } else {
            CliError::invalid(&path, e.inner())
        }
    })
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("must be positive and finite, got {x}")))
    }
}

fn nonnegative(key: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("must be nonnegative and finite, got {x}")))
    }
}

fn at_least_one(key: &str, n: usize) -> Result<()> {
    if n == 0 {
        Err(CliError::invalid(key, "must be at least 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyMethodName {
    Comoga,
    Ls,
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub methods: Vec<ToyMethodName>,
    pub starts: Vec<[f64; 2]>,
    pub preference: Vec<f64>,
    /// When set, also sweeps this many grid preferences with CoMOGA from
    /// `sweep_start` and reports the resulting front.
    pub grid_count: Option<usize>,
    pub sweep_start: [f64; 2],
    pub epsilon: f64,
    pub steps: usize,
    pub ls_lr: f64,
    pub multiplier_lr: f64,
    pub oracle_resolution: usize,
    pub success_radius: f64,
    pub constraint_tolerance: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            methods: vec![ToyMethodName::Comoga],
            starts: comoga_core::toy::STANDARD_STARTS.iter().map(|p| [p.x1, p.x2]).collect(),
            preference: vec![0.5, 0.5],
            grid_count: None,
            sweep_start: [0.0, 7.5],
            epsilon: 0.05,
            steps: 20_000,
            ls_lr: 0.01,
            multiplier_lr: 0.1,
            oracle_resolution: 800,
            success_radius: 0.5,
            constraint_tolerance: 1e-3,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(CliError::invalid("methods", "at least one method is required"));
        }
        if self.starts.is_empty() {
            return Err(CliError::invalid("starts", "at least one start is required"));
        }
        if self.starts.iter().flatten().chain(&self.sweep_start).any(|x| !x.is_finite()) {
            return Err(CliError::invalid("starts", "coordinates must be finite"));
        }
        if self.preference.len() != 2 {
            return Err(CliError::invalid("preference", "expected two weights"));
        }
        comoga_core::Preference::normalized(&self.preference).map_err(|e| CliError::invalid("preference", e))?;
        if let Some(n) = self.grid_count {
            if n < 2 {
                return Err(CliError::invalid("grid_count", "two objectives need at least 2 preferences"));
            }
        }
        positive("epsilon", self.epsilon)?;
        at_least_one("steps", self.steps)?;
        positive("ls_lr", self.ls_lr)?;
        nonnegative("multiplier_lr", self.multiplier_lr)?;
        if self.oracle_resolution < 100 {
            return Err(CliError::invalid("oracle_resolution", "must be at least 100"));
        }
        positive("success_radius", self.success_radius)?;
        nonnegative("constraint_tolerance", self.constraint_tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TabularMethod {
    Comoga,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    OneNorm,
    MaxNorm,
}

impl From<Spacing> for GridSpacing {
    fn from(s: Spacing) -> Self {
        match s {
            Spacing::OneNorm => GridSpacing::OneNorm,
            Spacing::MaxNorm => GridSpacing::MaxNorm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModelConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_objectives: usize,
    pub n_constraints: usize,
    pub gamma: f64,
    pub slater_margin: f64,
}

impl From<&RandomModelConfig> for RandomModelSpec {
    fn from(c: &RandomModelConfig) -> Self {
        RandomModelSpec {
            n_states: c.n_states,
            n_actions: c.n_actions,
            n_objectives: c.n_objectives,
            n_constraints: c.n_constraints,
            gamma: c.gamma,
            slater_margin: c.slater_margin,
        }
    }
}

/// Constant weight sequences for the generalized update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub nu_a: Vec<f64>,
    pub nu_b: Vec<f64>,
    pub lambda_a: Vec<f64>,
    pub lambda_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    /// Model JSON; the bundled five-state model when absent.
    pub model: Option<PathBuf>,
    /// Generate a model from `seed` instead of reading one.
    pub random_model: Option<RandomModelConfig>,
    /// Explicit preferences; overrides the grid when present.
    pub preferences: Option<Vec<Vec<f64>>>,
    pub grid_count: usize,
    pub grid_spacing: Spacing,
    pub method: TabularMethod,
    pub sequences: Option<SequenceConfig>,
    pub alpha0: f64,
    pub epsilon0: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub lambda_max: f64,
    pub steps: usize,
    pub stop_tolerance: f64,
    pub patience: usize,
    pub distance_tolerance: f64,
    pub slack_tolerance: f64,
    pub max_policies: u64,
    /// Record every `history_stride`-th step in the report; 0 disables.
    pub history_stride: usize,
    pub seed: u64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            model: None,
            random_model: None,
            preferences: None,
            grid_count: 10,
            grid_spacing: Spacing::OneNorm,
            method: TabularMethod::Comoga,
            sequences: None,
            alpha0: 1.0,
            epsilon0: 0.1,
            g_min: 1e-4,
            g_max: 10.0,
            lambda_max: 100.0,
            steps: 50_000,
            stop_tolerance: 1e-8,
            patience: 100,
            distance_tolerance: 2e-2,
            slack_tolerance: 1e-3,
            max_policies: 4096,
            history_stride: 1000,
            seed: 0,
        }
    }
}

impl TabularConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model.is_some() && self.random_model.is_some() {
            return Err(CliError::invalid("random_model", "cannot be combined with model"));
        }
        if let Some(r) = &self.random_model {
            at_least_one("random_model.n_states", r.n_states)?;
            at_least_one("random_model.n_actions", r.n_actions)?;
            at_least_one("random_model.n_objectives", r.n_objectives)?;
            nonnegative("random_model.slater_margin", r.slater_margin)?;
            if !(0.0..1.0).contains(&r.gamma) {
                return Err(CliError::invalid("random_model.gamma", "must lie in [0, 1)"));
            }
        }
        match &self.preferences {
            Some(p) if p.is_empty() => return Err(CliError::invalid("preferences", "at least one preference is required")),
            Some(_) => {}
            None => at_least_one("grid_count", self.grid_count)?,
        }
        if self.method == TabularMethod::Generalized {
            if self.sequences.is_none() {
                return Err(CliError::invalid("sequences", "required by the generalized method"));
            }
            positive("alpha0", self.alpha0)?;
        }
        positive("epsilon0", self.epsilon0)?;
        nonnegative("g_min", self.g_min)?;
        if !(self.g_max > 0.0) {
            return Err(CliError::invalid("g_max", "must be positive"));
        }
        if self.g_max < self.g_min {
            return Err(CliError::invalid("g_max", "must be at least g_min"));
        }
        if !(self.lambda_max > 0.0) {
            return Err(CliError::invalid("lambda_max", "must be positive"));
        }
        at_least_one("steps", self.steps)?;
        nonnegative("stop_tolerance", self.stop_tolerance)?;
        positive("distance_tolerance", self.distance_tolerance)?;
        nonnegative("slack_tolerance", self.slack_tolerance)?;
        at_least_one("max_policies", self.max_policies as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub fronts: Vec<PathBuf>,
    /// Joint reference; computed from the union of the fronts when absent.
    pub reference: Option<Vec<f64>>,
    /// Also report a Monte-Carlo hypervolume estimate; 0 disables.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { fronts: Vec::new(), reference: None, mc_samples: 0, seed: 0 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fronts.is_empty() {
            return Err(CliError::invalid("fronts", "at least one front file is required"));
        }
        if let Some(r) = &self.reference {
            if r.is_empty() || r.iter().any(|x| !x.is_finite()) {
                return Err(CliError::invalid("reference", "must be a non-empty list of finite values"));
            }
        }
        if self.mc_samples != 0 && self.mc_samples < 10_000 {
            return Err(CliError::invalid("mc_samples", "must be 0 or at least 10000"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    /// Random instances for the QP and transformation suites.
    pub instances: usize,
    /// Evaluation points for each gradient suite.
    pub gradient_points: usize,
    pub hv_archives: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { instances: 1000, gradient_points: 500, hv_archives: 50, mc_samples: 1_000_000, seed: 0 }
    }
}

impl SelftestConfig {
    pub fn validate(&self) -> Result<()> {
        at_least_one("instances", self.instances)?;
        at_least_one("gradient_points", self.gradient_points)?;
        at_least_one("hv_archives", self.hv_archives)?;
        if self.mc_samples < 10_000 {
            return Err(CliError::invalid("mc_samples", "must be at least 10000"));
        }
        Ok(())
    }
}
