use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Objective and constraint gradients at one parameter point, together with
/// the current constraint values and their thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub objective_grads: Vec<Vec<f64>>,
    pub constraint_grads: Vec<Vec<f64>>,
    pub constraint_values: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl GradientBundle {
    pub fn new(
        objective_grads: Vec<Vec<f64>>,
        constraint_grads: Vec<Vec<f64>>,
        constraint_values: Vec<f64>,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        let bundle = Self { objective_grads, constraint_grads, constraint_values, thresholds };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Objectives only, no safety constraints.
    pub fn unconstrained(objective_grads: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(objective_grads, Vec::new(), Vec::new(), Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective_grads.is_empty() {
            return Err(Error::InvalidArgument("at least one objective gradient is required".into()));
        }
        let dim = self.dim();
        for g in self.objective_grads.iter().chain(&self.constraint_grads) {
            if g.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.len() });
            }
        }
        let m = self.constraint_grads.len();
        if self.constraint_values.len() != m || self.thresholds.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{m} constraint gradients but {} values and {} thresholds",
                self.constraint_values.len(),
                self.thresholds.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.objective_grads[0].len()
    }

    pub fn n_objectives(&self) -> usize {
        self.objective_grads.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraint_grads.len()
    }

    /// `d_k − J_Ck` per constraint; negative means violated.
    pub fn slacks(&self) -> Vec<f64> {
        self.thresholds.iter().zip(&self.constraint_values).map(|(d, j)| d - j).collect()
    }

    pub fn all_satisfied(&self) -> bool {
        self.constraint_values.iter().zip(&self.thresholds).all(|(j, d)| j <= d)
    }
}
