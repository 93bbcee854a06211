//! `H`-metric geometry of the local region `‖Δθ‖_H ≤ ε`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix, SymmetricEigen};

/// Relative eigenvalue cutoff used for Fisher pseudo-inverses.
pub const DEFAULT_PINV_RELATIVE_THRESHOLD: f64 = 1e-8;

/// A positive (semi)definite metric on parameter space.
///
/// The aggregation QPs only ever touch `H` through these three maps, which
/// lets callers supply structured metrics (block-diagonal Fisher matrices,
/// say) without materialising them.
pub trait Metric {
    fn dim(&self) -> usize;

    /// `H v`
    fn apply(&self, v: &[f64]) -> Vec<f64>;

    /// `H⁻¹ v` (pseudo-inverse for singular metrics).
    fn inv_apply(&self, v: &[f64]) -> Vec<f64>;

    /// `vᵀ H v`
    fn norm_sq(&self, v: &[f64]) -> f64 {
        dot(v, &self.apply(v)).max(0.0)
    }

    /// `vᵀ H⁻¹ v`
    fn inv_norm_sq(&self, v: &[f64]) -> f64 {
        dot(v, &self.inv_apply(v)).max(0.0)
    }

    fn norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(self.norm_sq(v))
    }

    fn inv_norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(self.inv_norm_sq(v))
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (**self).apply(v)
    }
    fn inv_apply(&self, v: &[f64]) -> Vec<f64> {
        (**self).inv_apply(v)
    }
    fn norm_sq(&self, v: &[f64]) -> f64 {
        (**self).norm_sq(v)
    }
    fn inv_norm_sq(&self, v: &[f64]) -> f64 {
        (**self).inv_norm_sq(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Identity,
    ExplicitSpd,
    FisherPseudo,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Identity { dim: usize },
    Spd { matrix: Matrix, chol: Cholesky },
    Fisher { matrix: Matrix, eigen: SymmetricEigen, cutoff: f64 },
}

/// The dense metrics: identity, an explicit SPD matrix, or a PSD Fisher
/// matrix inverted through its truncated eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMetric(Repr);

impl LocalMetric {
    pub fn identity(dim: usize) -> Self {
        Self(Repr::Identity { dim })
    }

    pub fn spd(matrix: Matrix) -> Result<Self> {
        if !matrix.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric);
        }
        let chol = Cholesky::new(&matrix)?;
        Ok(Self(Repr::Spd { matrix, chol }))
    }

    /// PSD metric with the default cutoff `1e-8 × largest eigenvalue`.
    pub fn fisher_pseudo(matrix: Matrix) -> Result<Self> {
        Self::fisher_pseudo_with_threshold(matrix, None)
    }

    /// `threshold` is an absolute eigenvalue cutoff; `None` picks the default
    /// relative one.
    pub fn fisher_pseudo_with_threshold(matrix: Matrix, threshold: Option<f64>) -> Result<Self> {
        if !matrix.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric);
        }
        let eigen = SymmetricEigen::new(&matrix)?;
        let largest = eigen.values.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = threshold.unwrap_or(DEFAULT_PINV_RELATIVE_THRESHOLD * largest);
        let tol = 1e-10 * largest.max(1e-300);
        if eigen.values.iter().any(|&l| l < -tol) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self(Repr::Fisher { matrix, eigen, cutoff }))
    }

    pub fn kind(&self) -> MetricKind {
        match self.0 {
            Repr::Identity { .. } => MetricKind::Identity,
            Repr::Spd { .. } => MetricKind::ExplicitSpd,
            Repr::Fisher { .. } => MetricKind::FisherPseudo,
        }
    }

    pub fn matrix(&self) -> Option<&Matrix> {
        match &self.0 {
            Repr::Identity { .. } => None,
            Repr::Spd { matrix, .. } | Repr::Fisher { matrix, .. } => Some(matrix),
        }
    }

    /// Eigenvalue cutoff of the pseudo-inverse, if this is a Fisher metric.
    pub fn pinv_threshold(&self) -> Option<f64> {
        match self.0 {
            Repr::Fisher { cutoff, .. } => Some(cutoff),
            _ => None,
        }
    }

    /// Orthogonal projection onto the retained eigenspace (identity for
    /// full-rank metrics).
    pub fn project_row_space(&self, v: &[f64]) -> Vec<f64> {
        match &self.0 {
            Repr::Fisher { eigen, cutoff, .. } => {
                eigen.apply_spectral(v, |l| if l > *cutoff { 1.0 } else { 0.0 })
            }
            _ => v.to_vec(),
        }
    }
}

impl Metric for LocalMetric {
    fn dim(&self) -> usize {
        match &self.0 {
            Repr::Identity { dim } => *dim,
            Repr::Spd { matrix, .. } | Repr::Fisher { matrix, .. } => matrix.rows(),
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.0 {
            Repr::Identity { .. } => v.to_vec(),
            Repr::Spd { matrix, .. } => matrix.mul_vec(v),
            // Acts through the truncated decomposition so that H H† H = H
            // holds for the same operator the inverse uses.
            Repr::Fisher { eigen, cutoff, .. } => eigen.apply_spectral(v, |l| if l > *cutoff { l } else { 0.0 }),
        }
    }

    fn inv_apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.0 {
            Repr::Identity { .. } => v.to_vec(),
            Repr::Spd { chol, .. } => chol.solve(v),
            Repr::Fisher { eigen, cutoff, .. } => {
                eigen.apply_spectral(v, |l| if l > *cutoff { 1.0 / l } else { 0.0 })
            }
        }
    }
}

/// `‖v‖_H = √(vᵀHv)`.
pub fn h_norm(metric: &impl Metric, v: &[f64]) -> Result<f64> {
    metric.check_dim(v)?;
    Ok(metric.norm(v))
}

/// `H⁻¹ v`.
pub fn h_inv_apply(metric: &impl Metric, v: &[f64]) -> Result<Vec<f64>> {
    metric.check_dim(v)?;
    Ok(metric.inv_apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_norm_is_euclidean() {
        assert_eq!(h_norm(&LocalMetric::identity(2), &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn diagonal_spd_norm_and_solve() {
        let h = LocalMetric::spd(Matrix::from_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(h_norm(&h, &[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(h_inv_apply(&h, &[4.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn zero_fisher_has_zero_norm() {
        let h = LocalMetric::fisher_pseudo(Matrix::zeros(3, 3)).unwrap();
        assert_eq!(h_norm(&h, &[1.0, -2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(h_inv_apply(&h, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn rank_one_pinv_kills_null_space() {
        // H = u uᵀ with u = (1, 1); (1, -1) is in the null space.
        let h = LocalMetric::fisher_pseudo(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()).unwrap();
        let x = h_inv_apply(&h, &[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-14);
        // H (1, 1) = (2, 2), and (1, 1) is the minimum-norm preimage.
        let y = h_inv_apply(&h, &[2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert_eq!(
            h_norm(&LocalMetric::identity(3), &[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        );
    }

    #[test]
    fn non_spd_is_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(LocalMetric::spd(m.clone()), Err(Error::NotPositiveDefinite));
        assert_eq!(LocalMetric::fisher_pseudo(m), Err(Error::NotPositiveDefinite));
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(LocalMetric::spd(asym), Err(Error::NotSymmetric));
    }
}
