//! Preferences over objectives and equally spaced preference grids.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nonnegative objective weights whose largest entry is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Preference(Vec<f64>);

impl Preference {
    /// Validate weights that are already max-norm 1.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPreference("no objectives".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidPreference(format!("negative or non-finite weight {w}")));
        }
        let max = weights.iter().fold(0.0f64, |m, &w| m.max(w));
        if max != 1.0 {
            return Err(Error::InvalidPreference(format!("max-norm is {max}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// Rescale arbitrary nonnegative weights to max-norm 1.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidPreference("weights must be finite and nonnegative".into()));
        }
        let max = weights.iter().fold(0.0f64, |m, &w| m.max(w));
        if !(max > 0.0) {
            return Err(Error::InvalidPreference("all weights are zero".into()));
        }
        let mut w: Vec<f64> = weights.iter().map(|x| x / max).collect();
        // Division can leave the maximum one ulp off.
        for (x, &orig) in w.iter_mut().zip(weights) {
            if orig == max {
                *x = 1.0;
            }
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// How the equally spaced grid is laid out before it is expressed in max-norm form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridSpacing {
    /// Equal spacing on the 1-norm simplex, then rescaled to max-norm 1.
    #[default]
    OneNorm,
    /// Equal spacing directly on the max-norm-1 face of the nonnegative orthant.
    MaxNorm,
}

/// Equally spaced preferences over `n_objectives` objectives.
///
/// For two objectives exactly `count` preferences are returned, starting at
/// `(1, 0)` and ending at `(0, 1)`. For three or more objectives a lattice is
/// used whose resolution is the smallest giving at least `count` points.
pub fn preference_grid(n_objectives: usize, count: usize, spacing: GridSpacing) -> Result<Vec<Preference>> {
    if n_objectives == 0 {
        return Err(Error::InvalidArgument("n_objectives must be positive".into()));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if n_objectives == 1 {
        return Ok(vec![Preference::uniform(1); count]);
    }
    if n_objectives == 2 {
        if count < 2 {
            return Err(Error::InvalidArgument("two objectives need count >= 2".into()));
        }
        let last = (count - 1) as f64;
        return (0..count)
            .map(|i| {
                let t = i as f64 / last;
                match spacing {
                    GridSpacing::OneNorm => Preference::normalized(&[1.0 - t, t]),
                    GridSpacing::MaxNorm => {
                        // Arc length along (1,0) -> (1,1) -> (0,1).
                        let s = 2.0 * t;
                        if s <= 1.0 {
                            Preference::normalized(&[1.0, s])
                        } else {
                            Preference::normalized(&[2.0 - s, 1.0])
                        }
                    }
                }
            })
            .collect();
    }
    let mut resolution = 1;
    loop {
        let points = lattice(n_objectives, resolution, spacing);
        if points.len() >= count {
            return points.iter().map(|w| Preference::normalized(w)).collect();
        }
        resolution += 1;
    }
}

fn lattice(n: usize, m: usize, spacing: GridSpacing) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    match spacing {
        GridSpacing::OneNorm => compositions(m, 0, &mut current, &mut out),
        GridSpacing::MaxNorm => cube_face(m, 0, &mut current, &mut out),
    }
    let mut pts: Vec<Vec<f64>> = out
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / m as f64).collect())
        .collect();
    // Descending lexicographic order puts (1, 0, ..., 0) first.
    pts.sort_by(|a, b| {
        b.iter()
            .zip(a)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    pts
}

fn compositions(remaining: usize, idx: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let n = current.len();
    if idx == n - 1 {
        current[idx] = remaining;
        out.push(current.clone());
        return;
    }
    for k in 0..=remaining {
        current[idx] = k;
        compositions(remaining - k, idx + 1, current, out);
    }
}

fn cube_face(m: usize, idx: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if idx == current.len() {
        if current.iter().any(|&k| k == m) {
            out.push(current.clone());
        }
        return;
    }
    for k in 0..=m {
        current[idx] = k;
        cube_face(m, idx + 1, current, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_grid_is_endpoints_and_midpoint() {
        let g = preference_grid(2, 3, GridSpacing::OneNorm).unwrap();
        let w: Vec<&[f64]> = g.iter().map(Preference::weights).collect();
        assert_eq!(w, vec![&[1.0, 0.0][..], &[1.0, 1.0][..], &[0.0, 1.0][..]]);
    }

    #[test]
    fn twenty_point_grid_spans_the_face() {
        let g = preference_grid(2, 20, GridSpacing::OneNorm).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0].weights(), &[1.0, 0.0]);
        assert_eq!(g[19].weights(), &[0.0, 1.0]);
    }

    #[test]
    fn single_objective_grid_repeats() {
        let g = preference_grid(1, 4, GridSpacing::OneNorm).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|p| p.weights() == [1.0]));
    }

    #[test]
    fn rejects_zero_objectives() {
        assert!(preference_grid(0, 3, GridSpacing::OneNorm).is_err());
    }

    #[test]
    fn max_norm_spacing_passes_through_the_corner() {
        let g = preference_grid(2, 5, GridSpacing::MaxNorm).unwrap();
        assert_eq!(g[1].weights(), &[1.0, 0.5]);
        assert_eq!(g[2].weights(), &[1.0, 1.0]);
        assert_eq!(g[3].weights(), &[0.5, 1.0]);
    }

    #[test]
    fn grids_are_valid_and_deterministic() {
        for n in 1..=4 {
            for count in 2..=100 {
                for spacing in [GridSpacing::OneNorm, GridSpacing::MaxNorm] {
                    let a = preference_grid(n, count, spacing).unwrap();
                    let b = preference_grid(n, count, spacing).unwrap();
                    assert_eq!(a, b);
                    assert!(a.len() >= count);
                    if n <= 2 {
                        assert_eq!(a.len(), count);
                    }
                    for p in &a {
                        assert!(Preference::new(p.weights().to_vec()).is_ok(), "{p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn normalized_rejects_all_zero() {
        assert!(Preference::normalized(&[0.0, 0.0]).is_err());
        assert!(Preference::new(vec![0.5, 0.5]).is_err());
        assert!(Preference::new(vec![-0.1, 1.0]).is_err());
    }
}
