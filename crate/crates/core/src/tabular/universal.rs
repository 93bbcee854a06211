use alloc::vec::Vec;

use super::SoftmaxPolicyTable;
use crate::error::{Error, Result};
use crate::preference::Preference;

/// Preference-conditioned policy built from per-preference tables, one bin
/// per grid preference.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalPolicy {
    pub bins: Vec<(Preference, SoftmaxPolicyTable)>,
}

/// Stores each grid preference's own table, so the distillation loss is zero
/// on every bin.
pub fn distill_universal(
    per_preference: &[(Preference, SoftmaxPolicyTable)],
    grid: &[Preference],
) -> Result<UniversalPolicy> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("preference grid is empty".into()));
    }
    let mut bins = Vec::with_capacity(grid.len());
    for w in grid {
        let (_, policy) = per_preference
            .iter()
            .find(|(p, _)| p == w)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("no policy for preference {:?}", w.weights())))?;
        bins.push((w.clone(), policy.clone()));
    }
    Ok(UniversalPolicy { bins })
}

impl UniversalPolicy {
    /// Index of the nearest bin in Euclidean distance; ties go to the lower
    /// index.
    pub fn bin(&self, preference: &Preference) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, (w, _)) in self.bins.iter().enumerate() {
            let d: f64 = w.weights().iter().zip(preference.weights()).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    pub fn lookup(&self, preference: &Preference) -> &SoftmaxPolicyTable {
        &self.bins[self.bin(preference)].1
    }
}

/// `Σ_a p(a) log(p(a)/q(a))` for one state's action distributions.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * libm::log(a / b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(x: f64) -> SoftmaxPolicyTable {
        SoftmaxPolicyTable::new(1, 2, vec![x, 0.0]).unwrap()
    }

    #[test]
    fn nearest_bin_with_low_index_ties() {
        let grid = vec![Preference::new(vec![1.0, 0.0]).unwrap(), Preference::new(vec![0.0, 1.0]).unwrap()];
        let per = vec![(grid[1].clone(), table(2.0)), (grid[0].clone(), table(1.0))];
        let u = distill_universal(&per, &grid).unwrap();
        assert_eq!(u.lookup(&grid[0]), &table(1.0));
        assert_eq!(u.lookup(&Preference::new(vec![1.0, 0.2]).unwrap()), &table(1.0));
        assert_eq!(u.lookup(&Preference::new(vec![1.0, 1.0]).unwrap()), &table(1.0));
        let p = u.lookup(&grid[1]).probs(0);
        assert_eq!(kl_divergence(&table(2.0).probs(0), &p), 0.0);
        assert!(distill_universal(&per, &[]).is_err());
    }
}
