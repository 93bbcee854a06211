//! Constrained-Pareto fronts and their quality indicators.
//!
//! All objectives are maximised. Hypervolume is measured against a reference
//! point taken as the componentwise minimum of the joint front of every
//! archive being compared.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::preference::Preference;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub objectives: Vec<f64>,
    pub feasible: bool,
    pub preference: Option<Preference>,
}

impl FrontPoint {
    pub fn new(objectives: Vec<f64>) -> Self {
        Self { objectives, feasible: true, preference: None }
    }

    pub fn infeasible(objectives: Vec<f64>) -> Self {
        Self { objectives, feasible: false, preference: None }
    }

    pub fn with_preference(mut self, preference: Preference) -> Self {
        self.preference = Some(preference);
        self
    }
}

/// Feasible, mutually non-dominated points in lexicographic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoArchive {
    pub points: Vec<FrontPoint>,
    pub reference: Option<Vec<f64>>,
}

impl ParetoArchive {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Objective dimension, if the archive is non-empty.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.objectives.len())
    }

    pub fn objectives(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.objectives.as_slice())
    }
}

/// `q` dominates `p`: at least as good everywhere and not equal.
pub fn dominates(q: &[f64], p: &[f64]) -> bool {
    q.iter().zip(p).all(|(a, b)| a >= b) && q != p
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Drops infeasible points, then dominated ones; duplicates keep their first
/// occurrence. All points must share one objective dimension.
pub fn pareto_filter(points: &[FrontPoint]) -> ParetoArchive {
    let mut feasible: Vec<&FrontPoint> = points.iter().filter(|p| p.feasible).collect();
    feasible.sort_by(|a, b| lex_cmp(&a.objectives, &b.objectives));
    feasible.dedup_by(|b, a| a.objectives == b.objectives);
    let kept = feasible
        .iter()
        .filter(|p| !feasible.iter().any(|q| dominates(&q.objectives, &p.objectives)))
        .map(|p| (*p).clone())
        .collect();
    ParetoArchive { points: kept, reference: None }
}

/// Componentwise minimum of the Pareto front of the union of all archives.
pub fn reference_point(archives: &[ParetoArchive]) -> Result<Vec<f64>> {
    let union: Vec<FrontPoint> = archives.iter().flat_map(|a| a.points.iter().cloned()).collect();
    let joint = pareto_filter(&union);
    let dim = joint.dim().ok_or_else(|| Error::InvalidArgument("all archives are empty".into()))?;
    let mut r = vec![f64::INFINITY; dim];
    for p in joint.objectives() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        for (rj, pj) in r.iter_mut().zip(p) {
            *rj = rj.min(*pj);
        }
    }
    Ok(r)
}

fn check_dims(archive: &ParetoArchive, reference: &[f64]) -> Result<()> {
    for p in archive.objectives() {
        if p.len() != reference.len() {
            return Err(Error::DimensionMismatch { expected: reference.len(), found: p.len() });
        }
    }
    Ok(())
}

/// Points whose box `{z | r ⪯ z ⪯ p}` has positive volume.
fn strictly_above<'a>(archive: &'a ParetoArchive, reference: &[f64]) -> Vec<&'a [f64]> {
    archive.objectives().filter(|p| p.iter().zip(reference).all(|(a, r)| a > r)).collect()
}

/// Area dominated by 2-D points above `r`.
fn hv2(points: &mut [[f64; 2]], r: [f64; 2]) -> f64 {
    points.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut area = 0.0;
    let mut top = r[1];
    for p in points.iter() {
        if p[1] > top {
            area += (p[0] - r[0]) * (p[1] - top);
            top = p[1];
        }
    }
    area
}

/// Exact hypervolume of the union of boxes between `reference` and each
/// point, for one to three objectives.
pub fn hypervolume(archive: &ParetoArchive, reference: &[f64]) -> Result<f64> {
    let n = reference.len();
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument(alloc::format!("exact hypervolume needs 1 to 3 objectives, got {n}")));
    }
    check_dims(archive, reference)?;
    let pts = strictly_above(archive, reference);
    Ok(match n {
        1 => pts.iter().map(|p| p[0] - reference[0]).fold(0.0, f64::max),
        2 => {
            let mut v: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
            hv2(&mut v, [reference[0], reference[1]])
        }
        _ => {
            let mut v: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], p[2]]).collect();
            v.sort_by(|a, b| b[2].total_cmp(&a[2]));
            let r2 = [reference[0], reference[1]];
            let mut vol = 0.0;
            for k in 0..v.len() {
                let next = if k + 1 < v.len() { v[k + 1][2] } else { reference[2] };
                let depth = v[k][2] - next;
                if depth > 0.0 {
                    let mut slice: Vec<[f64; 2]> = v[..=k].iter().map(|p| [p[0], p[1]]).collect();
                    vol += depth * hv2(&mut slice, r2);
                }
            }
            vol
        }
    })
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Monte-Carlo hypervolume over the bounding box of the dominated region.
/// Returns the estimate and its standard error.
pub fn hypervolume_mc(archive: &ParetoArchive, reference: &[f64], samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument("at least 10000 samples are required".into()));
    }
    check_dims(archive, reference)?;
    let pts = strictly_above(archive, reference);
    if pts.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = reference.len();
    let mut upper = reference.to_vec();
    for p in &pts {
        for (u, x) in upper.iter_mut().zip(p.iter()) {
            *u = u.max(*x);
        }
    }
    let box_volume: f64 = upper.iter().zip(reference).map(|(u, r)| u - r).product();
    if !(box_volume > 0.0) {
        return Ok((0.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for j in 0..n {
            z[j] = reference[j] + unit_f64(&mut rng) * (upper[j] - reference[j]);
        }
        if pts.iter().any(|p| p.iter().zip(&z).all(|(a, b)| b <= a)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let stderr = box_volume * libm::sqrt(frac * (1.0 - frac) / samples as f64);
    Ok((box_volume * frac, stderr))
}

fn sorted_column(archive: &ParetoArchive, j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = archive.objectives().map(|p| p[j]).collect();
    col.sort_by(f64::total_cmp);
    col
}

/// Mean squared gap between consecutive sorted values per objective, each
/// dimension rescaled by its range. `None` for fewer than two points.
pub fn normalized_sparsity(archive: &ParetoArchive) -> Option<f64> {
    let dim = archive.dim()?;
    if archive.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    for j in 0..dim {
        let col = sorted_column(archive, j);
        let range = col[col.len() - 1] - col[0];
        if range == 0.0 {
            continue;
        }
        total += col.windows(2).map(|w| ((w[1] - w[0]) / range) * ((w[1] - w[0]) / range)).sum::<f64>();
    }
    Some(total / (archive.len() - 1) as f64)
}

/// The unnormalised variant of [`normalized_sparsity`].
pub fn sparsity(archive: &ParetoArchive) -> Option<f64> {
    let dim = archive.dim()?;
    if archive.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    for j in 0..dim {
        total += sorted_column(archive, j).windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>();
    }
    Some(total / (archive.len() - 1) as f64)
}

/// One policy evaluation collected during a preference sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub preference: Preference,
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
}

/// Keeps evaluations whose constraints are within `thresholds`, then filters
/// to the non-dominated set.
pub fn build_front(evaluations: &[Evaluation], thresholds: &[f64]) -> Result<ParetoArchive> {
    let mut pts = Vec::with_capacity(evaluations.len());
    for e in evaluations {
        if e.constraints.len() != thresholds.len() {
            return Err(Error::DimensionMismatch { expected: thresholds.len(), found: e.constraints.len() });
        }
        let feasible = e.constraints.iter().zip(thresholds).all(|(c, d)| c <= d);
        pts.push(FrontPoint { objectives: e.objectives.clone(), feasible, preference: Some(e.preference.clone()) });
    }
    Ok(pareto_filter(&pts))
}
