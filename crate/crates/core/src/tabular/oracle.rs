//! Brute-force constrained-Pareto front of a small model.
//!
//! Returns are linear in the occupancy measure, and the occupancy polytope
//! is the convex hull of the deterministic policies' occupancies. Every
//! achievable `(J_R, J_C)` is therefore a convex combination of
//! deterministic value vectors, and any such combination is realised by the
//! stationary policy read off the mixed occupancy measure.

use alloc::vec;
use alloc::vec::Vec;

use super::{returns, TabularCMOMDP};
use crate::error::{Error, Result};
use crate::front::dominates;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Largest number of deterministic policies to enumerate.
    pub max_policies: u128,
    /// Mixing levels between candidate pairs for three or more objectives.
    pub mixture_levels: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { max_policies: 4096, mixture_levels: 11 }
    }
}

/// The oracle front. With two objectives `vertices` is the concave chain
/// ordered by increasing first objective and the front is the polyline
/// through it; otherwise the front is the point set itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFront {
    pub n_objectives: usize,
    pub vertices: Vec<Vec<f64>>,
    pub polyline: bool,
}

fn segment_points<'a>(a: &'a [f64], b: &'a [f64]) -> impl Fn(f64) -> Vec<f64> + 'a {
    move |t| a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimises a convex function of `t ∈ [0, 1]` by ternary search.
fn minimise_on_unit(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.0).min(f(1.0)).min(f(0.5 * (lo + hi)))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Piecewise-linear interpolation of `ys` over increasing `xs`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|v| *v < x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

impl CpFront {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn segments(&self) -> Vec<(&[f64], &[f64])> {
        if self.polyline && self.vertices.len() > 1 {
            self.vertices.windows(2).map(|w| (w[0].as_slice(), w[1].as_slice())).collect()
        } else {
            self.vertices.iter().map(|v| (v.as_slice(), v.as_slice())).collect()
        }
    }

    /// Euclidean distance from `p` to the front.
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.segments()
            .into_iter()
            .map(|(a, b)| {
                let at = segment_points(a, b);
                libm::sqrt(minimise_on_unit(|t| dist2(&at(t), p)))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest per-objective deviation from the nearest front point in the
    /// max-norm.
    pub fn distance_inf(&self, p: &[f64]) -> f64 {
        self.segments()
            .into_iter()
            .map(|(a, b)| {
                let at = segment_points(a, b);
                minimise_on_unit(|t| dist_inf(&at(t), p))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether some front point is at least as good as `p` everywhere and
    /// better by more than `tol` somewhere.
    pub fn dominates_point(&self, p: &[f64], tol: f64) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        if !self.polyline || self.n_objectives != 2 {
            return self.vertices.iter().any(|q| {
                q.iter().zip(p).all(|(a, b)| a >= b) && q.iter().zip(p).any(|(a, b)| a - b > tol)
            });
        }
        let xs: Vec<f64> = self.vertices.iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = self.vertices.iter().map(|v| v[1]).collect();
        let (x_max, y_max) = (xs[xs.len() - 1], ys[0]);
        if p[0] > x_max || p[1] > y_max {
            return false;
        }
        // Best second objective among front points with q₁ ≥ p₁, and best
        // first objective among those with q₂ ≥ p₂.
        let best_y = interpolate(&xs, &ys, p[0].max(xs[0]));
        if best_y < p[1] {
            return false;
        }
        let rx: Vec<f64> = ys.iter().rev().copied().collect();
        let ry: Vec<f64> = xs.iter().rev().copied().collect();
        let best_x = interpolate(&rx, &ry, p[1].max(rx[0]));
        best_y - p[1] > tol || best_x - p[0] > tol
    }

    /// Points along the front no further apart than `spacing`.
    pub fn sample(&self, spacing: f64) -> Vec<Vec<f64>> {
        if !self.polyline || self.vertices.len() < 2 || !(spacing > 0.0) {
            return self.vertices.clone();
        }
        let mut out = vec![self.vertices[0].clone()];
        for w in self.vertices.windows(2) {
            let len = libm::sqrt(dist2(&w[0], &w[1]));
            let pieces = libm::ceil(len / spacing).max(1.0) as usize;
            let at = segment_points(&w[0], &w[1]);
            for k in 1..=pieces {
                out.push(at(k as f64 / pieces as f64));
            }
        }
        out
    }
}

/// The deterministic policy numbered `index` in base `A`, state 0 first.
pub fn deterministic_policy(n_states: usize, n_actions: usize, index: u128) -> Vec<f64> {
    let mut probs = vec![0.0; n_states * n_actions];
    let mut rest = index;
    for s in 0..n_states {
        let a = (rest % n_actions as u128) as usize;
        rest /= n_actions as u128;
        probs[s * n_actions + a] = 1.0;
    }
    probs
}

fn pareto(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut pts = points;
    pts.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
    });
    pts.dedup();
    let keep: Vec<bool> = pts.iter().map(|p| !pts.iter().any(|q| dominates(q, p))).collect();
    pts.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

/// Upper-right concave chain of non-dominated 2-D points sorted by `x`.
fn concave_chain(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut hull: Vec<Vec<f64>> = Vec::new();
    for p in points {
        while hull.len() >= 2 {
            let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Enumerates deterministic policies, adds exact crossings of each
/// constraint boundary between pairs of them, and keeps the feasible
/// non-dominated part of their convex hull.
///
/// Crossings between pairs recover every vertex of the feasible region when
/// there is at most one constraint; with more, vertices on higher-dimensional
/// faces are approximated.
pub fn cp_front_oracle(mdp: &TabularCMOMDP, options: &OracleOptions) -> Result<CpFront> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let count = (na as u128).checked_pow(ns as u32).unwrap_or(u128::MAX);
    if count > options.max_policies {
        return Err(Error::EnumerationCap { size: count, cap: options.max_policies });
    }
    let d = mdp.thresholds();
    let feasible = |c: &[f64]| c.iter().zip(d).all(|(x, y)| x <= y);
    let mut values = Vec::with_capacity(count as usize);
    for index in 0..count {
        values.push(returns(mdp, &deterministic_policy(ns, na, index))?);
    }

    let mut candidates: Vec<Vec<f64>> = values.iter().filter(|(_, c)| feasible(c)).map(|(r, _)| r.clone()).collect();
    for (i, (ru, cu)) in values.iter().enumerate() {
        for (rv, cv) in &values[i + 1..] {
            for k in 0..d.len() {
                let (lo, hi) = (cu[k].min(cv[k]), cu[k].max(cv[k]));
                if !(lo < d[k] && d[k] < hi) {
                    continue;
                }
                let t = (d[k] - cu[k]) / (cv[k] - cu[k]);
                let c: Vec<f64> = cu.iter().zip(cv).enumerate().map(|(j, (a, b))| if j == k { d[k] } else { a + t * (b - a) }).collect();
                if feasible(&c) {
                    candidates.push(ru.iter().zip(rv).map(|(a, b)| a + t * (b - a)).collect());
                }
            }
        }
    }

    let n = mdp.n_objectives();
    if candidates.is_empty() {
        return Ok(CpFront { n_objectives: n, vertices: Vec::new(), polyline: n == 2 });
    }
    let front = pareto(candidates);
    Ok(match n {
        2 => CpFront { n_objectives: 2, vertices: concave_chain(front), polyline: true },
        1 => CpFront { n_objectives: 1, vertices: front, polyline: false },
        _ => {
            let mut pts = front.clone();
            let levels = options.mixture_levels.max(2);
            for (i, a) in front.iter().enumerate() {
                for b in &front[i + 1..] {
                    for l in 1..levels - 1 {
                        let t = l as f64 / (levels - 1) as f64;
                        pts.push(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect());
                    }
                }
            }
            CpFront { n_objectives: n, vertices: pareto(pts), polyline: false }
        }
    })
}
