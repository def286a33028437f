//! Assignments, removed-point rules and objective evaluation.
//!
//! Every cost in the crate is summed in point-index order: connection costs of
//! kept points into `cost_c`, penalties of removed points into `cost_p`, then
//! `total = cost_c + cost_p`. The search kernels use the same order so that a
//! cost reported during a search equals [`evaluate`] bit for bit.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Objective};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub cost_c: f64,
    pub cost_p: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(cost_c: f64, cost_p: f64) -> Self {
        CostBreakdown {
            cost_c,
            cost_p,
            total: cost_c + cost_p,
        }
    }
}

/// Nearest center and connection cost for every point.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Candidate index of the nearest center; ties go to the lowest index.
    pub nearest: Vec<usize>,
    pub costs: Vec<f64>,
}

/// A center set with an explicit removed set and its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Candidate indices, ascending.
    pub centers: Vec<usize>,
    /// Point indices, ascending.
    pub removed: Vec<usize>,
    /// Nearest center of each kept point; `None` for removed points.
    pub assignment: Vec<Option<usize>>,
    pub breakdown: CostBreakdown,
}

impl Solution {
    /// Builds a solution for an explicit removed set.
    pub fn new(instance: &Instance, centers: &[usize], removed: &[usize]) -> Result<Self> {
        let centers = normalize(centers, instance.m(), "candidate")?;
        let removed = normalize(removed, instance.n(), "point")?;
        let assign = assign(instance, &centers)?;
        let breakdown = evaluate(instance, &centers, &removed)?;
        let mut assignment: Vec<Option<usize>> = assign.nearest.into_iter().map(Some).collect();
        for &x in &removed {
            assignment[x] = None;
        }
        Ok(Solution {
            centers,
            removed,
            assignment,
            breakdown,
        })
    }

    /// Builds a solution whose removed set is the cost-optimal one for `centers`:
    /// the penalized set for penalty variants, `outlier(S, ∅)` for outlier variants.
    pub fn with_optimal_removal(instance: &Instance, centers: &[usize]) -> Result<Self> {
        let removed = match instance.objective() {
            Objective::Penalty => penalized_set(instance, centers)?,
            Objective::Outlier => outlier_set(instance, centers, &[], instance.z())?,
        };
        Self::new(instance, centers, &removed)
    }

    pub fn total(&self) -> f64 {
        self.breakdown.total
    }

    /// Kept points attached to each center, keyed by position in `centers`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centers.len()];
        for (x, a) in self.assignment.iter().enumerate() {
            if let Some(c) = a {
                let pos = self
                    .centers
                    .binary_search(c)
                    .expect("assigned to a listed center");
                out[pos].push(x);
            }
        }
        out
    }
}

fn normalize(ids: &[usize], len: usize, what: &'static str) -> Result<Vec<usize>> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange {
            what,
            index: bad,
            len,
        });
    }
    Ok(v)
}

fn check_centers(instance: &Instance, centers: &[usize]) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if let Some(&bad) = centers.iter().find(|&&c| c >= instance.m()) {
        return Err(Error::IndexOutOfRange {
            what: "candidate",
            index: bad,
            len: instance.m(),
        });
    }
    Ok(())
}

/// Maps every point to its nearest center in `centers`.
pub fn assign(instance: &Instance, centers: &[usize]) -> Result<Assignment> {
    check_centers(instance, centers)?;
    let mut order = centers.to_vec();
    order.sort_unstable();
    let n = instance.n();
    let mut nearest = vec![order[0]; n];
    let mut costs = instance.connection_row(order[0]).to_vec();
    for &c in &order[1..] {
        for (x, &v) in instance.connection_row(c).iter().enumerate() {
            if v < costs[x] {
                costs[x] = v;
                nearest[x] = c;
            }
        }
    }
    Ok(Assignment { nearest, costs })
}

/// `{x : p_x ≤ min_{s∈S} Δ(s, x)}`, ascending.
pub fn penalized_set(instance: &Instance, centers: &[usize]) -> Result<Vec<usize>> {
    let penalties = instance.penalties().ok_or(Error::WrongProblem {
        expected: "penalty",
        actual: instance.problem(),
    })?;
    let a = assign(instance, centers)?;
    Ok((0..instance.n())
        .filter(|&x| penalties[x] <= a.costs[x])
        .collect())
}

/// The `z` points outside `excluded` with the largest nearest-center cost
/// (all of them when fewer than `z` remain), ascending. Ties between equal
/// costs favor the lower point index.
pub fn outlier_set(
    instance: &Instance,
    centers: &[usize],
    excluded: &[usize],
    z: usize,
) -> Result<Vec<usize>> {
    let a = assign(instance, centers)?;
    let mut mask = vec![false; instance.n()];
    for &x in excluded {
        if x >= instance.n() {
            return Err(Error::IndexOutOfRange {
                what: "point",
                index: x,
                len: instance.n(),
            });
        }
        mask[x] = true;
    }
    let mut out = Vec::new();
    top_outliers(&a.costs, &mask, z, &mut Vec::new(), &mut out);
    out.sort_unstable();
    Ok(out)
}

/// Objective value of `(S, P)`.
pub fn evaluate(
    instance: &Instance,
    centers: &[usize],
    removed: &[usize],
) -> Result<CostBreakdown> {
    let a = assign(instance, centers)?;
    let mut mask = vec![false; instance.n()];
    for &x in removed {
        if x >= instance.n() {
            return Err(Error::IndexOutOfRange {
                what: "point",
                index: x,
                len: instance.n(),
            });
        }
        mask[x] = true;
    }
    Ok(masked_breakdown(&a.costs, &mask, instance.penalties()))
}

/// Sums kept connection costs and removed penalties in index order.
pub(crate) fn masked_breakdown(
    near: &[f64],
    removed: &[bool],
    penalties: Option<&[f64]>,
) -> CostBreakdown {
    let mut cost_c = 0.0;
    let mut cost_p = 0.0;
    for (x, (&d, &r)) in near.iter().zip(removed).enumerate() {
        if r {
            if let Some(p) = penalties {
                cost_p += p[x];
            }
        } else {
            cost_c += d;
        }
    }
    CostBreakdown::new(cost_c, cost_p)
}

/// Penalty objective with the optimal penalized set; same summation as
/// [`masked_breakdown`] on `penalized_set`.
#[inline]
pub(crate) fn penalty_breakdown(near: &[f64], penalties: &[f64]) -> CostBreakdown {
    let mut cost_c = 0.0;
    let mut cost_p = 0.0;
    for (&d, &p) in near.iter().zip(penalties) {
        if p <= d {
            cost_p += p;
        } else {
            cost_c += d;
        }
    }
    CostBreakdown::new(cost_c, cost_p)
}

/// Orders points by descending cost, then ascending index.
#[inline]
fn farther(near: &[f64], a: usize, b: usize) -> Ordering {
    near[b].total_cmp(&near[a]).then(a.cmp(&b))
}

/// Appends to `out` the `z` largest-cost points not flagged in `excluded`.
pub(crate) fn top_outliers(
    near: &[f64],
    excluded: &[bool],
    z: usize,
    scratch: &mut Vec<usize>,
    out: &mut Vec<usize>,
) {
    if z == 0 {
        return;
    }
    scratch.clear();
    scratch.extend((0..near.len()).filter(|&x| !excluded[x]));
    if scratch.len() > z {
        scratch.select_nth_unstable_by(z - 1, |&a, &b| farther(near, a, b));
        scratch.truncate(z);
    }
    out.extend_from_slice(scratch);
}

/// Cost of `(S, P ∪ outlier(S, P))` given the nearest-center costs of `S`.
/// `fresh` receives the newly removed points when provided.
pub(crate) fn outlier_breakdown(
    near: &[f64],
    removed: &[bool],
    z: usize,
    scratch: &mut Vec<usize>,
    fresh: &mut Vec<usize>,
) -> CostBreakdown {
    fresh.clear();
    top_outliers(near, removed, z, scratch, fresh);
    let mut cost_c = 0.0;
    for (x, &d) in near.iter().enumerate() {
        if !removed[x] && !fresh.contains(&x) {
            cost_c += d;
        }
    }
    CostBreakdown::new(cost_c, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Removal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64], removal: Removal) -> Instance {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        Instance::median(pts.clone(), pts, 1, removal).unwrap()
    }

    fn random_instance(seed: u64, n: usize, m: usize, penalties: bool) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = |count: usize| -> Vec<Vec<f64>> {
            (0..count)
                .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect()
        };
        let pts = coords(n);
        let fac = coords(m);
        let removal = if penalties {
            Removal::Penalties((0..n).map(|i| (i as f64 * 1.7) % 6.0).collect())
        } else {
            Removal::Outliers(2)
        };
        Instance::median(pts, fac, 2, removal).unwrap()
    }

    #[test]
    fn assign_on_a_line() {
        let inst = line(&[0.0, 10.0], Removal::Outliers(0));
        let a = assign(&inst, &[0]).unwrap();
        assert_eq!(a.nearest, vec![0, 0]);
        assert_eq!(a.costs, vec![0.0, 10.0]);
        let b = assign(&inst, &[0, 1]).unwrap();
        assert_eq!(b.nearest, vec![0, 1]);
        assert_eq!(b.costs, vec![0.0, 0.0]);
    }

    #[test]
    fn assign_breaks_ties_by_lowest_index() {
        let pts = vec![vec![0.0]];
        let fac = vec![vec![1.0], vec![-1.0]];
        let inst = Instance::median(pts, fac, 1, Removal::Outliers(0)).unwrap();
        assert_eq!(assign(&inst, &[1, 0]).unwrap().nearest, vec![0]);
    }

    #[test]
    fn assign_rejects_empty_centers() {
        let inst = line(&[0.0, 1.0], Removal::Outliers(0));
        assert!(matches!(assign(&inst, &[]), Err(Error::EmptyCenters)));
        assert!(evaluate(&inst, &[], &[]).is_err());
    }

    #[test]
    fn assign_matches_linear_scan() {
        let inst = random_instance(5, 6, 5, false);
        let centers = [1, 3, 4];
        let a = assign(&inst, &centers).unwrap();
        for x in 0..6 {
            let mut best = (f64::INFINITY, usize::MAX);
            for &c in &centers {
                let d = inst.connection(c, x);
                if d < best.0 {
                    best = (d, c);
                }
            }
            assert_eq!((a.costs[x], a.nearest[x]), best);
        }
    }

    #[test]
    fn zero_penalties_remove_everything() {
        let inst = line(&[0.0, 3.0, 7.0], Removal::Penalties(vec![0.0; 3]));
        assert_eq!(penalized_set(&inst, &[0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn colocated_points_are_never_penalized() {
        let inst = line(&[0.0, 3.0], Removal::Penalties(vec![0.5, 0.5]));
        assert!(penalized_set(&inst, &[0, 1]).unwrap().is_empty());
    }

    #[test]
    fn ties_are_penalized() {
        let inst = line(&[0.0, 3.0], Removal::Penalties(vec![1.0, 3.0]));
        assert_eq!(penalized_set(&inst, &[0]).unwrap(), vec![1]);
    }

    #[test]
    fn penalized_set_needs_penalties() {
        let inst = line(&[0.0, 3.0], Removal::Outliers(1));
        assert!(matches!(
            penalized_set(&inst, &[0]),
            Err(Error::WrongProblem { .. })
        ));
    }

    #[test]
    fn outlier_set_small_remainder() {
        let inst = line(&[0.0, 1.0, 2.0, 3.0], Removal::Outliers(3));
        assert_eq!(outlier_set(&inst, &[0], &[0, 1], 5).unwrap(), vec![2, 3]);
        assert!(outlier_set(&inst, &[0], &[], 0).unwrap().is_empty());
    }

    #[test]
    fn outlier_set_takes_farthest() {
        let xs = [0.0, 5.0, 1.0, 9.0, 2.0, 7.0, 3.0];
        let inst = line(&xs, Removal::Outliers(3));
        // full-sort oracle
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[b].partial_cmp(&xs[a]).unwrap().then(a.cmp(&b)));
        let mut expected = order[..3].to_vec();
        expected.sort_unstable();
        assert_eq!(outlier_set(&inst, &[0], &[], 3).unwrap(), expected);
        assert_eq!(expected, vec![1, 3, 5]);
    }

    #[test]
    fn outlier_set_ties_favor_low_index() {
        let inst = line(&[0.0, 2.0, -2.0, 2.0], Removal::Outliers(2));
        assert_eq!(outlier_set(&inst, &[0], &[], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn evaluate_extremes() {
        let inst = line(&[0.0, 3.0, 7.0], Removal::Penalties(vec![1.0, 2.0, 4.0]));
        let all = evaluate(&inst, &[0], &[0, 1, 2]).unwrap();
        assert_eq!((all.cost_c, all.cost_p, all.total), (0.0, 7.0, 7.0));
        let covered = evaluate(&inst, &[0, 1, 2], &[]).unwrap();
        assert_eq!(covered.total, 0.0);
    }

    #[test]
    fn evaluate_is_pure() {
        let inst = random_instance(2, 9, 6, true);
        let a = evaluate(&inst, &[0, 2], &[1, 4]).unwrap();
        let b = evaluate(&inst, &[2, 0], &[4, 1]).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn penalized_set_minimizes_over_all_subsets() {
        for seed in 0..10 {
            let inst = random_instance(seed, 8, 4, true);
            let centers = [0, 2];
            let closed =
                evaluate(&inst, &centers, &penalized_set(&inst, &centers).unwrap()).unwrap();
            let mut best = f64::INFINITY;
            for mask in 0u32..256 {
                let p: Vec<usize> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
                best = best.min(evaluate(&inst, &centers, &p).unwrap().total);
            }
            assert!((closed.total - best).abs() <= 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn kernels_match_evaluate_bitwise() {
        for seed in 0..10 {
            let inst = random_instance(seed, 9, 5, true);
            let centers = [1, 4];
            let near = assign(&inst, &centers).unwrap().costs;
            let fast = penalty_breakdown(&near, inst.penalties().unwrap());
            let slow = evaluate(&inst, &centers, &penalized_set(&inst, &centers).unwrap()).unwrap();
            assert_eq!(fast, slow);

            let out = random_instance(seed, 9, 5, false);
            let near = assign(&out, &centers).unwrap().costs;
            let mut removed = vec![false; 9];
            removed[seed as usize % 9] = true;
            let mut fresh = Vec::new();
            let fast = outlier_breakdown(&near, &removed, 2, &mut Vec::new(), &mut fresh);
            let base: Vec<usize> = vec![seed as usize % 9];
            let mut p = outlier_set(&out, &centers, &base, 2).unwrap();
            let mut fresh_sorted = fresh.clone();
            fresh_sorted.sort_unstable();
            assert_eq!(fresh_sorted, p);
            p.extend(base);
            assert_eq!(fast, evaluate(&out, &centers, &p).unwrap());
        }
    }

    #[test]
    fn solution_clusters() {
        let inst = line(&[0.0, 1.0, 10.0, 11.0], Removal::Outliers(1));
        let s = Solution::with_optimal_removal(&inst, &[0, 3]).unwrap();
        assert_eq!(s.removed, vec![1]);
        assert_eq!(s.clusters(), vec![vec![0], vec![2, 3]]);
        assert_eq!(s.total(), 1.0);
    }
}
