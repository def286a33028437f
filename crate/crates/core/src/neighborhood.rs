//! The multi-swap neighborhood and its exhaustive scan.
//!
//! Moves are visited by swap size ascending, then lexicographically by the
//! dropped set and the added set. The scan keeps the first strict minimizer,
//! so the result does not depend on how the work is split across threads.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{outlier_breakdown, penalty_breakdown, CostBreakdown};
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Drop the centers in `drop`, open the candidates in `add`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapMove {
    pub drop: Vec<usize>,
    pub add: Vec<usize>,
}

impl SwapMove {
    pub fn size(&self) -> usize {
        self.drop.len()
    }

    /// `S \ A ∪ B`, ascending.
    pub fn apply(&self, centers: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = centers
            .iter()
            .copied()
            .filter(|c| !self.drop.contains(c))
            .chain(self.add.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks `|A| = |B|`, `A ⊆ S`, `B ∩ S = ∅` and no repeated entries.
    pub fn is_valid_for(&self, centers: &[usize]) -> bool {
        self.drop.len() == self.add.len()
            && !self.drop.is_empty()
            && self.drop.iter().all_unique()
            && self.add.iter().all_unique()
            && self.drop.iter().all(|c| centers.contains(c))
            && self.add.iter().all(|c| !centers.contains(c))
    }
}

/// How a center set is priced during a scan.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Pricing<'a> {
    /// Optimal penalized set of the new centers.
    Penalty(&'a [f64]),
    /// Fixed removed set plus up to `z` fresh outliers.
    Outlier { removed: &'a [bool], z: usize },
}

impl Pricing<'_> {
    #[inline]
    fn price(
        &self,
        near: &[f64],
        scratch: &mut Vec<usize>,
        fresh: &mut Vec<usize>,
    ) -> CostBreakdown {
        match *self {
            Pricing::Penalty(p) => penalty_breakdown(near, p),
            Pricing::Outlier { removed, z } => outlier_breakdown(near, removed, z, scratch, fresh),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ScanResult {
    pub mv: SwapMove,
    pub breakdown: CostBreakdown,
    /// Number of moves priced.
    pub scanned: u64,
}

/// Prices every move with `|A| = |B| ≤ rho` and returns the first minimizer.
pub(crate) fn best_move(
    instance: &Instance,
    centers: &[usize],
    rho: usize,
    pricing: Pricing<'_>,
) -> Result<ScanResult> {
    let mut centers = centers.to_vec();
    centers.sort_unstable();
    let outside: Vec<usize> = (0..instance.m())
        .filter(|c| centers.binary_search(c).is_err())
        .collect();
    if outside.is_empty() {
        return Err(Error::EmptyCandidatePool);
    }
    let max_size = rho.min(centers.len()).min(outside.len());
    let mut best: Option<ScanResult> = None;
    let mut scanned = 0u64;
    for t in 1..=max_size {
        let drops: Vec<Vec<usize>> = centers.iter().copied().combinations(t).collect();
        let per_drop: Vec<(Option<(CostBreakdown, Vec<usize>)>, u64)> = drops
            .par_iter()
            .map(|drop| scan_adds(instance, &centers, drop, &outside, t, pricing))
            .collect();
        for (drop, (found, count)) in drops.into_iter().zip(per_drop) {
            scanned += count;
            if let Some((breakdown, add)) = found {
                if best
                    .as_ref()
                    .is_none_or(|b| breakdown.total < b.breakdown.total)
                {
                    best = Some(ScanResult {
                        mv: SwapMove { drop, add },
                        breakdown,
                        scanned: 0,
                    });
                }
            }
        }
    }
    let mut best = best.expect("at least one move exists");
    best.scanned = scanned;
    Ok(best)
}

/// Best added set for one dropped set, visiting added sets lexicographically.
fn scan_adds(
    instance: &Instance,
    centers: &[usize],
    drop: &[usize],
    outside: &[usize],
    t: usize,
    pricing: Pricing<'_>,
) -> (Option<(CostBreakdown, Vec<usize>)>, u64) {
    let n = instance.n();
    let mut base = vec![f64::INFINITY; n];
    for &c in centers.iter().filter(|c| !drop.contains(c)) {
        for (b, &v) in base.iter_mut().zip(instance.connection_row(c)) {
            if v < *b {
                *b = v;
            }
        }
    }
    let mut scan = AddScan {
        instance,
        outside,
        t,
        pricing,
        levels: vec![base; t + 1],
        chosen: vec![0; t],
        best: None,
        scanned: 0,
        scratch: Vec::with_capacity(n),
        fresh: Vec::new(),
    };
    scan.descend(0, 0);
    (scan.best, scan.scanned)
}

struct AddScan<'a> {
    instance: &'a Instance,
    outside: &'a [usize],
    t: usize,
    pricing: Pricing<'a>,
    /// `levels[j]` holds nearest costs after opening the first `j` chosen candidates.
    levels: Vec<Vec<f64>>,
    chosen: Vec<usize>,
    best: Option<(CostBreakdown, Vec<usize>)>,
    scanned: u64,
    scratch: Vec<usize>,
    fresh: Vec<usize>,
}

impl AddScan<'_> {
    fn descend(&mut self, depth: usize, start: usize) {
        if depth == self.t {
            self.scanned += 1;
            let cost = self
                .pricing
                .price(&self.levels[depth], &mut self.scratch, &mut self.fresh);
            if self.best.as_ref().is_none_or(|(b, _)| cost.total < b.total) {
                let add = self.chosen.iter().map(|&i| self.outside[i]).collect();
                self.best = Some((cost, add));
            }
            return;
        }
        let last = self.outside.len() - (self.t - depth);
        for i in start..=last {
            let row = self.instance.connection_row(self.outside[i]);
            let (lower, upper) = self.levels.split_at_mut(depth + 1);
            let prev = &lower[depth];
            for ((cur, &p), &r) in upper[0].iter_mut().zip(prev).zip(row) {
                *cur = if r < p { r } else { p };
            }
            self.chosen[depth] = i;
            self.descend(depth + 1, i + 1);
        }
    }
}

/// Every valid move in scan order; used by tests and post-hoc checks.
pub fn enumerate_moves(instance: &Instance, centers: &[usize], rho: usize) -> Vec<SwapMove> {
    let mut centers = centers.to_vec();
    centers.sort_unstable();
    let outside: Vec<usize> = (0..instance.m())
        .filter(|c| centers.binary_search(c).is_err())
        .collect();
    let mut out = Vec::new();
    for t in 1..=rho.min(centers.len()).min(outside.len()) {
        for drop in centers.iter().copied().combinations(t) {
            for add in outside.iter().copied().combinations(t) {
                out.push(SwapMove {
                    drop: drop.clone(),
                    add,
                });
            }
        }
    }
    out
}
