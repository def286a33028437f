//! Exact solvers for tiny instances.
//!
//! [`opt_discrete`] enumerates every `k`-subset of the candidate set and
//! prices it with the closed-form removed set, which is optimal for fixed
//! centers. [`opt_means_continuous`] solves the means variants with centers
//! anywhere in space: it enumerates every admissible removed set and every
//! partition of the remaining points into at most `k` blocks, each block
//! centered at its centroid.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::{centroid, squared_cost};
use crate::cost::{outlier_breakdown, penalty_breakdown, CostBreakdown, Solution};
use crate::error::{Error, Result};
use crate::instance::{squared_distance, Instance, Metric, Objective, Problem};

/// Most center sets [`opt_discrete`] will enumerate.
pub const MAX_DISCRETE_CONFIGURATIONS: u128 = 10_000_000;
pub const MAX_CONTINUOUS_POINTS: usize = 12;
pub const MAX_CONTINUOUS_K: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterLocation {
    Candidate(usize),
    Coordinates(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    CenterEnum,
    PartitionEnum,
}

/// A provably optimal solution with its enumeration certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub problem: Problem,
    pub centers: Vec<CenterLocation>,
    /// Point indices, ascending.
    pub removed: Vec<usize>,
    /// Position in `centers` of each kept point's center.
    pub assignment: Vec<Option<usize>>,
    #[serde(flatten)]
    pub breakdown: CostBreakdown,
    /// Configurations priced.
    pub enumerated: u64,
    pub method: OracleMethod,
}

impl OracleResult {
    pub fn total(&self) -> f64 {
        self.breakdown.total
    }

    /// Candidate indices of the centers, when every center is a candidate.
    pub fn candidate_indices(&self) -> Option<Vec<usize>> {
        self.centers
            .iter()
            .map(|c| match c {
                CenterLocation::Candidate(i) => Some(*i),
                CenterLocation::Coordinates(_) => None,
            })
            .collect()
    }

    /// Center coordinates, resolving candidate indices through `instance`.
    pub fn coordinates(&self, instance: &Instance) -> Option<Vec<Vec<f64>>> {
        self.centers
            .iter()
            .map(|c| match c {
                CenterLocation::Candidate(i) => instance.candidates().map(|cs| cs[*i].clone()),
                CenterLocation::Coordinates(v) => Some(v.clone()),
            })
            .collect()
    }

    /// Kept points of each center, keyed by position in `centers`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centers.len()];
        for (x, a) in self.assignment.iter().enumerate() {
            if let Some(j) = a {
                out[*j].push(x);
            }
        }
        out
    }

    /// The optimum as a [`Solution`] when its centers are candidates.
    pub fn to_solution(&self, instance: &Instance) -> Option<Solution> {
        let idx = self.candidate_indices()?;
        Solution::new(instance, &idx, &self.removed).ok()
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Optimum over center sets drawn from the instance's candidates.
pub fn opt_discrete(instance: &Instance) -> Result<OracleResult> {
    let (m, k, n) = (instance.m(), instance.k(), instance.n());
    let total = binomial(m, k);
    if total > MAX_DISCRETE_CONFIGURATIONS {
        return Err(Error::TooLarge(format!(
            "choose({m}, {k}) = {total} center sets exceed the limit of {MAX_DISCRETE_CONFIGURATIONS}"
        )));
    }
    let penalties = instance.penalties();
    let z = instance.z();

    let per_first: Vec<Option<(f64, Vec<usize>)>> = (0..=m - k)
        .into_par_iter()
        .map(|first| {
            let mut near = vec![0.0; n];
            let mut scratch = Vec::with_capacity(n);
            let mut fresh = Vec::new();
            let unremoved = vec![false; n];
            let mut best: Option<(f64, Vec<usize>)> = None;
            for rest in (first + 1..m).combinations(k - 1) {
                near.copy_from_slice(instance.connection_row(first));
                for &c in &rest {
                    for (v, &r) in near.iter_mut().zip(instance.connection_row(c)) {
                        if r < *v {
                            *v = r;
                        }
                    }
                }
                let cost = match penalties {
                    Some(p) => penalty_breakdown(&near, p),
                    None => outlier_breakdown(&near, &unremoved, z, &mut scratch, &mut fresh),
                }
                .total;
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    let mut s = Vec::with_capacity(k);
                    s.push(first);
                    s.extend(rest);
                    best = Some((cost, s));
                }
            }
            best
        })
        .collect();
    let (_, centers) = per_first
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("k <= m gives at least one center set");

    let sol = Solution::with_optimal_removal(instance, &centers)?;
    let assignment = sol
        .assignment
        .iter()
        .map(|a| a.map(|c| sol.centers.binary_search(&c).expect("assigned to a center")))
        .collect();
    Ok(OracleResult {
        problem: instance.problem(),
        centers: sol
            .centers
            .iter()
            .map(|&c| CenterLocation::Candidate(c))
            .collect(),
        removed: sol.removed,
        assignment,
        breakdown: sol.breakdown,
        enumerated: total as u64,
        method: OracleMethod::CenterEnum,
    })
}

/// Number of partitions of `n` labelled items into at most `k` blocks.
fn partitions_up_to(n: usize, k: usize) -> u128 {
    // Stirling numbers of the second kind, row by row.
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row.iter().sum()
}

/// Exact optimum of a means instance with unrestricted center locations.
pub fn opt_means_continuous(instance: &Instance) -> Result<OracleResult> {
    if instance.metric() != Metric::Means {
        return Err(Error::WrongProblem {
            expected: "means",
            actual: instance.problem(),
        });
    }
    let points = instance
        .points()
        .ok_or(Error::CoordinatesRequired("continuous oracle"))?;
    let (n, k) = (instance.n(), instance.k());
    if n > MAX_CONTINUOUS_POINTS || k > MAX_CONTINUOUS_K {
        let estimate: u128 = (0..=n)
            .map(|kept| binomial(n, kept) * partitions_up_to(kept, k))
            .sum();
        return Err(Error::TooLarge(format!(
            "continuous oracle supports n <= {MAX_CONTINUOUS_POINTS} and k <= {MAX_CONTINUOUS_K}, \
             got n = {n}, k = {k} (about {estimate} partitions)"
        )));
    }

    // Cost of every nonempty block, centered at its centroid.
    let full = 1usize << n;
    let block_cost: Vec<f64> = (0..full)
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                return 0.0;
            }
            let block: Vec<&Vec<f64>> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| &points[i])
                .collect();
            let c = centroid(&block).expect("nonempty block");
            squared_cost(&c, &block)
        })
        .collect();

    let penalties = instance.penalties();
    let removed_masks: Vec<usize> = match instance.objective() {
        Objective::Penalty => (0..full).collect(),
        Objective::Outlier => (0..full)
            .filter(|m| m.count_ones() as usize <= instance.z())
            .collect(),
    };

    let per_mask: Vec<(f64, usize, Vec<usize>, u64)> = removed_masks
        .par_iter()
        .map(|&removed| {
            let penalty: f64 = match penalties {
                Some(p) => (0..n).filter(|i| removed >> i & 1 == 1).map(|i| p[i]).sum(),
                None => 0.0,
            };
            let kept: Vec<usize> = (0..n).filter(|i| removed >> i & 1 == 0).collect();
            let mut search = PartitionSearch {
                block_cost: &block_cost,
                kept: &kept,
                k,
                blocks: Vec::with_capacity(k),
                best: f64::INFINITY,
                best_blocks: Vec::new(),
                leaves: 0,
            };
            search.descend(0);
            (
                search.best + penalty,
                removed,
                search.best_blocks,
                search.leaves,
            )
        })
        .collect();

    let enumerated: u64 = per_mask.iter().map(|r| r.3).sum();
    let (_, removed_mask, blocks, _) = per_mask
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("the empty removed set is always admissible");

    let mut centers = Vec::with_capacity(blocks.len());
    let mut assignment = vec![None; n];
    for (j, &block) in blocks.iter().enumerate() {
        let members: Vec<&Vec<f64>> = (0..n)
            .filter(|i| block >> i & 1 == 1)
            .map(|i| &points[i])
            .collect();
        centers.push(centroid(&members)?);
        for i in (0..n).filter(|i| block >> i & 1 == 1) {
            assignment[i] = Some(j);
        }
    }
    let removed: Vec<usize> = (0..n).filter(|i| removed_mask >> i & 1 == 1).collect();
    let mut cost_c = 0.0;
    let mut cost_p = 0.0;
    for x in 0..n {
        match assignment[x] {
            Some(j) => cost_c += squared_distance(&centers[j], &points[x]),
            None => {
                if let Some(p) = penalties {
                    cost_p += p[x];
                }
            }
        }
    }
    Ok(OracleResult {
        problem: instance.problem(),
        centers: centers
            .into_iter()
            .map(CenterLocation::Coordinates)
            .collect(),
        removed,
        assignment,
        breakdown: CostBreakdown {
            cost_c,
            cost_p,
            total: cost_c + cost_p,
        },
        enumerated,
        method: OracleMethod::PartitionEnum,
    })
}

/// Restricted-growth enumeration of the partitions of `kept` into at most
/// `k` blocks.
struct PartitionSearch<'a> {
    block_cost: &'a [f64],
    kept: &'a [usize],
    k: usize,
    /// Bit masks of the blocks opened so far.
    blocks: Vec<usize>,
    best: f64,
    best_blocks: Vec<usize>,
    leaves: u64,
}

impl PartitionSearch<'_> {
    fn descend(&mut self, depth: usize) {
        if depth == self.kept.len() {
            self.leaves += 1;
            let cost: f64 = self.blocks.iter().map(|&b| self.block_cost[b]).sum();
            if cost < self.best {
                self.best = cost;
                self.best_blocks.clone_from(&self.blocks);
            }
            return;
        }
        let bit = 1usize << self.kept[depth];
        for j in 0..self.blocks.len() {
            self.blocks[j] |= bit;
            self.descend(depth + 1);
            self.blocks[j] &= !bit;
        }
        if self.blocks.len() < self.k {
            self.blocks.push(bit);
            self.descend(depth + 1);
            self.blocks.pop();
        }
    }
}
