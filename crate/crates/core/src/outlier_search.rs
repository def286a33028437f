//! Multi-swap local search for k-median / k-means with outliers.
//!
//! The removed set `P` only grows. Each loop iteration first tries to add
//! `outlier(S, P)` to `P`, then prices every multi-swap with the current `P`
//! plus up to `z` fresh outliers. Both steps are accepted only when they cut
//! the cost below `(1 − ε/q)` times the current cost, and the loop ends when an
//! iteration changes nothing.

use crate::cost::{outlier_breakdown, top_outliers, CostBreakdown, Solution};
use crate::error::{Error, Result};
use crate::instance::{Instance, Objective};
use crate::neighborhood::{best_move, Pricing, SwapMove};
use crate::penalty_search::{check_rho, initial_centers, DEFAULT_MAX_ITERATIONS};
use crate::trace::{Algorithm, SearchParams, SearchTrace, StepKind, StopReason, TraceRow};

/// `q` used when none is given: `k + 1` for single swaps, `k² − k + 1` otherwise.
pub fn default_q(k: usize, rho: usize) -> f64 {
    if rho <= 1 {
        (k + 1) as f64
    } else {
        (k * k - k + 1) as f64
    }
}

/// The smallest admissible `q`: `k` for single swaps, `k² − k` otherwise.
pub fn minimal_q(k: usize, rho: usize) -> f64 {
    if rho <= 1 {
        k as f64
    } else {
        (k * k - k) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlierSearchState {
    /// Candidate indices, ascending.
    pub centers: Vec<usize>,
    removed: Vec<bool>,
    /// Cost at the start of the current iteration (`∞` before the first).
    pub alpha: f64,
    pub iteration: usize,
    pub breakdown: CostBreakdown,
}

impl OutlierSearchState {
    /// Starts from `centers` with `P = outlier(S, ∅)`.
    pub fn new(instance: &Instance, centers: &[usize]) -> Result<Self> {
        require_outliers(instance)?;
        let mut centers = centers.to_vec();
        centers.sort_unstable();
        centers.dedup();
        let near = nearest_costs(instance, &centers)?;
        let mut removed = vec![false; instance.n()];
        let mut fresh = Vec::new();
        let breakdown =
            outlier_breakdown(&near, &removed, instance.z(), &mut Vec::new(), &mut fresh);
        for x in fresh {
            removed[x] = true;
        }
        Ok(OutlierSearchState {
            centers,
            removed,
            alpha: f64::INFINITY,
            iteration: 0,
            breakdown,
        })
    }

    /// Builds a state from an explicit `(S, P)`.
    pub fn from_parts(instance: &Instance, centers: &[usize], removed: &[usize]) -> Result<Self> {
        require_outliers(instance)?;
        let solution = Solution::new(instance, centers, removed)?;
        let mut mask = vec![false; instance.n()];
        for &x in &solution.removed {
            mask[x] = true;
        }
        Ok(OutlierSearchState {
            centers: solution.centers,
            removed: mask,
            alpha: f64::INFINITY,
            iteration: 0,
            breakdown: solution.breakdown,
        })
    }

    pub fn cost(&self) -> f64 {
        self.breakdown.total
    }

    /// Removed point indices, ascending.
    pub fn removed(&self) -> Vec<usize> {
        ids(&self.removed)
    }

    pub fn removed_len(&self) -> usize {
        self.removed.iter().filter(|&&r| r).count()
    }

    pub fn to_solution(&self, instance: &Instance) -> Result<Solution> {
        Solution::new(instance, &self.centers, &self.removed())
    }
}

/// A priced swap together with the state it leads to.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapCandidate {
    pub mv: SwapMove,
    pub centers: Vec<usize>,
    /// `P ∪ outlier(S′, P)`, ascending.
    pub removed: Vec<usize>,
    pub breakdown: CostBreakdown,
}

/// Cost of `(S, P ∪ outlier(S, P))` and the points it would add.
pub fn add_outliers_cost(
    state: &OutlierSearchState,
    instance: &Instance,
) -> Result<(CostBreakdown, Vec<usize>)> {
    let near = nearest_costs(instance, &state.centers)?;
    let mut fresh = Vec::new();
    let b = outlier_breakdown(
        &near,
        &state.removed,
        instance.z(),
        &mut Vec::new(),
        &mut fresh,
    );
    fresh.sort_unstable();
    Ok((b, fresh))
}

/// Adds `outlier(S, P)` to `P` when that cuts the cost below `(1 − ε/q)·cost`.
/// Returns whether the step was taken.
pub fn no_swap_step(
    state: &mut OutlierSearchState,
    instance: &Instance,
    eps: f64,
    q: f64,
) -> Result<bool> {
    check_threshold(eps, q)?;
    let (next, fresh) = add_outliers_cost(state, instance)?;
    if next.total < (1.0 - eps / q) * state.cost() {
        for x in fresh {
            state.removed[x] = true;
        }
        state.breakdown = next;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Lexicographically first minimizer of `cost(S \ A ∪ B, P ∪ outlier(S \ A ∪ B, P))`
/// over `|A| = |B| ≤ rho`.
pub fn best_swap_with_outliers(
    state: &OutlierSearchState,
    instance: &Instance,
    rho: usize,
) -> Result<SwapCandidate> {
    check_rho(instance, rho)?;
    let found = best_move(
        instance,
        &state.centers,
        rho,
        Pricing::Outlier {
            removed: &state.removed,
            z: instance.z(),
        },
    )?;
    let centers = found.mv.apply(&state.centers);
    let near = nearest_costs(instance, &centers)?;
    let mut removed = state.removed.clone();
    let mut fresh = Vec::new();
    top_outliers(
        &near,
        &state.removed,
        instance.z(),
        &mut Vec::new(),
        &mut fresh,
    );
    for x in fresh {
        removed[x] = true;
    }
    Ok(SwapCandidate {
        mv: found.mv,
        centers,
        removed: ids(&removed),
        breakdown: found.breakdown,
    })
}

/// Runs the outlier local search with threshold `1 − eps/q`; `q` defaults to
/// [`default_q`].
pub fn ls_multi_swap_outlier(
    instance: &Instance,
    rho: usize,
    eps: f64,
    q: Option<f64>,
    seed: Option<u64>,
) -> Result<SearchTrace> {
    ls_multi_swap_outlier_capped(instance, rho, eps, q, seed, DEFAULT_MAX_ITERATIONS)
}

pub fn ls_multi_swap_outlier_capped(
    instance: &Instance,
    rho: usize,
    eps: f64,
    q: Option<f64>,
    seed: Option<u64>,
    max_iterations: usize,
) -> Result<SearchTrace> {
    require_outliers(instance)?;
    check_rho(instance, rho)?;
    let q = q.unwrap_or_else(|| default_q(instance.k(), rho));
    check_threshold(eps, q)?;
    let params = SearchParams {
        algorithm: Algorithm::MultiSwapOutlier,
        rho,
        eps: Some(eps),
        q: Some(q),
        seed,
        max_iterations,
    };
    let factor = params.factor();

    let mut state = OutlierSearchState::new(instance, &initial_centers(instance, seed))?;
    let initial = state.to_solution(instance)?;
    let can_swap = instance.m() > instance.k();
    let mut rows = Vec::new();
    let stop_reason = loop {
        if state.cost() == 0.0 {
            break StopReason::ZeroCost;
        }
        if !(state.cost() < state.alpha) {
            break StopReason::Threshold;
        }
        if state.iteration >= max_iterations {
            break StopReason::IterationCap;
        }
        state.alpha = state.cost();
        let iteration = state.iteration + 1;
        let mut progressed = false;

        let before = state.cost();
        if no_swap_step(&mut state, instance, eps, q)? {
            progressed = true;
            rows.push(TraceRow {
                iteration,
                step: StepKind::AddOutliers,
                drop: Vec::new(),
                add: Vec::new(),
                cost_before: before,
                cost_after: state.cost(),
                removed: state.removed_len(),
            });
        }

        if can_swap {
            let cand = best_swap_with_outliers(&state, instance, rho)?;
            if cand.breakdown.total < factor * state.cost() {
                progressed = true;
                rows.push(TraceRow {
                    iteration,
                    step: StepKind::Swap,
                    drop: cand.mv.drop,
                    add: cand.mv.add,
                    cost_before: state.cost(),
                    cost_after: cand.breakdown.total,
                    removed: cand.removed.len(),
                });
                state.centers = cand.centers;
                for x in cand.removed {
                    state.removed[x] = true;
                }
                state.breakdown = cand.breakdown;
            }
        }
        if progressed {
            state.iteration = iteration;
        }
    };

    Ok(SearchTrace {
        params,
        initial,
        rows,
        final_solution: state.to_solution(instance)?,
        stop_reason,
        iterations: state.iteration,
        scale: instance.cost_scale(),
    })
}

fn require_outliers(instance: &Instance) -> Result<()> {
    match instance.objective() {
        Objective::Outlier => Ok(()),
        Objective::Penalty => Err(Error::WrongProblem {
            expected: "outlier",
            actual: instance.problem(),
        }),
    }
}

fn check_threshold(eps: f64, q: f64) -> Result<()> {
    if eps > 0.0 && q > 0.0 && eps < q {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "threshold needs 0 < eps < q, got eps = {eps}, q = {q}"
        )))
    }
}

fn nearest_costs(instance: &Instance, centers: &[usize]) -> Result<Vec<f64>> {
    Ok(crate::cost::assign(instance, centers)?.costs)
}

fn ids(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(x, &r)| r.then_some(x))
        .collect()
}
