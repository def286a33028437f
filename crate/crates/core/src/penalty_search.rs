//! Multi-swap local search for k-median / k-means with penalties.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{CostBreakdown, Solution};
use crate::error::{Error, Result};
use crate::instance::{Instance, Objective};
use crate::neighborhood::{best_move, Pricing, SwapMove};
use crate::trace::{Algorithm, SearchParams, SearchTrace, StepKind, StopReason, TraceRow};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// When a best move is accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StopRule {
    /// Accept any strict improvement.
    Exact,
    /// Accept only when the new cost is below `(1 − eps/q)` times the old one.
    Threshold { eps: f64, q: f64 },
}

impl StopRule {
    /// Threshold rule with `q′ = k`.
    pub fn threshold(eps: f64, k: usize) -> Self {
        StopRule::Threshold { eps, q: k as f64 }
    }
}

/// Best move of the `rho`-swap neighborhood, priced with the optimal
/// penalized set of each new center set.
pub fn best_swap(
    instance: &Instance,
    centers: &[usize],
    rho: usize,
) -> Result<(SwapMove, CostBreakdown)> {
    let penalties = require_penalties(instance)?;
    check_rho(instance, rho)?;
    if centers.len() != instance.k() {
        return Err(Error::InvalidParameter(format!(
            "expected {} centers, got {}",
            instance.k(),
            centers.len()
        )));
    }
    let found = best_move(instance, centers, rho, Pricing::Penalty(penalties))?;
    Ok((found.mv, found.breakdown))
}

/// First `k` candidates, or a uniformly random `k`-subset when seeded.
pub fn initial_centers(instance: &Instance, seed: Option<u64>) -> Vec<usize> {
    let mut centers: Vec<usize> = match seed {
        None => (0..instance.k()).collect(),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, instance.m(), instance.k()).into_vec()
        }
    };
    centers.sort_unstable();
    centers
}

/// Runs the multi-swap local search until no accepted move remains.
pub fn ls_multi_swap(
    instance: &Instance,
    rho: usize,
    stop: StopRule,
    seed: Option<u64>,
) -> Result<SearchTrace> {
    ls_multi_swap_capped(instance, rho, stop, seed, DEFAULT_MAX_ITERATIONS)
}

pub fn ls_multi_swap_capped(
    instance: &Instance,
    rho: usize,
    stop: StopRule,
    seed: Option<u64>,
    max_iterations: usize,
) -> Result<SearchTrace> {
    let penalties = require_penalties(instance)?;
    check_rho(instance, rho)?;
    let (eps, q) = match stop {
        StopRule::Exact => (None, None),
        StopRule::Threshold { eps, q } => {
            if !(eps > 0.0 && q > 0.0 && eps < q) {
                return Err(Error::InvalidParameter(format!(
                    "threshold needs 0 < eps < q, got eps = {eps}, q = {q}"
                )));
            }
            (Some(eps), Some(q))
        }
    };
    let params = SearchParams {
        algorithm: Algorithm::MultiSwap,
        rho,
        eps,
        q,
        seed,
        max_iterations,
    };
    let factor = params.factor();

    let mut centers = initial_centers(instance, seed);
    let initial = Solution::with_optimal_removal(instance, &centers)?;
    let mut cost = initial.breakdown.total;
    let mut rows = Vec::new();
    let mut iterations = 0;
    let stop_reason = loop {
        if iterations >= max_iterations {
            break StopReason::IterationCap;
        }
        if instance.m() == instance.k() || cost == 0.0 {
            break StopReason::NoImprovingMove;
        }
        let found = best_move(instance, &centers, rho, Pricing::Penalty(penalties))?;
        let next = found.breakdown.total;
        if !(next < factor * cost) {
            break if eps.is_some() {
                StopReason::Threshold
            } else {
                StopReason::NoImprovingMove
            };
        }
        iterations += 1;
        centers = found.mv.apply(&centers);
        rows.push(TraceRow {
            iteration: iterations,
            step: StepKind::Swap,
            drop: found.mv.drop,
            add: found.mv.add,
            cost_before: cost,
            cost_after: next,
            removed: 0,
        });
        cost = next;
    };

    let final_solution = Solution::with_optimal_removal(instance, &centers)?;
    if let Some(last) = rows.last_mut() {
        last.removed = final_solution.removed.len();
    }
    Ok(SearchTrace {
        params,
        initial,
        rows,
        final_solution,
        stop_reason,
        iterations,
        scale: instance.cost_scale(),
    })
}

fn require_penalties(instance: &Instance) -> Result<&[f64]> {
    match instance.objective() {
        Objective::Penalty => Ok(instance.penalties().expect("penalty instance")),
        Objective::Outlier => Err(Error::WrongProblem {
            expected: "penalty",
            actual: instance.problem(),
        }),
    }
}

pub(crate) fn check_rho(instance: &Instance, rho: usize) -> Result<()> {
    if rho == 0 || rho > instance.k() {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in 1..={}, got {rho}",
            instance.k()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::evaluate;
    use crate::instance::Removal;
    use crate::neighborhood::enumerate_moves;
    use rand::Rng;

    fn random_medp(seed: u64, n: usize, m: usize, k: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = |count: usize| -> Vec<Vec<f64>> {
            (0..count)
                .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect()
        };
        let pts = coords(n);
        let fac = coords(m);
        let pen: Vec<f64> = (0..n).map(|i| 1.0 + (i * 7 % 5) as f64).collect();
        Instance::median(pts, fac, k, Removal::Penalties(pen)).unwrap()
    }

    #[test]
    fn every_point_its_own_center() {
        let pts: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 * 3.0, 1.0]).collect();
        let inst = Instance::median(pts.clone(), pts, 4, Removal::Penalties(vec![1.0; 4])).unwrap();
        let t = ls_multi_swap(&inst, 1, StopRule::Exact, None).unwrap();
        assert_eq!(t.final_solution.total(), 0.0);
    }

    #[test]
    fn exact_mode_reaches_local_optimum() {
        for seed in 0..10 {
            let inst = random_medp(seed, 9, 7, 3);
            for rho in 1..=2 {
                let t = ls_multi_swap(&inst, rho, StopRule::Exact, None).unwrap();
                assert_eq!(t.stop_reason, StopReason::NoImprovingMove);
                let s = &t.final_solution;
                for mv in enumerate_moves(&inst, &s.centers, rho) {
                    let next = mv.apply(&s.centers);
                    let alt = Solution::with_optimal_removal(&inst, &next).unwrap();
                    assert!(alt.total() >= s.total());
                }
                for w in t.rows.windows(2) {
                    assert!(w[1].cost_after < w[0].cost_after);
                    assert_eq!(w[1].cost_before, w[0].cost_after);
                }
                let recomputed = evaluate(&inst, &s.centers, &s.removed).unwrap();
                assert_eq!(recomputed, s.breakdown);
            }
        }
    }

    #[test]
    fn best_swap_is_a_local_optimum_check() {
        let inst = random_medp(3, 8, 6, 2);
        let t = ls_multi_swap(&inst, 2, StopRule::Exact, None).unwrap();
        let (_, cost) = best_swap(&inst, &t.final_solution.centers, 2).unwrap();
        assert!(cost.total >= t.final_solution.total());
    }

    #[test]
    fn threshold_mode_steps_by_factor() {
        let inst = random_medp(4, 10, 8, 3);
        let rule = StopRule::threshold(0.5, inst.k());
        let t = ls_multi_swap(&inst, 1, rule, None).unwrap();
        let factor = 1.0 - 0.5 / 3.0;
        for row in &t.rows {
            assert!(row.cost_after < factor * row.cost_before);
        }
        assert!(matches!(
            t.stop_reason,
            StopReason::Threshold | StopReason::NoImprovingMove
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let inst = random_medp(5, 10, 8, 3);
        let a = ls_multi_swap(&inst, 2, StopRule::Exact, Some(17)).unwrap();
        let b = ls_multi_swap(&inst, 2, StopRule::Exact, Some(17)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let inst = random_medp(6, 10, 8, 3);
        let t = ls_multi_swap_capped(&inst, 1, StopRule::Exact, Some(1), 0).unwrap();
        assert_eq!(t.stop_reason, StopReason::IterationCap);
        assert_eq!(t.final_solution, t.initial);
    }

    #[test]
    fn parameter_errors() {
        let inst = random_medp(7, 6, 5, 2);
        assert!(ls_multi_swap(&inst, 0, StopRule::Exact, None).is_err());
        assert!(ls_multi_swap(&inst, 3, StopRule::Exact, None).is_err());
        let bad = StopRule::Threshold { eps: 2.0, q: 1.0 };
        assert!(ls_multi_swap(&inst, 1, bad, None).is_err());
        let pts = vec![vec![0.0], vec![1.0]];
        let outl = Instance::median(pts.clone(), pts, 1, Removal::Outliers(1)).unwrap();
        assert!(matches!(
            ls_multi_swap(&outl, 1, StopRule::Exact, None),
            Err(Error::WrongProblem { .. })
        ));
    }
}
