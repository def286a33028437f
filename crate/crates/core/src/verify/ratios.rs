//! Approximation-ratio, iteration and blowup bounds.

use crate::cost::Solution;
use crate::instance::{Instance, Metric, Objective};
use crate::oracle::OracleResult;
use crate::trace::{Algorithm, RunSummary, SearchParams};

use super::{BoundCheck, BoundReport, ReportParams};

/// `β1` of the single-swap means-with-outliers bound, or `None` when its
/// premises fail. Besides `(5 + ε̂)(1 + k)ε < (9 + ε̂)q` this requires
/// `(1 + k)ε < q`, without which `β1 ≤ 0` and the bound says nothing.
pub fn beta_single_swap(epsilon_hat: f64, k: usize, eps: f64, q: f64) -> Option<f64> {
    let load = (1 + k) as f64 * eps / q;
    let premise = (5.0 + epsilon_hat) * (1 + k) as f64 * eps < (9.0 + epsilon_hat) * q;
    if !premise || load >= 1.0 {
        return None;
    }
    let a = 5.0 + epsilon_hat;
    Some(-2.0 / a.sqrt() + (4.0 / a + 1.0 - load).sqrt())
}

/// `β2` of the multi-swap means-with-outliers bound, with the same extra
/// requirement `(1 + k² − k)ε < q`.
pub fn beta_multi_swap(epsilon_hat: f64, k: usize, rho: usize, eps: f64, q: f64) -> Option<f64> {
    let load = (1 + k * k - k) as f64 * eps / q;
    let r = rho as f64;
    let a = 3.0 + 2.0 / r + epsilon_hat;
    let b = 1.0 + 1.0 / r;
    if !(load < b * b / a + 1.0) || load >= 1.0 {
        return None;
    }
    Some(-b / a.sqrt() + (b * b / a + 1.0 - load).sqrt())
}

fn epsilon_hat(instance: &Instance) -> Option<f64> {
    match instance.metric() {
        Metric::Median => None,
        Metric::Means => instance.candidate_set().map(|c| c.epsilon_hat),
    }
}

/// Evaluates the approximation ratio matching the run's algorithm and problem.
pub fn check_ratio_bounds(
    instance: &Instance,
    local: &Solution,
    global: &OracleResult,
    params: &SearchParams,
) -> BoundReport {
    let k = instance.k();
    let rho = params.rho as f64;
    let eps_hat = epsilon_hat(instance);
    let mut report = BoundReport::new(ReportParams {
        k,
        rho: Some(params.rho),
        eps: params.eps,
        q: params.q,
        epsilon_hat: eps_hat,
        ..ReportParams::default()
    });
    let cost = local.total();
    let opt = global.total();

    match instance.objective() {
        Objective::Penalty => {
            let name = "penalty_ratio";
            if params.algorithm != Algorithm::MultiSwap {
                report.push(BoundCheck::not_applicable(name, "not a penalty search run"));
            } else if params.eps.is_some() {
                report.push(BoundCheck::not_applicable(
                    name,
                    "stated for exact local optima; this run used a threshold",
                ));
            } else {
                let (c_star, p_star) = (global.breakdown.cost_c, global.breakdown.cost_p);
                let rhs = match eps_hat {
                    None => (3.0 + 2.0 / rho) * c_star + (1.0 + 1.0 / rho) * p_star,
                    Some(e) => {
                        let a = 3.0 + 2.0 / rho + e;
                        a * a * c_star + a * (1.0 + 1.0 / rho) * p_star
                    }
                };
                report.push(BoundCheck::evaluate(name, cost, rhs));
            }
        }
        Objective::Outlier => {
            let (Some(eps), Some(q)) = (params.eps, params.q) else {
                report.push(BoundCheck::not_applicable(
                    "outlier_ratio_single_swap",
                    "not an outlier search run",
                ));
                return report;
            };
            let single_load = (1 + k) as f64 * eps / q;
            let multi_load = (1 + k * k - k) as f64 * eps / q;
            match eps_hat {
                None => {
                    report.push(if single_load < 1.0 {
                        BoundCheck::evaluate(
                            "outlier_ratio_single_swap",
                            cost,
                            5.0 / (1.0 - single_load) * opt,
                        )
                    } else {
                        BoundCheck::not_applicable("outlier_ratio_single_swap", "(1 + k)ε ≥ q")
                    });
                    report.push(if multi_load < 1.0 {
                        BoundCheck::evaluate(
                            "outlier_ratio_multi_swap",
                            cost,
                            (3.0 + 2.0 / rho) / (1.0 - multi_load) * opt,
                        )
                    } else {
                        BoundCheck::not_applicable("outlier_ratio_multi_swap", "(1 + k² − k)ε ≥ q")
                    });
                }
                Some(e) => {
                    let b1 = beta_single_swap(e, k, eps, q);
                    let b2 = beta_multi_swap(e, k, params.rho, eps, q);
                    report.params.beta1 = b1;
                    report.params.beta2 = b2;
                    report.push(match b1 {
                        Some(b) => BoundCheck::evaluate(
                            "outlier_ratio_single_swap",
                            cost,
                            (5.0 + e) / (b * b) * opt,
                        ),
                        None => BoundCheck::not_applicable(
                            "outlier_ratio_single_swap",
                            "premise on (ε̂, k, ε, q) fails or β1 ≤ 0",
                        ),
                    });
                    report.push(match b2 {
                        Some(b) => BoundCheck::evaluate(
                            "outlier_ratio_multi_swap",
                            cost,
                            (3.0 + 2.0 / rho + e) / (b * b) * opt,
                        ),
                        None => BoundCheck::not_applicable(
                            "outlier_ratio_multi_swap",
                            "premise on (ε̂, k, ρ, ε, q) fails or β2 ≤ 0",
                        ),
                    });
                }
            }
        }
    }
    report
}

/// Iteration count and removed-set size of an outlier search run.
///
/// With costs scaled by `run.scale` every nonzero cost is at least 1, and
/// when the starting cost is at most `n` times the connection diameter each
/// iteration but the last shrinks it by `1 − ε/q`.
pub fn check_complexity_bounds(run: &RunSummary, instance: &Instance) -> BoundReport {
    let p = &run.params;
    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        rho: Some(p.rho),
        eps: p.eps,
        q: p.q,
        epsilon_hat: epsilon_hat(instance),
        ..ReportParams::default()
    });
    let (Some(eps), Some(q), Algorithm::MultiSwapOutlier) = (p.eps, p.q, p.algorithm) else {
        report.push(BoundCheck::not_applicable(
            "iterations",
            "not an outlier search run",
        ));
        return report;
    };
    let n = instance.n() as f64;
    let z = instance.z() as f64;
    let ceiling = n * instance.connection_diameter();
    let per_step = -(1.0 - eps / q).ln();
    let iteration_bound = (ceiling * run.scale).max(1.0).ln() / per_step + 1.0;
    let iterations = run.iterations as f64;
    let removed = run.removed as f64;

    if run.initial_total <= ceiling {
        report.push(BoundCheck::evaluate(
            "iterations",
            iterations,
            iteration_bound,
        ));
        report.push(BoundCheck::evaluate(
            "removed_count_a_priori",
            removed,
            z + 2.0 * z * iteration_bound.floor(),
        ));
    } else {
        let note = "starting cost exceeds n times the connection diameter";
        report.push(BoundCheck::not_applicable("iterations", note));
        report.push(BoundCheck::not_applicable("removed_count_a_priori", note));
    }
    report.push(BoundCheck::evaluate(
        "removed_count",
        removed,
        z + 2.0 * z * iterations,
    ));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::data_point_candidates;
    use crate::instance::Removal;
    use crate::oracle::opt_discrete;
    use crate::outlier_search::ls_multi_swap_outlier;
    use crate::penalty_search::{ls_multi_swap, StopRule};
    use crate::verify::Status;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn betas() {
        // With ε = 0 the ratio is a²/(√(b² + a) − b)² for a = 5, b = 2.
        let b = beta_single_swap(0.0, 2, 0.0, 3.0).unwrap();
        assert!((5.0 / (b * b) - 25.0).abs() < 1e-9);
        assert!(beta_single_swap(0.0, 2, 1.0, 3.0).is_none());
        let (a, c) = (4.25f64, 1.5f64);
        let b2 = beta_multi_swap(0.25, 2, 2, 0.0, 3.0).unwrap();
        let want = a * a / ((c * c + a).sqrt() - c).powi(2);
        assert!((a / (b2 * b2) - want).abs() < 1e-9);
        assert!(beta_multi_swap(0.25, 3, 2, 1.0, 7.0).is_none());
        assert!(beta_multi_swap(0.25, 3, 2, 0.05, 7.0).unwrap() < 1.0);
    }

    #[test]
    fn optimum_meets_every_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.random_range(0.0..5.0)]).collect();
        let cs = data_point_candidates(&pts).unwrap();
        let inst = Instance::means(pts.clone(), cs, 2, Removal::Outliers(1)).unwrap();
        let global = opt_discrete(&inst).unwrap();
        let local = global.to_solution(&inst).unwrap();
        let params = ls_multi_swap_outlier(&inst, 2, 0.05, None, None)
            .unwrap()
            .params;
        let r = check_ratio_bounds(&inst, &local, &global, &params);
        assert_eq!(r.evaluated(), 2);
        assert!(r.passed());

        let pen = Instance::median(pts.clone(), pts, 2, Removal::Penalties(vec![1.0; 7])).unwrap();
        let global = opt_discrete(&pen).unwrap();
        let local = global.to_solution(&pen).unwrap();
        let params = ls_multi_swap(&pen, 1, StopRule::Exact, None)
            .unwrap()
            .params;
        let r = check_ratio_bounds(&pen, &local, &global, &params);
        assert!(r.passed() && r.evaluated() == 1);
    }

    #[test]
    fn side_condition_reported() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let inst = Instance::median(pts.clone(), pts, 2, Removal::Outliers(1)).unwrap();
        let t = ls_multi_swap_outlier(&inst, 1, 2.5, Some(3.0), None).unwrap();
        let global = opt_discrete(&inst).unwrap();
        let r = check_ratio_bounds(&inst, &t.final_solution, &global, &t.params);
        assert_eq!(
            r.get("outlier_ratio_single_swap").unwrap().status,
            Status::NotApplicable
        );
        let rule = StopRule::threshold(0.1, 2);
        let pen = Instance::median(
            (0..5).map(|i| vec![i as f64]).collect(),
            (0..5).map(|i| vec![i as f64]).collect(),
            2,
            Removal::Penalties(vec![1.0; 5]),
        )
        .unwrap();
        let t = ls_multi_swap(&pen, 1, rule, None).unwrap();
        let g = opt_discrete(&pen).unwrap();
        let r = check_ratio_bounds(&pen, &t.final_solution, &g, &t.params);
        assert_eq!(
            r.get("penalty_ratio").unwrap().status,
            Status::NotApplicable
        );
    }

    #[test]
    fn complexity_on_runs() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..9)
                .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect();
            let inst = Instance::median(pts.clone(), pts, 3, Removal::Outliers(2)).unwrap();
            let t = ls_multi_swap_outlier(&inst, 1, 0.05, None, None).unwrap();
            let r = check_complexity_bounds(&t.summary(), &inst);
            assert!(r.passed());
            assert_eq!(r.evaluated(), 3);
        }
    }
}
