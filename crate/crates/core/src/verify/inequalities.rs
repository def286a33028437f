//! Inequalities of the local-optimality analysis, evaluated on a concrete
//! (local solution, optimum) pair.

use crate::cost::Solution;
use crate::error::{Error, Result};
use crate::instance::{connection_cost, Instance, Metric, Objective};
use crate::oracle::OracleResult;
use crate::outlier_search::{add_outliers_cost, best_swap_with_outliers, OutlierSearchState};
use crate::trace::SearchParams;

use super::adapted::AdaptedClustering;
use super::{optimal_connection, BoundCheck, BoundReport, PairView, ReportParams};

/// For every optimal center, the best member of `candidates` for its cluster
/// pays at most `1 + ε̂` times what the optimal center pays.
pub fn check_centroid_set(
    instance: &Instance,
    global: &OracleResult,
    candidates: &[Vec<f64>],
    epsilon_hat: f64,
) -> Result<BoundReport> {
    if instance.metric() != Metric::Means {
        return Err(Error::WrongProblem {
            expected: "means",
            actual: instance.problem(),
        });
    }
    let points = instance
        .points()
        .ok_or(Error::CoordinatesRequired("centroid set check"))?;
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("candidate set is empty".into()));
    }
    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        epsilon_hat: Some(epsilon_hat),
        ..ReportParams::default()
    });
    for (j, cluster) in global.clusters().into_iter().enumerate() {
        let best = candidates
            .iter()
            .map(|c| {
                cluster
                    .iter()
                    .map(|&x| connection_cost(c, &points[x], Metric::Means))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let optimal: f64 = cluster
            .iter()
            .map(|&x| optimal_connection(instance, &global.centers[j], x))
            .sum();
        report.push(BoundCheck::evaluate(
            format!("centroid_set[{j}]"),
            best,
            (1.0 + epsilon_hat) * optimal,
        ));
    }
    Ok(report)
}

/// [`check_centroid_set`] against the instance's own candidate set.
pub fn check_optimal_cluster_candidates(
    instance: &Instance,
    global: &OracleResult,
) -> Result<BoundReport> {
    let set = instance
        .candidate_set()
        .ok_or(Error::CoordinatesRequired("centroid set check"))?;
    check_centroid_set(instance, global, &set.candidates, set.epsilon_hat)
}

/// Reassigning every point kept by both solutions to the captor of its
/// adapted cluster's centroid costs at most
/// `Σ(2·cost*_c + cost_c) + 2·√(Σ cost*_c)·√(Σ cost_c)`.
pub fn check_capture_reassignment(
    instance: &Instance,
    local: &Solution,
    global: &OracleResult,
    adapted: &AdaptedClustering,
) -> BoundReport {
    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        ..ReportParams::default()
    });
    if instance.metric() != Metric::Means {
        report.push(BoundCheck::not_applicable(
            "capture_reassignment",
            "stated for the means variants",
        ));
        return report;
    }
    let view = PairView::new(instance, local, global);
    let mut lhs = 0.0;
    let mut opt_sum = 0.0;
    let mut local_sum = 0.0;
    for x in 0..instance.n() {
        let (Some(_), Some(j)) = (view.local_owner[x], view.opt_owner[x]) else {
            continue;
        };
        let captor = adapted.clusters[j]
            .image
            .expect("kept point makes the cluster nonempty");
        lhs += instance.connection(captor, x);
        opt_sum += view.opt_cost[x];
        local_sum += view.local_cost[x];
    }
    let rhs = 2.0 * opt_sum + local_sum + 2.0 * opt_sum.sqrt() * local_sum.sqrt();
    report.push(BoundCheck::evaluate("capture_reassignment", lhs, rhs));
    report
}

/// The per-pair swap inequalities.
///
/// For each capture pair with `|S_l| = |S*_l| ≤ ρ` the multi-swap inequality
/// is evaluated, and for every `s ∈ S_l` other than the captor and every
/// `s* ∈ S*_l` the single-swap inequality. The left-hand side is
/// `−(1 − f)·cost(S, P)` where `f` is the acceptance factor of the run (zero
/// for exact local optima). Pairs whose swap would reopen a local center are
/// skipped and reported.
pub fn check_swap_inequalities(
    instance: &Instance,
    local: &Solution,
    global: &OracleResult,
    adapted: &AdaptedClustering,
    params: &SearchParams,
) -> BoundReport {
    let eps_hat = match instance.metric() {
        Metric::Median => 0.0,
        Metric::Means => instance.candidate_set().map_or(0.0, |c| c.epsilon_hat),
    };
    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        rho: Some(params.rho),
        eps: params.eps,
        q: params.q,
        epsilon_hat: (instance.metric() == Metric::Means).then_some(eps_hat),
        ..ReportParams::default()
    });
    let view = PairView::new(instance, local, global);
    let lhs = -(1.0 - params.factor()) * local.total();
    let terms = Terms {
        instance,
        view: &view,
        adapted,
        factor: 1.0 + eps_hat,
        outliers: instance.objective() == Objective::Outlier,
    };

    for (l, pair) in adapted.pairs.iter().enumerate() {
        if pair.local.len() != pair.optimal.len() {
            report.push(BoundCheck::skipped(
                format!("multi_swap[{l}]"),
                "pair sizes differ",
            ));
            continue;
        }
        let reopened: Vec<usize> = pair
            .optimal
            .iter()
            .map(|&j| adapted.clusters[j].replacement)
            .filter(|r| local.centers.binary_search(r).is_ok())
            .collect();
        if !reopened.is_empty() {
            report.push(BoundCheck::skipped(
                format!("multi_swap[{l}]"),
                format!("replacement centers {reopened:?} are already open"),
            ));
            continue;
        }
        if pair.local.len() <= params.rho {
            let rhs = terms.local_side(&pair.local) + terms.optimal_side(&pair.optimal);
            report.push(BoundCheck::evaluate(format!("multi_swap[{l}]"), lhs, rhs));
        } else {
            report.push(BoundCheck::not_applicable(
                format!("multi_swap[{l}]"),
                format!("pair size {} exceeds rho", pair.local.len()),
            ));
        }
        for &s in pair.local.iter().filter(|&&s| Some(s) != pair.captor) {
            for &j in &pair.optimal {
                let rhs = terms.local_side(&[s]) + terms.optimal_side(&[j]);
                report.push(BoundCheck::evaluate(
                    format!("single_swap[{l}:{s},{j}]"),
                    lhs,
                    rhs,
                ));
            }
        }
    }
    report
}

struct Terms<'a> {
    instance: &'a Instance,
    view: &'a PairView,
    adapted: &'a AdaptedClustering,
    /// `1 + ε̂` (1 for median).
    factor: f64,
    outliers: bool,
}

impl Terms<'_> {
    /// Terms over the local clusters `N(s)`, `s ∈ local`.
    fn local_side(&self, local: &[usize]) -> f64 {
        let v = self.view;
        let mut sum = 0.0;
        for x in 0..v.local_owner.len() {
            let Some(s) = v.local_owner[x] else { continue };
            if !local.contains(&s) {
                continue;
            }
            match v.opt_owner[x] {
                None => {
                    if !self.outliers {
                        sum += v.penalty[x] - v.local_cost[x];
                    }
                }
                Some(j) => {
                    let captor = self.adapted.clusters[j].image.expect("kept point");
                    sum += self.instance.connection(captor, x) - v.local_cost[x];
                }
            }
        }
        sum
    }

    /// Terms over the optimal clusters `N*(s*)`, `s* ∈ optimal`.
    fn optimal_side(&self, optimal: &[usize]) -> f64 {
        let v = self.view;
        let mut sum = 0.0;
        for x in 0..v.opt_owner.len() {
            let Some(j) = v.opt_owner[x] else { continue };
            if !optimal.contains(&j) {
                continue;
            }
            let scaled = self.factor * v.opt_cost[x];
            sum += match v.local_owner[x] {
                Some(_) => scaled - v.local_cost[x],
                None if self.outliers => scaled,
                None => scaled - v.penalty[x],
            };
        }
        sum
    }
}

/// Termination conditions of the outlier search at `(S, P)`: neither adding
/// `outlier(S, P)` nor any swap with `|A| = |B| ≤ ρ` reaches `(1 − ε/q)·cost`.
pub fn check_termination(
    instance: &Instance,
    local: &Solution,
    params: &SearchParams,
) -> Result<BoundReport> {
    let (Some(eps), Some(q)) = (params.eps, params.q) else {
        return Err(Error::InvalidParameter(
            "termination conditions need a threshold run".into(),
        ));
    };
    let state = OutlierSearchState::from_parts(instance, &local.centers, &local.removed)?;
    let target = (1.0 - eps / q) * state.cost();
    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        rho: Some(params.rho),
        eps: Some(eps),
        q: Some(q),
        ..ReportParams::default()
    });
    let (added, _) = add_outliers_cost(&state, instance)?;
    report.push(BoundCheck::evaluate(
        "termination_add_outliers",
        target,
        added.total,
    ));
    if instance.m() > instance.k() {
        let best = best_swap_with_outliers(&state, instance, params.rho)?;
        report.push(
            BoundCheck::evaluate("termination_swap", target, best.breakdown.total)
                .with_note(format!("best move {:?} -> {:?}", best.mv.drop, best.mv.add)),
        );
    } else {
        report.push(BoundCheck::not_applicable(
            "termination_swap",
            "no candidate outside S",
        ));
    }
    Ok(report)
}
