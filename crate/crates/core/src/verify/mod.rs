//! Checks the approximation guarantees on concrete solution pairs.
//!
//! Every check compares a left-hand side against a right-hand side and passes
//! when `lhs ≤ rhs + 1e-9·max(1, rhs)`. Checks whose premises do not hold are
//! reported as not applicable, and degenerate inputs are reported as skipped;
//! neither counts as a pass.

mod adapted;
mod inequalities;
mod ratios;

use serde::Serialize;

pub use adapted::{build_adapted_clustering, AdaptedCluster, AdaptedClustering, CapturePair};
pub use inequalities::{
    check_capture_reassignment, check_centroid_set, check_optimal_cluster_candidates,
    check_swap_inequalities, check_termination,
};
pub use ratios::{beta_multi_swap, beta_single_swap, check_complexity_bounds, check_ratio_bounds};

use crate::cost::Solution;
use crate::instance::Instance;
use crate::oracle::{CenterLocation, OracleResult};

/// Relative slack of every check.
pub const CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A premise of the inequality does not hold for these parameters.
    NotApplicable,
    /// The pair is degenerate for this inequality and was not evaluated.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCheck {
    pub fn evaluate(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ok = lhs <= rhs + CHECK_TOLERANCE * rhs.max(1.0);
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            status: if ok { Status::Pass } else { Status::Fail },
            note: None,
        }
    }

    pub fn not_applicable(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self::unevaluated(name, Status::NotApplicable, note)
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self::unevaluated(name, Status::Skipped, note)
    }

    fn unevaluated(name: impl Into<String>, status: Status, note: impl Into<String>) -> Self {
        BoundCheck {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            status,
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Parameters the checks were evaluated with.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportParams {
    pub k: usize,
    pub rho: Option<usize>,
    pub eps: Option<f64>,
    pub q: Option<f64>,
    pub epsilon_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: ReportParams,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn new(params: ReportParams) -> Self {
        BoundReport {
            params,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: BoundCheck) {
        self.checks.push(check);
    }

    /// Appends the checks of `other`, keeping these parameters.
    pub fn extend(&mut self, other: BoundReport) {
        self.checks.extend(other.checks);
    }

    /// No evaluated check failed.
    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    /// Checks that were actually evaluated.
    pub fn evaluated(&self) -> usize {
        self.count(Status::Pass) + self.count(Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Per-point view of a (local, optimal) pair.
pub(crate) struct PairView {
    /// Local center of each kept point; `None` when the point is in `P`.
    pub local_owner: Vec<Option<usize>>,
    pub local_cost: Vec<f64>,
    /// Position of the optimal center of each point; `None` when in `P*`.
    pub opt_owner: Vec<Option<usize>>,
    pub opt_cost: Vec<f64>,
    /// Penalties, or zeros for outlier variants.
    pub penalty: Vec<f64>,
}

impl PairView {
    pub fn new(instance: &Instance, local: &Solution, global: &OracleResult) -> Self {
        let n = instance.n();
        let mut local_cost = vec![0.0; n];
        for (x, owner) in local.assignment.iter().enumerate() {
            if let Some(c) = owner {
                local_cost[x] = instance.connection(*c, x);
            }
        }
        let mut opt_cost = vec![0.0; n];
        for (x, owner) in global.assignment.iter().enumerate() {
            if let Some(j) = owner {
                opt_cost[x] = optimal_connection(instance, &global.centers[*j], x);
            }
        }
        PairView {
            local_owner: local.assignment.clone(),
            local_cost,
            opt_owner: global.assignment.clone(),
            opt_cost,
            penalty: instance
                .penalties()
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; n]),
        }
    }
}

/// Connection cost between an oracle center and point `x`.
pub(crate) fn optimal_connection(instance: &Instance, center: &CenterLocation, x: usize) -> f64 {
    match center {
        CenterLocation::Candidate(c) => instance.connection(*c, x),
        CenterLocation::Coordinates(v) => {
            let points = instance
                .points()
                .expect("coordinate centers need coordinate points");
            crate::instance::connection_cost(v, &points[x], instance.metric())
        }
    }
}
