//! Search traces shared by both local searches.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::Solution;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Multi-swap local search for the penalty variants.
    MultiSwap,
    /// Outlier-based multi-swap local search.
    MultiSwapOutlier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No move improves the cost at all (exact mode).
    NoImprovingMove,
    /// No step improves the cost by the required factor.
    Threshold,
    IterationCap,
    /// The cost reached zero; a multiplicative threshold cannot be met.
    ZeroCost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Swap,
    AddOutliers,
}

/// One accepted step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub step: StepKind,
    pub drop: Vec<usize>,
    pub add: Vec<usize>,
    pub cost_before: f64,
    pub cost_after: f64,
    /// Size of the removed set after the step.
    pub removed: usize,
}

/// Parameters a search ran with, recorded for reproduction and verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub algorithm: Algorithm,
    pub rho: usize,
    /// `None` for exact improvement; otherwise the threshold `ε`.
    pub eps: Option<f64>,
    /// Threshold divisor `q` (or `q′` for the penalty search).
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub max_iterations: usize,
}

impl SearchParams {
    /// Acceptance factor `1 − ε/q`, or 1 for exact improvement.
    pub fn factor(&self) -> f64 {
        match (self.eps, self.q) {
            (Some(eps), Some(q)) => 1.0 - eps / q,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub params: SearchParams,
    pub initial: Solution,
    pub rows: Vec<TraceRow>,
    pub final_solution: Solution,
    pub stop_reason: StopReason,
    /// Main-loop iterations executed.
    pub iterations: usize,
    /// Factor that lifts the smallest nonzero connection cost to at least 1.
    pub scale: f64,
}

/// What the complexity bounds need from a finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: SearchParams,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub initial_total: f64,
    /// Size of the final removed set.
    pub removed: usize,
    pub scale: f64,
}

pub const TRACE_HEADER: &str = "iteration,step,drop,add,cost_before,cost_after,removed";

impl SearchTrace {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            params: self.params.clone(),
            stop_reason: self.stop_reason,
            iterations: self.iterations,
            initial_total: self.initial.total(),
            removed: self.final_solution.removed.len(),
            scale: self.scale,
        }
    }

    /// Writes accepted steps as CSV; index lists are space separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for row in &self.rows {
            let step = match row.step {
                StepKind::Swap => "swap",
                StepKind::AddOutliers => "add_outliers",
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.iteration,
                step,
                join(&row.drop),
                join(&row.add),
                row.cost_before,
                row.cost_after,
                row.removed
            )?;
        }
        Ok(())
    }
}

fn join(ids: &[usize]) -> String {
    ids.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}
