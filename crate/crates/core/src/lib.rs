//! Local search and exact solvers for k-median and k-means with penalties or
//! outliers.
//!
//! The four problems share one cost model: every kept point pays its
//! connection cost to the nearest open center (`d` for median, `d²` for
//! means) and removed points either pay a per-point penalty or are free
//! outliers. [`penalty_search`] and [`outlier_search`] implement the
//! multi-swap local searches, [`oracle`] computes exact optima of tiny
//! instances, and [`verify`] evaluates the approximation guarantees on
//! concrete pairs of solutions.

pub mod candidates;
pub mod centroid;
pub mod cost;
pub mod error;
pub mod harness;
pub mod instance;
pub mod io;
pub mod neighborhood;
pub mod oracle;
pub mod outlier_search;
pub mod penalty_search;
pub mod trace;
pub mod verify;

pub use cost::{CostBreakdown, Solution};
pub use error::{Error, Result};
pub use instance::{Instance, Metric, Objective, Problem, Removal};
