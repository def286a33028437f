//! Synthetic instance generation and parameter sweeps against the oracles.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Metric, Objective, Problem};
use crate::io::{write_json, CentroidSpec, InstanceFile, PointList};
use crate::oracle::{opt_discrete, opt_means_continuous, OracleResult};
use crate::outlier_search::{default_q, ls_multi_swap_outlier};
use crate::penalty_search::{ls_multi_swap, StopRule};
use crate::trace::{SearchTrace, StopReason};
use crate::verify::{check_complexity_bounds, check_ratio_bounds, BoundCheck, Status};

/// Version of the sweep CSV layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Shape of the generated point clouds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Number of Gaussian blobs.
    pub clusters: usize,
    pub dimension: usize,
    /// Standard deviation of each blob.
    pub spread: f64,
    /// Blob centers are uniform in `[0, box_size]^d`.
    pub box_size: f64,
    /// Fraction of points drawn uniformly from a box around the blobs.
    pub contamination: f64,
    /// Penalties are uniform on `[0, penalty_scale · Δ-diameter]`.
    pub penalty_scale: f64,
    /// Median only: number of facilities, each a convex combination of two
    /// data points. `None` uses the data points.
    pub facilities: Option<[usize; 2]>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            clusters: 3,
            dimension: 2,
            spread: 1.0,
            box_size: 20.0,
            contamination: 0.0,
            penalty_scale: 1.0,
            facilities: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub generator: GeneratorSpec,
    pub instances: usize,
    /// Inclusive ranges.
    pub n: [usize; 2],
    pub k: [usize; 2],
    /// Outlier budget range; clamped below `n`.
    pub z: [usize; 2],
    pub rho: Vec<usize>,
    /// Thresholds. Outlier searches run once per value; penalty searches run
    /// in threshold mode once per value.
    pub eps: Vec<f64>,
    /// Threshold divisor. `None` picks `k` for penalty searches and `k + 1`
    /// or `k² − k + 1` for outlier searches.
    pub q: Option<f64>,
    /// Penalty searches also run in exact mode.
    pub exact: bool,
    pub centroid_set: CentroidSpec,
    /// Seed of the instance generator.
    pub seed: u64,
    /// Seed of the initial center sample; `None` starts from the first `k`.
    pub search_seed: Option<u64>,
    pub oracle: bool,
    pub output_dir: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: Problem::MedianOutlier,
            generator: GeneratorSpec::default(),
            instances: 10,
            n: [8, 10],
            k: [2, 3],
            z: [1, 2],
            rho: vec![1],
            eps: vec![0.05],
            q: None,
            exact: true,
            centroid_set: CentroidSpec::Data,
            seed: 0,
            search_seed: None,
            oracle: true,
            output_dir: None,
            report: None,
        }
    }
}

fn check_range(name: &str, r: [usize; 2], min: usize) -> Result<()> {
    if r[0] < min || r[0] > r[1] {
        return Err(Error::InvalidParameter(format!(
            "{name} range [{}, {}] must satisfy {min} <= min <= max",
            r[0], r[1]
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.generator;
        check_range("n", self.n, 1)?;
        check_range("k", self.k, 1)?;
        check_range("z", self.z, 0)?;
        if let Some(f) = g.facilities {
            check_range("facilities", f, 1)?;
        }
        if g.clusters == 0 || g.dimension == 0 {
            return Err(Error::InvalidParameter(
                "clusters and dimension must be positive".into(),
            ));
        }
        if !(g.spread >= 0.0 && g.spread.is_finite())
            || !(g.box_size > 0.0 && g.box_size.is_finite())
        {
            return Err(Error::InvalidParameter(
                "spread must be nonnegative and box_size positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&g.contamination) {
            return Err(Error::InvalidParameter(format!(
                "contamination {} must lie in [0, 1)",
                g.contamination
            )));
        }
        if !(g.penalty_scale >= 0.0 && g.penalty_scale.is_finite()) {
            return Err(Error::InvalidParameter(
                "penalty_scale must be nonnegative".into(),
            ));
        }
        if self.rho.is_empty() || self.rho.contains(&0) {
            return Err(Error::InvalidParameter(
                "rho values must be positive".into(),
            ));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "eps {e} must lie in (0, 1)"
            )));
        }
        if self.problem.objective() == Objective::Outlier && self.eps.is_empty() {
            return Err(Error::InvalidParameter(
                "outlier sweeps need at least one eps".into(),
            ));
        }
        if let Some(q) = self.q {
            if self.eps.iter().any(|&e| !(q > e)) {
                return Err(Error::InvalidParameter(format!(
                    "q = {q} must exceed every eps"
                )));
            }
        }
        Ok(())
    }
}

/// Instance `index` of the configuration; depends only on `(seed, index)`.
pub fn generate_one(config: &ExperimentConfig, index: usize) -> Result<InstanceFile> {
    let g = &config.generator;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let n = rng.random_range(config.n[0]..=config.n[1]);
    let contaminated = (g.contamination * n as f64).round() as usize;
    let blob = Normal::new(0.0, g.spread).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let centers: Vec<Vec<f64>> = (0..g.clusters)
        .map(|_| {
            (0..g.dimension)
                .map(|_| rng.random_range(0.0..g.box_size))
                .collect()
        })
        .collect();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n - contaminated {
        let c = centers.choose(&mut rng).expect("at least one cluster");
        points.push(c.iter().map(|v| v + blob.sample(&mut rng)).collect());
    }
    let (lo, hi) = (-0.5 * g.box_size, 1.5 * g.box_size);
    for _ in 0..contaminated {
        points.push((0..g.dimension).map(|_| rng.random_range(lo..hi)).collect());
    }

    let metric = config.problem.metric();
    let mut k = rng.random_range(config.k[0]..=config.k[1]);
    let facilities = match (metric, g.facilities) {
        (Metric::Median, Some(range)) => {
            let m = rng.random_range(range[0]..=range[1]).max(k);
            let f: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let a = &points[rng.random_range(0..n)];
                    let b = &points[rng.random_range(0..n)];
                    let t: f64 = rng.random();
                    a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect()
                })
                .collect();
            Some(f)
        }
        _ => None,
    };
    k = k.min(facilities.as_ref().map_or(n, Vec::len));

    let (penalties, z) = match config.problem.objective() {
        Objective::Penalty => {
            let top = g.penalty_scale * connection_diameter(&points, metric);
            let p = (0..n)
                .map(|_| {
                    if top > 0.0 {
                        rng.random_range(0.0..top)
                    } else {
                        0.0
                    }
                })
                .collect();
            (Some(p), None)
        }
        Objective::Outlier => {
            let z = rng.random_range(config.z[0]..=config.z[1]).min(n - 1);
            (None, Some(z))
        }
    };
    Ok(InstanceFile {
        problem: config.problem,
        points: Some(PointList::Coordinates(points)),
        facilities: facilities.map(PointList::Coordinates),
        distance_matrix: None,
        penalties,
        k,
        z,
        candidates: None,
        epsilon_hat: None,
        meta: Some(serde_json::json!({ "seed": config.seed, "index": index })),
    })
}

fn connection_diameter(points: &[Vec<f64>], metric: Metric) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(crate::instance::connection_cost(a, b, metric));
        }
    }
    best
}

pub fn generate(config: &ExperimentConfig) -> Result<Vec<InstanceFile>> {
    config.validate()?;
    (0..config.instances)
        .map(|i| generate_one(config, i))
        .collect()
}

/// File name of instance `index` inside an output directory.
pub fn instance_file_name(index: usize) -> String {
    format!("instance_{index:04}.json")
}

pub fn write_instances(dir: &Path, instances: &[InstanceFile]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let path = dir.join(instance_file_name(i));
            write_json(&path, inst)?;
            Ok(path)
        })
        .collect()
}

/// One CSV row: a search run on one instance, or a summary over a check.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub instance: String,
    pub problem: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub z: Option<usize>,
    pub algorithm: String,
    pub rho: Option<usize>,
    pub eps: Option<f64>,
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub cost_c: Option<f64>,
    pub cost_p: Option<f64>,
    pub cost: Option<f64>,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    /// Approximation bound matching the run.
    pub check: Option<String>,
    pub check_rhs: Option<f64>,
    /// `cost / check_rhs`; at most 1 when the bound holds.
    pub bound_usage: Option<f64>,
    pub check_status: Option<String>,
    /// Worst status of the iteration and removed-set bounds.
    pub complexity_status: Option<String>,
    pub removed: Option<usize>,
    pub blowup: Option<f64>,
    pub iterations: Option<usize>,
    pub stop_reason: Option<String>,
    pub wall_ms: Option<f64>,
    pub status: String,
}

pub const SWEEP_COLUMNS: [&str; 27] = [
    "schema_version",
    "instance",
    "problem",
    "n",
    "k",
    "z",
    "algorithm",
    "rho",
    "eps",
    "q",
    "seed",
    "cost_c",
    "cost_p",
    "cost",
    "opt",
    "ratio",
    "check",
    "check_rhs",
    "bound_usage",
    "check_status",
    "complexity_status",
    "removed",
    "blowup",
    "iterations",
    "stop_reason",
    "wall_ms",
    "status",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    /// In instance order, then `rho`, then stop rule.
    pub rows: Vec<SweepRow>,
    /// One row per check: the largest ratio and bound usage observed.
    pub summary: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(SWEEP_COLUMNS).map_err(io)?;
        for row in self.rows.iter().chain(&self.summary) {
            w.serialize(row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// No evaluated approximation or complexity bound failed.
    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| {
            r.check_status.as_deref() != Some("fail")
                && r.complexity_status.as_deref() != Some("fail")
        })
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::NotApplicable => "not_applicable",
        Status::Skipped => "skipped",
    }
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::NoImprovingMove => "no_improving_move",
        StopReason::Threshold => "threshold",
        StopReason::IterationCap => "iteration_cap",
        StopReason::ZeroCost => "zero_cost",
    }
}

/// Worst status among evaluated checks: fail, then pass, then not applicable.
fn worst(checks: &[BoundCheck]) -> Option<Status> {
    let has = |s| checks.iter().any(|c| c.status == s);
    [
        Status::Fail,
        Status::Pass,
        Status::NotApplicable,
        Status::Skipped,
    ]
    .into_iter()
    .find(|&s| has(s))
}

fn oracle_for(instance: &Instance) -> Result<OracleResult> {
    match instance.metric() {
        Metric::Median => opt_discrete(instance),
        Metric::Means => opt_means_continuous(instance),
    }
}

struct Run {
    algorithm: &'static str,
    rho: usize,
    eps: Option<f64>,
    q: Option<f64>,
    result: Result<SearchTrace>,
    wall_ms: f64,
}

fn runs(config: &ExperimentConfig, instance: &Instance) -> Vec<Run> {
    let k = instance.k();
    let seed = config.search_seed;
    let mut out = Vec::new();
    for &rho in &config.rho {
        let mut timed = |algorithm, eps, q, f: &dyn Fn() -> Result<SearchTrace>| {
            let start = Instant::now();
            let result = f();
            out.push(Run {
                algorithm,
                rho,
                eps,
                q,
                result,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        };
        match instance.objective() {
            Objective::Penalty => {
                if config.exact {
                    timed("multi_swap", None, None, &|| {
                        ls_multi_swap(instance, rho, StopRule::Exact, seed)
                    });
                }
                for &eps in &config.eps {
                    let q = config.q.unwrap_or(k as f64);
                    timed("multi_swap", Some(eps), Some(q), &|| {
                        ls_multi_swap(instance, rho, StopRule::Threshold { eps, q }, seed)
                    });
                }
            }
            Objective::Outlier => {
                for &eps in &config.eps {
                    let q = config.q.unwrap_or_else(|| default_q(k, rho));
                    timed("multi_swap_outlier", Some(eps), Some(q), &|| {
                        ls_multi_swap_outlier(instance, rho, eps, Some(q), seed)
                    });
                }
            }
        }
    }
    out
}

fn instance_rows(config: &ExperimentConfig, name: &str, file: &InstanceFile) -> Vec<SweepRow> {
    let base = SweepRow {
        schema_version: SCHEMA_VERSION,
        instance: name.to_string(),
        problem: file.problem.name().to_string(),
        seed: config.search_seed,
        ..SweepRow::default()
    };
    let spec = (file.problem.metric() == Metric::Means).then_some(config.centroid_set);
    let instance = match file.to_instance(spec) {
        Ok(i) => i,
        Err(e) => {
            return vec![SweepRow {
                status: format!("error: {e}"),
                ..base
            }]
        }
    };
    let base = SweepRow {
        n: Some(instance.n()),
        k: Some(instance.k()),
        z: (instance.objective() == Objective::Outlier).then(|| instance.z()),
        ..base
    };
    let (oracle, oracle_note) = if config.oracle {
        match oracle_for(&instance) {
            Ok(o) => (Some(o), None),
            Err(Error::TooLarge(msg)) => (None, Some(format!("oracle_refused: {msg}"))),
            Err(e) => (None, Some(format!("oracle_error: {e}"))),
        }
    } else {
        (None, None)
    };

    runs(config, &instance)
        .into_iter()
        .map(|run| {
            let mut row = SweepRow {
                algorithm: run.algorithm.to_string(),
                rho: Some(run.rho),
                eps: run.eps,
                q: run.q,
                wall_ms: Some(run.wall_ms),
                ..base.clone()
            };
            let trace = match run.result {
                Ok(t) => t,
                Err(e) => {
                    row.status = format!("error: {e}");
                    return row;
                }
            };
            let sol = &trace.final_solution;
            row.cost_c = Some(sol.breakdown.cost_c);
            row.cost_p = Some(sol.breakdown.cost_p);
            row.cost = Some(sol.total());
            row.removed = Some(sol.removed.len());
            row.iterations = Some(trace.iterations);
            row.stop_reason = Some(stop_name(trace.stop_reason).to_string());
            if instance.objective() == Objective::Outlier {
                let z = instance.z();
                row.blowup = (z > 0).then(|| sol.removed.len() as f64 / z as f64);
                let c = check_complexity_bounds(&trace.summary(), &instance);
                row.complexity_status = worst(&c.checks).map(|s| status_name(s).to_string());
            }
            if let Some(opt) = &oracle {
                row.opt = Some(opt.total());
                row.ratio = Some(ratio(sol.total(), opt.total()));
                let report = check_ratio_bounds(&instance, sol, opt, &trace.params);
                let name = match (instance.objective(), run.rho) {
                    (Objective::Penalty, _) => "penalty_ratio",
                    (Objective::Outlier, 1) => "outlier_ratio_single_swap",
                    (Objective::Outlier, _) => "outlier_ratio_multi_swap",
                };
                if let Some(c) = report.get(name) {
                    row.check = Some(name.to_string());
                    row.check_status = Some(status_name(c.status).to_string());
                    if c.status != Status::NotApplicable {
                        row.check_rhs = Some(c.rhs);
                        row.bound_usage = Some(ratio(c.lhs, c.rhs));
                    }
                }
            }
            row.status = oracle_note.clone().unwrap_or_else(|| "ok".to_string());
            row
        })
        .collect()
}

/// `a / b`, with `0 / 0 = 1`.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

fn summarize(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut names: Vec<&str> = rows.iter().filter_map(|r| r.check.as_deref()).collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.check.as_deref() == Some(name))
                .collect();
            let max = |f: fn(&SweepRow) -> Option<f64>| {
                mine.iter()
                    .filter_map(|r| f(r))
                    .fold(None, |acc: Option<f64>, v| {
                        Some(acc.map_or(v, |a| a.max(v)))
                    })
            };
            let failed = mine
                .iter()
                .any(|r| r.check_status.as_deref() == Some("fail"));
            SweepRow {
                schema_version: SCHEMA_VERSION,
                instance: "summary".to_string(),
                problem: mine[0].problem.clone(),
                check: Some(name.to_string()),
                ratio: max(|r| r.ratio),
                bound_usage: max(|r| r.bound_usage),
                check_status: Some(if failed { "fail" } else { "pass" }.to_string()),
                status: format!("{} rows", mine.len()),
                ..SweepRow::default()
            }
        })
        .collect()
}

/// Runs every parameter combination on every named instance. Instances run
/// in parallel; rows keep the input order.
pub fn sweep(
    config: &ExperimentConfig,
    instances: &[(String, InstanceFile)],
) -> Result<SweepReport> {
    config.validate()?;
    let rows: Vec<SweepRow> = instances
        .par_iter()
        .map(|(name, file)| instance_rows(config, name, file))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&rows);
    Ok(SweepReport { rows, summary })
}
