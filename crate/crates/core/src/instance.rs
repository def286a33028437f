//! Problem instances and the connection-cost model.
//!
//! An [`Instance`] owns the data points `X`, the finite candidate center set
//! `C` and a precomputed candidate-by-point table of connection costs. For the
//! median variants the connection cost is the distance `d`, for the means
//! variants it is `d²`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};

/// Relative slack allowed when validating the triangle inequality of an
/// explicit distance matrix.
const TRIANGLE_TOLERANCE: f64 = 1e-9;

/// Above this many rows the triangle inequality is sampled instead of checked
/// on every triple.
const EXHAUSTIVE_TRIANGLE_ROWS: usize = 64;
const SAMPLED_TRIANGLE_TRIPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Connection cost is the distance.
    Median,
    /// Connection cost is the squared Euclidean distance.
    Means,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Penalty,
    Outlier,
}

/// The four robust clustering problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Problem {
    #[serde(rename = "medp")]
    MedianPenalty,
    #[serde(rename = "meap")]
    MeansPenalty,
    #[serde(rename = "medo")]
    MedianOutlier,
    #[serde(rename = "meao")]
    MeansOutlier,
}

impl Problem {
    pub fn new(metric: Metric, objective: Objective) -> Self {
        match (metric, objective) {
            (Metric::Median, Objective::Penalty) => Problem::MedianPenalty,
            (Metric::Means, Objective::Penalty) => Problem::MeansPenalty,
            (Metric::Median, Objective::Outlier) => Problem::MedianOutlier,
            (Metric::Means, Objective::Outlier) => Problem::MeansOutlier,
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Problem::MedianPenalty | Problem::MedianOutlier => Metric::Median,
            Problem::MeansPenalty | Problem::MeansOutlier => Metric::Means,
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            Problem::MedianPenalty | Problem::MeansPenalty => Objective::Penalty,
            Problem::MedianOutlier | Problem::MeansOutlier => Objective::Outlier,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::MedianPenalty => "medp",
            Problem::MeansPenalty => "meap",
            Problem::MedianOutlier => "medo",
            Problem::MeansOutlier => "meao",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "medp" => Ok(Problem::MedianPenalty),
            "meap" => Ok(Problem::MeansPenalty),
            "medo" => Ok(Problem::MedianOutlier),
            "meao" => Ok(Problem::MeansOutlier),
            other => Err(Error::InvalidParameter(format!(
                "unknown problem `{other}`"
            ))),
        }
    }
}

/// How points may leave the clustering: by paying a per-point penalty, or as
/// one of at most `z` free outliers.
#[derive(Clone, Debug, PartialEq)]
pub enum Removal {
    Penalties(Vec<f64>),
    Outliers(usize),
}

/// A location that the instance knows how to measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Point(usize),
    Candidate(usize),
}

#[derive(Clone, Debug)]
enum Geometry {
    Euclidean {
        points: Vec<Vec<f64>>,
        candidates: Vec<Vec<f64>>,
    },
    /// Full symmetric matrix over `X ∪ F`; point `i` is row `i`, candidate `c`
    /// is row `candidate_rows[c]`.
    Matrix {
        points: usize,
        rows: usize,
        dist: Vec<f64>,
        candidate_rows: Vec<usize>,
    },
}

/// An immutable problem instance.
#[derive(Clone, Debug)]
pub struct Instance {
    problem: Problem,
    geometry: Geometry,
    removal: Removal,
    k: usize,
    n: usize,
    m: usize,
    diameter: f64,
    /// `conn[c * n + x]` is the connection cost between candidate `c` and point `x`.
    conn: Vec<f64>,
    candidate_set: Option<CandidateSet>,
}

impl Instance {
    /// A median-variant instance with Euclidean coordinates for points and facilities.
    pub fn median(
        points: Vec<Vec<f64>>,
        facilities: Vec<Vec<f64>>,
        k: usize,
        removal: Removal,
    ) -> Result<Self> {
        check_coordinates(&points, "points")?;
        check_coordinates(&facilities, "facilities")?;
        if !points.is_empty() && !facilities.is_empty() && points[0].len() != facilities[0].len() {
            return Err(Error::InvalidInstance(
                "points and facilities have different dimensions".into(),
            ));
        }
        Self::build(
            Problem::new(Metric::Median, objective_of(&removal)),
            Geometry::Euclidean {
                points,
                candidates: facilities,
            },
            k,
            removal,
            None,
        )
    }

    /// A median-variant instance backed by an explicit distance matrix.
    ///
    /// The matrix covers `X ∪ F`: rows `0..n` are the points and the remaining
    /// rows are the facilities. A plain `n × n` matrix means `F = X`.
    pub fn median_matrix(
        n: usize,
        matrix: Vec<Vec<f64>>,
        k: usize,
        removal: Removal,
    ) -> Result<Self> {
        let rows = matrix.len();
        if rows < n {
            return Err(Error::InvalidInstance(format!(
                "distance matrix has {rows} rows but there are {n} points"
            )));
        }
        let mut dist = Vec::with_capacity(rows * rows);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != rows {
                return Err(Error::InvalidInstance(format!(
                    "distance matrix row {i} has {} entries, expected {rows}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        validate_metric(rows, &dist)?;
        let candidate_rows = if rows == n {
            (0..n).collect()
        } else {
            (n..rows).collect()
        };
        Self::build(
            Problem::new(Metric::Median, objective_of(&removal)),
            Geometry::Matrix {
                points: n,
                rows,
                dist,
                candidate_rows,
            },
            k,
            removal,
            None,
        )
    }

    /// A means-variant instance searching over a finite candidate set `C′`.
    pub fn means(
        points: Vec<Vec<f64>>,
        candidates: CandidateSet,
        k: usize,
        removal: Removal,
    ) -> Result<Self> {
        check_coordinates(&points, "points")?;
        check_coordinates(&candidates.candidates, "candidates")?;
        if !points.is_empty()
            && !candidates.candidates.is_empty()
            && points[0].len() != candidates.candidates[0].len()
        {
            return Err(Error::InvalidInstance(
                "points and candidates have different dimensions".into(),
            ));
        }
        let geometry = Geometry::Euclidean {
            points,
            candidates: candidates.candidates.clone(),
        };
        Self::build(
            Problem::new(Metric::Means, objective_of(&removal)),
            geometry,
            k,
            removal,
            Some(candidates),
        )
    }

    fn build(
        problem: Problem,
        geometry: Geometry,
        k: usize,
        removal: Removal,
        candidate_set: Option<CandidateSet>,
    ) -> Result<Self> {
        let (n, m) = match &geometry {
            Geometry::Euclidean { points, candidates } => (points.len(), candidates.len()),
            Geometry::Matrix {
                points,
                candidate_rows,
                ..
            } => (*points, candidate_rows.len()),
        };
        if n == 0 {
            return Err(Error::InvalidInstance("no data points".into()));
        }
        if m == 0 {
            return Err(Error::InvalidInstance("no candidate centers".into()));
        }
        if k == 0 {
            return Err(Error::InvalidInstance("k must be positive".into()));
        }
        if k > m {
            return Err(Error::InfeasibleK { k, available: m });
        }
        match &removal {
            Removal::Penalties(p) => {
                if p.len() != n {
                    return Err(Error::InvalidInstance(format!(
                        "{} penalties for {n} points",
                        p.len()
                    )));
                }
                if let Some(bad) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidInstance(format!(
                        "penalty {bad} is not a nonnegative finite number"
                    )));
                }
            }
            Removal::Outliers(z) => {
                if *z >= n {
                    return Err(Error::InvalidInstance(format!(
                        "outlier budget z = {z} must be below n = {n}"
                    )));
                }
            }
        }
        let mut instance = Instance {
            problem,
            geometry,
            removal,
            k,
            n,
            m,
            diameter: 0.0,
            conn: Vec::new(),
            candidate_set,
        };
        let mut conn = Vec::with_capacity(m * n);
        for c in 0..m {
            for x in 0..n {
                let d = instance.raw_distance(Site::Candidate(c), Site::Point(x));
                conn.push(match problem.metric() {
                    Metric::Median => d,
                    Metric::Means => instance.raw_squared(Site::Candidate(c), Site::Point(x)),
                });
            }
        }
        instance.conn = conn;
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(instance.raw_distance(Site::Point(i), Site::Point(j)));
            }
        }
        instance.diameter = diameter;
        Ok(instance)
    }

    /// The same instance with a different center budget.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInstance("k must be positive".into()));
        }
        if k > self.m {
            return Err(Error::InfeasibleK {
                k,
                available: self.m,
            });
        }
        let mut out = self.clone();
        out.k = k;
        Ok(out)
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn metric(&self) -> Metric {
        self.problem.metric()
    }

    pub fn objective(&self) -> Objective {
        self.problem.objective()
    }

    /// Number of data points `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of candidate centers `m = |C|`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Outlier budget; zero for penalty variants.
    pub fn z(&self) -> usize {
        match self.removal {
            Removal::Outliers(z) => z,
            Removal::Penalties(_) => 0,
        }
    }

    pub fn penalties(&self) -> Option<&[f64]> {
        match &self.removal {
            Removal::Penalties(p) => Some(p),
            Removal::Outliers(_) => None,
        }
    }

    pub fn removal(&self) -> &Removal {
        &self.removal
    }

    /// Largest pairwise distance between data points (`δ`).
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Diameter measured in connection-cost units: `δ` or `δ²`.
    pub fn connection_diameter(&self) -> f64 {
        match self.metric() {
            Metric::Median => self.diameter,
            Metric::Means => self.diameter * self.diameter,
        }
    }

    /// `max(1, 1 / smallest nonzero connection cost)`: after multiplying costs
    /// by this factor every nonzero solution cost is at least 1.
    pub fn cost_scale(&self) -> f64 {
        let smallest = self
            .conn
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if smallest.is_finite() && smallest < 1.0 {
            1.0 / smallest
        } else {
            1.0
        }
    }

    pub fn candidate_set(&self) -> Option<&CandidateSet> {
        self.candidate_set.as_ref()
    }

    pub fn has_coordinates(&self) -> bool {
        matches!(self.geometry, Geometry::Euclidean { .. })
    }

    pub fn dimension(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Euclidean { points, .. } => points.first().map(Vec::len),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn points(&self) -> Option<&[Vec<f64>]> {
        match &self.geometry {
            Geometry::Euclidean { points, .. } => Some(points),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn candidates(&self) -> Option<&[Vec<f64>]> {
        match &self.geometry {
            Geometry::Euclidean { candidates, .. } => Some(candidates),
            Geometry::Matrix { .. } => None,
        }
    }

    /// The explicit distance matrix over `X ∪ F`, when the instance has one.
    pub fn distance_matrix(&self) -> Option<Vec<Vec<f64>>> {
        match &self.geometry {
            Geometry::Matrix { rows, dist, .. } => {
                Some(dist.chunks(*rows).map(<[f64]>::to_vec).collect())
            }
            Geometry::Euclidean { .. } => None,
        }
    }

    /// Connection costs from candidate `c` to every point.
    #[inline]
    pub fn connection_row(&self, c: usize) -> &[f64] {
        &self.conn[c * self.n..(c + 1) * self.n]
    }

    /// Connection cost `Δ(c, x)` between candidate `c` and point `x`.
    #[inline]
    pub fn connection(&self, c: usize, x: usize) -> f64 {
        self.conn[c * self.n + x]
    }

    /// Connection cost between two sites, checking indices.
    pub fn connection_cost(&self, a: Site, b: Site) -> Result<f64> {
        self.check_site(a)?;
        self.check_site(b)?;
        Ok(match self.metric() {
            Metric::Median => self.raw_distance(a, b),
            Metric::Means => self.raw_squared(a, b),
        })
    }

    /// Distance `d(a, b)` between two sites, checking indices.
    pub fn distance(&self, a: Site, b: Site) -> Result<f64> {
        self.check_site(a)?;
        self.check_site(b)?;
        Ok(self.raw_distance(a, b))
    }

    /// Distance between two candidates; indices are trusted.
    #[inline]
    pub(crate) fn candidate_distance(&self, a: usize, b: usize) -> f64 {
        self.raw_distance(Site::Candidate(a), Site::Candidate(b))
    }

    fn check_site(&self, site: Site) -> Result<()> {
        match site {
            Site::Point(i) if i >= self.n => Err(Error::IndexOutOfRange {
                what: "point",
                index: i,
                len: self.n,
            }),
            Site::Candidate(c) if c >= self.m => Err(Error::IndexOutOfRange {
                what: "candidate",
                index: c,
                len: self.m,
            }),
            _ => Ok(()),
        }
    }

    fn raw_distance(&self, a: Site, b: Site) -> f64 {
        match &self.geometry {
            Geometry::Euclidean { .. } => self.raw_squared(a, b).sqrt(),
            Geometry::Matrix {
                rows,
                dist,
                candidate_rows,
                ..
            } => {
                let row = |s: Site| match s {
                    Site::Point(i) => i,
                    Site::Candidate(c) => candidate_rows[c],
                };
                dist[row(a) * rows + row(b)]
            }
        }
    }

    fn raw_squared(&self, a: Site, b: Site) -> f64 {
        match &self.geometry {
            Geometry::Euclidean { points, candidates } => {
                let coords = |s: Site| -> &[f64] {
                    match s {
                        Site::Point(i) => &points[i],
                        Site::Candidate(c) => &candidates[c],
                    }
                };
                squared_distance(coords(a), coords(b))
            }
            Geometry::Matrix { .. } => {
                let d = self.raw_distance(a, b);
                d * d
            }
        }
    }
}

fn objective_of(removal: &Removal) -> Objective {
    match removal {
        Removal::Penalties(_) => Objective::Penalty,
        Removal::Outliers(_) => Objective::Outlier,
    }
}

fn check_coordinates(points: &[Vec<f64>], what: &str) -> Result<()> {
    let Some(first) = points.first() else {
        return Ok(());
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidInstance(format!(
            "{what} have zero dimension"
        )));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::InvalidInstance(format!(
                "{what}[{i}] has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "{what}[{i}] has a non-finite coordinate"
            )));
        }
    }
    Ok(())
}

/// Checks that a row-major `rows × rows` matrix is a metric: finite,
/// nonnegative, zero diagonal, symmetric, and satisfying the triangle
/// inequality (every triple for small matrices, a fixed-seed sample above).
fn validate_metric(rows: usize, dist: &[f64]) -> Result<()> {
    let at = |i: usize, j: usize| dist[i * rows + j];
    for i in 0..rows {
        if at(i, i) != 0.0 {
            return Err(Error::InvalidInstance(format!(
                "distance matrix diagonal entry {i} is not zero"
            )));
        }
        for j in 0..rows {
            let v = at(i, j);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "distance ({i}, {j}) is not a nonnegative finite number"
                )));
            }
            if v != at(j, i) {
                return Err(Error::InvalidInstance(format!(
                    "distance matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let violates = |i: usize, j: usize, l: usize| {
        let direct = at(i, j);
        let detour = at(i, l) + at(l, j);
        direct > detour + TRIANGLE_TOLERANCE * direct.max(1.0)
    };
    let report = |i: usize, j: usize, l: usize| {
        Error::InvalidInstance(format!(
            "triangle inequality fails: d({i},{j}) > d({i},{l}) + d({l},{j})"
        ))
    };
    if rows <= EXHAUSTIVE_TRIANGLE_ROWS {
        for i in 0..rows {
            for j in i + 1..rows {
                for l in 0..rows {
                    if violates(i, j, l) {
                        return Err(report(i, j, l));
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961_6e67_6c65);
        for _ in 0..SAMPLED_TRIANGLE_TRIPLES {
            let (i, j, l) = (
                rng.random_range(0..rows),
                rng.random_range(0..rows),
                rng.random_range(0..rows),
            );
            if violates(i, j, l) {
                return Err(report(i, j, l));
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Connection cost between two coordinate vectors: `d` for median, `d²` for means.
pub fn connection_cost(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    let sq = squared_distance(a, b);
    match metric {
        Metric::Median => sq.sqrt(),
        Metric::Means => sq,
    }
}
