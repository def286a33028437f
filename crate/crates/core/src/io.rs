//! JSON files for instances, solutions and oracle results.
//!
//! Instance files list `points` as coordinate vectors, or as row indices into
//! `distance_matrix` for metric median instances. Floats are written in the
//! shortest form that parses back to the same value, so writing a value twice
//! gives identical bytes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::candidates::{
    data_point_candidates, exact_centroid_candidates, grid_candidates, CandidateMethod,
    CandidateSet,
};
use crate::cost::Solution;
use crate::error::{Error, Result};
use crate::instance::{Instance, Metric, Objective, Problem, Removal};
use crate::oracle::OracleResult;
use crate::trace::{RunSummary, SearchTrace};

/// How a means instance obtains its candidate centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CentroidSpec {
    /// The data points, ε̂ = 1.
    Data,
    /// Refined grids with the given ε̂.
    Grid(f64),
    /// Centroids of every nonempty subset, ε̂ = 0.
    Exact,
}

impl CentroidSpec {
    pub fn build(&self, points: &[Vec<f64>]) -> Result<CandidateSet> {
        match *self {
            CentroidSpec::Data => data_point_candidates(points),
            CentroidSpec::Grid(eps) => grid_candidates(points, eps),
            CentroidSpec::Exact => exact_centroid_candidates(points),
        }
    }
}

impl fmt::Display for CentroidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CentroidSpec::Data => f.write_str("data"),
            CentroidSpec::Grid(eps) => write!(f, "grid:{eps}"),
            CentroidSpec::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for CentroidSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data" => Ok(CentroidSpec::Data),
            "exact" => Ok(CentroidSpec::Exact),
            _ => {
                let eps = s
                    .strip_prefix("grid:")
                    .and_then(|e| e.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "centroid set `{s}` is not one of data, exact, grid:<eps>"
                        ))
                    })?;
                Ok(CentroidSpec::Grid(eps))
            }
        }
    }
}

impl From<CentroidSpec> for String {
    fn from(spec: CentroidSpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for CentroidSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Points given either by coordinates or by rows of a distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointList {
    Coordinates(Vec<Vec<f64>>),
    Rows(Vec<usize>),
}

/// On-disk instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointList>,
    /// Median only; defaults to the points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facilities: Option<PointList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalties: Option<Vec<f64>>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<usize>,
    /// Means only: an explicit candidate set, used when no centroid set is
    /// requested at load time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_hat: Option<f64>,
    /// Free-form provenance, e.g. generator settings and seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl InstanceFile {
    /// Builds the instance. `centroids` overrides the candidate set of a means
    /// instance; without it an embedded set is used, else the data points.
    pub fn to_instance(&self, centroids: Option<CentroidSpec>) -> Result<Instance> {
        let removal =
            match self.problem.objective() {
                Objective::Penalty => {
                    if self.z.is_some() {
                        return Err(Error::InvalidInstance(
                            "`z` given for a penalty problem".into(),
                        ));
                    }
                    Removal::Penalties(self.penalties.clone().ok_or_else(|| {
                        Error::InvalidInstance("penalty problems need `penalties`".into())
                    })?)
                }
                Objective::Outlier => {
                    if self.penalties.is_some() {
                        return Err(Error::InvalidInstance(
                            "`penalties` given for an outlier problem".into(),
                        ));
                    }
                    Removal::Outliers(self.z.ok_or_else(|| {
                        Error::InvalidInstance("outlier problems need `z`".into())
                    })?)
                }
            };
        match self.problem.metric() {
            Metric::Median => match &self.distance_matrix {
                Some(matrix) => self.matrix_instance(matrix, removal),
                None => {
                    let points = self.coordinates()?;
                    let facilities = match &self.facilities {
                        None => points.clone(),
                        Some(PointList::Coordinates(f)) => f.clone(),
                        Some(PointList::Rows(_)) => {
                            return Err(Error::InvalidInstance(
                                "facility rows need a `distance_matrix`".into(),
                            ))
                        }
                    };
                    Instance::median(points, facilities, self.k, removal)
                }
            },
            Metric::Means => {
                if self.distance_matrix.is_some() || self.facilities.is_some() {
                    return Err(Error::InvalidInstance(
                        "means instances take coordinates only, without facilities".into(),
                    ));
                }
                let points = self.coordinates()?;
                let set = match (centroids, &self.candidates) {
                    (Some(spec), _) => spec.build(&points)?,
                    (None, Some(c)) => CandidateSet {
                        candidates: c.clone(),
                        epsilon_hat: self.epsilon_hat.ok_or_else(|| {
                            Error::InvalidInstance(
                                "embedded `candidates` need `epsilon_hat`".into(),
                            )
                        })?,
                        method: CandidateMethod::Explicit,
                    },
                    (None, None) => data_point_candidates(&points)?,
                };
                Instance::means(points, set, self.k, removal)
            }
        }
    }

    fn coordinates(&self) -> Result<Vec<Vec<f64>>> {
        match &self.points {
            Some(PointList::Coordinates(p)) => Ok(p.clone()),
            Some(PointList::Rows(_)) => Err(Error::InvalidInstance(
                "point rows need a `distance_matrix`".into(),
            )),
            None => Err(Error::InvalidInstance("missing `points`".into())),
        }
    }

    fn matrix_instance(&self, matrix: &[Vec<f64>], removal: Removal) -> Result<Instance> {
        let rows = matrix.len();
        let as_rows =
            |list: &Option<PointList>, what: &'static str| -> Result<Option<Vec<usize>>> {
                match list {
                    None => Ok(None),
                    Some(PointList::Rows(r)) => {
                        if let Some(&bad) = r.iter().find(|&&i| i >= rows) {
                            return Err(Error::IndexOutOfRange {
                                what,
                                index: bad,
                                len: rows,
                            });
                        }
                        Ok(Some(r.clone()))
                    }
                    Some(PointList::Coordinates(_)) => Err(Error::InvalidInstance(format!(
                        "{what} must be matrix rows when `distance_matrix` is given"
                    ))),
                }
            };
        let points = as_rows(&self.points, "point row")?.unwrap_or_else(|| (0..rows).collect());
        let facilities = as_rows(&self.facilities, "facility row")?;
        let order: Vec<usize> = match &facilities {
            None => points.clone(),
            Some(f) => points.iter().chain(f).copied().collect(),
        };
        let identity = order.len() == rows && order.iter().enumerate().all(|(i, &r)| i == r);
        if identity && matrix.iter().all(|row| row.len() == rows) {
            return Instance::median_matrix(points.len(), matrix.to_vec(), self.k, removal);
        }
        let mut sub = Vec::with_capacity(order.len());
        for &i in &order {
            let row = &matrix[i];
            if row.len() != rows {
                return Err(Error::InvalidInstance(format!(
                    "distance matrix row {i} has {} entries, expected {rows}",
                    row.len()
                )));
            }
            sub.push(order.iter().map(|&j| row[j]).collect());
        }
        Instance::median_matrix(points.len(), sub, self.k, removal)
    }

    /// The file describing `instance`. Means candidate sets other than the
    /// data points are embedded.
    pub fn from_instance(instance: &Instance) -> Self {
        let (penalties, z) = match instance.removal() {
            Removal::Penalties(p) => (Some(p.clone()), None),
            Removal::Outliers(z) => (None, Some(*z)),
        };
        let mut file = InstanceFile {
            problem: instance.problem(),
            points: None,
            facilities: None,
            distance_matrix: None,
            penalties,
            k: instance.k(),
            z,
            candidates: None,
            epsilon_hat: None,
            meta: None,
        };
        if let Some(matrix) = instance.distance_matrix() {
            let (n, rows) = (instance.n(), matrix.len());
            file.points = Some(PointList::Rows((0..n).collect()));
            if rows > n {
                file.facilities = Some(PointList::Rows((n..rows).collect()));
            }
            file.distance_matrix = Some(matrix);
            return file;
        }
        let points = instance
            .points()
            .map(<[Vec<f64>]>::to_vec)
            .unwrap_or_default();
        let candidates = instance
            .candidates()
            .map(<[Vec<f64>]>::to_vec)
            .unwrap_or_default();
        match instance.metric() {
            Metric::Median => {
                if candidates != points {
                    file.facilities = Some(PointList::Coordinates(candidates));
                }
            }
            Metric::Means => {
                if let Some(set) = instance.candidate_set() {
                    if set.method != CandidateMethod::DataPoints {
                        file.candidates = Some(set.candidates.clone());
                        file.epsilon_hat = Some(set.epsilon_hat);
                    }
                }
            }
        }
        file.points = Some(PointList::Coordinates(points));
        file
    }
}

/// On-disk solution of a local search or of any fixed center set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub problem: Problem,
    /// Candidate indices, ascending.
    pub centers: Vec<usize>,
    pub removed: Vec<usize>,
    pub cost_c: f64,
    pub cost_p: f64,
    pub total: f64,
    /// `|P|/z`; absent for penalty problems and for `z = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_blowup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_coordinates: Option<Vec<Vec<f64>>>,
    /// Candidate set the centers index into, for means problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid_set: Option<CentroidSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<RunSummary>,
}

impl SolutionFile {
    pub fn from_solution(
        instance: &Instance,
        solution: &Solution,
        centroid_set: Option<CentroidSpec>,
        search: Option<RunSummary>,
    ) -> Self {
        let outlier_blowup = match instance.removal() {
            Removal::Outliers(z) if *z > 0 => Some(solution.removed.len() as f64 / *z as f64),
            _ => None,
        };
        let center_coordinates = instance
            .candidates()
            .map(|c| solution.centers.iter().map(|&i| c[i].clone()).collect());
        SolutionFile {
            problem: instance.problem(),
            centers: solution.centers.clone(),
            removed: solution.removed.clone(),
            cost_c: solution.breakdown.cost_c,
            cost_p: solution.breakdown.cost_p,
            total: solution.breakdown.total,
            outlier_blowup,
            center_coordinates,
            centroid_set: match instance.metric() {
                Metric::Means => centroid_set,
                Metric::Median => None,
            },
            search,
        }
    }

    pub fn from_trace(
        instance: &Instance,
        trace: &SearchTrace,
        centroid_set: Option<CentroidSpec>,
    ) -> Self {
        Self::from_solution(
            instance,
            &trace.final_solution,
            centroid_set,
            Some(trace.summary()),
        )
    }

    /// Re-evaluates the stored centers and removed set on `instance`.
    pub fn to_solution(&self, instance: &Instance) -> Result<Solution> {
        if self.problem != instance.problem() {
            return Err(Error::WrongProblem {
                expected: self.problem.name(),
                actual: instance.problem(),
            });
        }
        Solution::new(instance, &self.centers, &self.removed)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn load_instance(path: &Path, centroids: Option<CentroidSpec>) -> Result<Instance> {
    read_json::<InstanceFile>(path)?.to_instance(centroids)
}

pub fn load_oracle(path: &Path) -> Result<OracleResult> {
    read_json(path)
}
