//! Finite candidate center sets for the means variants.
//!
//! A set `C′` is an ε̂-approximate centroid set for `X` when, for every
//! nonempty `D ⊆ X`, the best member of `C′` pays at most `1 + ε̂` times the
//! squared-distance cost of the true centroid of `D`.
//!
//! Two constructions are provided. [`data_point_candidates`] uses `X` itself
//! and has ε̂ = 1: the member of `D` closest to the centroid lies within the
//! root-mean-square radius of `D`, so it pays at most twice the optimum.
//! [`grid_candidates`] refines this with a per-point family of cubic grids at
//! halving scales. For a subset `D` with centroid `μ` and mean squared radius
//! `σ²`, take `x ∈ D` closest to `μ`, so `d(x, μ) ≤ σ`. `σ` lies between
//! `nn(x)/n` and `far(x)`, hence in some band `(r/2, r]` of the scales
//! generated around `x`, and the grid at scale `r` has a node within
//! `√ε̂·r/2 < √ε̂·σ` of `μ`. The centroid identity then gives the
//! `(1 + ε̂)` bound. [`verify_candidate_set`] checks the property directly.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::centroid::{centroid, squared_cost};
use crate::error::{Error, Result};
use crate::instance::squared_distance;

/// Largest dimension the grid construction accepts.
pub const MAX_GRID_DIMENSION: usize = 4;

/// Largest point count for which every subset is enumerated.
pub const MAX_EXHAUSTIVE_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMethod {
    DataPoints,
    GridRefined,
    /// Centroids of every nonempty subset; exact, exponential size.
    AllCentroids,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Vec<f64>>,
    pub epsilon_hat: f64,
    pub method: CandidateMethod,
}

/// `C′ = X` with ε̂ = 1.
pub fn data_point_candidates(points: &[Vec<f64>]) -> Result<CandidateSet> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(CandidateSet {
        candidates: points.to_vec(),
        epsilon_hat: 1.0,
        method: CandidateMethod::DataPoints,
    })
}

/// Data points plus multi-scale grids around each of them, meeting the
/// ε̂-approximate centroid property.
pub fn grid_candidates(points: &[Vec<f64>], epsilon_hat: f64) -> Result<CandidateSet> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !(epsilon_hat > 0.0 && epsilon_hat <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_hat must lie in (0, 1], got {epsilon_hat}"
        )));
    }
    let dim = points[0].len();
    if dim > MAX_GRID_DIMENSION {
        return Err(Error::InvalidParameter(format!(
            "grid candidates support dimension <= {MAX_GRID_DIMENSION}, got {dim}"
        )));
    }
    let n = points.len();
    let root_dim = (dim as f64).sqrt();
    let half_width = (root_dim / epsilon_hat.sqrt()).ceil() as i64;
    let offsets: Vec<Vec<i64>> = (0..dim)
        .map(|_| -half_width..=half_width)
        .multi_cartesian_product()
        .collect();

    let mut out = points.to_vec();
    let mut seen: std::collections::HashSet<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v.to_bits()).collect())
        .collect();

    for x in points {
        let mut nearest = f64::INFINITY;
        let mut farthest: f64 = 0.0;
        for y in points {
            let d = squared_distance(x, y).sqrt();
            if d > 0.0 {
                nearest = nearest.min(d);
                farthest = farthest.max(d);
            }
        }
        if farthest == 0.0 {
            continue;
        }
        let lowest = nearest / n as f64;
        let mut scale = farthest;
        loop {
            let spacing = epsilon_hat.sqrt() * scale / root_dim;
            let reach = scale + spacing * root_dim / 2.0;
            for offset in &offsets {
                let step: Vec<f64> = offset.iter().map(|&i| i as f64 * spacing).collect();
                if step.iter().map(|v| v * v).sum::<f64>().sqrt() > reach {
                    continue;
                }
                let node: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                if seen.insert(node.iter().map(|v| v.to_bits()).collect()) {
                    out.push(node);
                }
            }
            if scale / 2.0 < lowest {
                break;
            }
            scale /= 2.0;
        }
    }

    Ok(CandidateSet {
        candidates: out,
        epsilon_hat,
        method: CandidateMethod::GridRefined,
    })
}

/// The centroid of every nonempty subset of `X`: an exact (ε̂ = 0) candidate set.
pub fn exact_centroid_candidates(points: &[Vec<f64>]) -> Result<CandidateSet> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.len() > MAX_EXHAUSTIVE_POINTS {
        return Err(Error::TooLarge(format!(
            "{} points would need {} subset centroids",
            points.len(),
            (1u64 << points.len()) - 1
        )));
    }
    let n = points.len();
    let mut out = Vec::with_capacity((1 << n) - 1);
    let mut seen = std::collections::HashSet::new();
    let mut members = Vec::with_capacity(n);
    for mask in 1u32..(1 << n) {
        members.clear();
        members.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| &points[i]));
        let mu = centroid(&members)?;
        if seen.insert(mu.iter().map(|v| v.to_bits()).collect::<Vec<_>>()) {
            out.push(mu);
        }
    }
    Ok(CandidateSet {
        candidates: out,
        epsilon_hat: 0.0,
        method: CandidateMethod::AllCentroids,
    })
}

/// Which subsets of `X` the verifier inspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetCoverage {
    /// Every nonempty subset (requires `|X| ≤ 16`).
    Exhaustive,
    /// Uniformly random nonempty subsets from a seeded generator.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub subsets_checked: usize,
    /// Largest observed `min_{c∈C′} d²(c, D) / d²(cent(D), D)`.
    pub worst_ratio: f64,
    /// Bitmask of the subset attaining `worst_ratio`.
    pub worst_subset: u64,
    pub epsilon_hat: f64,
    pub passed: bool,
}

/// Relative slack applied when comparing against `1 + ε̂`.
const RATIO_TOLERANCE: f64 = 1e-9;

/// Evaluates the approximate-centroid property of `candidates` on subsets of
/// `points`, computing both sides by direct summation.
pub fn verify_candidate_set(
    candidates: &[Vec<f64>],
    points: &[Vec<f64>],
    epsilon_hat: f64,
    coverage: SubsetCoverage,
) -> Result<CandidateReport> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("candidate set is empty".into()));
    }
    if n > 63 {
        return Err(Error::TooLarge(format!(
            "{n} points exceed the 63-bit subset masks"
        )));
    }
    let masks: Vec<u64> = match coverage {
        SubsetCoverage::Exhaustive => {
            if n > MAX_EXHAUSTIVE_POINTS {
                return Err(Error::TooLarge(format!(
                    "exhaustive verification needs |X| <= {MAX_EXHAUSTIVE_POINTS}, got {n}"
                )));
            }
            (1u64..(1 << n)).collect()
        }
        SubsetCoverage::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            (0..samples)
                .map(|_| loop {
                    let m = rng.random::<u64>() & full;
                    if m != 0 {
                        break m;
                    }
                })
                .collect()
        }
    };

    let mut worst_ratio: f64 = 1.0;
    let mut worst_subset = masks[0];
    let mut passed = true;
    let mut subset: Vec<&Vec<f64>> = Vec::with_capacity(n);
    for &mask in &masks {
        subset.clear();
        subset.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| &points[i]));
        let optimum = squared_cost(&centroid(&subset)?, &subset);
        let best = candidates
            .iter()
            .map(|c| squared_cost(c, &subset))
            .fold(f64::INFINITY, f64::min);
        let ok = best <= (1.0 + epsilon_hat) * optimum + RATIO_TOLERANCE * best.max(optimum);
        let ratio = if optimum > 0.0 {
            best / optimum
        } else if best <= RATIO_TOLERANCE * best.max(1.0) && ok {
            1.0
        } else {
            f64::INFINITY
        };
        passed &= ok;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_subset = mask;
        }
    }
    Ok(CandidateReport {
        subsets_checked: masks.len(),
        worst_ratio,
        worst_subset,
        epsilon_hat,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Uniform};

    fn random_points(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(-10.0, 10.0).unwrap();
        (0..n)
            .map(|_| (0..dim).map(|_| u.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn two_point_case_is_tight() {
        let x = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let c = data_point_candidates(&x).unwrap();
        let r = verify_candidate_set(&c.candidates, &x, 1.0, SubsetCoverage::Exhaustive).unwrap();
        assert_eq!(r.worst_ratio, 2.0);
        assert_eq!(r.worst_subset, 0b11);
        assert!(r.passed);
        let strict =
            verify_candidate_set(&c.candidates, &x, 0.5, SubsetCoverage::Exhaustive).unwrap();
        assert!(!strict.passed);
    }

    #[test]
    fn singleton_ratio_is_one() {
        let x = vec![vec![1.0, 2.0]];
        let c = data_point_candidates(&x).unwrap();
        let r = verify_candidate_set(&c.candidates, &x, 0.0, SubsetCoverage::Exhaustive).unwrap();
        assert_eq!(r.worst_ratio, 1.0);
        assert!(r.passed);
        let g = grid_candidates(&x, 0.5).unwrap();
        assert!(g.candidates.iter().any(|c| c == &x[0]));
    }

    #[test]
    fn data_points_within_factor_two_on_all_subsets() {
        for seed in 0..20 {
            let x = random_points(seed, 8, 2);
            let c = data_point_candidates(&x).unwrap();
            let r =
                verify_candidate_set(&c.candidates, &x, 1.0, SubsetCoverage::Exhaustive).unwrap();
            assert_eq!(r.subsets_checked, 255);
            assert!(
                r.passed && r.worst_ratio <= 2.0 + 1e-9,
                "seed {seed}: {r:?}"
            );
        }
    }

    #[test]
    fn grid_meets_its_parameter() {
        for seed in 0..5 {
            let x = random_points(100 + seed, 8, 2);
            let g = grid_candidates(&x, 0.25).unwrap();
            let r =
                verify_candidate_set(&g.candidates, &x, 0.25, SubsetCoverage::Exhaustive).unwrap();
            assert!(r.passed, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn grid_dominates_data_points() {
        let x = random_points(7, 7, 3);
        let g = grid_candidates(&x, 1.0).unwrap();
        assert!(x.iter().all(|p| g.candidates.contains(p)));
        let r = verify_candidate_set(&g.candidates, &x, 1.0, SubsetCoverage::Exhaustive).unwrap();
        let d = verify_candidate_set(&x, &x, 1.0, SubsetCoverage::Exhaustive).unwrap();
        assert!(r.worst_ratio <= d.worst_ratio);
    }

    #[test]
    fn all_centroids_are_exact() {
        let x = random_points(3, 6, 2);
        let c = exact_centroid_candidates(&x).unwrap();
        let r = verify_candidate_set(&c.candidates, &x, 0.0, SubsetCoverage::Exhaustive).unwrap();
        assert!(r.passed);
        assert!((r.worst_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn far_away_candidate_fails() {
        let x = random_points(4, 5, 2);
        let far = vec![vec![1e4, 1e4]];
        let r = verify_candidate_set(&far, &x, 1.0, SubsetCoverage::Exhaustive).unwrap();
        assert!(!r.passed);
        assert!(r.worst_ratio > 2.0);
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let x = random_points(9, 20, 2);
        let cov = SubsetCoverage::Sampled {
            samples: 200,
            seed: 1,
        };
        let a = verify_candidate_set(&x, &x, 1.0, cov).unwrap();
        let b = verify_candidate_set(&x, &x, 1.0, cov).unwrap();
        assert_eq!(a, b);
        assert!(a.passed);
    }

    #[test]
    fn parameter_validation() {
        let x = random_points(1, 3, 5);
        assert!(grid_candidates(&x, 0.5).is_err());
        let y = random_points(1, 3, 2);
        assert!(grid_candidates(&y, 0.0).is_err());
        assert!(grid_candidates(&y, 1.5).is_err());
        assert!(data_point_candidates(&[]).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let x = random_points(11, 6, 2);
        assert_eq!(
            grid_candidates(&x, 0.3).unwrap(),
            grid_candidates(&x, 0.3).unwrap()
        );
    }
}
