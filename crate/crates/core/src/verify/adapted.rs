//! Adapted clusters, the capture map and the capture partition.

use serde::Serialize;

use crate::centroid::centroid;
use crate::cost::Solution;
use crate::error::{Error, Result};
use crate::instance::{squared_distance, Instance, Metric};
use crate::oracle::{CenterLocation, OracleResult};

/// The optimal cluster of one optimal center with the locally removed points
/// taken out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptedCluster {
    /// Optimal cluster `N*(s*)`.
    pub cluster: Vec<usize>,
    /// `N*(s*) \ P`.
    pub members: Vec<usize>,
    /// Best center of `members`: the centroid for means, the best candidate
    /// for median. `None` when `members` is empty.
    pub center: Option<CenterLocation>,
    /// Nearest local center to `center` (lowest index on ties).
    pub image: Option<usize>,
    /// Candidate standing in for the optimal center in a swap: the optimal
    /// center itself for median, the best candidate for `N*(s*)` for means.
    pub replacement: usize,
}

/// One block of the capture partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CapturePair {
    /// Local centers (candidate indices), the captor first when there is one.
    pub local: Vec<usize>,
    /// Optimal centers, as positions in the oracle's center list.
    pub optimal: Vec<usize>,
    /// The local center capturing `optimal`; `None` for a block built around
    /// an empty adapted cluster.
    pub captor: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptedClustering {
    /// Indexed like the oracle's centers.
    pub clusters: Vec<AdaptedCluster>,
    pub pairs: Vec<CapturePair>,
    /// Local centers left over when the optimum opens fewer centers.
    pub unmatched_local: Vec<usize>,
}

impl AdaptedClustering {
    /// Whether the nonempty adapted clusters partition `X \ (P ∪ P*)`.
    pub fn partitions_kept_points(&self, local: &Solution, global: &OracleResult) -> bool {
        let n = local.assignment.len();
        let mut seen = vec![0u32; n];
        for c in &self.clusters {
            for &x in &c.members {
                seen[x] += 1;
            }
        }
        (0..n).all(|x| {
            let kept = local.assignment[x].is_some() && global.assignment[x].is_some();
            seen[x] == u32::from(kept)
        })
    }

    /// Whether the pairs partition the local and optimal centers with equal sizes.
    pub fn is_balanced(&self, local: &Solution) -> bool {
        let mut all: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|p| p.local.iter().copied())
            .collect();
        all.extend(&self.unmatched_local);
        all.sort_unstable();
        let mut opt: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|p| p.optimal.iter().copied())
            .collect();
        opt.sort_unstable();
        all == local.centers
            && opt == (0..self.clusters.len()).collect::<Vec<_>>()
            && self.pairs.iter().all(|p| p.local.len() == p.optimal.len())
    }
}

/// Builds adapted clusters, their capture images and the capture partition.
pub fn build_adapted_clustering(
    instance: &Instance,
    local: &Solution,
    global: &OracleResult,
) -> Result<AdaptedClustering> {
    let n = instance.n();
    if local.assignment.len() != n || global.assignment.len() != n {
        return Err(Error::InvalidParameter(
            "solutions do not match the instance size".into(),
        ));
    }
    if local.centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    let clusters_of_opt = global.clusters();
    let mut clusters = Vec::with_capacity(global.centers.len());
    for (j, cluster) in clusters_of_opt.into_iter().enumerate() {
        let members: Vec<usize> = cluster
            .iter()
            .copied()
            .filter(|&x| local.assignment[x].is_some())
            .collect();
        let center = if members.is_empty() {
            None
        } else {
            Some(best_center(instance, &members)?)
        };
        let image = center
            .as_ref()
            .map(|c| nearest_local(instance, &local.centers, c));
        let replacement = replacement(instance, &global.centers[j], &cluster)?;
        clusters.push(AdaptedCluster {
            cluster,
            members,
            center,
            image,
            replacement,
        });
    }

    let mut images: Vec<usize> = clusters.iter().filter_map(|c| c.image).collect();
    images.sort_unstable();
    images.dedup();
    let mut pairs: Vec<CapturePair> = images
        .iter()
        .map(|&s| CapturePair {
            local: vec![s],
            optimal: (0..clusters.len())
                .filter(|&j| clusters[j].image == Some(s))
                .collect(),
            captor: Some(s),
        })
        .collect();
    for (j, c) in clusters.iter().enumerate() {
        if c.image.is_none() {
            pairs.push(CapturePair {
                local: Vec::new(),
                optimal: vec![j],
                captor: None,
            });
        }
    }
    let mut spare = local
        .centers
        .iter()
        .copied()
        .filter(|s| images.binary_search(s).is_err());
    for pair in &mut pairs {
        while pair.local.len() < pair.optimal.len() {
            match spare.next() {
                Some(s) => pair.local.push(s),
                None => break,
            }
        }
    }
    let unmatched_local = spare.collect();
    Ok(AdaptedClustering {
        clusters,
        pairs,
        unmatched_local,
    })
}

/// Centroid for means; for median the candidate minimizing the summed
/// distance, lowest index on ties.
fn best_center(instance: &Instance, members: &[usize]) -> Result<CenterLocation> {
    match instance.metric() {
        Metric::Means => {
            let points = instance
                .points()
                .ok_or(Error::CoordinatesRequired("adapted cluster centroid"))?;
            let pts: Vec<&Vec<f64>> = members.iter().map(|&x| &points[x]).collect();
            Ok(CenterLocation::Coordinates(centroid(&pts)?))
        }
        Metric::Median => Ok(CenterLocation::Candidate(best_candidate(instance, members))),
    }
}

/// Candidate with the smallest summed connection cost to `members`.
pub(crate) fn best_candidate(instance: &Instance, members: &[usize]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for c in 0..instance.m() {
        let cost: f64 = members.iter().map(|&x| instance.connection(c, x)).sum();
        if cost < best.0 {
            best = (cost, c);
        }
    }
    best.1
}

fn nearest_local(instance: &Instance, centers: &[usize], center: &CenterLocation) -> usize {
    let mut best = (f64::INFINITY, centers[0]);
    for &s in centers {
        let d = match center {
            CenterLocation::Candidate(c) => instance.candidate_distance(*c, s),
            CenterLocation::Coordinates(v) => {
                let cands = instance
                    .candidates()
                    .expect("means instances carry coordinates");
                squared_distance(v, &cands[s])
            }
        };
        if d < best.0 {
            best = (d, s);
        }
    }
    best.1
}

fn replacement(instance: &Instance, center: &CenterLocation, cluster: &[usize]) -> Result<usize> {
    match (instance.metric(), center) {
        (Metric::Median, CenterLocation::Candidate(c)) => Ok(*c),
        (Metric::Median, CenterLocation::Coordinates(_)) => Err(Error::InvalidParameter(
            "median optima must use candidate centers".into(),
        )),
        (Metric::Means, _) => Ok(best_candidate(instance, cluster)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::data_point_candidates;
    use crate::instance::Removal;
    use crate::oracle::{opt_discrete, opt_means_continuous};
    use crate::penalty_search::{ls_multi_swap, StopRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coords(rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
            .collect()
    }

    #[test]
    fn nothing_removed_gives_optimal_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = coords(&mut rng, 7);
        let cs = data_point_candidates(&pts).unwrap();
        let inst = Instance::means(pts, cs, 2, Removal::Outliers(0)).unwrap();
        let global = opt_means_continuous(&inst).unwrap();
        let local = Solution::new(&inst, &[0, 1], &[]).unwrap();
        let a = build_adapted_clustering(&inst, &local, &global).unwrap();
        for (c, opt) in a.clusters.iter().zip(global.clusters()) {
            assert_eq!(c.members, opt);
            assert_eq!(c.cluster, opt);
        }
        assert!(a.partitions_kept_points(&local, &global));
        assert!(a.is_balanced(&local));
    }

    #[test]
    fn images_match_linear_scan() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = coords(&mut rng, 8);
            let fac = coords(&mut rng, 6);
            let pen: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..6.0)).collect();
            let inst = Instance::median(pts, fac, 3, Removal::Penalties(pen)).unwrap();
            let global = opt_discrete(&inst).unwrap();
            let local = ls_multi_swap(&inst, 1, StopRule::Exact, Some(seed))
                .unwrap()
                .final_solution;
            let a = build_adapted_clustering(&inst, &local, &global).unwrap();
            for c in &a.clusters {
                if let Some(CenterLocation::Candidate(cc)) = c.center {
                    let want = local
                        .centers
                        .iter()
                        .copied()
                        .min_by(|&u, &v| {
                            inst.candidate_distance(cc, u)
                                .total_cmp(&inst.candidate_distance(cc, v))
                                .then(u.cmp(&v))
                        })
                        .unwrap();
                    assert_eq!(c.image, Some(want));
                } else {
                    assert!(c.members.is_empty());
                    assert_eq!(c.image, None);
                }
            }
            assert!(a.partitions_kept_points(&local, &global));
            assert!(a.is_balanced(&local));
        }
    }

    #[test]
    fn empty_adapted_cluster_gets_its_own_pair() {
        // Point 2 sits alone far away and is penalized by the local solution.
        let pts = vec![vec![0.0], vec![1.0], vec![100.0]];
        let inst = Instance::median(
            pts.clone(),
            pts,
            2,
            Removal::Penalties(vec![50.0, 50.0, 50.0]),
        )
        .unwrap();
        let global = opt_discrete(&inst).unwrap();
        assert!(global.removed.is_empty());
        let local = Solution::new(&inst, &[0, 1], &[2]).unwrap();
        let a = build_adapted_clustering(&inst, &local, &global).unwrap();
        let lonely = a
            .clusters
            .iter()
            .position(|c| c.cluster == vec![2])
            .unwrap();
        assert!(a.clusters[lonely].members.is_empty());
        let pair = a.pairs.iter().find(|p| p.optimal == vec![lonely]).unwrap();
        assert_eq!(pair.captor, None);
        assert_eq!(pair.local.len(), 1);
        assert!(a.is_balanced(&local));
    }
}
