use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_cluster::candidates::{data_point_candidates, grid_candidates};
use robust_cluster::cost::evaluate;
use robust_cluster::harness::{generate, sweep, ExperimentConfig, GeneratorSpec};
use robust_cluster::io::{to_json, InstanceFile, SolutionFile};
use robust_cluster::oracle::{opt_discrete, opt_means_continuous};
use robust_cluster::outlier_search::ls_multi_swap_outlier;
use robust_cluster::penalty_search::{best_swap, initial_centers, ls_multi_swap, StopRule};
use robust_cluster::verify::{
    build_adapted_clustering, check_ratio_bounds, check_swap_inequalities, Status,
};
use robust_cluster::{Instance, Problem, Removal};

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
        .collect()
}

#[test]
fn four_collinear_points_split_in_pairs() {
    let pts: Vec<Vec<f64>> = [0.0, 1.0, 10.0, 11.0].iter().map(|&v| vec![v]).collect();
    let set = data_point_candidates(&pts).unwrap();
    let inst = Instance::means(pts, set, 2, Removal::Outliers(0)).unwrap();
    let opt = opt_means_continuous(&inst).unwrap();
    assert_eq!(opt.total(), 1.0);
    let mut clusters = opt.clusters();
    clusters.sort();
    assert_eq!(clusters, vec![vec![0, 1], vec![2, 3]]);
}

#[test]
fn oracle_with_every_candidate_open() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = cloud(&mut rng, 6);
    let fac = cloud(&mut rng, 3);
    let pen: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..4.0)).collect();
    let inst = Instance::median(pts, fac, 3, Removal::Penalties(pen)).unwrap();
    let opt = opt_discrete(&inst).unwrap();
    assert_eq!(opt.candidate_indices().unwrap(), vec![0, 1, 2]);
    assert_eq!(opt.enumerated, 1);
}

#[test]
fn penalty_oracle_matches_double_enumeration() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = cloud(&mut rng, 8);
        let fac = cloud(&mut rng, 6);
        let pen: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..6.0)).collect();
        let inst = Instance::median(pts, fac, 2, Removal::Penalties(pen)).unwrap();
        let mut best = f64::INFINITY;
        for centers in (0..6).combinations(2) {
            for mask in 0u32..256 {
                let removed: Vec<usize> = (0..8).filter(|x| mask >> x & 1 == 1).collect();
                best = best.min(evaluate(&inst, &centers, &removed).unwrap().total);
            }
        }
        assert_eq!(opt_discrete(&inst).unwrap().total(), best);
    }
}

#[test]
fn continuous_optimum_within_grid_factor_of_discrete() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + seed);
        let pts = cloud(&mut rng, 9);
        let set = grid_candidates(&pts, 0.25).unwrap();
        let inst = Instance::means(pts, set, 2, Removal::Outliers(1)).unwrap();
        let free = opt_means_continuous(&inst).unwrap().total();
        let grid = opt_discrete(&inst).unwrap().total();
        assert!(free <= grid * (1.0 + 1e-12));
        assert!(grid <= 1.25 * free * (1.0 + 1e-12), "{grid} vs {free}");
    }
}

#[test]
fn optimum_never_beaten_by_local_search() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let pts = cloud(&mut rng, 8);
        let pen: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..30.0)).collect();
        let set = data_point_candidates(&pts).unwrap();
        let meap = Instance::means(pts.clone(), set.clone(), 2, Removal::Penalties(pen)).unwrap();
        let local = ls_multi_swap(&meap, 1, StopRule::Exact, Some(seed)).unwrap();
        assert!(opt_means_continuous(&meap).unwrap().total() <= local.final_solution.total());
        // outlier searches may remove more than z points, so compare with
        // the optimum at the budget they actually used
        let medo = Instance::median(pts.clone(), pts, 2, Removal::Outliers(1)).unwrap();
        let local = ls_multi_swap_outlier(&medo, 1, 0.05, None, Some(seed)).unwrap();
        let used = local.final_solution.removed.len();
        let relaxed = Instance::median(
            medo.points().unwrap().to_vec(),
            medo.points().unwrap().to_vec(),
            2,
            Removal::Outliers(used.min(7)),
        )
        .unwrap();
        assert!(opt_discrete(&relaxed).unwrap().total() <= local.final_solution.total() + 1e-12);
    }
}

#[test]
fn every_point_its_own_center_costs_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts = cloud(&mut rng, 5);
    let inst = Instance::median(
        pts.clone(),
        pts.clone(),
        5,
        Removal::Penalties(vec![1.0; 5]),
    )
    .unwrap();
    let t = ls_multi_swap(&inst, 1, StopRule::Exact, None).unwrap();
    assert_eq!(t.final_solution.total(), 0.0);

    let inst = Instance::median(pts.clone(), pts, 2, Removal::Outliers(3)).unwrap();
    let t = ls_multi_swap_outlier(&inst, 1, 0.05, None, Some(1)).unwrap();
    assert_eq!(t.final_solution.total(), 0.0);
}

#[test]
fn larger_swaps_never_price_worse() {
    for seed in 0..15 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let pts = cloud(&mut rng, 9);
        let fac = cloud(&mut rng, 7);
        let pen: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..8.0)).collect();
        let inst = Instance::median(pts, fac, 3, Removal::Penalties(pen)).unwrap();
        let s = initial_centers(&inst, Some(seed));
        let (_, one) = best_swap(&inst, &s, 1).unwrap();
        let (_, two) = best_swap(&inst, &s, 2).unwrap();
        assert!(two.total <= one.total);
    }
}

#[test]
fn single_swap_outlier_bound_with_q_equal_k() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let n = rng.random_range(4..=10);
        let m = rng.random_range(3..=8);
        let k = rng.random_range(1..=3);
        let z = rng.random_range(0..=2);
        let pts = cloud(&mut rng, n);
        let fac = cloud(&mut rng, m);
        let inst = Instance::median(pts, fac, k, Removal::Outliers(z)).unwrap();
        let global = opt_discrete(&inst).unwrap();
        let t = ls_multi_swap_outlier(&inst, 1, 0.05, Some(k as f64), Some(seed)).unwrap();
        let r = check_ratio_bounds(&inst, &t.final_solution, &global, &t.params);
        let c = r.get("outlier_ratio_single_swap").unwrap();
        assert_eq!(c.status, Status::Pass, "seed {seed}: {c:?}");
    }
}

#[test]
fn swap_inequalities_hold_at_local_optima() {
    let mut evaluated = 0;
    for seed in 0..240u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let n = rng.random_range(4..=9);
        let k = rng.random_range(1..=3);
        let pts = cloud(&mut rng, n);
        let (inst, trace) = match seed % 4 {
            0 => {
                let pen = (0..n).map(|_| rng.random_range(0.0..8.0)).collect();
                let i = Instance::median(pts.clone(), pts, k, Removal::Penalties(pen)).unwrap();
                let t = ls_multi_swap(&i, k.min(2), StopRule::Exact, Some(seed)).unwrap();
                (i, t)
            }
            1 => {
                let pen = (0..n).map(|_| rng.random_range(0.0..60.0)).collect();
                let set = data_point_candidates(&pts).unwrap();
                let i = Instance::means(pts, set, k, Removal::Penalties(pen)).unwrap();
                let t = ls_multi_swap(&i, 1, StopRule::Exact, Some(seed)).unwrap();
                (i, t)
            }
            2 => {
                let i = Instance::median(pts.clone(), pts, k, Removal::Outliers(1)).unwrap();
                let t = ls_multi_swap_outlier(&i, k.min(2), 0.05, None, Some(seed)).unwrap();
                (i, t)
            }
            _ => {
                let set = data_point_candidates(&pts).unwrap();
                let i = Instance::means(pts, set, k, Removal::Outliers(1)).unwrap();
                let t = ls_multi_swap_outlier(&i, 1, 0.05, None, Some(seed)).unwrap();
                (i, t)
            }
        };
        let global = match inst.metric() {
            robust_cluster::Metric::Median => opt_discrete(&inst).unwrap(),
            robust_cluster::Metric::Means => opt_means_continuous(&inst).unwrap(),
        };
        let local = &trace.final_solution;
        let adapted = build_adapted_clustering(&inst, local, &global).unwrap();
        assert!(adapted.is_balanced(local));
        let r = check_swap_inequalities(&inst, local, &global, &adapted, &trace.params);
        assert!(
            r.passed(),
            "seed {seed}: {:?}",
            r.failures().collect::<Vec<_>>()
        );
        evaluated += r.evaluated();
    }
    assert!(evaluated >= 100, "{evaluated}");
}

#[test]
fn no_contamination_and_no_budget_is_plain_clustering() {
    let config = ExperimentConfig {
        problem: Problem::MedianOutlier,
        instances: 5,
        n: [6, 9],
        k: [2, 3],
        z: [0, 0],
        ..ExperimentConfig::default()
    };
    for file in generate(&config).unwrap() {
        let inst = file.to_instance(None).unwrap();
        let pts = inst.points().unwrap().to_vec();
        let huge = vec![1e12; pts.len()];
        let plain = Instance::median(pts.clone(), pts, inst.k(), Removal::Penalties(huge)).unwrap();
        assert_eq!(
            opt_discrete(&inst).unwrap().total(),
            opt_discrete(&plain).unwrap().total()
        );
    }
}

#[test]
fn separated_blobs_are_recovered() {
    let config = ExperimentConfig {
        problem: Problem::MedianOutlier,
        generator: GeneratorSpec {
            clusters: 3,
            spread: 0.1,
            box_size: 100.0,
            contamination: 0.2,
            ..GeneratorSpec::default()
        },
        instances: 5,
        n: [10, 10],
        k: [3, 3],
        z: [2, 2],
        seed: 11,
        ..ExperimentConfig::default()
    };
    for file in generate(&config).unwrap() {
        let inst = file.to_instance(None).unwrap();
        let opt = opt_discrete(&inst).unwrap().total();
        let t = ls_multi_swap_outlier(&inst, 1, 0.05, None, None).unwrap();
        let ratio = t.final_solution.total() / opt;
        assert!(ratio <= 1.05, "ratio {ratio}");
    }
}

#[test]
fn sweep_rows_recompute_bit_identically() {
    let config = ExperimentConfig {
        problem: Problem::MeansOutlier,
        instances: 3,
        n: [6, 8],
        k: [2, 2],
        z: [1, 1],
        rho: vec![1, 2],
        search_seed: Some(5),
        ..ExperimentConfig::default()
    };
    let files = generate(&config).unwrap();
    let named: Vec<(String, InstanceFile)> = files
        .iter()
        .enumerate()
        .map(|(i, f)| (format!("inst{i}"), f.clone()))
        .collect();
    let report = sweep(&config, &named).unwrap();
    assert!(report.all_bounds_hold());
    for row in &report.rows {
        let idx: usize = row.instance.trim_start_matches("inst").parse().unwrap();
        let inst = files[idx].to_instance(Some(config.centroid_set)).unwrap();
        let t = ls_multi_swap_outlier(&inst, row.rho.unwrap(), row.eps.unwrap(), row.q, row.seed)
            .unwrap();
        assert_eq!(
            t.final_solution.total().to_bits(),
            row.cost.unwrap().to_bits()
        );
    }
}

#[test]
fn solution_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pts = cloud(&mut rng, 9);
    let set = grid_candidates(&pts, 0.5).unwrap();
    let inst = Instance::means(pts, set, 3, Removal::Outliers(2)).unwrap();
    let t = ls_multi_swap_outlier(&inst, 2, 0.1, None, Some(3)).unwrap();
    let spec = Some(robust_cluster::io::CentroidSpec::Grid(0.5));
    let file = SolutionFile::from_trace(&inst, &t, spec);
    let text = to_json(&file).unwrap();
    let back: SolutionFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.to_solution(&inst).unwrap(), t.final_solution);
    assert_eq!(to_json(&back).unwrap(), text);
}

#[test]
fn instance_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        problem: Problem::MeansPenalty,
        instances: 2,
        ..ExperimentConfig::default()
    };
    let files = generate(&config).unwrap();
    let paths = robust_cluster::harness::write_instances(dir.path(), &files).unwrap();
    for (path, file) in paths.iter().zip(&files) {
        let loaded = robust_cluster::io::load_instance(path, None).unwrap();
        let direct = file.to_instance(None).unwrap();
        assert_eq!(loaded.points(), direct.points());
        assert_eq!(loaded.penalties(), direct.penalties());
        let again: InstanceFile = robust_cluster::io::read_json(path).unwrap();
        assert_eq!(&again, file);
    }
}
