//! Monte Carlo oracle tests at the larger sample sizes: central-limit
//! behavior of the walk itself, the shrinking normalized maxima of the local
//! time, and the variance of the normalized sums against the Brownian
//! square-integral constant.

use rayon::prelude::*;
use rwrs_core::rng::{stream, STREAM_WALK};
use rwrs_core::rwrs::RwrsConfig;
use rwrs_core::scenery::SceneryModel;
use rwrs_core::stats;
use rwrs_core::verify::BROWNIAN_SQUARE_INTEGRAL;
use rwrs_core::walk::IncrementLaw;

#[test]
fn walk_endpoint_obeys_the_central_limit_scaling() {
    // CLT oracle: S_n / sqrt(n) has mean 0 and unit variance for the simple
    // walk, so the mean over R replicates lies within 3 / sqrt(R)
    let law = IncrementLaw::simple();
    let n = 1_000_000usize;
    let replicates = 10_000usize;
    let endpoints: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(7, rep as u64, STREAM_WALK);
            let path = law.sample_path(n, &mut rng);
            *path.positions().last().unwrap() as f64 / (n as f64).sqrt()
        })
        .collect();
    let mean = stats::mean(&endpoints);
    assert!(
        mean.abs() <= 3e-2,
        "mean of S_n/sqrt(n) = {mean} exceeds 3e-2"
    );
    // and the variance is 1 within Monte Carlo error
    let var = stats::variance(&endpoints);
    assert!((var - 1.0).abs() < 0.06, "variance {var}");
}

#[test]
fn normalized_local_time_maximum_shrinks_with_the_horizon() {
    let law = IncrementLaw::simple();
    let replicates = 500usize;
    let median_at = |n: usize, seed: u64| {
        let vals: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(seed, rep as u64, STREAM_WALK);
                law.sample_local_time(n, &mut rng).max_count() as f64 / (n as f64).powf(0.75)
            })
            .collect();
        stats::median(&vals)
    };
    let small = median_at(256, 3);
    let large = median_at(4096, 4);
    assert!(
        large < small,
        "median normalized maximum must shrink: {small} -> {large}"
    );
}

#[test]
fn mean_self_intersection_grows_like_n_to_three_halves() {
    let law = IncrementLaw::simple();
    let replicates = 500usize;
    let grid = [256usize, 1024, 4096];
    let log_means: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(gi, &n)| {
            let vals: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream(11, (gi * replicates + rep) as u64, STREAM_WALK);
                    law.sample_local_time(n, &mut rng).self_intersection(0) as f64
                })
                .collect();
            stats::mean(&vals).ln()
        })
        .collect();
    let log_ns: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let slope = stats::regression_slope(&log_ns, &log_means);
    assert!(
        (1.4..=1.6).contains(&slope),
        "log E[alpha(n,0)] slope {slope} outside [1.4, 1.6]"
    );
}

#[test]
fn iid_normalized_sum_variance_matches_the_brownian_constant() {
    let cfg = RwrsConfig::new(
        IncrementLaw::simple(),
        SceneryModel::iid_standard_normal(),
        4096,
        vec![1.0],
        2000,
        99,
    )
    .unwrap();
    let batch = cfg.simulate().unwrap();
    let var = stats::variance(&batch.normalized_column(0));
    assert!(
        (var - BROWNIAN_SQUARE_INTEGRAL).abs() <= 0.10 * BROWNIAN_SQUARE_INTEGRAL,
        "Var(n^-3/4 Sigma_n) = {var} vs {BROWNIAN_SQUARE_INTEGRAL}"
    );
}
