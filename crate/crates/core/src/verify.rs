//! Statistical verification harness.
//!
//! Turns the lab's limit-theorem predictions into reproducible pass/fail
//! checks: exact combinatorial identities, a two-sample Kolmogorov–Smirnov
//! test with the asymptotic p-value, scaling-slope fits, local-time
//! asymptotics, distributional comparison of the normalized sums against the
//! simulated limit process, and the increment-moment (tightness) bound.
//! Every check records the seeds and sample sizes it used.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dependence::{dependence_bound, DecayBound};
use crate::limit::LimitConfig;
use crate::rng::{stream, STREAM_AUX, STREAM_WALK};
use crate::rwrs::{second_moment_identity_exact, RwrsConfig};
use crate::scenery::{Observable, SceneryModel};
use crate::stats;
use crate::walk::IncrementLaw;
use crate::Result;

/// Normal-walk limit constant `E integral L_1(x)^2 dx = 8 / (3 sqrt(2 pi))`.
pub const BROWNIAN_SQUARE_INTEGRAL: f64 = 8.0 / (3.0 * 2.5066282746310002);

/// Two-sample Kolmogorov–Smirnov outcome.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    /// `sup |F_a - F_b|` over the pooled sample.
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov series at
    /// `lambda = D sqrt(n_a n_b / (n_a + n_b))`.
    pub p_value: f64,
}

/// Survival function `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`
/// of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200u32 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test. Both samples must be nonempty; ties are handled by
/// advancing both empirical distribution functions past each pooled value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    let mut xs = a.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    let mut ys = b.to_vec();
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xs[i].min(ys[j]);
        while i < na && xs[i] <= x {
            i += 1;
        }
        while j < nb && ys[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        d = d.max(gap);
    }
    let effective = (na * nb) as f64 / (na + nb) as f64;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(d * effective.sqrt()),
    }
}

/// A single reproducible pass/fail verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Mandatory checks decide the overall report verdict.
    pub mandatory: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub runtime_ms: u128,
    pub detail: String,
}

impl CheckResult {
    pub fn render(&self) -> String {
        format!(
            "[{}] {:<38} stat={:<12.6} thr={:<10.4} seeds={:?} sizes={:?} ({} ms)\n        {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.seeds,
            self.sample_sizes,
            self.runtime_ms,
            self.detail,
        )
    }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn ms(&self) -> u128 {
        self.0.elapsed().as_millis()
    }
}

/// Derived per-check seed, spaced by the golden-ratio increment so distinct
/// checks never share streams.
fn check_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Exact occupation identities on sampled paths: counts sum to `n + 1`,
/// self-intersection counts are symmetric, dominated by the lag-0 value,
/// total `(n + 1)^2`, `alpha(n, 0)` equals the sum of squared counts, and
/// (for short paths) the convolution matches the brute-force double sum.
pub fn check_walk_identities(seed: u64, replicates: usize, n: usize) -> CheckResult {
    let timer = Timer::start();
    let laws = [
        IncrementLaw::simple(),
        IncrementLaw::lazy(),
        IncrementLaw::skewed(),
    ];
    let mut violations = 0usize;
    let mut checked = 0usize;
    for (li, law) in laws.iter().enumerate() {
        for rep in 0..replicates {
            let mut rng = stream(seed, (li * replicates + rep) as u64, STREAM_WALK);
            let path = law.sample_path(n, &mut rng);
            let profile = path.local_time();
            let table = profile.alpha_table();
            let m = n as u64 + 1;
            if profile.counts().iter().sum::<u64>() != m {
                violations += 1;
            }
            if table.total() != m * m {
                violations += 1;
            }
            let sumsq: u64 = profile.counts().iter().map(|&c| c * c).sum();
            if table.alpha(0) != sumsq {
                violations += 1;
            }
            for lag in 0..=table.max_lag() {
                if profile.self_intersection(lag) != profile.self_intersection(-lag)
                    || profile.self_intersection(lag) > table.alpha(0)
                {
                    violations += 1;
                }
            }
            checked += 1;
        }
        // brute-force cross-check on short paths
        for rep in 0..8 {
            let mut rng = stream(seed, (1 << 32) + (li * 8 + rep) as u64, STREAM_WALK);
            let path = law.sample_path(12, &mut rng);
            let profile = path.local_time();
            let pos = path.positions();
            for i in -13i64..=13 {
                let brute = pos
                    .iter()
                    .flat_map(|&a| pos.iter().map(move |&b| a - b))
                    .filter(|&d| d == i)
                    .count() as u64;
                if profile.self_intersection(i) != brute {
                    violations += 1;
                }
            }
            checked += 1;
        }
    }
    CheckResult {
        name: "walk-identities".into(),
        mandatory: true,
        statistic: violations as f64,
        threshold: 0.0,
        pass: violations == 0,
        sample_sizes: vec![checked, n],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "{checked} sampled paths over {} laws, exact identities",
            laws.len()
        ),
    }
}

/// Exact second-moment identity by full path enumeration for the simple walk
/// and every analytic-covariance model, up to `n_max` steps.
pub fn check_second_moment_exact(n_max: usize) -> Result<CheckResult> {
    let timer = Timer::start();
    let law = IncrementLaw::simple();
    let models = [
        SceneryModel::iid_standard_normal(),
        SceneryModel::linear_geometric(0.5, 1.0)?,
        SceneryModel::doubling_map(Observable::Centered),
    ];
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for model in &models {
        for n in 1..=n_max {
            let check = second_moment_identity_exact(&law, model, n)?;
            worst = worst.max(check.rel_diff);
            cases += 1;
        }
    }
    Ok(CheckResult {
        name: "second-moment-identity-exact".into(),
        mandatory: true,
        statistic: worst,
        threshold: 1e-10,
        pass: worst <= 1e-10,
        sample_sizes: vec![cases, n_max],
        seeds: vec![],
        runtime_ms: timer.ms(),
        detail: format!(
            "full enumeration, simple walk, {} models, n <= {n_max}",
            models.len()
        ),
    })
}

/// Exact conservation of the binned occupation measure.
pub fn check_occupation_conservation(seed: u64, replicates: usize) -> Result<CheckResult> {
    let timer = Timer::start();
    let cfg = LimitConfig::new(1e-3, 2e-2, vec![0.3, 0.7, 1.0], replicates, seed)?;
    let worst = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, rep as u64, STREAM_AUX);
            cfg.times
                .iter()
                .map(|&t| {
                    let field = cfg.sample_local_time(t, &mut rng);
                    let steps = (t / cfg.time_step).round();
                    (field.mass() - steps * cfg.time_step).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(CheckResult {
        name: "occupation-conservation".into(),
        mandatory: true,
        statistic: worst,
        threshold: 1e-12,
        pass: worst <= 1e-12,
        sample_sizes: vec![replicates, 3],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: "h * sum_j L_t(x_j) equals the covered time exactly".into(),
    })
}

/// Slope of `log Var(Sigma_n)` against `log n` over a horizon grid; the
/// three-quarters normalization predicts 3/2.
pub fn check_variance_scaling(
    model: &SceneryModel,
    replicates: usize,
    seed: u64,
    mandatory: bool,
) -> Result<CheckResult> {
    let timer = Timer::start();
    let grid = [256usize, 1024, 4096];
    let mut log_vars = Vec::with_capacity(grid.len());
    for (gi, &n) in grid.iter().enumerate() {
        let cfg = RwrsConfig::new(
            IncrementLaw::simple(),
            model.clone(),
            n,
            vec![1.0],
            replicates,
            check_seed(seed, gi as u64),
        )?;
        let batch = cfg.simulate()?;
        log_vars.push(stats::variance(&batch.column(0)).ln());
    }
    let log_ns: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let slope = stats::regression_slope(&log_ns, &log_vars);
    Ok(CheckResult {
        name: format!("variance-scaling-{}", model.label()),
        mandatory,
        statistic: slope,
        threshold: 0.1,
        pass: (1.4..=1.6).contains(&slope),
        sample_sizes: vec![replicates, grid.len()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!("slope over n in {grid:?} must lie in [1.4, 1.6]"),
    })
}

/// Sizes for the marginal distributional comparison.
#[derive(Debug, Clone, Copy)]
pub struct FddParams {
    pub horizon: usize,
    pub walk_replicates: usize,
    pub limit_replicates: usize,
    pub time_step: f64,
    pub bin_width: f64,
    /// Window length for the long-run-variance estimate.
    pub sigma_sample_length: usize,
}

impl FddParams {
    pub fn reference() -> Self {
        Self {
            horizon: 4096,
            walk_replicates: 2000,
            limit_replicates: 5000,
            time_step: 1e-4,
            bin_width: 1e-2,
            sigma_sample_length: 1_000_000,
        }
    }

    pub fn quick() -> Self {
        Self {
            horizon: 2048,
            walk_replicates: 800,
            limit_replicates: 1500,
            time_step: 5e-4,
            bin_width: 2e-2,
            sigma_sample_length: 200_000,
        }
    }
}

/// Distributional comparison at `t = 1`: two-sample KS between the
/// normalized walk-in-scenery sums and the limit process scaled by the
/// estimated long-run standard deviation. Also checks the two-time
/// covariance against the limit prediction within 15%.
pub fn check_fdd_marginal(
    model: &SceneryModel,
    params: FddParams,
    seed: u64,
    mandatory: bool,
) -> Result<Vec<CheckResult>> {
    let limit_cfg = LimitConfig::new(
        params.time_step,
        params.bin_width,
        vec![0.5, 1.0],
        params.limit_replicates,
        check_seed(seed, 101),
    )?;
    let limit_batch = limit_cfg.simulate();
    check_fdd_marginal_against(model, params, seed, mandatory, &limit_batch)
}

/// [`check_fdd_marginal`] against a pre-simulated limit batch at times
/// `(1/2, 1)`, so several models can share one batch.
pub fn check_fdd_marginal_against(
    model: &SceneryModel,
    params: FddParams,
    seed: u64,
    mandatory: bool,
    limit_batch: &crate::limit::LimitBatch,
) -> Result<Vec<CheckResult>> {
    let timer = Timer::start();
    let mut sigma_rng = stream(seed, u64::MAX, STREAM_AUX);
    let sigma_sq = model
        .empirical_covariance(40, params.sigma_sample_length, &mut sigma_rng)?
        .long_run_variance;
    let sigma = sigma_sq.sqrt();

    let cfg = RwrsConfig::new(
        IncrementLaw::simple(),
        model.clone(),
        params.horizon,
        vec![0.5, 1.0],
        params.walk_replicates,
        seed,
    )?;
    let walk_batch = cfg.simulate()?;

    let walk_final = walk_batch.normalized_column(1);
    let limit_final: Vec<f64> = limit_batch.column(1).iter().map(|v| sigma * v).collect();
    let ks = ks_two_sample(&walk_final, &limit_final);

    let marginal = CheckResult {
        name: format!("fdd-marginal-{}", model.label()),
        mandatory,
        statistic: ks.p_value,
        threshold: 0.01,
        pass: ks.p_value >= 0.01,
        sample_sizes: vec![params.walk_replicates, limit_batch.replicates()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "KS D = {:.5}, sigma_hat = {sigma:.5}, n = {}",
            ks.statistic, params.horizon
        ),
    };

    let timer = Timer::start();
    let scale = (params.horizon as f64).powf(1.5);
    let walk_cov = stats::covariance(&walk_batch.column(0), &walk_batch.column(1)) / scale;
    let limit_cov = sigma_sq * stats::covariance(&limit_batch.column(0), &limit_batch.column(1));
    let ratio = walk_cov / limit_cov;
    let covariance = CheckResult {
        name: format!("fdd-covariance-{}", model.label()),
        mandatory: false,
        statistic: ratio,
        threshold: 0.15,
        pass: (ratio - 1.0).abs() <= 0.15 && walk_cov.is_finite(),
        sample_sizes: vec![params.walk_replicates, limit_batch.replicates()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "cov(Sigma_[n/2], Sigma_n)/n^1.5 = {walk_cov:.5} vs sigma^2 cov(D_1/2, D_1) = {limit_cov:.5}"
        ),
    };
    Ok(vec![marginal, covariance])
}

/// Local-time asymptotics of the walk: normalized maxima shrink, the
/// self-intersection moments grow no faster than `n^{3p/2}`, and the lag
/// increments of the self-intersection counts scale smoothly.
pub fn check_local_time_asymptotics(
    law: &IncrementLaw,
    replicates: usize,
    seed: u64,
) -> Vec<CheckResult> {
    let timer = Timer::start();
    let grid = [256usize, 1024, 4096];
    let lags: [i64; 5] = [0, 1, 2, 4, 8];
    // per n: (normalized maxima, alpha(n,0) values, alpha at the lag grid)
    let mut maxima = Vec::new();
    let mut alpha0: Vec<Vec<f64>> = Vec::new();
    let mut alpha_lags: Vec<Vec<Vec<f64>>> = Vec::new();
    for (gi, &n) in grid.iter().enumerate() {
        let rows: Vec<(f64, f64, Vec<f64>)> = (0..replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(seed, (gi * replicates + rep) as u64, STREAM_WALK);
                let profile = law.sample_local_time(n, &mut rng);
                let max_norm = profile.max_count() as f64 / (n as f64).powf(0.75);
                let a0 = profile.self_intersection(0) as f64;
                let at_lags = lags
                    .iter()
                    .map(|&l| profile.self_intersection(l) as f64)
                    .collect();
                (max_norm, a0, at_lags)
            })
            .collect();
        maxima.push(rows.iter().map(|r| r.0).collect::<Vec<f64>>());
        alpha0.push(rows.iter().map(|r| r.1).collect());
        alpha_lags.push(rows.iter().map(|r| r.2.clone()).collect());
    }

    // (i) medians of the normalized maxima strictly decrease along the grid
    let medians: Vec<f64> = maxima.iter().map(|v| stats::median(v)).collect();
    let worst_ratio = medians
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0f64, f64::max);
    let decreasing = CheckResult {
        name: "local-time-max-decreasing".into(),
        mandatory: false,
        statistic: worst_ratio,
        threshold: 1.0,
        pass: worst_ratio < 1.0,
        sample_sizes: vec![replicates, grid.len()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!("medians of n^-3/4 max N: {medians:?}"),
    };

    // (ii)(a) moment growth exponents
    let timer = Timer::start();
    let log_ns: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut slopes = Vec::new();
    for p in [1i32, 2] {
        let log_moments: Vec<f64> = alpha0
            .iter()
            .map(|vals| {
                let powered: Vec<f64> = vals.iter().map(|a| a.powi(p)).collect();
                stats::mean(&powered).ln()
            })
            .collect();
        let slope = stats::regression_slope(&log_ns, &log_moments);
        worst_excess = worst_excess.max(slope - 1.5 * p as f64);
        slopes.push(slope);
    }
    let moments = CheckResult {
        name: "self-intersection-moment-growth".into(),
        mandatory: false,
        statistic: worst_excess,
        threshold: 0.1,
        pass: worst_excess <= 0.1,
        sample_sizes: vec![replicates, grid.len()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!("slopes for p = 1, 2: {slopes:?} (caps 1.5, 3.0 + 0.1)"),
    };

    // (iii) lag smoothness: || alpha(n,i) - alpha(n,j) ||_2 normalized by
    // n^{(3-lambda)/2} |i-j|^lambda, max over lag pairs, stable across n.
    // Stability is judged on the two largest horizons; at the smallest one
    // the widest lag gap is comparable to the walk's range and sits outside
    // the smooth-scaling regime.
    let timer = Timer::start();
    let mut worst_stability = 0.0f64;
    let mut details = Vec::new();
    for &lambda in &[0.25, 0.5, 0.75] {
        let mut per_n = Vec::new();
        for (gi, &n) in grid.iter().enumerate() {
            let mut max_ratio = 0.0f64;
            for a in 0..lags.len() {
                for b in a + 1..lags.len() {
                    let m2 = stats::mean(
                        &alpha_lags[gi]
                            .iter()
                            .map(|row| {
                                let d = row[a] - row[b];
                                d * d
                            })
                            .collect::<Vec<f64>>(),
                    );
                    let gap = (lags[b] - lags[a]) as f64;
                    let norm = (n as f64).powf((3.0 - lambda) / 2.0) * gap.powf(lambda);
                    max_ratio = max_ratio.max(m2.sqrt() / norm);
                }
            }
            per_n.push(max_ratio);
        }
        let tail = &per_n[per_n.len() - 2..];
        let spread = tail.iter().cloned().fold(0.0f64, f64::max)
            / tail.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_stability = worst_stability.max(spread);
        details.push(format!("lambda {lambda}: ratios {per_n:?}"));
    }
    let smoothness = CheckResult {
        name: "self-intersection-lag-smoothness".into(),
        mandatory: false,
        statistic: worst_stability,
        threshold: 2.0,
        pass: worst_stability.is_finite() && worst_stability <= 2.0,
        sample_sizes: vec![replicates, grid.len(), lags.len()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: details.join("; "),
    };

    vec![decreasing, moments, smoothness]
}

/// Distributional check of the quadratic local-time functional against the
/// Brownian prediction, single-time and two-time versions.
pub fn check_quadratic_functional(
    law: &IncrementLaw,
    horizon: usize,
    walk_replicates: usize,
    limit_replicates: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let timer = Timer::start();
    let scale = (horizon as f64).powf(1.5);

    // single time: n^{-3/2} sum_i N_n(i)^2 vs integral L_1^2
    let walk_samples: Vec<f64> = (0..walk_replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, rep as u64, STREAM_WALK);
            law.sample_local_time(horizon, &mut rng)
                .self_intersection(0) as f64
                / scale
        })
        .collect();
    let limit_cfg = LimitConfig::new(1e-4, 1e-2, vec![1.0], limit_replicates, check_seed(seed, 7))?;
    let limit_samples = limit_cfg.quadratic_functional_samples(&[1.0]);
    let ks = ks_two_sample(&walk_samples, &limit_samples);
    let mean = stats::mean(&walk_samples);
    let mean_ok = (mean - BROWNIAN_SQUARE_INTEGRAL).abs() <= 0.10 * BROWNIAN_SQUARE_INTEGRAL;
    let single = CheckResult {
        name: "quadratic-functional-single-time".into(),
        mandatory: false,
        statistic: ks.p_value,
        threshold: 0.01,
        pass: ks.p_value >= 0.01 && mean_ok,
        sample_sizes: vec![walk_replicates, limit_replicates],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "KS D = {:.5}; mean {mean:.5} vs {:.5} (10%)",
            ks.statistic, BROWNIAN_SQUARE_INTEGRAL
        ),
    };

    // two times with weights (1, -1) at t = (1/2, 1)
    let timer = Timer::start();
    let half = horizon / 2;
    let walk_two: Vec<f64> = (0..walk_replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, (walk_replicates + rep) as u64, STREAM_WALK);
            let path = law.sample_path(horizon, &mut rng);
            let early = path.local_time_at(half);
            let full = path.local_time();
            let (lo, hi) = path.hull();
            let mut acc = 0.0;
            for site in lo..=hi {
                let d = early.count_at(site) as f64 - full.count_at(site) as f64;
                acc += d * d;
            }
            acc / scale
        })
        .collect();
    let limit_cfg = LimitConfig::new(
        1e-4,
        1e-2,
        vec![0.5, 1.0],
        limit_replicates,
        check_seed(seed, 8),
    )?;
    let limit_two = limit_cfg.quadratic_functional_samples(&[1.0, -1.0]);
    let nonnegative = walk_two.iter().chain(&limit_two).all(|&v| v >= 0.0);
    let ks2 = ks_two_sample(&walk_two, &limit_two);
    let two_time = CheckResult {
        name: "quadratic-functional-two-time".into(),
        mandatory: false,
        statistic: ks2.p_value,
        threshold: 0.01,
        pass: ks2.p_value >= 0.01 && nonnegative,
        sample_sizes: vec![walk_replicates, limit_replicates],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "weights (1, -1) at t = (0.5, 1); KS D = {:.5}; all samples nonnegative: {nonnegative}",
            ks2.statistic
        ),
    };
    Ok(vec![single, two_time])
}

/// Increment-moment bound: `E|Sigma_[nt] - Sigma_[nt1]|^2` normalized by
/// `n^{3/2} |t - t1|^{3/2}` stays bounded and stable across horizons.
pub fn check_tightness_moment(
    model: &SceneryModel,
    replicates: usize,
    seed: u64,
) -> Result<CheckResult> {
    let timer = Timer::start();
    let pairs = [
        (0.1, 0.2),
        (0.25, 0.5),
        (0.5, 1.0),
        (0.2, 0.8),
        (0.6, 0.9),
        (0.75, 1.0),
    ];
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    let index_of = |t: f64| times.iter().position(|&u| u == t).unwrap();

    let grid = [1024usize, 4096];
    let mut per_n = Vec::new();
    for (gi, &n) in grid.iter().enumerate() {
        let cfg = RwrsConfig::new(
            IncrementLaw::simple(),
            model.clone(),
            n,
            times.clone(),
            replicates,
            check_seed(seed, gi as u64),
        )?;
        let batch = cfg.simulate()?;
        let mut max_ratio = 0.0f64;
        for &(t1, t) in &pairs {
            let c1 = batch.column(index_of(t1));
            let c2 = batch.column(index_of(t));
            let m2 = stats::mean(
                &c1.iter()
                    .zip(&c2)
                    .map(|(a, b)| (b - a) * (b - a))
                    .collect::<Vec<f64>>(),
            );
            let ratio = m2 / ((n as f64).powf(1.5) * (t - t1).powf(1.5));
            max_ratio = max_ratio.max(ratio);
        }
        per_n.push(max_ratio);
    }
    let spread = per_n.iter().cloned().fold(0.0f64, f64::max)
        / per_n.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CheckResult {
        name: format!("tightness-moment-{}", model.label()),
        mandatory: false,
        statistic: spread,
        threshold: 2.0,
        pass: spread.is_finite() && spread <= 2.0,
        sample_sizes: vec![replicates, pairs.len(), grid.len()],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!(
            "max normalized increment moments per n {grid:?}: {per_n:?} (stable within factor 2)"
        ),
    })
}

/// Summability verdicts for the model-derived decay bounds and the
/// polynomial threshold `a > 3/2`.
pub fn check_summability_suite() -> Result<CheckResult> {
    let timer = Timer::start();
    let mut wrong = 0usize;
    let mut cases = 0usize;

    let models = [
        SceneryModel::iid_standard_normal(),
        SceneryModel::linear_geometric(0.5, 1.0)?,
        SceneryModel::iterated_function(0.5, 1.0)?,
        SceneryModel::doubling_map(Observable::Centered),
    ];
    for model in &models {
        let report = dependence_bound(model).check_summability(0.5)?;
        cases += 1;
        if !report.verdict {
            wrong += 1;
        }
    }

    let expectations: [(f64, bool); 4] = [(2.0, true), (1.6, true), (1.0, false), (1.5, false)];
    for &(a, expected) in &expectations {
        let bound = DecayBound::polynomial(1.0, a, "suite")?;
        cases += 1;
        if bound.holds_for_some_epsilon().0 != expected {
            wrong += 1;
        }
        // a fixed-epsilon spot check on a dense grid for the failing case
        if !expected {
            for eps in (1..20).map(|k| k as f64 / 20.0) {
                cases += 1;
                if bound.check_summability(eps)?.verdict {
                    wrong += 1;
                }
            }
        }
    }
    // the named witness point
    cases += 1;
    if !DecayBound::polynomial(1.0, 2.0, "suite")?
        .check_summability(0.9)?
        .verdict
    {
        wrong += 1;
    }

    Ok(CheckResult {
        name: "summability-verdicts".into(),
        mandatory: false,
        statistic: wrong as f64,
        threshold: 0.0,
        pass: wrong == 0,
        sample_sizes: vec![cases],
        seeds: vec![],
        runtime_ms: timer.ms(),
        detail: "geometric bounds pass at eps = 0.5; polynomial threshold a > 3/2".into(),
    })
}

/// Long-run variance estimates against their closed forms.
pub fn check_long_run_variance_estimates(sample_length: usize, seed: u64) -> Result<CheckResult> {
    let timer = Timer::start();
    let cases = [
        (SceneryModel::linear_geometric(0.5, 1.0)?, 4.0),
        (SceneryModel::doubling_map(Observable::Centered), 0.25),
    ];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (ci, (model, target)) in cases.iter().enumerate() {
        let mut rng = stream(seed, ci as u64, STREAM_AUX);
        let summary = model.empirical_covariance(40, sample_length, &mut rng)?;
        let rel = (summary.long_run_variance - target).abs() / target;
        worst = worst.max(rel);
        details.push(format!(
            "{}: {:.4} vs {target}",
            model.label(),
            summary.long_run_variance
        ));
    }
    Ok(CheckResult {
        name: "long-run-variance-closed-forms".into(),
        mandatory: false,
        statistic: worst,
        threshold: 0.05,
        pass: worst <= 0.05,
        sample_sizes: vec![sample_length, 40],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: details.join("; "),
    })
}

/// Mean of the discretized `integral L_1^2` against the Brownian constant,
/// and self-similarity of the limit-process variance.
pub fn check_limit_constants(replicates: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let timer = Timer::start();
    let cfg = LimitConfig::new(1e-4, 1e-2, vec![1.0], replicates, seed)?;
    let squares: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, rep as u64, crate::rng::STREAM_BROWNIAN);
            cfg.sample_local_time(1.0, &mut rng).square_integral()
        })
        .collect();
    let mean = stats::mean(&squares);
    let rel = (mean - BROWNIAN_SQUARE_INTEGRAL).abs() / BROWNIAN_SQUARE_INTEGRAL;
    let constant = CheckResult {
        name: "brownian-square-integral".into(),
        mandatory: false,
        statistic: mean,
        threshold: 0.05,
        pass: rel <= 0.05,
        sample_sizes: vec![replicates],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!("mean integral L_1^2 = {mean:.5} vs {BROWNIAN_SQUARE_INTEGRAL:.5} (5%)"),
    };

    let timer = Timer::start();
    let cfg = LimitConfig::new(
        1e-4,
        1e-2,
        vec![0.25, 0.5, 1.0],
        replicates,
        check_seed(seed, 3),
    )?;
    let batch = cfg.simulate();
    let ratios: Vec<f64> = (0..3)
        .map(|j| stats::variance(&batch.column(j)) / batch.times[j].powf(1.5))
        .collect();
    let reference = ratios[2];
    let worst = ratios
        .iter()
        .map(|r| (r - reference).abs() / reference)
        .fold(0.0f64, f64::max);
    let self_similarity = CheckResult {
        name: "limit-self-similarity".into(),
        mandatory: false,
        statistic: worst,
        threshold: 0.10,
        pass: worst <= 0.10,
        sample_sizes: vec![replicates, 3],
        seeds: vec![seed],
        runtime_ms: timer.ms(),
        detail: format!("Var(D_t)/t^1.5 over t in [0.25, 0.5, 1]: {ratios:?}"),
    };
    Ok(vec![constant, self_similarity])
}

/// Echo of the suite configuration, stored in the report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub master_seed: u64,
    pub quick: bool,
}

/// Ordered check results with the overall verdict (the conjunction of the
/// mandatory checks).
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub config: ReportConfig,
    pub results: Vec<CheckResult>,
    pub overall_pass: bool,
}

impl VerificationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "verification suite (seed {}, {})\n",
            self.config.master_seed,
            if self.config.quick { "quick" } else { "full" }
        ));
        for r in &self.results {
            out.push_str(&r.render());
            out.push('\n');
        }
        out.push_str(&format!(
            "overall: {} ({} checks, {} mandatory)\n",
            if self.overall_pass { "PASS" } else { "FAIL" },
            self.results.len(),
            self.results.iter().filter(|r| r.mandatory).count()
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the mandatory suite (and, unless `quick`, the full set of
/// statistical checks).
pub fn run_suite(master_seed: u64, quick: bool) -> Result<VerificationReport> {
    let mut results = Vec::new();
    let seed = |i: u64| check_seed(master_seed, i);

    if quick {
        results.push(check_walk_identities(seed(1), 40, 256));
        results.push(check_second_moment_exact(8)?);
        results.push(check_occupation_conservation(seed(2), 30)?);
        results.push(check_variance_scaling(
            &SceneryModel::iid_standard_normal(),
            600,
            seed(3),
            true,
        )?);
        results.extend(check_fdd_marginal(
            &SceneryModel::iid_standard_normal(),
            FddParams::quick(),
            seed(4),
            true,
        )?);
    } else {
        results.push(check_walk_identities(seed(1), 100, 512));
        results.push(check_second_moment_exact(8)?);
        results.push(check_occupation_conservation(seed(2), 50)?);

        let models = [
            SceneryModel::iid_standard_normal(),
            SceneryModel::linear_geometric(0.5, 1.0)?,
            SceneryModel::doubling_map(Observable::Centered),
        ];
        for (mi, model) in models.iter().enumerate() {
            let mandatory = mi == 0;
            results.push(check_variance_scaling(
                model,
                2000,
                seed(10 + mi as u64),
                mandatory,
            )?);
            results.extend(check_fdd_marginal(
                model,
                FddParams::reference(),
                seed(20 + mi as u64),
                mandatory,
            )?);
        }
        results.extend(check_local_time_asymptotics(
            &IncrementLaw::simple(),
            500,
            seed(30),
        ));
        results.extend(check_quadratic_functional(
            &IncrementLaw::simple(),
            4096,
            1000,
            5000,
            seed(31),
        )?);
        results.push(check_tightness_moment(
            &SceneryModel::iid_standard_normal(),
            2000,
            seed(32),
        )?);
        results.push(check_tightness_moment(
            &SceneryModel::linear_geometric(0.5, 1.0)?,
            2000,
            seed(33),
        )?);
        results.push(check_summability_suite()?);
        results.push(check_long_run_variance_estimates(1_000_000, seed(34))?);
        results.extend(check_limit_constants(5000, seed(35))?);
    }

    let overall_pass = results.iter().filter(|r| r.mandatory).all(|r| r.pass);
    Ok(VerificationReport {
        config: ReportConfig { master_seed, quick },
        results,
        overall_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let ks = ks_two_sample(&a, &a);
        assert_eq!(ks.statistic, 0.0);
        assert_eq!(ks.p_value, 1.0);
    }

    #[test]
    fn ks_is_symmetric_in_its_arguments() {
        let a = [0.3, -1.2, 0.8, 2.4, -0.5];
        let b = [0.1, 0.9, -0.4, 1.5];
        let ab = ks_two_sample(&a, &b);
        let ba = ks_two_sample(&b, &a);
        assert_eq!(ab.statistic, ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn ks_detects_a_unit_mean_shift() {
        let mut rng = stream(77, 0, STREAM_AUX);
        let a: Vec<f64> = (0..1000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let b: Vec<f64> = (0..1000)
            .map(|_| rng.sample::<f64, _>(StandardNormal) + 1.0)
            .collect();
        let ks = ks_two_sample(&a, &b);
        assert!(ks.p_value < 1e-6, "p = {}", ks.p_value);
    }

    #[test]
    fn ks_null_level_is_honest() {
        // null-distribution oracle: same-law samples must be accepted at the
        // 0.01 level in at least 98 of 100 seeded repetitions
        let mut accepted = 0;
        for seedling in 0..100u64 {
            let mut rng = stream(1000 + seedling, 0, STREAM_AUX);
            let a: Vec<f64> = (0..1000)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let b: Vec<f64> = (0..1000)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            if ks_two_sample(&a, &b).p_value > 0.01 {
                accepted += 1;
            }
        }
        assert!(accepted >= 98, "accepted only {accepted}/100");
    }

    #[test]
    fn kolmogorov_survival_matches_tabulated_points() {
        // Q(1.628) is the classical 1% critical point; Q(1.36) the 5% one
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 5e-4);
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 2e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(4.0) < 1e-12);
    }

    #[test]
    fn walk_identities_check_passes() {
        let r = check_walk_identities(5, 10, 128);
        assert!(r.pass, "{}", r.render());
        assert!(r.mandatory);
    }

    #[test]
    fn second_moment_check_passes() {
        let r = check_second_moment_exact(6).unwrap();
        assert!(r.pass, "{}", r.render());
    }

    #[test]
    fn occupation_check_passes() {
        let r = check_occupation_conservation(6, 10).unwrap();
        assert!(r.pass, "{}", r.render());
    }

    #[test]
    fn summability_suite_passes() {
        let r = check_summability_suite().unwrap();
        assert!(r.pass, "{}", r.render());
    }

    #[test]
    fn report_serializes_and_renders() {
        let report = VerificationReport {
            config: ReportConfig {
                master_seed: 42,
                quick: true,
            },
            results: vec![check_walk_identities(42, 5, 64)],
            overall_pass: true,
        };
        let json = report.to_json();
        assert!(json.contains("walk-identities"));
        assert!(report.render_text().contains("PASS"));
    }
}
