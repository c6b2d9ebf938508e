//! Random walk in random scenery: the sums `Sigma_n = sum_{k=0}^n xi_{S_k}`.
//!
//! Walk and scenery are independent, so each replicate samples the walk
//! first, then samples one scenery window covering the visited hull and
//! accumulates the sum in a single pass, recording `Sigma_{[n t_j]}` at every
//! requested time. The exact second-moment identity
//! `E[Sigma_n^2] = sum_i E[alpha(n, i)] r(i)` is verifiable by full path
//! enumeration at small `n` and by Monte Carlo otherwise.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, STREAM_SCENERY, STREAM_WALK};
use crate::scenery::{SceneryModel, SceneryWindow};
use crate::stats;
use crate::walk::{IncrementLaw, ReachabilityReport, WalkPath};
use crate::{Error, Result};

/// Default truncation level cap for the reachability check attached to every
/// configuration.
const REACHABILITY_Q_MAX: u32 = 8;
const REACHABILITY_BOUND: i64 = 64;

/// Exact-mode enumeration cap on `|support|^n`.
const ENUMERATION_CAP: f64 = 1e7;

/// A fully specified walk-in-scenery experiment.
#[derive(Debug, Clone)]
pub struct RwrsConfig {
    pub law: IncrementLaw,
    pub model: SceneryModel,
    /// Step horizon `n`.
    pub horizon: usize,
    /// Strictly increasing evaluation times in (0, 1].
    pub times: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Reachability evidence for the walk, attached at construction.
    pub reachability: ReachabilityReport,
}

impl RwrsConfig {
    pub fn new(
        law: IncrementLaw,
        model: SceneryModel,
        horizon: usize,
        times: Vec<f64>,
        replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidConfig("need at least one time".into()));
        }
        if times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidConfig("times must lie in (0, 1]".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "times must be strictly increasing".into(),
            ));
        }
        if replicates == 0 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        let reachability = law.check_reachability(REACHABILITY_Q_MAX, REACHABILITY_BOUND);
        Ok(Self {
            law,
            model,
            horizon,
            times,
            replicates,
            master_seed,
            reachability,
        })
    }

    /// Step indices `[n t_j]` at which the sum is recorded.
    pub fn checkpoints(&self) -> Vec<usize> {
        self.times
            .iter()
            .map(|t| (self.horizon as f64 * t).floor() as usize)
            .collect()
    }

    /// Runs all replicates (in parallel; output independent of scheduling).
    pub fn simulate(&self) -> Result<RwrsBatch> {
        let checkpoints = self.checkpoints();
        let rows: Result<Vec<Vec<f64>>> = (0..self.replicates)
            .into_par_iter()
            .map(|rep| self.simulate_replicate(rep as u64, &checkpoints))
            .collect();
        let raw = rows?;
        let scale = (self.horizon as f64).powf(0.75);
        let normalized = raw
            .iter()
            .map(|row| row.iter().map(|v| v / scale).collect())
            .collect();
        Ok(RwrsBatch {
            horizon: self.horizon,
            times: self.times.clone(),
            master_seed: self.master_seed,
            raw,
            normalized,
        })
    }

    fn simulate_replicate(&self, rep: u64, checkpoints: &[usize]) -> Result<Vec<f64>> {
        let mut walk_rng = stream(self.master_seed, rep, STREAM_WALK);
        let path = self.law.sample_path(self.horizon, &mut walk_rng);
        let (lo, hi) = path.hull();
        let mut scenery_rng = stream(self.master_seed, rep, STREAM_SCENERY);
        let window = self.model.sample_window(lo, hi, &mut scenery_rng)?;
        Ok(sums_along(&path, &window, checkpoints))
    }
}

/// Evaluates `Sigma_{k_j} = sum_{k=0}^{k_j} xi_{S_k}` for each checkpoint in
/// one pass. Checkpoints must be non-decreasing and within the path horizon;
/// the window must cover the path hull.
pub fn sums_along(path: &WalkPath, window: &SceneryWindow, checkpoints: &[usize]) -> Vec<f64> {
    let positions = path.positions();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let mut acc = 0.0;
    for (k, &pos) in positions.iter().enumerate() {
        acc += window.value_at(pos);
        while next < checkpoints.len() && checkpoints[next] == k {
            out.push(acc);
            next += 1;
        }
    }
    assert_eq!(
        out.len(),
        checkpoints.len(),
        "checkpoints must lie within the path horizon"
    );
    out
}

/// Monte Carlo batch of `Sigma_{[n t_j]}` values, raw and normalized by
/// `n^{3/4}`.
#[derive(Debug, Clone)]
pub struct RwrsBatch {
    pub horizon: usize,
    pub times: Vec<f64>,
    pub master_seed: u64,
    /// `replicates x times` matrix of raw sums.
    pub raw: Vec<Vec<f64>>,
    /// The same matrix divided by `horizon^{3/4}`.
    pub normalized: Vec<Vec<f64>>,
}

impl RwrsBatch {
    pub fn replicates(&self) -> usize {
        self.raw.len()
    }

    /// Stream key of one row: the row is reproducible from
    /// `(master seed, replicate index)` through the per-tag streams.
    pub fn replicate_key(&self, replicate: usize) -> (u64, u64) {
        (self.master_seed, replicate as u64)
    }

    /// Raw column for the `j`-th time.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.raw.iter().map(|row| row[j]).collect()
    }

    /// Normalized column for the `j`-th time.
    pub fn normalized_column(&self, j: usize) -> Vec<f64> {
        self.normalized.iter().map(|row| row[j]).collect()
    }

    pub fn summary(&self) -> BatchSummary {
        let per_time = self
            .times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let raw = self.column(j);
                let norm = self.normalized_column(j);
                TimeSummary {
                    time: t,
                    checkpoint: (self.horizon as f64 * t).floor() as usize,
                    mean_raw: stats::mean(&raw),
                    variance_raw: stats::variance(&raw),
                    mean_normalized: stats::mean(&norm),
                    variance_normalized: stats::variance(&norm),
                    quantiles_normalized: QUANTILE_LEVELS
                        .iter()
                        .map(|&q| (q, stats::quantile(&norm, q)))
                        .collect(),
                }
            })
            .collect();
        BatchSummary {
            horizon: self.horizon,
            replicates: self.replicates(),
            master_seed: self.master_seed,
            per_time,
        }
    }

    /// Writes all values as CSV (`replicate,t,raw,normalized`).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 rwrs-batch")?;
        writeln!(out, "replicate,t,raw,normalized")?;
        for (rep, (raw_row, norm_row)) in self.raw.iter().zip(&self.normalized).enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                writeln!(out, "{rep},{t},{},{}", raw_row[j], norm_row[j])?;
            }
        }
        Ok(())
    }
}

const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Per-time moments and quantiles of a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSummary {
    pub time: f64,
    pub checkpoint: usize,
    pub mean_raw: f64,
    pub variance_raw: f64,
    pub mean_normalized: f64,
    pub variance_normalized: f64,
    pub quantiles_normalized: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub horizon: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub per_time: Vec<TimeSummary>,
}

/// Two routes to `E[Sigma_n^2]`: direct evaluation (`lhs`) and the
/// self-intersection contraction `sum_i E[alpha(n,i)] r(i)` (`rhs`).
#[derive(Debug, Clone, Serialize)]
pub struct MomentIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// Monte Carlo standard error of `lhs`, when estimated.
    pub lhs_se: Option<f64>,
}

fn identity_covariances(model: &SceneryModel, max_lag: usize) -> Result<Vec<f64>> {
    (0..=max_lag)
        .map(|k| {
            model.analytic_covariance(k).ok_or_else(|| {
                Error::Unsupported(format!(
                    "second-moment identity needs analytic covariances ({} model lacks them)",
                    model.label()
                ))
            })
        })
        .collect()
}

/// Verifies the second-moment identity exactly by enumerating every path of
/// `n` steps, weighting by path probability.
///
/// The left side contracts the occupation profile against the covariance
/// directly (`sum_{i,j} N(i) N(j) r(|i-j|)` per path); the right side
/// aggregates the self-intersection counts over paths first. Both use the
/// model's analytic covariance.
pub fn second_moment_identity_exact(
    law: &IncrementLaw,
    model: &SceneryModel,
    n: usize,
) -> Result<MomentIdentityCheck> {
    let support = law.atoms();
    let path_count = (support.len() as f64).powi(n as i32);
    if path_count > ENUMERATION_CAP {
        return Err(Error::InvalidConfig(format!(
            "exact mode would enumerate {path_count:.0} paths (cap {ENUMERATION_CAP:.0})"
        )));
    }
    let max_lag = n * law.max_abs_step() as usize;
    let r = identity_covariances(model, max_lag)?;

    let mut lhs = 0.0;
    let mut expected_alpha = vec![0.0f64; max_lag + 1];
    let mut digits = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let mut positions = Vec::with_capacity(n + 1);
        let mut pos = 0i64;
        positions.push(pos);
        for &d in &digits {
            let (step, p) = support[d];
            pos += step;
            prob *= p;
            positions.push(pos);
        }
        let profile = WalkPath::from_positions(positions)
            .expect("enumerated path starts at 0")
            .local_time();
        let counts = profile.counts();
        // lhs: direct double contraction of the profile with r
        let mut quad = 0.0;
        for i in 0..counts.len() {
            for j in 0..counts.len() {
                quad += counts[i] as f64 * counts[j] as f64 * r[i.abs_diff(j)];
            }
        }
        lhs += prob * quad;
        // rhs ingredient: expected self-intersection counts
        for (d, slot) in expected_alpha.iter_mut().enumerate() {
            if d < counts.len() {
                *slot += prob * profile.self_intersection(d as i64) as f64;
            }
        }

        // odometer over support indices
        let mut carry = true;
        for d in digits.iter_mut() {
            if carry {
                *d += 1;
                if *d == support.len() {
                    *d = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }

    let rhs = expected_alpha[0] * r[0]
        + 2.0
            * expected_alpha
                .iter()
                .zip(r.iter())
                .skip(1)
                .map(|(a, rv)| a * rv)
                .sum::<f64>();
    let abs_diff = (lhs - rhs).abs();
    Ok(MomentIdentityCheck {
        lhs,
        rhs,
        abs_diff,
        rel_diff: abs_diff / lhs.abs().max(1.0),
        lhs_se: None,
    })
}

/// Monte Carlo version of the identity: `lhs` averages simulated
/// `Sigma_n^2`, `rhs` contracts the empirically averaged self-intersection
/// table against the analytic covariance.
pub fn second_moment_identity_mc(
    law: &IncrementLaw,
    model: &SceneryModel,
    n: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<MomentIdentityCheck> {
    let max_lag = n * law.max_abs_step() as usize;
    let per_rep: Result<Vec<(f64, Vec<u64>)>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut walk_rng = stream(master_seed, rep as u64, STREAM_WALK);
            let path = law.sample_path(n, &mut walk_rng);
            let (lo, hi) = path.hull();
            let mut scenery_rng = stream(master_seed, rep as u64, STREAM_SCENERY);
            let window = model.sample_window(lo, hi, &mut scenery_rng)?;
            let sum = sums_along(&path, &window, &[n])[0];
            let profile = path.local_time();
            let alphas: Vec<u64> = (0..profile.width())
                .map(|d| profile.self_intersection(d as i64))
                .collect();
            Ok((sum * sum, alphas))
        })
        .collect();
    let per_rep = per_rep?;

    let squares: Vec<f64> = per_rep.iter().map(|(s, _)| *s).collect();
    let lhs = stats::mean(&squares);
    let lhs_se = (stats::variance(&squares) / replicates as f64).sqrt();

    let mut expected_alpha = vec![0.0f64; max_lag + 1];
    for (_, alphas) in &per_rep {
        for (d, &a) in alphas.iter().enumerate() {
            expected_alpha[d] += a as f64 / replicates as f64;
        }
    }
    let r = identity_covariances(model, max_lag)?;
    let rhs = expected_alpha[0] * r[0]
        + 2.0
            * expected_alpha
                .iter()
                .zip(r.iter())
                .skip(1)
                .map(|(a, rv)| a * rv)
                .sum::<f64>();
    let abs_diff = (lhs - rhs).abs();
    Ok(MomentIdentityCheck {
        lhs,
        rhs,
        abs_diff,
        rel_diff: abs_diff / lhs.abs().max(1.0),
        lhs_se: Some(lhs_se),
    })
}
