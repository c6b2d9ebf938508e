//! The continuum limit: Brownian local time integrated against two-sided
//! white noise.
//!
//! Brownian motion is discretized by Gaussian increments on a `dt` grid and
//! its local time is read off as an occupation density over spatial bins of
//! width `h` (mass-conserving by construction). The limit variable is then
//! assembled as `sum_j L_t(x_j) zeta_j` with independent `N(0, h)` bin
//! increments on each half-line, themselves independent of the path. The
//! occupation binning keeps `h * sum_j L_t(x_j) = t` exact per realization.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, STREAM_BROWNIAN, STREAM_NOISE_NEG, STREAM_NOISE_POS};
use crate::stats;
use crate::{Error, Result};

/// Discretization and batch parameters for the limit-process simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitConfig {
    /// Time step `dt`. The recommended pairing is `bin_width ~ sqrt(dt)`.
    pub time_step: f64,
    /// Spatial bin width `h`.
    pub bin_width: f64,
    /// Largest simulated time.
    pub horizon: f64,
    /// Strictly increasing evaluation times in (0, horizon].
    pub times: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
}

impl LimitConfig {
    pub fn new(
        time_step: f64,
        bin_width: f64,
        times: Vec<f64>,
        replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::InvalidConfig("time step must be positive".into()));
        }
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::InvalidConfig("bin width must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidConfig("need at least one time".into()));
        }
        if times.iter().any(|t| t.is_nan() || *t <= 0.0) || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "times must be strictly increasing and positive".into(),
            ));
        }
        if replicates == 0 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        let horizon = *times.last().unwrap();
        Ok(Self {
            time_step,
            bin_width,
            horizon,
            times,
            replicates,
            master_seed,
        })
    }

    /// Reference discretization: `dt = 1e-4`, `h = 1e-2`.
    pub fn reference(times: Vec<f64>, replicates: usize, master_seed: u64) -> Result<Self> {
        Self::new(1e-4, 1e-2, times, replicates, master_seed)
    }

    fn steps_for(&self, t: f64) -> usize {
        (t / self.time_step).round() as usize
    }

    /// Simulates one Brownian path and returns its binned local time at
    /// time `t`.
    pub fn sample_local_time<R: Rng>(&self, t: f64, rng: &mut R) -> LocalTimeField {
        let steps = self.steps_for(t);
        let occ = self.occupation_snapshots(rng, &[steps]);
        occ.field_at(0, self, steps)
    }

    /// Local-time fields of one path at every configured time.
    pub fn sample_local_time_fields<R: Rng>(&self, rng: &mut R) -> Vec<LocalTimeField> {
        let checkpoints: Vec<usize> = self.times.iter().map(|&t| self.steps_for(t)).collect();
        let occ = self.occupation_snapshots(rng, &checkpoints);
        (0..self.times.len())
            .map(|j| occ.field_at(j, self, checkpoints[j]))
            .collect()
    }

    fn occupation_snapshots<R: Rng>(&self, rng: &mut R, checkpoints: &[usize]) -> Occupation {
        let total_steps = *checkpoints.last().expect("need a checkpoint");
        let sqrt_dt = self.time_step.sqrt();
        // positions B_0 .. B_{K-1}: the left endpoints of the K occupation
        // intervals of length dt
        let mut positions = Vec::with_capacity(total_steps.max(1));
        let mut b = 0.0f64;
        positions.push(b);
        for _ in 1..total_steps.max(1) {
            let z: f64 = rng.sample(StandardNormal);
            b += sqrt_dt * z;
            positions.push(b);
        }
        let bins: Vec<i64> = positions
            .iter()
            .map(|p| (p / self.bin_width).floor() as i64)
            .collect();
        let lo = *bins.iter().min().unwrap();
        let hi = *bins.iter().max().unwrap();
        let mut counts = vec![0u64; (hi - lo) as usize + 1];
        let mut snapshots = Vec::with_capacity(checkpoints.len());
        let mut next = 0usize;
        while next < checkpoints.len() && checkpoints[next] == 0 {
            snapshots.push(counts.clone());
            next += 1;
        }
        for (k, &bin) in bins.iter().enumerate().take(total_steps) {
            counts[(bin - lo) as usize] += 1;
            while next < checkpoints.len() && checkpoints[next] == k + 1 {
                snapshots.push(counts.clone());
                next += 1;
            }
        }
        Occupation {
            left_bin: lo,
            snapshots,
        }
    }

    /// Samples the limit process at every configured time for all
    /// replicates.
    pub fn simulate(&self) -> LimitBatch {
        let values: Vec<Vec<f64>> = (0..self.replicates)
            .into_par_iter()
            .map(|rep| self.simulate_replicate(rep as u64))
            .collect();
        LimitBatch {
            times: self.times.clone(),
            master_seed: self.master_seed,
            values,
        }
    }

    fn simulate_replicate(&self, rep: u64) -> Vec<f64> {
        let checkpoints: Vec<usize> = self.times.iter().map(|&t| self.steps_for(t)).collect();
        let mut bm_rng = stream(self.master_seed, rep, STREAM_BROWNIAN);
        let occ = self.occupation_snapshots(&mut bm_rng, &checkpoints);
        let width = occ.snapshots[0].len();
        let noise = self.bin_noise(rep, occ.left_bin, width);
        let l_scale = self.time_step / self.bin_width;
        occ.snapshots
            .iter()
            .map(|counts| {
                counts
                    .iter()
                    .zip(&noise)
                    .map(|(&c, &z)| c as f64 * l_scale * z)
                    .sum()
            })
            .collect()
    }

    /// Independent `N(0, h)` increments per bin. The bin containing 0 sits on
    /// the positive half-line; positive bins consume the positive-side
    /// stream in increasing index order, negative bins the negative-side
    /// stream in decreasing order, so the assignment is independent of the
    /// realized hull.
    fn bin_noise(&self, rep: u64, left_bin: i64, width: usize) -> Vec<f64> {
        let sqrt_h = self.bin_width.sqrt();
        let hi = left_bin + width as i64 - 1;
        let mut pos_rng = stream(self.master_seed, rep, STREAM_NOISE_POS);
        let mut neg_rng = stream(self.master_seed, rep, STREAM_NOISE_NEG);
        let mut noise = vec![0.0f64; width];
        for bin in 0..=hi.max(-1) {
            let z: f64 = pos_rng.sample(StandardNormal);
            if bin >= left_bin {
                noise[(bin - left_bin) as usize] = sqrt_h * z;
            }
        }
        let mut bin = -1i64;
        while bin >= left_bin {
            let z: f64 = neg_rng.sample(StandardNormal);
            noise[(bin - left_bin) as usize] = sqrt_h * z;
            bin -= 1;
        }
        noise
    }

    /// Couples a simulation at `(dt, h)` to one at `(dt/2, h/2)` built from
    /// the same draws: the coarse path subsamples the fine path and each
    /// coarse bin increment is the sum of its two fine halves. Returns the
    /// variance estimate of the final-time value under both resolutions and
    /// the Monte Carlo standard error of the fine one.
    pub fn refinement_variances(&self) -> RefinementCheck {
        let t = *self.times.last().unwrap();
        let fine = LimitConfig {
            time_step: self.time_step / 2.0,
            bin_width: self.bin_width / 2.0,
            ..self.clone()
        };
        let pairs: Vec<(f64, f64)> = (0..self.replicates)
            .into_par_iter()
            .map(|rep| {
                let rep = rep as u64;
                let steps_fine = fine.steps_for(t);
                let sqrt_dt_f = fine.time_step.sqrt();
                let mut bm_rng = stream(self.master_seed, rep, STREAM_BROWNIAN);
                let mut positions = Vec::with_capacity(steps_fine);
                let mut b = 0.0f64;
                positions.push(b);
                for _ in 1..steps_fine {
                    let z: f64 = bm_rng.sample(StandardNormal);
                    b += sqrt_dt_f * z;
                    positions.push(b);
                }
                // fine occupation
                let fine_bins: Vec<i64> = positions
                    .iter()
                    .map(|p| (p / fine.bin_width).floor() as i64)
                    .collect();
                let mut flo = *fine_bins.iter().min().unwrap();
                let mut fhi = *fine_bins.iter().max().unwrap();
                // widen to complete coarse pairs
                flo = 2 * flo.div_euclid(2);
                fhi = 2 * fhi.div_euclid(2) + 1;
                let fwidth = (fhi - flo) as usize + 1;
                let mut fine_counts = vec![0u64; fwidth];
                for &fb in &fine_bins {
                    fine_counts[(fb - flo) as usize] += 1;
                }
                let fine_noise = fine.bin_noise(rep, flo, fwidth);
                let fine_scale = fine.time_step / fine.bin_width;
                let delta_fine: f64 = fine_counts
                    .iter()
                    .zip(&fine_noise)
                    .map(|(&c, &z)| c as f64 * fine_scale * z)
                    .sum();

                // coarse path: every second fine position
                let clo = flo.div_euclid(2);
                let chi = fhi.div_euclid(2);
                let cwidth = (chi - clo) as usize + 1;
                let mut coarse_counts = vec![0u64; cwidth];
                for p in positions.iter().step_by(2) {
                    let cb = (p / self.bin_width).floor() as i64;
                    coarse_counts[(cb - clo) as usize] += 1;
                }
                let coarse_noise: Vec<f64> = (0..cwidth)
                    .map(|j| {
                        let f0 = (2 * (clo + j as i64) - flo) as usize;
                        fine_noise[f0] + fine_noise[f0 + 1]
                    })
                    .collect();
                let coarse_scale = self.time_step / self.bin_width;
                let delta_coarse: f64 = coarse_counts
                    .iter()
                    .zip(&coarse_noise)
                    .map(|(&c, &z)| c as f64 * coarse_scale * z)
                    .sum();
                (delta_coarse * delta_coarse, delta_fine * delta_fine)
            })
            .collect();
        let coarse_sq: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let fine_sq: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        RefinementCheck {
            variance_coarse: stats::mean(&coarse_sq),
            variance_fine: stats::mean(&fine_sq),
            fine_se: (stats::variance(&fine_sq) / fine_sq.len() as f64).sqrt(),
        }
    }

    /// Samples `h * sum_bins (sum_k theta_k L_{t_k}(bin))^2` per replicate,
    /// the discretized quadratic functional of the local-time field.
    pub fn quadratic_functional_samples(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.times.len());
        let checkpoints: Vec<usize> = self.times.iter().map(|&t| self.steps_for(t)).collect();
        let l_scale = self.time_step / self.bin_width;
        (0..self.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut bm_rng = stream(self.master_seed, rep as u64, STREAM_BROWNIAN);
                let occ = self.occupation_snapshots(&mut bm_rng, &checkpoints);
                let width = occ.snapshots[0].len();
                let mut acc = 0.0;
                for bin in 0..width {
                    let combined: f64 = occ
                        .snapshots
                        .iter()
                        .zip(weights)
                        .map(|(counts, &w)| w * counts[bin] as f64 * l_scale)
                        .sum();
                    acc += combined * combined;
                }
                self.bin_width * acc
            })
            .collect()
    }
}

#[derive(Clone)]
struct Occupation {
    left_bin: i64,
    snapshots: Vec<Vec<u64>>,
}

impl Occupation {
    fn field_at(&self, index: usize, config: &LimitConfig, steps: usize) -> LocalTimeField {
        let l_scale = config.time_step / config.bin_width;
        LocalTimeField {
            left_bin: self.left_bin,
            bin_width: config.bin_width,
            time: steps as f64 * config.time_step,
            values: self.snapshots[index]
                .iter()
                .map(|&c| c as f64 * l_scale)
                .collect(),
        }
    }
}

/// Binned occupation density of one Brownian path at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    left_bin: i64,
    bin_width: f64,
    /// Effective time `steps * dt` the field accounts for.
    time: f64,
    values: Vec<f64>,
}

impl LocalTimeField {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Left edge of bin `j`.
    pub fn bin_left_edge(&self, j: usize) -> f64 {
        (self.left_bin + j as i64) as f64 * self.bin_width
    }

    /// Total occupation mass `h * sum_j L(x_j)`; equals the effective time
    /// exactly up to float rounding.
    pub fn mass(&self) -> f64 {
        self.bin_width * self.values.iter().sum::<f64>()
    }

    /// Local-time value of the bin containing `x` (0 outside the hull).
    pub fn value_at(&self, x: f64) -> f64 {
        let bin = (x / self.bin_width).floor() as i64 - self.left_bin;
        if bin < 0 {
            return 0.0;
        }
        self.values.get(bin as usize).copied().unwrap_or(0.0)
    }

    /// Discretized `integral L(x)^2 dx = h * sum_j L(x_j)^2`.
    pub fn square_integral(&self) -> f64 {
        self.bin_width * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Writes the field as CSV (`x,local_time`), `x` the left bin edge.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 local-time-field")?;
        writeln!(out, "x,local_time")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{v}", self.bin_left_edge(j))?;
        }
        Ok(())
    }
}

/// Monte Carlo batch of limit-process samples, one row per replicate.
#[derive(Debug, Clone)]
pub struct LimitBatch {
    pub times: Vec<f64>,
    pub master_seed: u64,
    pub values: Vec<Vec<f64>>,
}

impl LimitBatch {
    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    /// Stream key of one row: the row is reproducible from
    /// `(master seed, replicate index)` through the per-tag streams.
    pub fn replicate_key(&self, replicate: usize) -> (u64, u64) {
        (self.master_seed, replicate as u64)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }

    pub fn summary(&self) -> LimitSummary {
        let per_time = self
            .times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let col = self.column(j);
                LimitTimeSummary {
                    time: t,
                    mean: stats::mean(&col),
                    variance: stats::variance(&col),
                    quantiles: [0.05, 0.25, 0.5, 0.75, 0.95]
                        .iter()
                        .map(|&q| (q, stats::quantile(&col, q)))
                        .collect(),
                }
            })
            .collect();
        LimitSummary {
            replicates: self.replicates(),
            master_seed: self.master_seed,
            per_time,
        }
    }

    /// Writes all values as CSV (`replicate,t,value`).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 limit-batch")?;
        writeln!(out, "replicate,t,value")?;
        for (rep, row) in self.values.iter().enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                writeln!(out, "{rep},{t},{}", row[j])?;
            }
        }
        Ok(())
    }
}

/// Per-time moments of a limit batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitTimeSummary {
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSummary {
    pub replicates: usize,
    pub master_seed: u64,
    pub per_time: Vec<LimitTimeSummary>,
}

/// Variance of the final-time value under a discretization and its halved
/// refinement, coupled replicate by replicate.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementCheck {
    pub variance_coarse: f64,
    pub variance_fine: f64,
    pub fine_se: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, STREAM_AUX};
    use crate::verify::ks_two_sample;

    /// `E integral L_1(x)^2 dx` for Brownian motion: the double integral
    /// `2 int_0^1 int_s^1 (2 pi (u-s))^{-1/2} du ds`; the inner integral is
    /// `2 sqrt(1-s) / sqrt(2 pi)`, the outer is integrated by Simpson's rule.
    fn brownian_square_integral_oracle() -> f64 {
        let m = 200_000usize;
        let f = |s: f64| 2.0 * (1.0 - s).sqrt() / (2.0 * std::f64::consts::PI).sqrt();
        let h = 1.0 / m as f64;
        let mut acc = f(0.0) + f(1.0);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        2.0 * (acc * h / 3.0)
    }

    /// `E L_1(0) = int_0^1 (2 pi s)^{-1/2} ds`; the substitution `s = v^2`
    /// turns the integrand into the constant `2 / sqrt(2 pi)`.
    fn expected_local_time_at_zero_oracle() -> f64 {
        let m = 100_000usize;
        let h = 1.0 / m as f64;
        let f = |_v: f64| 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = f(0.0) + f(1.0);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    fn config(times: Vec<f64>, reps: usize, seed: u64) -> LimitConfig {
        LimitConfig::reference(times, reps, seed).unwrap()
    }

    #[test]
    fn oracles_match_closed_forms() {
        let c = brownian_square_integral_oracle();
        assert!(
            (c - 8.0 / (3.0 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-6,
            "oracle {c}"
        );
        assert!((c - 1.06385).abs() < 1e-4);
        let l0 = expected_local_time_at_zero_oracle();
        assert!((l0 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn occupation_mass_is_conserved_exactly() {
        let cfg = LimitConfig::new(1e-3, 2e-2, vec![0.4, 1.0], 1, 5).unwrap();
        for rep in 0..20u64 {
            let mut rng = stream(5, rep, STREAM_AUX);
            for &t in &[0.25, 0.4, 1.0] {
                let field = cfg.sample_local_time(t, &mut rng);
                let steps = (t / cfg.time_step).round();
                assert!(
                    (field.mass() - steps * cfg.time_step).abs() <= 1e-12,
                    "mass {} vs {}",
                    field.mass(),
                    steps * cfg.time_step
                );
            }
        }
    }

    #[test]
    fn mean_square_integral_matches_brownian_constant() {
        let cfg = config(vec![1.0], 1200, 11);
        let samples: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(cfg.master_seed, rep as u64, STREAM_BROWNIAN);
                cfg.sample_local_time(1.0, &mut rng).square_integral()
            })
            .collect();
        let oracle = brownian_square_integral_oracle();
        let mean = stats::mean(&samples);
        assert!(
            (mean - oracle).abs() < 0.05 * oracle,
            "mean {mean} vs oracle {oracle}"
        );
    }

    #[test]
    fn mean_local_time_at_zero_matches_oracle() {
        let cfg = config(vec![1.0], 1500, 13);
        let samples: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(cfg.master_seed, rep as u64, STREAM_BROWNIAN);
                cfg.sample_local_time(1.0, &mut rng).value_at(0.0)
            })
            .collect();
        let oracle = expected_local_time_at_zero_oracle();
        let mean = stats::mean(&samples);
        assert!(
            (mean - oracle).abs() < 0.05 * oracle,
            "mean {mean} vs oracle {oracle}"
        );
    }

    #[test]
    fn limit_variance_matches_brownian_constant() {
        let cfg = config(vec![1.0], 2000, 17);
        let batch = cfg.simulate();
        let col = batch.column(0);
        let var = stats::variance(&col);
        let oracle = brownian_square_integral_oracle();
        assert!(
            (var - oracle).abs() < 0.10 * oracle,
            "variance {var} vs oracle {oracle}"
        );
    }

    #[test]
    fn variance_scales_with_the_three_quarters_exponent() {
        let cfg = config(vec![0.25, 0.5, 1.0], 3000, 19);
        let batch = cfg.simulate();
        let ratios: Vec<f64> = (0..3)
            .map(|j| stats::variance(&batch.column(j)) / batch.times[j].powf(1.5))
            .collect();
        let reference = ratios[2];
        for (j, r) in ratios.iter().enumerate() {
            assert!(
                (r - reference).abs() <= 0.10 * reference,
                "t = {}: ratio {r} vs {reference}",
                batch.times[j]
            );
        }
    }

    #[test]
    fn marginal_is_symmetric() {
        let cfg = config(vec![1.0], 2000, 23);
        let col = cfg.simulate().column(0);
        let skew = stats::skewness(&col);
        let se = (6.0 / col.len() as f64).sqrt();
        assert!(
            skew.abs() <= 4.0 * se,
            "skewness {skew} (4 se = {})",
            4.0 * se
        );
    }

    #[test]
    fn increments_are_stationary() {
        // independent batches so the two KS samples are independent
        let a = config(vec![0.25, 0.75], 2000, 29).simulate();
        let b = config(vec![0.5], 2000, 31).simulate();
        let increments: Vec<f64> = a.values.iter().map(|row| row[1] - row[0]).collect();
        let direct = b.column(0);
        let ks = ks_two_sample(&increments, &direct);
        assert!(
            ks.p_value > 0.01,
            "stationary-increments KS p = {}",
            ks.p_value
        );
    }

    #[test]
    fn refinement_is_stable() {
        let cfg = LimitConfig::new(2e-4, 2e-2, vec![1.0], 3000, 37).unwrap();
        let check = cfg.refinement_variances();
        assert!(
            (check.variance_coarse - check.variance_fine).abs() < check.fine_se,
            "coarse {} vs fine {} (se {})",
            check.variance_coarse,
            check.variance_fine,
            check.fine_se
        );
    }

    #[test]
    fn quadratic_functional_of_difference_is_nonnegative() {
        let cfg = LimitConfig::new(1e-3, 2e-2, vec![0.5, 1.0], 200, 41).unwrap();
        let samples = cfg.quadratic_functional_samples(&[1.0, -1.0]);
        assert!(samples.iter().all(|&v| v >= 0.0));
        assert!(samples.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(LimitConfig::new(0.0, 1e-2, vec![1.0], 1, 0).is_err());
        assert!(LimitConfig::new(1e-3, 0.0, vec![1.0], 1, 0).is_err());
        assert!(LimitConfig::new(1e-3, 1e-2, vec![], 1, 0).is_err());
        assert!(LimitConfig::new(1e-3, 1e-2, vec![0.5, 0.5], 1, 0).is_err());
        assert!(LimitConfig::new(1e-3, 1e-2, vec![1.0], 0, 0).is_err());
    }
}
