//! Stationary centered scenery families.
//!
//! Four constructions are provided: i.i.d. values, causal linear processes
//! `xi_i = sum_j a_j eps_{i-j}`, contractive iterated random functions
//! `xi_i = kappa xi_{i-1} + eps_i`, and observables of the doubling map
//! `x -> 2x mod 1` read off a sliding window of independent fair bits (the
//! binary expansion of a Lebesgue-distributed point). Each family exposes
//! exact covariances where a closed form exists and empirical covariance
//! estimation with jackknife standard errors otherwise.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cap on the total number of values (window plus lead-in) a single sampling
/// call may buffer.
pub const SAMPLING_BUFFER_CAP: usize = 1 << 26;

/// Neglected-tail target for linear-process truncation and iterated-function
/// burn-in.
pub const TAIL_TARGET: f64 = 1e-8;

/// Centered marginal / innovation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    /// Normal with mean zero; `sd = 0` degenerates to the constant 0.
    Normal { sd: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Fair signs +-1.
    Rademacher,
}

impl Marginal {
    pub fn standard_normal() -> Self {
        Marginal::Normal { sd: 1.0 }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Normal { sd } => sd * sd,
            Marginal::Uniform { half_width } => half_width * half_width / 3.0,
            Marginal::Rademacher => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Normal { sd } if sd.is_finite() && sd >= 0.0 => Ok(()),
            Marginal::Uniform { half_width } if half_width.is_finite() && half_width > 0.0 => {
                Ok(())
            }
            Marginal::Rademacher => Ok(()),
            _ => Err(Error::InvalidModel("invalid marginal parameters".into())),
        }
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { sd } => {
                let z: f64 = rng.sample(StandardNormal);
                sd * z
            }
            Marginal::Uniform { half_width } => {
                let u: f64 = rng.random();
                half_width * (2.0 * u - 1.0)
            }
            Marginal::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Coefficient rule `a_j` of a causal linear process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `a_j = rho^j`, `0 < rho < 1`.
    Geometric { rho: f64 },
    /// Finitely many explicit coefficients `a_0, ..., a_L`.
    Finite { coefficients: Vec<f64> },
}

impl CoefficientRule {
    fn validate(&self) -> Result<()> {
        match self {
            CoefficientRule::Geometric { rho } => {
                if *rho > 0.0 && *rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidModel(
                        "geometric coefficient rate must lie in (0, 1)".into(),
                    ))
                }
            }
            CoefficientRule::Finite { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|a| !a.is_finite()) {
                    Err(Error::InvalidModel(
                        "finite coefficient list must be nonempty and finite".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn coefficient(&self, j: usize) -> f64 {
        match self {
            CoefficientRule::Geometric { rho } => rho.powi(j as i32),
            CoefficientRule::Finite { coefficients } => coefficients.get(j).copied().unwrap_or(0.0),
        }
    }

    /// Absolute tail `sum_{j >= i} |a_j|`.
    pub fn abs_tail(&self, i: usize) -> f64 {
        match self {
            CoefficientRule::Geometric { rho } => rho.powi(i as i32) / (1.0 - rho),
            CoefficientRule::Finite { coefficients } => {
                coefficients.iter().skip(i).map(|a| a.abs()).sum()
            }
        }
    }

    /// Smallest lag `J` with neglected tail `sum_{j > J} |a_j| * scale`
    /// below [`TAIL_TARGET`].
    pub fn truncation_lag(&self, scale: f64) -> usize {
        match self {
            CoefficientRule::Geometric { .. } => {
                let mut j = 0usize;
                while self.abs_tail(j + 1) * scale.max(1.0) > TAIL_TARGET && j < 1 << 20 {
                    j += 1;
                }
                j
            }
            CoefficientRule::Finite { coefficients } => coefficients.len().saturating_sub(1),
        }
    }
}

/// Observable read along doubling-map orbits. Both catalog entries have mean
/// zero under Lebesgue measure and bounded variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `h(x) = x - 1/2`.
    Centered,
    /// `h(x) = cos(2 pi x)`.
    Cosine,
}

impl Observable {
    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            Observable::Centered => x - 0.5,
            Observable::Cosine => (2.0 * PI * x).cos(),
        }
    }

    /// Exact variance under Lebesgue measure.
    pub fn variance(&self) -> f64 {
        match self {
            Observable::Centered => 1.0 / 12.0,
            Observable::Cosine => 0.5,
        }
    }
}

/// Declarative description of a stationary centered scenery family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SceneryModel {
    /// Independent identically distributed values.
    Iid { marginal: Marginal },
    /// Causal linear process truncated at `truncation_lag`.
    LinearProcess {
        coefficients: CoefficientRule,
        innovation: Marginal,
        truncation_lag: usize,
    },
    /// Contractive recursion `xi_i = kappa xi_{i-1} + eps_i` started `burn_in`
    /// sites left of the window (from the exact stationary law in the
    /// Gaussian case).
    IteratedFunction {
        kappa: f64,
        innovation: Marginal,
        burn_in: usize,
    },
    /// Observable of the doubling map on a sliding window of `bit_window`
    /// fresh fair bits.
    DoublingMap {
        observable: Observable,
        bit_window: u32,
    },
}

impl SceneryModel {
    /// i.i.d. standard normal scenery.
    pub fn iid_standard_normal() -> Self {
        SceneryModel::Iid {
            marginal: Marginal::standard_normal(),
        }
    }

    /// Causal linear process with geometric coefficients `a_j = rho^j`; the
    /// truncation lag is chosen so the neglected tail is below
    /// [`TAIL_TARGET`].
    pub fn linear_geometric(rho: f64, innovation_sd: f64) -> Result<Self> {
        let coefficients = CoefficientRule::Geometric { rho };
        coefficients.validate()?;
        let truncation_lag = coefficients.truncation_lag(innovation_sd);
        let model = SceneryModel::LinearProcess {
            coefficients,
            innovation: Marginal::Normal { sd: innovation_sd },
            truncation_lag,
        };
        model.validate()?;
        Ok(model)
    }

    /// Contractive recursion with Gaussian innovations; burn-in chosen so
    /// `kappa^B` is below [`TAIL_TARGET`].
    pub fn iterated_function(kappa: f64, innovation_sd: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidModel(
                "contraction factor must lie in (0, 1)".into(),
            ));
        }
        let burn_in = (TAIL_TARGET.ln() / kappa.ln()).ceil() as usize;
        let model = SceneryModel::IteratedFunction {
            kappa,
            innovation: Marginal::Normal { sd: innovation_sd },
            burn_in,
        };
        model.validate()?;
        Ok(model)
    }

    /// Doubling-map scenery with the default 53-bit sliding window.
    pub fn doubling_map(observable: Observable) -> Self {
        SceneryModel::DoublingMap {
            observable,
            bit_window: 53,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SceneryModel::Iid { marginal } => marginal.validate(),
            SceneryModel::LinearProcess {
                coefficients,
                innovation,
                ..
            } => {
                coefficients.validate()?;
                innovation.validate()
            }
            SceneryModel::IteratedFunction {
                kappa, innovation, ..
            } => {
                if !(*kappa > 0.0 && *kappa < 1.0) {
                    return Err(Error::InvalidModel(
                        "contraction factor must lie in (0, 1)".into(),
                    ));
                }
                innovation.validate()
            }
            SceneryModel::DoublingMap { bit_window, .. } => {
                if (1..=64).contains(bit_window) {
                    Ok(())
                } else {
                    Err(Error::InvalidModel("bit window must lie in 1..=64".into()))
                }
            }
        }
    }

    /// Short label used in reports and file names.
    pub fn label(&self) -> String {
        match self {
            SceneryModel::Iid { .. } => "iid".into(),
            SceneryModel::LinearProcess { .. } => "linear".into(),
            SceneryModel::IteratedFunction { .. } => "iterated".into(),
            SceneryModel::DoublingMap { .. } => "doubling".into(),
        }
    }

    /// Samples the window `xi_left, ..., xi_right`.
    pub fn sample_window<R: Rng>(
        &self,
        left: i64,
        right: i64,
        rng: &mut R,
    ) -> Result<SceneryWindow> {
        if left > right {
            return Err(Error::InvalidConfig(format!(
                "window [{left}, {right}] is empty"
            )));
        }
        let len = (right - left) as usize + 1;
        let lead_in = match self {
            SceneryModel::Iid { .. } => 0,
            SceneryModel::LinearProcess { truncation_lag, .. } => *truncation_lag,
            SceneryModel::IteratedFunction { burn_in, .. } => *burn_in,
            SceneryModel::DoublingMap { bit_window, .. } => *bit_window as usize,
        };
        let total = len + lead_in;
        if total > SAMPLING_BUFFER_CAP {
            return Err(Error::WindowTooLarge {
                requested: total,
                cap: SAMPLING_BUFFER_CAP,
            });
        }
        let values = match self {
            SceneryModel::Iid { marginal } => (0..len).map(|_| marginal.sample(rng)).collect(),
            SceneryModel::LinearProcess {
                coefficients,
                innovation,
                truncation_lag,
            } => {
                let lag = *truncation_lag;
                let coeffs: Vec<f64> = (0..=lag).map(|j| coefficients.coefficient(j)).collect();
                // innovations eps_{left-lag}, ..., eps_{right}
                let innovations: Vec<f64> =
                    (0..len + lag).map(|_| innovation.sample(rng)).collect();
                (0..len)
                    .map(|i| {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, a)| a * innovations[i + lag - j])
                            .sum()
                    })
                    .collect()
            }
            SceneryModel::IteratedFunction {
                kappa,
                innovation,
                burn_in,
            } => {
                let mut state = match innovation {
                    // linear Gaussian recursion: the stationary law is normal
                    // with variance sd^2 / (1 - kappa^2)
                    Marginal::Normal { sd } => {
                        let z: f64 = rng.sample(StandardNormal);
                        sd / (1.0 - kappa * kappa).sqrt() * z
                    }
                    other => other.sample(rng),
                };
                for _ in 0..*burn_in {
                    state = kappa * state + innovation.sample(rng);
                }
                (0..len)
                    .map(|_| {
                        state = kappa * state + innovation.sample(rng);
                        state
                    })
                    .collect()
            }
            SceneryModel::DoublingMap {
                observable,
                bit_window,
            } => {
                let w = *bit_window;
                let scale = (w as f64).exp2().recip();
                let mut bits = BitStream::new(rng);
                // window value m_i holds bits b_i .. b_{i+w-1}, most
                // significant first; sliding one site shifts in a fresh bit
                let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
                let mut m: u64 = 0;
                for _ in 0..w {
                    m = (m << 1) | bits.next_bit();
                }
                let mut values = Vec::with_capacity(len);
                values.push(observable.evaluate(m as f64 * scale));
                for _ in 1..len {
                    m = ((m << 1) & mask) | bits.next_bit();
                    values.push(observable.evaluate(m as f64 * scale));
                }
                values
            }
        };
        Ok(SceneryWindow { left, values })
    }

    /// Exact lag-`k` covariance where a closed form exists.
    pub fn analytic_covariance(&self, k: usize) -> Option<f64> {
        match self {
            SceneryModel::Iid { marginal } => Some(if k == 0 { marginal.variance() } else { 0.0 }),
            SceneryModel::LinearProcess {
                coefficients,
                innovation,
                ..
            } => {
                let s2 = innovation.variance();
                match coefficients {
                    CoefficientRule::Geometric { rho } => {
                        Some(s2 * rho.powi(k as i32) / (1.0 - rho * rho))
                    }
                    CoefficientRule::Finite { coefficients } => {
                        let l = coefficients.len();
                        if k >= l {
                            return Some(0.0);
                        }
                        Some(
                            s2 * (0..l - k)
                                .map(|j| coefficients[j] * coefficients[j + k])
                                .sum::<f64>(),
                        )
                    }
                }
            }
            SceneryModel::IteratedFunction {
                kappa, innovation, ..
            } => {
                let s2 = innovation.variance();
                Some(s2 * kappa.powi(k as i32) / (1.0 - kappa * kappa))
            }
            SceneryModel::DoublingMap { observable, .. } => match observable {
                Observable::Centered => Some((k as f64).exp2().recip() / 12.0),
                Observable::Cosine => None,
            },
        }
    }

    /// Exact two-sided covariance sum `sum_{k in Z} r(k)` where available.
    pub fn analytic_long_run_variance(&self) -> Option<f64> {
        match self {
            SceneryModel::Iid { marginal } => Some(marginal.variance()),
            SceneryModel::LinearProcess {
                coefficients,
                innovation,
                ..
            } => {
                let s2 = innovation.variance();
                match coefficients {
                    CoefficientRule::Geometric { rho } => Some(s2 / ((1.0 - rho) * (1.0 - rho))),
                    CoefficientRule::Finite { coefficients } => {
                        let total: f64 = coefficients.iter().sum();
                        Some(s2 * total * total)
                    }
                }
            }
            SceneryModel::IteratedFunction {
                kappa, innovation, ..
            } => Some(innovation.variance() / ((1.0 - kappa) * (1.0 - kappa))),
            SceneryModel::DoublingMap { observable, .. } => match observable {
                Observable::Centered => Some(0.25),
                Observable::Cosine => None,
            },
        }
    }

    /// Exact marginal variance `r(0)` where available.
    pub fn analytic_variance(&self) -> Option<f64> {
        self.analytic_covariance(0)
    }

    /// Upper bound on the neglected two-sided covariance tail
    /// `2 sum_{k > k_max} |r(k)|`, from the family's own decay rate.
    pub fn covariance_tail_bound(&self, k_max: usize) -> f64 {
        match self {
            SceneryModel::Iid { .. } => 0.0,
            SceneryModel::LinearProcess {
                coefficients,
                innovation,
                ..
            } => {
                let s2 = innovation.variance();
                match coefficients {
                    CoefficientRule::Geometric { rho } => {
                        2.0 * s2 * rho.powi(k_max as i32 + 1) / ((1.0 - rho * rho) * (1.0 - rho))
                    }
                    CoefficientRule::Finite { coefficients } => {
                        let l = coefficients.len();
                        2.0 * s2
                            * (k_max + 1..l)
                                .map(|k| {
                                    (0..l - k)
                                        .map(|j| coefficients[j] * coefficients[j + k])
                                        .sum::<f64>()
                                        .abs()
                                })
                                .sum::<f64>()
                    }
                }
            }
            SceneryModel::IteratedFunction {
                kappa, innovation, ..
            } => {
                let s2 = innovation.variance();
                2.0 * s2 * kappa.powi(k_max as i32 + 1) / ((1.0 - kappa * kappa) * (1.0 - kappa))
            }
            SceneryModel::DoublingMap { observable, .. } => {
                // |r(k)| <= r(0) 2^{-k} for bounded-variation observables of
                // the doubling map
                2.0 * observable.variance() * (k_max as f64).exp2().recip()
            }
        }
    }

    /// Biased autocovariance estimates up to `k_max` with grouped-jackknife
    /// standard errors, plus the truncated two-sided covariance sum.
    ///
    /// Fails with [`Error::DegenerateVariance`] when the estimated sum is not
    /// positive: downstream normalization takes its square root.
    pub fn empirical_covariance<R: Rng>(
        &self,
        k_max: usize,
        sample_length: usize,
        rng: &mut R,
    ) -> Result<CovarianceSummary> {
        if sample_length < 20 * (k_max + 1) {
            return Err(Error::InvalidConfig(format!(
                "sample length {sample_length} too short for lag cap {k_max}"
            )));
        }
        let window = self.sample_window(0, sample_length as i64 - 1, rng)?;
        let xs = window.values();
        let n = xs.len();
        let m = crate::stats::mean(xs);

        let lags: Vec<f64> = (0..=k_max).map(|k| autocov_biased(xs, m, k)).collect();

        // grouped jackknife over contiguous blocks
        let block_count = 40.min(n / (10 * (k_max + 1))).max(2);
        let block_len = n / block_count;
        let mut block_lags: Vec<Vec<f64>> = Vec::with_capacity(block_count);
        let mut block_sums: Vec<f64> = Vec::with_capacity(block_count);
        for b in 0..block_count {
            let chunk = &xs[b * block_len..(b + 1) * block_len];
            let vals: Vec<f64> = (0..=k_max).map(|k| autocov_biased(chunk, m, k)).collect();
            let s = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
            block_lags.push(vals);
            block_sums.push(s);
        }
        let standard_errors: Vec<f64> = (0..=k_max)
            .map(|k| {
                let vals: Vec<f64> = block_lags.iter().map(|v| v[k]).collect();
                jackknife_se(&vals)
            })
            .collect();

        let long_run_variance = lags[0] + 2.0 * lags[1..].iter().sum::<f64>();
        let long_run_variance_se = jackknife_se(&block_sums);
        if long_run_variance <= 0.0 {
            return Err(Error::DegenerateVariance(long_run_variance));
        }
        if lags[0] <= 0.0 {
            return Err(Error::DegenerateVariance(lags[0]));
        }
        Ok(CovarianceSummary {
            lags,
            standard_errors,
            long_run_variance,
            long_run_variance_se,
            truncation_error_bound: self.covariance_tail_bound(k_max),
            sample_length: n,
        })
    }
}

fn autocov_biased(xs: &[f64], mean: f64, k: usize) -> f64 {
    let n = xs.len();
    if k >= n {
        return 0.0;
    }
    (0..n - k)
        .map(|i| (xs[i] - mean) * (xs[i + k] - mean))
        .sum::<f64>()
        / n as f64
}

/// Delete-one-group jackknife standard error of the mean of `vals`.
fn jackknife_se(vals: &[f64]) -> f64 {
    let b = vals.len();
    if b < 2 {
        return f64::NAN;
    }
    let total: f64 = vals.iter().sum();
    let loo: Vec<f64> = vals.iter().map(|v| (total - v) / (b - 1) as f64).collect();
    let loo_mean = crate::stats::mean(&loo);
    let ss: f64 = loo.iter().map(|x| (x - loo_mean) * (x - loo_mean)).sum();
    ((b - 1) as f64 / b as f64 * ss).sqrt()
}

/// Unbuffered fair-bit source drawing 64 bits at a time.
struct BitStream<'a, R: Rng> {
    rng: &'a mut R,
    word: u64,
    remaining: u32,
}

impl<'a, R: Rng> BitStream<'a, R> {
    fn new(rng: &'a mut R) -> Self {
        Self {
            rng,
            word: 0,
            remaining: 0,
        }
    }

    #[inline]
    fn next_bit(&mut self) -> u64 {
        if self.remaining == 0 {
            self.word = self.rng.random();
            self.remaining = 64;
        }
        let bit = self.word & 1;
        self.word >>= 1;
        self.remaining -= 1;
        bit
    }
}

/// A sampled stretch `xi_left, ..., xi_right` of scenery.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneryWindow {
    left: i64,
    values: Vec<f64>,
}

impl SceneryWindow {
    /// Wraps explicit values as the window `xi_left, ..`.
    pub fn from_values(left: i64, values: Vec<f64>) -> Self {
        Self { left, values }
    }

    pub fn left(&self) -> i64 {
        self.left
    }

    pub fn right(&self) -> i64 {
        self.left + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a site inside the window.
    #[inline]
    pub fn value_at(&self, site: i64) -> f64 {
        self.values[(site - self.left) as usize]
    }

    /// Writes the window as CSV (`site,value`).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 scenery")?;
        writeln!(out, "site,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{v}", self.left + j as i64)?;
        }
        Ok(())
    }
}

/// Autocovariance estimates at lags `0..=k_max` and the truncated two-sided
/// covariance sum they imply.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceSummary {
    /// `r_hat(k)` for `k = 0..=k_max`.
    pub lags: Vec<f64>,
    /// Jackknife standard error per lag.
    pub standard_errors: Vec<f64>,
    /// `r_hat(0) + 2 sum_{k=1}^{k_max} r_hat(k)`.
    pub long_run_variance: f64,
    /// Jackknife standard error of the sum.
    pub long_run_variance_se: f64,
    /// Bound on the neglected two-sided tail beyond `k_max`.
    pub truncation_error_bound: f64,
    /// Number of values the estimates were computed from.
    pub sample_length: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, STREAM_SCENERY};
    use crate::stats;

    #[test]
    fn iid_covariance_is_diagonal() {
        let model = SceneryModel::iid_standard_normal();
        assert_eq!(model.analytic_covariance(0), Some(1.0));
        assert_eq!(model.analytic_covariance(3), Some(0.0));
        assert_eq!(model.analytic_long_run_variance(), Some(1.0));
    }

    #[test]
    fn linear_geometric_covariance_matches_series_oracle() {
        let (rho, sd) = (0.5f64, 1.3f64);
        let model = SceneryModel::linear_geometric(rho, sd).unwrap();
        for k in 0..8 {
            // oracle: direct partial sum of s^2 sum_j rho^j rho^{j+k}
            let oracle: f64 =
                sd * sd * (0..400).map(|j| rho.powi(j) * rho.powi(j + k)).sum::<f64>();
            let got = model.analytic_covariance(k as usize).unwrap();
            assert!(
                (got - oracle).abs() < 1e-12,
                "lag {k}: {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn doubling_covariance_matches_segment_integral_oracle() {
        // oracle: integral of x (2^k x mod 1) dx summed segment by segment,
        // minus the product of means
        fn oracle(k: u32) -> f64 {
            let pieces = 1u64 << k;
            let scale = (pieces as f64 * pieces as f64).recip();
            let mut acc = 0.0;
            for j in 0..pieces {
                acc += scale * (1.0 / 3.0 + j as f64 / 2.0);
            }
            acc - 0.25
        }
        let model = SceneryModel::doubling_map(Observable::Centered);
        for k in 0..12u32 {
            let got = model.analytic_covariance(k as usize).unwrap();
            assert!((got - oracle(k)).abs() < 1e-14, "lag {k}");
            assert!((got - (k as f64).exp2().recip() / 12.0).abs() < 1e-15);
        }
        assert_eq!(
            SceneryModel::doubling_map(Observable::Cosine).analytic_covariance(1),
            None
        );
    }

    #[test]
    fn doubling_orbit_follows_the_map_up_to_window_truncation() {
        let model = SceneryModel::doubling_map(Observable::Centered);
        let mut rng = stream(5, 0, STREAM_SCENERY);
        let window = model.sample_window(0, 2000, &mut rng).unwrap();
        let tol = (53f64).exp2().recip();
        for pair in window.values().windows(2) {
            let x = pair[0] + 0.5;
            let image = (2.0 * x).fract();
            assert!((pair[1] + 0.5 - image).abs() <= tol + 1e-18);
        }
    }

    #[test]
    fn doubling_orbit_does_not_collapse() {
        let model = SceneryModel::doubling_map(Observable::Centered);
        let mut rng = stream(17, 0, STREAM_SCENERY);
        let window = model.sample_window(0, 10_000, &mut rng).unwrap();
        let first = window.values()[0];
        assert!(window.values().iter().any(|&v| v != first));
        // naive float iteration of 2x mod 1 loses one bit per step and hits a
        // fixed point within ~60 steps; the bit-stream construction must not
        let tail = &window.values()[60..];
        assert!(tail.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn iterated_function_lag_one_autocorrelation_matches_ar1() {
        let model = SceneryModel::iterated_function(0.5, 1.0).unwrap();
        let mut rng = stream(11, 0, STREAM_SCENERY);
        let window = model.sample_window(0, 999_999, &mut rng).unwrap();
        let xs = window.values();
        let m = stats::mean(xs);
        let c0 = autocov_biased(xs, m, 0);
        let c1 = autocov_biased(xs, m, 1);
        assert!(
            (c1 / c0 - 0.5).abs() < 0.01,
            "lag-1 autocorrelation {} should be 0.5 +- 0.01",
            c1 / c0
        );
    }

    #[test]
    fn empirical_long_run_variance_matches_closed_forms() {
        // AR(1) with rho = 0.5, unit innovations: 1 / (1 - rho)^2 = 4
        let model = SceneryModel::linear_geometric(0.5, 1.0).unwrap();
        let mut rng = stream(23, 0, STREAM_SCENERY);
        let summary = model.empirical_covariance(40, 1_000_000, &mut rng).unwrap();
        assert!(
            (summary.long_run_variance - 4.0).abs() < 0.2,
            "AR(1) long-run variance {} should be 4.0 +- 5%",
            summary.long_run_variance
        );

        // doubling map, h(x) = x - 1/2: 1/12 + 2 sum_k 2^{-k}/12 = 1/4
        let model = SceneryModel::doubling_map(Observable::Centered);
        let mut rng = stream(29, 0, STREAM_SCENERY);
        let summary = model.empirical_covariance(40, 1_000_000, &mut rng).unwrap();
        assert!(
            (summary.long_run_variance - 0.25).abs() < 0.0125,
            "doubling long-run variance {} should be 0.25 +- 5%",
            summary.long_run_variance
        );

        // i.i.d.: the marginal variance
        let model = SceneryModel::Iid {
            marginal: Marginal::Normal { sd: 2.0 },
        };
        let mut rng = stream(31, 0, STREAM_SCENERY);
        let summary = model.empirical_covariance(10, 200_000, &mut rng).unwrap();
        assert!((summary.long_run_variance - 4.0).abs() < 0.2);
    }

    #[test]
    fn analytic_and_empirical_covariances_agree_within_jackknife_error() {
        let models = [
            SceneryModel::iid_standard_normal(),
            SceneryModel::linear_geometric(0.5, 1.0).unwrap(),
            SceneryModel::iterated_function(0.5, 1.0).unwrap(),
            SceneryModel::doubling_map(Observable::Centered),
        ];
        for (i, model) in models.iter().enumerate() {
            let mut rng = stream(37, i as u64, STREAM_SCENERY);
            let summary = model.empirical_covariance(10, 400_000, &mut rng).unwrap();
            for k in 0..=10usize {
                let exact = model.analytic_covariance(k).unwrap();
                let err = (summary.lags[k] - exact).abs();
                assert!(
                    err <= 4.0 * summary.standard_errors[k],
                    "{}: lag {k} off by {err} (> 4 se = {})",
                    model.label(),
                    4.0 * summary.standard_errors[k]
                );
            }
        }
    }

    #[test]
    fn windows_are_centered() {
        let models = [
            SceneryModel::iid_standard_normal(),
            SceneryModel::linear_geometric(0.5, 1.0).unwrap(),
            SceneryModel::iterated_function(0.5, 1.0).unwrap(),
            SceneryModel::doubling_map(Observable::Centered),
            SceneryModel::doubling_map(Observable::Cosine),
        ];
        for (i, model) in models.iter().enumerate() {
            let mut rng = stream(41, i as u64, STREAM_SCENERY);
            let len = 100_000i64;
            let window = model.sample_window(0, len - 1, &mut rng).unwrap();
            let m = stats::mean(window.values());
            let r0 = model
                .analytic_variance()
                .unwrap_or_else(|| stats::variance(window.values()));
            let tol = 4.0 * (r0 / len as f64).sqrt();
            assert!(m.abs() <= tol, "{}: mean {m} exceeds {tol}", model.label());
        }
    }

    #[test]
    fn stationarity_two_sample_ks_accepts() {
        // thinned subsamples keep the i.i.d.-based KS level honest under
        // serial dependence
        let models = [
            SceneryModel::iid_standard_normal(),
            SceneryModel::linear_geometric(0.5, 1.0).unwrap(),
            SceneryModel::iterated_function(0.5, 1.0).unwrap(),
            SceneryModel::doubling_map(Observable::Centered),
        ];
        for (i, model) in models.iter().enumerate() {
            let mut rng = stream(43, i as u64, STREAM_SCENERY);
            let window = model.sample_window(-80_000, 79_999, &mut rng).unwrap();
            let stride = 16;
            let neg: Vec<f64> = (0..80_000 / stride)
                .map(|j| window.value_at(-80_000 + (j * stride) as i64))
                .collect();
            let pos: Vec<f64> = (0..80_000 / stride)
                .map(|j| window.value_at((j * stride) as i64))
                .collect();
            let ks = crate::verify::ks_two_sample(&neg, &pos);
            assert!(
                ks.p_value > 0.01,
                "{}: stationarity KS rejected (p = {})",
                model.label(),
                ks.p_value
            );
        }
    }

    #[test]
    fn window_cap_is_enforced() {
        let model = SceneryModel::iid_standard_normal();
        let mut rng = stream(1, 0, STREAM_SCENERY);
        let err = model.sample_window(0, SAMPLING_BUFFER_CAP as i64 + 10, &mut rng);
        assert!(matches!(err, Err(Error::WindowTooLarge { .. })));
    }

    #[test]
    fn degenerate_scenery_is_flagged() {
        let model = SceneryModel::Iid {
            marginal: Marginal::Normal { sd: 0.0 },
        };
        let mut rng = stream(3, 0, STREAM_SCENERY);
        let err = model.empirical_covariance(5, 10_000, &mut rng);
        assert!(matches!(err, Err(Error::DegenerateVariance(_))));
    }
}
