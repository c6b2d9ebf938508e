//! Decay bounds for the scenery's weak-dependence coefficients.
//!
//! The limit theorem consumes only a dominating function `g` for the
//! L2-type dependence coefficients of the scenery, never the coefficients
//! themselves (their Lipschitz supremum is not tractably estimable). This
//! module derives `g` per scenery family from the coupling bounds each
//! construction admits, and decides the summability condition
//! `x^{3/2} g(x)` non-increasing and `sum_i 2^{3i/2} g(2^{i eps}) < infinity`.

use serde::{Deserialize, Serialize};

use crate::scenery::{CoefficientRule, SceneryModel};
use crate::{Error, Result};

const SERIES_TERM_FLOOR: f64 = 1e-15;

/// Parametric dominating function for the dependence-coefficient decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DecayFamily {
    /// `g(x) = c * rho^x`.
    Geometric { c: f64, rho: f64 },
    /// `g(x) = c * x^{-a}`.
    Polynomial { c: f64, a: f64 },
}

/// A dominating function together with the construction that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub family: DecayFamily,
    pub provenance: String,
}

impl DecayBound {
    pub fn geometric(c: f64, rho: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) || !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidConfig(
                "geometric bound needs c >= 0 and rho in (0, 1)".into(),
            ));
        }
        Ok(Self {
            family: DecayFamily::Geometric { c, rho },
            provenance: provenance.into(),
        })
    }

    pub fn polynomial(c: f64, a: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidConfig(
                "polynomial bound needs c > 0 and a > 0".into(),
            ));
        }
        Ok(Self {
            family: DecayFamily::Polynomial { c, a },
            provenance: provenance.into(),
        })
    }

    /// Raw dominating function, for `x >= 1`.
    pub fn g(&self, x: f64) -> f64 {
        match self.family {
            DecayFamily::Geometric { c, rho } => {
                if c == 0.0 {
                    0.0
                } else {
                    (c.ln() + x * rho.ln()).exp()
                }
            }
            DecayFamily::Polynomial { c, a } => c * x.powf(-a),
        }
    }

    /// Abscissa beyond which `x^{3/2} g(x)` is non-increasing for a geometric
    /// bound (from the exact derivative condition); `None` when the raw
    /// function already satisfies the monotonicity everywhere or never does.
    pub fn monotone_threshold(&self) -> Option<f64> {
        match self.family {
            DecayFamily::Geometric { c, rho } if c > 0.0 => Some(1.5 / (1.0 / rho).ln()),
            _ => None,
        }
    }

    /// Dominating function re-dominated below the geometric monotonicity
    /// threshold so that `x^{3/2} g(x)` is non-increasing verbatim. Equals
    /// the raw function elsewhere and always dominates it.
    pub fn effective_g(&self, x: f64) -> f64 {
        match self.monotone_threshold() {
            Some(x0) if x < x0 => self.g(x0) * (x0 / x).powf(1.5),
            _ => self.g(x),
        }
    }

    /// Decides the summability condition at a fixed `epsilon` in (0, 1).
    ///
    /// Geometric bounds are evaluated through [`DecayBound::effective_g`]
    /// (monotone by construction); polynomial bounds are non-increasing
    /// after the `x^{3/2}` weight iff `a >= 3/2`, and the dyadic series
    /// converges iff `a > 3 / (2 epsilon)`.
    pub fn check_summability(&self, epsilon: f64) -> Result<SummabilityReport> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let (monotone_ok, note) = match self.family {
            DecayFamily::Geometric { c, .. } => {
                if c == 0.0 {
                    (true, "bound vanishes identically".to_string())
                } else {
                    let x0 = self.monotone_threshold().unwrap();
                    (
                        true,
                        format!(
                            "geometric bound re-dominated below x0 = {x0:.6} so that \
                             x^(3/2) g(x) is non-increasing everywhere"
                        ),
                    )
                }
            }
            DecayFamily::Polynomial { a, .. } => (
                a >= 1.5,
                format!("x^(3/2) x^(-a) is non-increasing iff a >= 3/2 (a = {a})"),
            ),
        };

        let (series_value, tail_bound) = self.dyadic_series(epsilon);
        let verdict = monotone_ok && tail_bound.is_finite();
        Ok(SummabilityReport {
            epsilon,
            monotone_ok,
            monotone_threshold: self.monotone_threshold(),
            series_value,
            tail_bound,
            verdict,
            note,
        })
    }

    /// Partial sum of `sum_i 2^{3i/2} g~(2^{i epsilon})` with a tail bound;
    /// the tail is infinite when the series diverges.
    fn dyadic_series(&self, epsilon: f64) -> (f64, f64) {
        match self.family {
            DecayFamily::Geometric { c, .. } => {
                if c == 0.0 {
                    return (0.0, 0.0);
                }
                let mut sum = 0.0;
                let mut i = 0u32;
                loop {
                    let term = 1.5f64.mul_add(i as f64, 0.0).exp2()
                        * self.effective_g((epsilon * i as f64).exp2());
                    sum += term;
                    let next = 1.5f64.mul_add((i + 1) as f64, 0.0).exp2()
                        * self.effective_g((epsilon * (i + 1) as f64).exp2());
                    if term < SERIES_TERM_FLOOR && next < 0.5 * term.max(SERIES_TERM_FLOOR) {
                        // superexponential decay: ratio is below 1/2 from here
                        return (sum, 2.0 * next);
                    }
                    if next < f64::MIN_POSITIVE {
                        return (sum, 0.0);
                    }
                    i += 1;
                    if i > 20_000 {
                        // not reachable for rho < 1; defensive stop
                        return (sum, f64::INFINITY);
                    }
                }
            }
            DecayFamily::Polynomial { c, a } => {
                // term_i = c 2^{i (3/2 - a eps)}: an exact geometric series
                let ratio = (1.5 - a * epsilon).exp2();
                if ratio >= 1.0 {
                    let partial: f64 = (0..64).map(|i| c * ratio.powi(i)).sum();
                    return (partial, f64::INFINITY);
                }
                let mut sum = 0.0;
                let mut term = c;
                let mut i = 0;
                while term >= SERIES_TERM_FLOOR && i < 20_000 {
                    sum += term;
                    term *= ratio;
                    i += 1;
                }
                (sum, term / (1.0 - ratio))
            }
        }
    }

    /// Whether the summability condition holds for some `epsilon` in (0, 1),
    /// with a witnessing value. Geometric bounds always qualify; polynomial
    /// bounds qualify exactly when `a > 3/2`.
    pub fn holds_for_some_epsilon(&self) -> (bool, Option<f64>) {
        match self.family {
            DecayFamily::Geometric { .. } => (true, Some(0.5)),
            DecayFamily::Polynomial { a, .. } => {
                if a > 1.5 {
                    let eps = 0.5 * (3.0 / (2.0 * a) + 1.0);
                    let ok = self
                        .check_summability(eps)
                        .map(|r| r.verdict)
                        .unwrap_or(false);
                    (ok, ok.then_some(eps))
                } else {
                    (false, None)
                }
            }
        }
    }
}

/// Verdict of the summability check at one `epsilon`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub epsilon: f64,
    /// Whether `x^{3/2} g(x)` is non-increasing (after re-domination for
    /// geometric bounds).
    pub monotone_ok: bool,
    /// Re-domination abscissa for geometric bounds.
    pub monotone_threshold: Option<f64>,
    /// Partial sum of the dyadic series.
    pub series_value: f64,
    /// Bound on its neglected tail; infinite when the series diverges.
    pub tail_bound: f64,
    /// `monotone_ok` and finite tail.
    pub verdict: bool,
    pub note: String,
}

/// Derives the dominating function of a scenery family from its coupling
/// bound.
///
/// * i.i.d.: the coefficients vanish from lag 1 on, represented as `c = 0`;
/// * causal linear process with i.i.d. innovations: only the unresampled
///   innovations contribute, leaving `|eps_0 - eps_0'|_2 sum_{j >= i} |a_j|`
///   with `|eps_0 - eps_0'|_2 = sqrt(2 Var eps)` for an independent copy;
/// * contractive recursion: `kappa^i |xi_0 - xi_0*|_2` with the stationary
///   variance known in closed form for the linear recursion;
/// * doubling map: geometric decay at the bit-shift rate 1/2 with an unknown
///   constant, set to 1 for verdict purposes.
pub fn dependence_bound(model: &SceneryModel) -> DecayBound {
    match model {
        SceneryModel::Iid { .. } => DecayBound::geometric(
            0.0,
            0.5,
            "i.i.d. scenery: coefficients vanish for lags >= 1",
        )
        .expect("valid bound"),
        SceneryModel::LinearProcess {
            coefficients,
            innovation,
            ..
        } => {
            let pair_norm = (2.0 * innovation.variance()).sqrt();
            match coefficients {
                CoefficientRule::Geometric { rho } => DecayBound::geometric(
                    pair_norm / (1.0 - rho),
                    *rho,
                    "causal linear process: coupling tail sum_{j>=i} |a_j| = rho^i / (1 - rho)",
                )
                .expect("valid bound"),
                CoefficientRule::Finite { coefficients } => {
                    let rho = 0.5f64;
                    let c = (1..=coefficients.len())
                        .map(|i| {
                            let tail: f64 = coefficients.iter().skip(i).map(|a| a.abs()).sum();
                            pair_norm * tail / rho.powi(i as i32)
                        })
                        .fold(0.0f64, f64::max);
                    DecayBound::geometric(
                        c,
                        rho,
                        "finite linear process: coupling tail dominated at rate 1/2",
                    )
                    .expect("valid bound")
                }
            }
        }
        SceneryModel::IteratedFunction {
            kappa, innovation, ..
        } => {
            let stationary_var = innovation.variance() / (1.0 - kappa * kappa);
            DecayBound::geometric(
                (2.0 * stationary_var).sqrt(),
                *kappa,
                "contractive recursion: kappa^i times the L2 distance of independent \
                 stationary copies",
            )
            .expect("valid bound")
        }
        SceneryModel::DoublingMap { .. } => DecayBound::geometric(
            1.0,
            0.5,
            "doubling map: geometric decay at the bit-shift rate; constant unknown, set to 1",
        )
        .expect("valid bound"),
    }
}

/// Weighted covariance sum `r(0) + 2 sum_{k=1}^{k_cap} k^lambda |r(k)|`
/// together with a tail bound from `|r(k)| <= |xi_0|_2 g~(k)`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedCovarianceSum {
    pub lambda: f64,
    pub lag_cap: usize,
    pub partial_sum: f64,
    pub tail_bound: f64,
}

/// Evaluates the weighted covariance sum for a model with analytic
/// covariances. The guarantee behind the bound fails at `lambda >= 1/2`,
/// so such weights are rejected.
pub fn weighted_covariance_sum(
    model: &SceneryModel,
    lambda: f64,
    lag_cap: usize,
) -> Result<WeightedCovarianceSum> {
    if !(0.0..0.5).contains(&lambda) {
        return Err(Error::InvalidConfig(format!(
            "weight exponent must lie in [0, 1/2), got {lambda}"
        )));
    }
    let r0 = model.analytic_covariance(0).ok_or_else(|| {
        Error::Unsupported(format!(
            "weighted covariance sum needs analytic covariances ({} model lacks them)",
            model.label()
        ))
    })?;
    let mut partial = r0;
    for k in 1..=lag_cap {
        let r = model
            .analytic_covariance(k)
            .expect("lag 0 availability implies all lags");
        partial += 2.0 * (k as f64).powf(lambda) * r.abs();
    }
    let bound = dependence_bound(model);
    let norm = r0.sqrt();
    let mut tail = 0.0;
    let mut k = lag_cap + 1;
    loop {
        let term = 2.0 * (k as f64).powf(lambda) * norm * bound.effective_g(k as f64);
        tail += term;
        if term < 1e-18 || k > lag_cap + 200_000 {
            break;
        }
        k += 1;
    }
    Ok(WeightedCovarianceSum {
        lambda,
        lag_cap,
        partial_sum: partial,
        tail_bound: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, STREAM_AUX, STREAM_SCENERY};
    use crate::scenery::{Marginal, Observable};
    use proptest::prelude::*;

    #[test]
    fn iid_bound_vanishes() {
        let bound = dependence_bound(&SceneryModel::iid_standard_normal());
        assert_eq!(bound.g(1.0), 0.0);
        assert_eq!(bound.g(50.0), 0.0);
        let report = bound.check_summability(0.5).unwrap();
        assert!(report.verdict);
        assert_eq!(report.series_value, 0.0);
    }

    #[test]
    fn linear_process_bound_matches_coupling_display() {
        let model = SceneryModel::linear_geometric(0.5, 1.0).unwrap();
        let bound = dependence_bound(&model);
        let DecayFamily::Geometric { c, rho } = bound.family else {
            panic!("expected geometric bound");
        };
        assert!((rho - 0.5).abs() < 1e-15);
        assert!((c - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // term-by-term oracle for the coupling display: with i.i.d.
        // innovations only the tail term survives, giving
        // sqrt(2) s sum_{j >= i} rho^j
        for i in 1..12 {
            let oracle: f64 = 2f64.sqrt() * (i..400).map(|j| 0.5f64.powi(j)).sum::<f64>();
            assert!(
                (bound.g(i as f64) - oracle).abs() < 1e-12,
                "lag {i}: g = {} vs oracle {oracle}",
                bound.g(i as f64)
            );
        }
    }

    #[test]
    fn iterated_function_bound_uses_stationary_pair_norm() {
        let model = SceneryModel::iterated_function(0.5, 1.0).unwrap();
        let bound = dependence_bound(&model);
        let DecayFamily::Geometric { c, rho } = bound.family else {
            panic!("expected geometric bound");
        };
        assert!((rho - 0.5).abs() < 1e-15);
        // closed form: sqrt(2 * 4/3) = 1.63299...
        assert!((c - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((c - 1.633).abs() < 5e-4);

        // oracle: the stationary variance estimated by simulation
        let mut rng = stream(53, 0, STREAM_SCENERY);
        let window = model.sample_window(0, 399_999, &mut rng).unwrap();
        let sim_var = crate::stats::variance(window.values());
        assert!(((2.0 * sim_var).sqrt() - c).abs() < 0.02);
    }

    #[test]
    fn summability_examples() {
        let poly2 = DecayBound::polynomial(1.0, 2.0, "test").unwrap();
        assert!(poly2.check_summability(0.9).unwrap().verdict);

        let poly1 = DecayBound::polynomial(1.0, 1.0, "test").unwrap();
        for eps in [0.1, 0.5, 0.9, 0.99] {
            let report = poly1.check_summability(eps).unwrap();
            assert!(!report.verdict, "a = 1 must fail at eps = {eps}");
            assert!(report.tail_bound.is_infinite());
        }

        let geo = DecayBound::geometric(1.0, 0.5, "test").unwrap();
        let report = geo.check_summability(0.5).unwrap();
        assert!(report.verdict);
        assert!(report.series_value.is_finite());
        assert!(report.tail_bound < 1e-12);

        // independent partial-sum oracle in log space
        let x0 = 1.5 / 2f64.ln();
        let g_tilde = |x: f64| {
            if x < x0 {
                0.5f64.powf(x0) * (x0 / x).powf(1.5)
            } else {
                0.5f64.powf(x)
            }
        };
        let oracle: f64 = (0..200)
            .map(|i| (1.5 * i as f64).exp2() * g_tilde((0.5 * i as f64).exp2()))
            .sum();
        assert!(
            (report.series_value - oracle).abs() < 1e-10,
            "series {} vs oracle {oracle}",
            report.series_value
        );
    }

    #[test]
    fn epsilon_outside_unit_interval_is_rejected() {
        let geo = DecayBound::geometric(1.0, 0.5, "test").unwrap();
        assert!(geo.check_summability(0.0).is_err());
        assert!(geo.check_summability(1.0).is_err());
        assert!(geo.check_summability(-0.2).is_err());
    }

    #[test]
    fn existence_search_matches_threshold() {
        assert!(
            DecayBound::polynomial(1.0, 2.0, "t")
                .unwrap()
                .holds_for_some_epsilon()
                .0
        );
        assert!(
            DecayBound::polynomial(1.0, 1.6, "t")
                .unwrap()
                .holds_for_some_epsilon()
                .0
        );
        assert!(
            !DecayBound::polynomial(1.0, 1.0, "t")
                .unwrap()
                .holds_for_some_epsilon()
                .0
        );
        assert!(
            !DecayBound::polynomial(1.0, 1.5, "t")
                .unwrap()
                .holds_for_some_epsilon()
                .0
        );
        assert!(
            DecayBound::geometric(3.0, 0.9, "t")
                .unwrap()
                .holds_for_some_epsilon()
                .0
        );
    }

    #[test]
    fn monotone_verdicts_agree_with_brute_force_tabulation() {
        let bounds = [
            DecayBound::geometric(2.0, 0.3, "t").unwrap(),
            DecayBound::geometric(1.0, 0.9, "t").unwrap(),
            DecayBound::polynomial(1.0, 2.0, "t").unwrap(),
            DecayBound::polynomial(3.0, 1.5, "t").unwrap(),
            DecayBound::polynomial(1.0, 1.0, "t").unwrap(),
        ];
        for bound in &bounds {
            let report = bound.check_summability(0.5).unwrap();
            let weighted = |x: f64| x.powf(1.5) * bound.effective_g(x);
            let mut increasing_pair = false;
            let mut prev = weighted(1.0);
            for x in 2..=10_000u32 {
                let cur = weighted(x as f64);
                // ignore subnormal quantization jitter deep in the tail
                if cur > prev * (1.0 + 1e-9) && cur > 1e-290 {
                    increasing_pair = true;
                    break;
                }
                prev = cur;
            }
            assert_eq!(
                report.monotone_ok, !increasing_pair,
                "verdict mismatch for {bound:?}"
            );
        }
    }

    #[test]
    fn weighted_sum_examples() {
        // i.i.d.: only the lag-0 term survives and the tail vanishes
        let iid = SceneryModel::iid_standard_normal();
        for lambda in [0.0, 0.25, 0.49] {
            let out = weighted_covariance_sum(&iid, lambda, 30).unwrap();
            assert!((out.partial_sum - 1.0).abs() < 1e-15);
            assert_eq!(out.tail_bound, 0.0);
        }

        // AR(1): partial sums are Cauchy in the lag cap
        let ar1 = SceneryModel::linear_geometric(0.5, 1.0).unwrap();
        let s20 = weighted_covariance_sum(&ar1, 0.25, 20).unwrap().partial_sum;
        let s40 = weighted_covariance_sum(&ar1, 0.25, 40).unwrap().partial_sum;
        let s80 = weighted_covariance_sum(&ar1, 0.25, 80).unwrap().partial_sum;
        assert!((s80 - s40).abs() < (s40 - s20).abs());
        assert!((s80 - s40).abs() < 1e-9);

        // doubling map with h(x) = x - 1/2: closed-form covariance summation
        let doubling = SceneryModel::doubling_map(Observable::Centered);
        let out = weighted_covariance_sum(&doubling, 0.4, 200).unwrap();
        let oracle: f64 = 1.0 / 12.0
            + 2.0
                * (1..=200)
                    .map(|k| (k as f64).powf(0.4) * (k as f64).exp2().recip() / 12.0)
                    .sum::<f64>();
        assert!((out.partial_sum - oracle).abs() < 1e-12);
        assert!(out.partial_sum.is_finite());
        assert!(out.tail_bound < 1e-6);

        // rejected weight exponents
        assert!(weighted_covariance_sum(&iid, 0.5, 10).is_err());
        assert!(weighted_covariance_sum(&iid, -0.1, 10).is_err());
    }

    #[test]
    fn empirical_covariances_are_dominated_by_the_bound() {
        let models = [
            SceneryModel::iid_standard_normal(),
            SceneryModel::linear_geometric(0.5, 1.0).unwrap(),
            SceneryModel::iterated_function(0.5, 1.0).unwrap(),
            SceneryModel::doubling_map(Observable::Centered),
        ];
        for (i, model) in models.iter().enumerate() {
            let bound = dependence_bound(model);
            let mut rng = stream(59, i as u64, STREAM_AUX);
            let summary = model.empirical_covariance(20, 400_000, &mut rng).unwrap();
            let norm = model.analytic_variance().unwrap().sqrt();
            for k in 1..=20usize {
                let cap = norm * bound.effective_g(k as f64) + 4.0 * summary.standard_errors[k];
                assert!(
                    summary.lags[k].abs() <= cap,
                    "{}: |r({k})| = {} exceeds {cap}",
                    model.label(),
                    summary.lags[k].abs()
                );
            }
        }
    }

    #[test]
    fn degenerate_marginal_yields_zero_norm_bound() {
        let model = SceneryModel::Iid {
            marginal: Marginal::Normal { sd: 0.0 },
        };
        let bound = dependence_bound(&model);
        assert_eq!(bound.g(3.0), 0.0);
    }

    proptest! {
        #[test]
        fn polynomial_verdicts_are_monotone_in_the_exponent(
            a1 in 0.5f64..4.0,
            bump in 0.01f64..3.0,
            eps in 0.05f64..0.95,
        ) {
            let b1 = DecayBound::polynomial(1.0, a1, "t").unwrap();
            let b2 = DecayBound::polynomial(1.0, a1 + bump, "t").unwrap();
            let v1 = b1.check_summability(eps).unwrap().verdict;
            let v2 = b2.check_summability(eps).unwrap().verdict;
            prop_assert!(!v1 || v2, "a1 = {a1} passed but a2 = {} failed", a1 + bump);
        }
    }
}
