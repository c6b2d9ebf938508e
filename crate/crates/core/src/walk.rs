//! Integer random walks and their occupation-time functionals.
//!
//! A walk is generated by a finite-support centered step law. The module
//! computes the local time `N_n(i)` (visit counts per site), the
//! self-intersection counts `alpha(n,i)` (ordered time pairs at signed
//! distance `i`), and a reachability certificate showing that some truncated
//! version of the step law generates every integer site.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PROB_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;

/// Finite-support step distribution on the integers, centered and with at
/// least two distinct atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    atoms: Vec<(i64, f64)>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl IncrementLaw {
    /// Builds a law from `(step, probability)` atoms. Probabilities must sum
    /// to one and the weighted mean of the steps must vanish, both within
    /// 1e-12.
    pub fn new(mut atoms: Vec<(i64, f64)>) -> Result<Self> {
        if atoms.len() < 2 {
            return Err(Error::InvalidLaw("need at least two distinct atoms".into()));
        }
        atoms.sort_by_key(|&(s, _)| s);
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidLaw("duplicate step values".into()));
        }
        if atoms
            .iter()
            .any(|&(_, p)| !(p > 0.0 && p <= 1.0) || !p.is_finite())
        {
            return Err(Error::InvalidLaw("probabilities must lie in (0, 1]".into()));
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mean: f64 = atoms.iter().map(|&(s, p)| s as f64 * p).sum();
        if mean.abs() > MEAN_TOL {
            return Err(Error::InvalidLaw(format!(
                "law is not centered (mean {mean})"
            )));
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(_, p) in &atoms {
            acc += p;
            cumulative.push(acc);
        }
        // guard against rounding leaving the last boundary below 1
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self { atoms, cumulative })
    }

    /// Simple walk: steps -1 and +1 with probability 1/2 each.
    pub fn simple() -> Self {
        Self::new(vec![(-1, 0.5), (1, 0.5)]).expect("simple law is valid")
    }

    /// Lazy walk: holds with probability 1/2, otherwise steps +-1.
    pub fn lazy() -> Self {
        Self::new(vec![(-1, 0.25), (0, 0.5), (1, 0.25)]).expect("lazy law is valid")
    }

    /// Asymmetric-support walk on {-1, +2}, centered by its probabilities.
    pub fn skewed() -> Self {
        Self::new(vec![(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]).expect("skewed law is valid")
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    /// Step variance (the second moment; the law is centered).
    pub fn variance(&self) -> f64 {
        self.atoms
            .iter()
            .map(|&(s, p)| (s as f64) * (s as f64) * p)
            .sum()
    }

    pub fn max_abs_step(&self) -> i64 {
        self.atoms.iter().map(|&(s, _)| s.abs()).max().unwrap_or(0)
    }

    /// Rebuilds internal tables after deserialization and re-runs validation.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.atoms)
    }

    /// Draws one step.
    #[inline]
    pub fn sample_step<R: Rng>(&self, rng: &mut R) -> i64 {
        debug_assert_eq!(self.cumulative.len(), self.atoms.len());
        let u: f64 = rng.random();
        for (i, &c) in self.cumulative.iter().enumerate() {
            if u < c {
                return self.atoms[i].0;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    /// Samples a walk of `n` steps started at the origin.
    pub fn sample_path<R: Rng>(&self, n: usize, rng: &mut R) -> WalkPath {
        let mut positions = Vec::with_capacity(n + 1);
        let mut pos = 0i64;
        positions.push(pos);
        for _ in 0..n {
            pos += self.sample_step(rng);
            positions.push(pos);
        }
        WalkPath { positions }
    }

    /// Accumulates the local time of an `n`-step walk without materializing
    /// the path: a first pass (on a cloned generator) finds the visited hull,
    /// a second pass counts visits. The caller's generator ends in the same
    /// state as after [`IncrementLaw::sample_path`].
    pub fn sample_local_time(&self, n: usize, rng: &mut ChaCha8Rng) -> LocalTimeProfile {
        let mut scout = rng.clone();
        let (mut pos, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for _ in 0..n {
            pos += self.sample_step(&mut scout);
            lo = lo.min(pos);
            hi = hi.max(pos);
        }
        let width = (hi - lo) as usize + 1;
        let mut counts = vec![0u64; width];
        let mut pos = 0i64;
        counts[(0 - lo) as usize] += 1;
        for _ in 0..n {
            pos += self.sample_step(rng);
            counts[(pos - lo) as usize] += 1;
        }
        LocalTimeProfile {
            left: lo,
            counts,
            steps: n,
        }
    }

    /// Checks that some truncation of the law can reach every integer site.
    ///
    /// For each truncation level `q <= q_max` whose retained support is
    /// nonempty, the sufficient criterion is: the truncated support contains a
    /// positive and a negative step and has gcd 1. A breadth-first search then
    /// confirms that every site in `[-reach_bound, reach_bound]` is a sum of
    /// finitely many retained steps. A law that fails every level is reported
    /// as inconclusive, not as failing: the criterion is sufficient only.
    pub fn check_reachability(&self, q_max: u32, reach_bound: i64) -> ReachabilityReport {
        assert!(q_max >= 1, "q_max must be at least 1");
        assert!(reach_bound >= 1, "reach_bound must be at least 1");
        for q in 1..=q_max {
            let support: Vec<i64> = self
                .atoms
                .iter()
                .map(|&(s, _)| s)
                .filter(|s| s.abs() <= q as i64)
                .collect();
            if support.is_empty() {
                continue;
            }
            let has_pos = support.iter().any(|&s| s > 0);
            let has_neg = support.iter().any(|&s| s < 0);
            let g = support.iter().fold(0u64, |g, &s| gcd(g, s.unsigned_abs()));
            if !(has_pos && has_neg && g == 1) {
                continue;
            }
            if all_sites_reachable(&support, reach_bound, q as i64) {
                return ReachabilityReport {
                    holds: true,
                    witness_truncation: Some(q),
                    evidence: format!(
                        "truncated support {support:?} has both signs and gcd 1; \
                         breadth-first search reached every site in [-{reach_bound}, {reach_bound}]"
                    ),
                };
            }
        }
        ReachabilityReport {
            holds: false,
            witness_truncation: None,
            evidence: format!(
                "inconclusive: no truncation level q <= {q_max} passed the \
                 two-sign gcd-1 criterion with confirmed reachability \
                 (the criterion is sufficient, not necessary)"
            ),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// BFS over partial sums of support elements, restricted to a window with a
/// one-step margin. Reordering the summands keeps partial sums within the
/// margin, so the restriction loses nothing.
fn all_sites_reachable(support: &[i64], reach_bound: i64, margin: i64) -> bool {
    let lo = -(reach_bound + margin);
    let hi = reach_bound + margin;
    let width = (hi - lo) as usize + 1;
    let mut seen = vec![false; width];
    let mut queue = VecDeque::new();
    for &s in support {
        if s >= lo && s <= hi && !seen[(s - lo) as usize] {
            seen[(s - lo) as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(x) = queue.pop_front() {
        for &s in support {
            let y = x + s;
            if y >= lo && y <= hi && !seen[(y - lo) as usize] {
                seen[(y - lo) as usize] = true;
                queue.push_back(y);
            }
        }
    }
    (-reach_bound..=reach_bound).all(|x| seen[(x - lo) as usize])
}

/// Outcome of the truncated-support reachability check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachabilityReport {
    /// True when some truncation level verified the sufficient criterion.
    pub holds: bool,
    /// The first witnessing truncation level, when one exists.
    pub witness_truncation: Option<u32>,
    /// Human-readable description of the evidence.
    pub evidence: String,
}

/// A realized walk `S_0 = 0, S_1, ..., S_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    positions: Vec<i64>,
}

impl WalkPath {
    /// Wraps an explicit position sequence; the walk must start at the
    /// origin.
    pub fn from_positions(positions: Vec<i64>) -> Result<Self> {
        if positions.first() != Some(&0) {
            return Err(Error::InvalidConfig("walk must start at 0".into()));
        }
        Ok(Self { positions })
    }

    /// Number of steps (one less than the number of positions).
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Leftmost and rightmost visited sites.
    pub fn hull(&self) -> (i64, i64) {
        let lo = *self.positions.iter().min().expect("path is nonempty");
        let hi = *self.positions.iter().max().expect("path is nonempty");
        (lo, hi)
    }

    /// Visit counts over the visited hull.
    pub fn local_time(&self) -> LocalTimeProfile {
        self.local_time_at(self.steps())
    }

    /// Visit counts of the first `step` steps (the prefix `S_0, ..., S_step`).
    pub fn local_time_at(&self, step: usize) -> LocalTimeProfile {
        assert!(step < self.positions.len(), "step beyond the horizon");
        let prefix = &self.positions[..=step];
        let lo = *prefix.iter().min().expect("path is nonempty");
        let hi = *prefix.iter().max().expect("path is nonempty");
        let mut counts = vec![0u64; (hi - lo) as usize + 1];
        for &p in prefix {
            counts[(p - lo) as usize] += 1;
        }
        LocalTimeProfile {
            left: lo,
            counts,
            steps: step,
        }
    }
}

/// Occupation counts `N_n(i)` of a walk over its visited hull.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalTimeProfile {
    left: i64,
    counts: Vec<u64>,
    steps: usize,
}

impl LocalTimeProfile {
    /// Leftmost visited site.
    pub fn left(&self) -> i64 {
        self.left
    }

    /// Step count `n` of the generating walk; counts sum to `n + 1`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn width(&self) -> usize {
        self.counts.len()
    }

    /// Visit count at an arbitrary site (0 outside the hull).
    pub fn count_at(&self, site: i64) -> u64 {
        if site < self.left {
            return 0;
        }
        let idx = (site - self.left) as usize;
        self.counts.get(idx).copied().unwrap_or(0)
    }

    /// Largest visit count over all sites.
    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Self-intersection count at signed distance `i`: the number of ordered
    /// time pairs `(k, l)` with `S_k - S_l = i`, computed by convolving the
    /// profile with itself.
    pub fn self_intersection(&self, i: i64) -> u64 {
        let k = i.unsigned_abs() as usize;
        if k >= self.counts.len() {
            return 0;
        }
        (k..self.counts.len())
            .map(|j| self.counts[j] * self.counts[j - k])
            .sum()
    }

    /// Full table of self-intersection counts for all lags in range.
    pub fn alpha_table(&self) -> AlphaTable {
        let w = self.counts.len();
        let values = (0..w).map(|d| self.self_intersection(d as i64)).collect();
        AlphaTable {
            steps: self.steps,
            values,
        }
    }

    /// Writes the profile as CSV (`site,count`).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 local-time")?;
        writeln!(out, "site,count")?;
        for (j, &c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{}", self.left + j as i64, c)?;
        }
        Ok(())
    }
}

/// Self-intersection counts `alpha(n, i)` indexed by nonnegative lag; the
/// table is symmetric in the lag sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaTable {
    steps: usize,
    values: Vec<u64>,
}

impl AlphaTable {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest lag with a stored (possibly zero) value.
    pub fn max_lag(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    /// `alpha(n, i)`; zero beyond the table range.
    pub fn alpha(&self, i: i64) -> u64 {
        let k = i.unsigned_abs() as usize;
        self.values.get(k).copied().unwrap_or(0)
    }

    /// Sum over all signed lags; equals `(n + 1)^2` for a valid profile.
    pub fn total(&self) -> u64 {
        self.values[0] + 2 * self.values[1..].iter().sum::<u64>()
    }

    /// Writes the table as CSV over signed lags (`site,count`).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# rwrs-lab csv v1 self-intersection")?;
        writeln!(out, "site,count")?;
        for i in -(self.max_lag())..=self.max_lag() {
            writeln!(out, "{},{}", i, self.alpha(i))?;
        }
        Ok(())
    }
}
