//! Monte Carlo laboratory for random walks in weakly dependent random scenery.
//!
//! The crate simulates the additive functional `sum_{k<=n} xi_{S_k}` of an
//! integer random walk `S` moving through a stationary scenery `xi`, together
//! with its continuum limit (the Kesten–Spitzer process, a stochastic integral
//! of Brownian local time against two-sided white noise). Everything is built
//! around seeded, replicable sampling so that limit-theorem predictions can be
//! checked numerically at desk scale:
//!
//! * [`walk`] — integer walks, occupation counts, self-intersection counts;
//! * [`scenery`] — stationary centered scenery families with analytic and
//!   empirical covariances;
//! * [`dependence`] — decay bounds for weak-dependence coefficients and the
//!   summability condition they must satisfy;
//! * [`rwrs`] — the composed walk-in-scenery sums and their exact
//!   second-moment identity;
//! * [`limit`] — discretized Brownian local time and the limit process;
//! * [`verify`] — statistical checks (two-sample KS, scaling slopes, moment
//!   bounds) packaged as reproducible pass/fail results.

pub mod dependence;
pub mod limit;
pub mod rng;
pub mod rwrs;
pub mod scenery;
pub mod stats;
pub mod verify;
pub mod walk;

use thiserror::Error;

/// Errors surfaced by model construction and sampling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid increment law: {0}")]
    InvalidLaw(String),
    #[error("invalid scenery model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window of {requested} values exceeds the sampling buffer cap of {cap}")]
    WindowTooLarge { requested: usize, cap: usize },
    #[error("long-run variance estimate is not positive ({0}); the normalization constant does not exist")]
    DegenerateVariance(f64),
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
