//! Point-rationalizable choice bounds for games with one-sided private
//! parameters and strategic complements or substitutes.
//!
//! The crate has four layers. `beliefs` holds piecewise-constant parameter
//! densities, choice beliefs, composite (pushforward) beliefs, and the
//! stochastic-dominance comparisons between them. `game` describes players,
//! payoffs, and the two built-in duopoly models. `solver` runs the
//! extremal-belief round update that shrinks per-parameter choice intervals
//! and records the full iteration trace. `verify` provides numerical
//! assumption checks and a brute-force oracle on discretized instances so
//! solver output can be cross-checked independently.

// Input validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`:
// the negated form also rejects NaN, which must never slip past a guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beliefs;
pub mod game;
pub mod solver;
pub mod verify;

mod exec;
mod piecewise;

pub use piecewise::{Monotonicity, Piece, PiecewiseFn};

use thiserror::Error;

/// Absolute tolerance for density normalization: total mass must be within
/// this distance of one.
pub const MASS_TOL: f64 = 1e-12;

/// Default absolute tolerance for dominance and equality comparisons of
/// tail masses and survival functions.
pub const COMPARE_TOL: f64 = 1e-9;

/// Absolute x-tolerance of the golden-section search used for black-box
/// best responses.
pub const GOLDEN_TOL: f64 = 1e-10;

/// Relative refinement target for the adaptive Simpson quadrature used for
/// black-box expected utilities.
pub const SIMPSON_REL_TOL: f64 = 1e-8;

/// Errors reported by every layer of the crate.
///
/// The variants mirror the failure taxonomy of the command line tool:
/// `Domain`/`Argument` are caller mistakes, `AssumptionViolation` means the
/// game failed a structural requirement (wrong concavity, invalid belief
/// family, non-monotone bounds), `Numeric` covers quadrature or search
/// breakdowns, `Resource` covers configured budget limits, and `Internal`
/// flags inconsistencies that should never occur on valid inputs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds an interval, rejecting non-finite or reversed endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Argument(format!(
                "interval endpoints must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(Error::Argument(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// True when `x` lies inside the interval, allowing `slack` on each side.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    /// True when `other` is contained in `self`, allowing `slack` per side.
    pub fn contains_interval(&self, other: &Interval, slack: f64) -> bool {
        other.lo >= self.lo - slack && other.hi <= self.hi + slack
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Execution strategy for the data-parallel loops (per-grid-point best
/// responses, sampled verification trials).
///
/// `Parallel` uses rayon when the `parallel` feature is enabled and quietly
/// degrades to sequential execution when it is not, so callers can keep one
/// code path. Results are identical either way: every loop body is pure and
/// outputs are collected in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Evenly spaced grid over `[lo, hi]` with exact endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}
