//! Error type shared by every fallible operation in the crate.

use alloc::boxed::Box;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong, from bad inputs to numerical breakdown.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Model parameters violate an invariant (`omega > 0`, `delta >= 0`,
    /// all finite), or a routine was handed parameters outside its domain.
    InvalidParams(&'static str),
    /// A truncation, grid, sample-count or level-count argument is out of
    /// range for the requested operation.
    InvalidArgument(&'static str),
    /// The QL iteration failed to deflate the tridiagonal matrix within the
    /// iteration budget.
    EigenNoConvergence { iterations: usize, dim: usize },
    /// More levels were requested than the truncation can resolve reliably
    /// (requires `2 * k <= n_max`).
    TruncationGuard { k: usize, n_max: usize },
    /// Doubling the Fock cutoff would exceed the hard cap before the level
    /// shifts dropped below tolerance.
    TruncationCapReached {
        n_max_cap: usize,
        last_shift: f64,
        tol: f64,
    },
    /// The ladder-index search for the ground-energy envelope hit the search
    /// limit, so the minimum may lie beyond it.
    EnvelopeSearchExhausted { nu_limit: u32 },
    /// Level crossings only exist for `2 * delta >= omega`; outside that
    /// domain there is nothing to solve for.
    CrossingDomain { delta: f64, omega: f64 },
    /// The bisection bracket for a crossing could not be established.
    CrossingBracket { n: u32 },
    /// The closed-form and bisection routes for a crossing coupling disagree
    /// beyond tolerance.
    CrossingRouteMismatch { closed_form: f64, bisection: f64 },
    /// Level tracking between two adjacent sweep points could not resolve the
    /// occupancy change into a single pairwise swap, even after refinement.
    GridTooCoarse { g_lo: f64, g_hi: f64 },
    /// Wraps an error with the coupling at which it occurred during a sweep.
    AtCoupling { g: f64, source: Box<Error> },
    /// A Monte Carlo estimate is unusable: a moment came out non-finite or a
    /// ratio denominator non-positive.
    VarianceFailure(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::EigenNoConvergence { iterations, dim } => write!(
                f,
                "eigensolver failed to converge after {iterations} iterations on a {dim}x{dim} matrix"
            ),
            Error::TruncationGuard { k, n_max } => write!(
                f,
                "requested {k} levels from truncation n_max = {n_max}; need 2 * k <= n_max"
            ),
            Error::TruncationCapReached {
                n_max_cap,
                last_shift,
                tol,
            } => write!(
                f,
                "truncation cap n_max = {n_max_cap} reached with level shift {last_shift:e} still above tol {tol:e}"
            ),
            Error::EnvelopeSearchExhausted { nu_limit } => write!(
                f,
                "ground-envelope minimum not interior to ladder search range 0..={nu_limit}"
            ),
            Error::CrossingDomain { delta, omega } => write!(
                f,
                "crossings require 2 * delta >= omega; got delta = {delta}, omega = {omega}"
            ),
            Error::CrossingBracket { n } => {
                write!(f, "failed to bracket crossing {n} for bisection")
            }
            Error::CrossingRouteMismatch {
                closed_form,
                bisection,
            } => write!(
                f,
                "crossing routes disagree: closed form {closed_form:.17e} vs bisection {bisection:.17e}"
            ),
            Error::GridTooCoarse { g_lo, g_hi } => write!(
                f,
                "level tracking ambiguous in [{g_lo}, {g_hi}] after refinement; use a finer sweep grid"
            ),
            Error::AtCoupling { g, source } => write!(f, "at coupling g = {g}: {source}"),
            Error::VarianceFailure(msg) => write!(f, "estimator breakdown: {msg}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtCoupling { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
