//! Closed-form spectrum of the Jaynes-Cummings model, the rotating-wave
//! companion of the Rabi Hamiltonian:
//!
//! ```text
//! H_JC = sigma_z delta + omega a'a + g (sigma_+ a + sigma_- a')
//! ```
//!
//! `H_JC` conserves the excitation number, so its spectrum splits into the
//! singlet `|down, 0>` plus a ladder of 2x2 blocks. Energies are labelled by
//! a signed index `nu`: `nu = 0` for the singlet, `nu = -+|nu|` for the
//! lower/upper eigenvalue of the block with `|nu|` excitations.
//!
//! All energies here include the `omega / 2` zero-point shift, i.e. they are
//! eigenvalues of `H_JC + omega / 2`.

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// Relative tolerance for the two independent crossing routes.
const CROSSING_ROUTE_RTOL: f64 = 1e-12;

/// Eigenstate of one excitation block: energy plus the rotation angle that
/// mixes `|up, |nu| - 1>` and `|down, |nu|>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcEigenstate {
    pub nu: i32,
    pub energy: f64,
    /// Mixing angle; `pi / 4` exactly on resonance `2 delta = omega`.
    pub theta: f64,
    /// Components on `(|up, |nu| - 1>, |down, |nu|>)`; for `nu = 0` this is
    /// `(0, 1)`.
    pub amplitudes: (f64, f64),
}

/// Energy of level `nu`:
///
/// ```text
/// E_0        = -(2 delta - omega) / 2
/// E_(+-|nu|) = omega |nu| +- sqrt((2 delta - omega)^2 / 4 + g^2 |nu|)
/// ```
pub fn jc_energy(params: &ModelParams, nu: i32) -> f64 {
    let half_det = (2.0 * params.delta - params.omega) / 2.0;
    if nu == 0 {
        return -half_det;
    }
    let m = nu.unsigned_abs() as f64;
    let root = (half_det * half_det + params.g * params.g * m).sqrt();
    params.omega * m + (nu.signum() as f64) * root
}

/// Energy and eigenvector of level `nu`.
pub fn jc_eigenstate(params: &ModelParams, nu: i32) -> JcEigenstate {
    let energy = jc_energy(params, nu);
    if nu == 0 {
        return JcEigenstate {
            nu,
            energy,
            theta: 0.0,
            amplitudes: (0.0, 1.0),
        };
    }
    let m = nu.unsigned_abs() as f64;
    let det = 2.0 * params.delta - params.omega;
    // exact resonance gets the exact angle; the arctan form below would
    // divide by zero
    let theta = if det == 0.0 {
        core::f64::consts::FRAC_PI_4
    } else {
        0.5 * (2.0 * params.g * m.sqrt() / det).atan()
    };
    let (c, s) = (theta.cos(), theta.sin());
    // with the principal arctan branch, (cos, sin) is the upper-branch
    // eigenvector exactly when 2 delta > omega (and on resonance when
    // g >= 0); otherwise the roles swap
    let cs_is_upper = if det != 0.0 { det > 0.0 } else { params.g >= 0.0 };
    let amplitudes = if (nu > 0) == cs_is_upper {
        (c, s)
    } else {
        (-s, c)
    };
    JcEigenstate {
        nu,
        energy,
        theta,
        amplitudes,
    }
}

/// Ground energy and the ladder index that attains it, scanning
/// `nu = 0, -1, ..., -nu_limit`. As `g` grows the minimizing index walks down
/// the ladder, so the scan errs if the minimum sits at the search boundary.
pub fn jc_ground_energy(params: &ModelParams, nu_limit: u32) -> Result<(f64, i32)> {
    params.validate()?;
    if nu_limit < 1 {
        return Err(Error::InvalidArgument("nu_limit must be at least 1"));
    }
    let mut best = jc_energy(params, 0);
    let mut best_nu = 0i32;
    for m in 1..=nu_limit {
        let nu = -(m as i32);
        let e = jc_energy(params, nu);
        if e < best {
            best = e;
            best_nu = nu;
        }
    }
    if best_nu == -(nu_limit as i32) {
        return Err(Error::EnvelopeSearchExhausted { nu_limit });
    }
    Ok((best, best_nu))
}

/// Coupling at which ladder levels `-n` and `-(n + 1)` become degenerate,
/// computed by the closed form and by bisection, which must agree to
/// `1e-12` relative. Returns the closed-form value.
///
/// Crossings exist only for `2 delta >= omega`; `n = 0` gives the first
/// crossing `g_1 = sqrt(2 delta omega)`.
pub fn jc_crossing(params: &ModelParams, n: u32) -> Result<f64> {
    let closed = jc_crossing_closed_form(params, n)?;
    let bisect = jc_crossing_bisection(params, n)?;
    let scale = closed.abs().max(bisect.abs());
    if (closed - bisect).abs() > CROSSING_ROUTE_RTOL * scale {
        return Err(Error::CrossingRouteMismatch {
            closed_form: closed,
            bisection: bisect,
        });
    }
    Ok(closed)
}

fn check_crossing_domain(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if 2.0 * params.delta < params.omega {
        return Err(Error::CrossingDomain {
            delta: params.delta,
            omega: params.omega,
        });
    }
    Ok(())
}

/// Closed-form crossing coupling: squaring the degeneracy condition
/// `E_-(n+1)(g) = E_-n(g)` twice gives a quadratic in `g^2` whose relevant
/// root is
///
/// ```text
/// g_(n+1)^2 = omega^2 (1 + 2n) + omega sqrt(4 omega^2 n (n + 1) + (2 delta - omega)^2)
/// ```
pub fn jc_crossing_closed_form(params: &ModelParams, n: u32) -> Result<f64> {
    check_crossing_domain(params)?;
    let w = params.omega;
    let det = 2.0 * params.delta - w;
    let nf = n as f64;
    let disc = (4.0 * w * w * nf * (nf + 1.0) + det * det).sqrt();
    Ok((w * w * (1.0 + 2.0 * nf) + w * disc).sqrt())
}

/// Bisection route for the same crossing, independent of the closed form.
///
/// The gap `F(g) = E_-n(g) - E_-(n+1)(g)` (drop the common `omega` offsets:
/// `F(g) = sqrt(D + g^2 (n+1)) - sqrt(D + g^2 n) - omega` with
/// `D = (2 delta - omega)^2 / 4`) is strictly increasing in `g > 0` with
/// `F(0) = -omega < 0`, so it has exactly one positive root.
pub fn jc_crossing_bisection(params: &ModelParams, n: u32) -> Result<f64> {
    check_crossing_domain(params)?;
    let w = params.omega;
    let half_det = (2.0 * params.delta - w) / 2.0;
    let d = half_det * half_det;
    let nf = n as f64;
    let f = |g: f64| (d + g * g * (nf + 1.0)).sqrt() - (d + g * g * nf).sqrt() - w;
    let mut lo = 0.0f64;
    let mut hi = w;
    let mut grew = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        grew += 1;
        if grew > 200 {
            return Err(Error::CrossingBracket { n });
        }
    }
    // bisect to near machine precision; ~80 halvings from any bracket
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
