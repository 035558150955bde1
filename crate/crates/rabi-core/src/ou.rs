//! Stationary Ornstein-Uhlenbeck process `dX = -omega X dt + dW`, the
//! position marginal of the oscillator ground state: stationary law
//! `N(0, 1/(2 omega))`, autocovariance `exp(-omega |t - s|) / (2 omega)`.
//!
//! Path weights downstream need time integrals of `X`, so segments are not
//! discretized: conditional on the start point, the pair
//! `(X(dt), I = integral of X over [0, dt])` is exactly Gaussian and is
//! sampled from its closed-form mean and covariance. Estimators built on top
//! therefore carry no step-size bias at all.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// Below this value of `u = omega dt` the closed form for `var_integral`
/// loses too many digits to cancellation and a series in `u` takes over.
const VAR_INTEGRAL_SERIES_CUTOFF: f64 = 3e-3;

/// The process, parametrized by the oscillator frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuProcess {
    omega: f64,
}

/// Exact conditional law of `(X(dt), I)` given `X(0) = x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMoments {
    pub mean_end: f64,
    pub mean_integral: f64,
    pub var_end: f64,
    pub cov_end_integral: f64,
    pub var_integral: f64,
}

impl OuProcess {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParams("omega must be positive and finite"));
        }
        Ok(OuProcess { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `1 / (2 omega)`.
    pub fn stationary_variance(&self) -> f64 {
        1.0 / (2.0 * self.omega)
    }

    /// `exp(-omega |lag|) / (2 omega)`.
    pub fn stationary_covariance(&self, lag: f64) -> f64 {
        (-self.omega * lag.abs()).exp() * self.stationary_variance()
    }

    /// One draw from the stationary law.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.stationary_variance().sqrt() * z
    }

    /// Conditional moments of `(X(dt), I)` given `X(0) = x_start`:
    ///
    /// ```text
    /// E[X(dt)] = x e^-u                   u = omega dt
    /// E[I]     = x (1 - e^-u) / omega
    /// Var[X(dt)]   = (1 - e^-2u) / (2 omega)
    /// Cov[X(dt),I] = (1 - e^-u)^2 / (2 omega^2)
    /// Var[I]       = (u - 2(1 - e^-u) + (1 - e^-2u)/2) / omega^3
    /// ```
    pub fn segment_moments(&self, x_start: f64, dt: f64) -> SegmentMoments {
        let w = self.omega;
        let u = w * dt;
        let em = -(-u).exp_m1(); // 1 - e^-u, full precision for small u
        let e2m = -(-2.0 * u).exp_m1(); // 1 - e^-2u
        let var_integral = if u < VAR_INTEGRAL_SERIES_CUTOFF {
            // u^3/3 - u^4/4 + 7u^5/60 - u^6/24, relative error O(u^4)
            u * u * u * (1.0 / 3.0 + u * (-0.25 + u * (7.0 / 60.0 - u / 24.0))) / (w * w * w)
        } else {
            (u - 2.0 * em + 0.5 * e2m) / (w * w * w)
        };
        SegmentMoments {
            mean_end: x_start * (1.0 - em),
            mean_integral: x_start * em / w,
            var_end: e2m / (2.0 * w),
            cov_end_integral: em * em / (2.0 * w * w),
            var_integral,
        }
    }

    /// Draws `(X(dt), I)` given `X(0) = x_start`, consuming exactly two
    /// standard normals: first the endpoint, then the integral conditioned
    /// on it.
    pub fn sample_segment<R: Rng + ?Sized>(
        &self,
        x_start: f64,
        dt: f64,
        rng: &mut R,
    ) -> (f64, f64) {
        let m = self.segment_moments(x_start, dt);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let sd_end = m.var_end.sqrt();
        let x_end = m.mean_end + sd_end * z1;
        if sd_end == 0.0 {
            return (x_end, m.mean_integral);
        }
        let slope = m.cov_end_integral / m.var_end;
        let resid_var = (m.var_integral - m.cov_end_integral * slope).max(0.0);
        let integral = m.mean_integral + slope * sd_end * z1 + resid_var.sqrt() * z2;
        (x_end, integral)
    }
}

/// Free-function form of [`OuProcess::sample_segment`] with parameter
/// validation, for callers that do not hold a process value.
pub fn sample_ou_segment<R: Rng + ?Sized>(
    x_start: f64,
    dt: f64,
    omega: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument("segment length dt must be positive"));
    }
    if !x_start.is_finite() {
        return Err(Error::InvalidArgument("x_start must be finite"));
    }
    Ok(OuProcess::new(omega)?.sample_segment(x_start, dt, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn stationary_law_constants() {
        let ou = OuProcess::new(2.0).unwrap();
        assert_eq!(ou.stationary_variance(), 0.25);
        assert_close(ou.stationary_covariance(1.0), 0.25 * (-2.0f64).exp(), 1e-16);
        assert_eq!(ou.stationary_covariance(-1.0), ou.stationary_covariance(1.0));
        assert!(OuProcess::new(0.0).is_err());
        assert!(OuProcess::new(-1.0).is_err());
    }

    #[test]
    fn moments_match_hand_values() {
        // omega = 1, dt = ln 2: e^-u = 1/2
        let ou = OuProcess::new(1.0).unwrap();
        let m = ou.segment_moments(2.0, core::f64::consts::LN_2);
        assert_close(m.mean_end, 1.0, 1e-15);
        assert_close(m.mean_integral, 1.0, 1e-15);
        assert_close(m.var_end, 0.375, 1e-15);
        assert_close(m.cov_end_integral, 0.125, 1e-15);
        assert_close(
            m.var_integral,
            core::f64::consts::LN_2 - 2.0 * 0.5 + 0.5 * 0.75,
            1e-15,
        );
    }

    #[test]
    fn moments_scale_away_from_unit_frequency() {
        // (omega, dt) enters only through u = omega dt and explicit powers
        // of omega, so check the scaling against the unit-frequency values
        let base = OuProcess::new(1.0).unwrap().segment_moments(1.0, 0.7);
        let w = 3.5;
        let scaled = OuProcess::new(w).unwrap().segment_moments(1.0, 0.7 / w);
        assert_close(scaled.mean_end, base.mean_end, 1e-15);
        assert_close(scaled.mean_integral, base.mean_integral / w, 1e-15);
        assert_close(scaled.var_end, base.var_end / w, 1e-15);
        assert_close(scaled.cov_end_integral, base.cov_end_integral / (w * w), 1e-15);
        assert_close(scaled.var_integral, base.var_integral / (w * w * w), 1e-14);
    }

    #[test]
    fn series_and_closed_form_agree_at_the_crossover() {
        let ou = OuProcess::new(1.0).unwrap();
        // straddle the cutoff: both branches must describe the same function
        let below = ou.segment_moments(1.0, VAR_INTEGRAL_SERIES_CUTOFF * 0.999);
        let above = ou.segment_moments(1.0, VAR_INTEGRAL_SERIES_CUTOFF * 1.001);
        let ratio = below.var_integral / above.var_integral;
        // var_integral ~ u^3/3, so the exact ratio is ~(0.999/1.001)^3
        let expect = (0.999f64 / 1.001).powi(3);
        assert_close(ratio, expect, 1e-5 * expect);
        // and the covariance matrix stays positive semidefinite
        for dt in [1e-6, 1e-4, 3e-3, 0.1, 1.0, 10.0] {
            let m = ou.segment_moments(0.3, dt);
            assert!(m.var_end > 0.0);
            assert!(m.var_integral > 0.0);
            let det = m.var_end * m.var_integral - m.cov_end_integral * m.cov_end_integral;
            assert!(
                det >= -1e-18 * m.var_end * m.var_integral,
                "negative conditional variance at dt = {dt}"
            );
        }
    }

    #[test]
    fn tiny_segments_stay_put() {
        // over dt = 1e-8 the endpoint moves by O(1e-4) noise and the
        // integral is x dt to leading order
        let ou = OuProcess::new(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let x0 = 0.8;
        let n = 100_000;
        let mut mean_end = 0.0;
        let mut mean_int = 0.0;
        for _ in 0..n {
            let (xe, i) = ou.sample_segment(x0, 1e-8, &mut rng);
            mean_end += xe;
            mean_int += i;
        }
        mean_end /= n as f64;
        mean_int /= n as f64;
        // se of the end mean is sqrt(2e-8 / n) ~ 4.5e-7
        assert_close(mean_end, x0, 3e-6);
        assert_close(mean_int, x0 * 1e-8, 1e-12);
    }

    #[test]
    fn sampled_moments_match_the_law() {
        // moderate-size empirical check against the stated conditional law;
        // the heavy cross-check against an independent small-step integrator
        // lives in the companion crate's validation suite
        let ou = OuProcess::new(1.3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let (x0, dt) = (0.9, 0.6);
        let m = ou.segment_moments(x0, dt);
        let n = 200_000usize;
        let (mut se, mut si, mut see, mut sii, mut sei) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (xe, i) = ou.sample_segment(x0, dt, &mut rng);
            se += xe;
            si += i;
            see += xe * xe;
            sii += i * i;
            sei += xe * i;
        }
        let nf = n as f64;
        let (me, mi) = (se / nf, si / nf);
        let vee = see / nf - me * me;
        let vii = sii / nf - mi * mi;
        let vei = sei / nf - me * mi;
        // 4-sigma bands on each moment
        assert_close(me, m.mean_end, 4.0 * (m.var_end / nf).sqrt());
        assert_close(mi, m.mean_integral, 4.0 * (m.var_integral / nf).sqrt());
        assert_close(vee, m.var_end, 4.0 * m.var_end * (2.0 / nf).sqrt());
        assert_close(vii, m.var_integral, 4.0 * m.var_integral * (2.0 / nf).sqrt());
        let sd_prod = (m.var_end * m.var_integral).sqrt();
        assert_close(vei, m.cov_end_integral, 4.0 * sd_prod * (2.0 / nf).sqrt());
    }

    #[test]
    fn stationary_sampler_matches_variance() {
        let ou = OuProcess::new(0.5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 200_000usize;
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..n {
            let x = ou.sample_stationary(&mut rng);
            s += x;
            ss += x * x;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = ss / nf - mean * mean;
        let v0 = ou.stationary_variance();
        assert_close(mean, 0.0, 4.0 * (v0 / nf).sqrt());
        assert_close(var, v0, 4.0 * v0 * (2.0 / nf).sqrt());
    }

    #[test]
    fn segment_endpoint_preserves_stationarity() {
        // pushing a stationary draw through a segment must return a draw
        // with the stationary variance and the lag covariance
        let ou = OuProcess::new(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let lag = 0.8;
        let n = 200_000usize;
        let (mut sxy, mut syy) = (0.0, 0.0);
        for _ in 0..n {
            let x = ou.sample_stationary(&mut rng);
            let (y, _) = ou.sample_segment(x, lag, &mut rng);
            sxy += x * y;
            syy += y * y;
        }
        let nf = n as f64;
        let v0 = ou.stationary_variance();
        assert_close(syy / nf, v0, 4.0 * v0 * (2.0 / nf).sqrt());
        assert_close(sxy / nf, ou.stationary_covariance(lag), 4.0 * v0 * (2.0 / nf).sqrt());
    }

    #[test]
    fn free_function_validates() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(sample_ou_segment(0.0, 0.0, 1.0, &mut rng).is_err());
        assert!(sample_ou_segment(0.0, -1.0, 1.0, &mut rng).is_err());
        assert!(sample_ou_segment(f64::NAN, 1.0, 1.0, &mut rng).is_err());
        assert!(sample_ou_segment(0.0, 1.0, 0.0, &mut rng).is_err());
        assert!(sample_ou_segment(0.5, 1.0, 1.0, &mut rng).is_ok());
    }
}
