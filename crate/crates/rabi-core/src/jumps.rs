//! Unit-rate Poisson spin flips on a time window.
//!
//! The two-level factor of the path measure is a spin that starts at
//! `sigma_0` and flips at the points of a rate-1 Poisson process:
//! `sigma(s) = sigma_0 * (-1)^(N_s)` with `N_s` the number of flips in
//! `[0, s]`. Conditional on `N_t = n`, the flip times are `n` independent
//! uniforms on `[0, t]`, which is exactly how they are sampled.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::params::Spin;

/// One realized flip history on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Flip times, ascending.
    pub jump_times: Vec<f64>,
    pub sigma_0: Spin,
}

impl JumpRecord {
    /// Total number of flips on the window.
    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Number of flips in `[0, s]`.
    pub fn jumps_up_to(&self, s: f64) -> usize {
        self.jump_times.partition_point(|&t| t <= s)
    }

    /// Spin value at time `s`.
    pub fn spin_at(&self, s: f64) -> Spin {
        if self.jumps_up_to(s) % 2 == 0 {
            self.sigma_0
        } else {
            self.sigma_0.flip()
        }
    }

    /// Spin value after the last flip.
    pub fn spin_end(&self) -> Spin {
        if self.n_jumps() % 2 == 0 {
            self.sigma_0
        } else {
            self.sigma_0.flip()
        }
    }
}

/// Samples a flip history on `[0, t]`: first the count `N_t ~ Poisson(t)`,
/// then `N_t` uniform flip times, sorted.
pub fn sample_jumps<R: Rng + ?Sized>(t: f64, sigma_0: Spin, rng: &mut R) -> Result<JumpRecord> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument("window length t must be positive"));
    }
    let poisson =
        Poisson::new(t).map_err(|_| Error::InvalidArgument("invalid Poisson intensity"))?;
    let n = poisson.sample(rng) as usize;
    let mut jump_times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
    jump_times.sort_unstable_by(f64::total_cmp);
    Ok(JumpRecord {
        jump_times,
        sigma_0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn spin_alternates_along_the_flips() {
        let rec = JumpRecord {
            jump_times: vec![0.5, 1.25, 2.0],
            sigma_0: Spin::Up,
        };
        assert_eq!(rec.spin_at(0.0), Spin::Up);
        assert_eq!(rec.spin_at(0.5), Spin::Down); // boundary counts the flip
        assert_eq!(rec.spin_at(1.0), Spin::Down);
        assert_eq!(rec.spin_at(1.5), Spin::Up);
        assert_eq!(rec.spin_at(3.0), Spin::Down);
        assert_eq!(rec.spin_end(), Spin::Down);
        assert_eq!(rec.n_jumps(), 3);
    }

    #[test]
    fn no_jumps_means_constant_spin() {
        let rec = JumpRecord {
            jump_times: vec![],
            sigma_0: Spin::Down,
        };
        assert_eq!(rec.spin_at(0.7), Spin::Down);
        assert_eq!(rec.spin_end(), Spin::Down);
    }

    #[test]
    fn sampled_times_are_sorted_and_in_range() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let rec = sample_jumps(2.5, Spin::Up, &mut rng).unwrap();
            for w in rec.jump_times.windows(2) {
                assert!(w[0] <= w[1]);
            }
            for &t in &rec.jump_times {
                assert!((0.0..2.5).contains(&t));
            }
        }
    }

    #[test]
    fn counts_follow_the_poisson_law() {
        // pmf anchors at t = 1: P(0) = e^-1, P(1) = e^-1; mean and variance
        // both equal t; the chi-square goodness-of-fit test lives in the
        // companion crate's validation suite
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let t = 1.0;
        let n = 200_000usize;
        let mut counts = [0usize; 16];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let k = sample_jumps(t, Spin::Up, &mut rng).unwrap().n_jumps();
            if k < counts.len() {
                counts[k] += 1;
            }
            sum += k as f64;
            sum_sq += (k as f64) * (k as f64);
        }
        let nf = n as f64;
        let e = (-1.0f64).exp();
        for (k, expect) in [(0usize, e), (1, e), (2, e / 2.0)] {
            let p_hat = counts[k] as f64 / nf;
            let se = (expect * (1.0 - expect) / nf).sqrt();
            assert!(
                (p_hat - expect).abs() <= 4.0 * se,
                "pmf({k}) = {p_hat}, expect {expect}"
            );
        }
        let mean = sum / nf;
        let var = sum_sq / nf - mean * mean;
        assert!((mean - t).abs() <= 4.0 * (t / nf).sqrt());
        // Var of the sample variance of Poisson(1): (mu4 - var^2)/n = (t(1+3t) - t^2)/n
        let var_of_var = (t * (1.0 + 3.0 * t) - t * t) / nf;
        assert!((var - t).abs() <= 4.0 * var_of_var.sqrt());
    }

    #[test]
    fn window_validation() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(sample_jumps(0.0, Spin::Up, &mut rng).is_err());
        assert!(sample_jumps(-1.0, Spin::Up, &mut rng).is_err());
        assert!(sample_jumps(f64::INFINITY, Spin::Up, &mut rng).is_err());
    }
}
