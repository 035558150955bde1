//! The gating suite behind the `validate` command: every fast path in the
//! workspace is held against an independent route before anyone trusts its
//! numbers. Deterministic checks compare against closed forms or the dense
//! oracle; statistical checks run at a fixed seed and pass within wide
//! (4 sigma) bands, so a red result means a defect, not a fluctuation.

use rabi_core::fk::{
    self, stationary_quartile_edges, worker_rng, FkConfig,
};
use rabi_core::jc::{jc_crossing_bisection, jc_crossing_closed_form};
use rabi_core::jumps::sample_jumps;
use rabi_core::ou::OuProcess;
use rabi_core::spectra::{self, converge_truncation, coupling_grid, rabi_spectrum};
use rabi_core::tridiag::{eigen_tridiagonal, SymmetricTridiagonal};
use rabi_core::{FockTruncation, ModelParams, Spin};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::oracle;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &str, r: Result<(bool, String), rabi_core::Error>) -> CheckOutcome {
    match r {
        Ok((pass, detail)) => CheckOutcome {
            name: name.to_string(),
            pass,
            detail,
        },
        Err(e) => CheckOutcome {
            name: name.to_string(),
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check. Internal errors surface as failed checks, never as an
/// abort, so one broken path cannot hide the state of the others.
pub fn run_all(seed: u64, n_samples: u64, n_workers: u32) -> Vec<CheckOutcome> {
    vec![
        outcome("tridiagonal-vs-dense", tridiagonal_vs_dense(seed)),
        outcome("parity-blocks-vs-dense", parity_blocks_vs_dense()),
        outcome("zero-coupling-anchor", zero_coupling_anchor()),
        outcome("zero-gap-ground-anchor", zero_gap_ground_anchor()),
        outcome("ladder-crossing-routes", ladder_crossing_routes()),
        outcome("poisson-counts", poisson_counts_law(seed, n_samples)),
        outcome(
            "stationary-covariance",
            stationary_covariance_law(seed, n_samples),
        ),
        outcome("segment-vs-euler", segment_vs_euler(seed)),
        outcome("free-case-weights", free_case_weights(seed, n_workers)),
        outcome(
            "flip-generating-function",
            flip_generating_function(seed, n_samples, n_workers),
        ),
        outcome(
            "reproducible-estimates",
            reproducible_estimates(seed, n_workers),
        ),
        outcome(
            "parallel-vs-sequential",
            parallel_vs_sequential(seed, n_workers),
        ),
    ]
}

type Check = Result<(bool, String), rabi_core::Error>;

/// Random symmetric tridiagonal eigenvalues against the dense solver.
fn tridiagonal_vs_dense(seed: u64) -> Check {
    let mut rng = worker_rng(seed, 0);
    let n = 40;
    let diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let off: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>() + 0.5).collect();
    let t = SymmetricTridiagonal::new(diag.clone(), off.clone())?;
    let fast = eigen_tridiagonal(&t, n)?;
    let dense = oracle::tridiagonal_dense_eigenvalues(&diag, &off);
    let scale = dense.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let worst = fast
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok((
        worst <= 1e-10 * scale,
        format!("dim {n}, max |diff| = {worst:.3e}, scale {scale:.3e}"),
    ))
}

/// Union of the two parity-sector spectra against the dense product-basis
/// matrix, which never saw the sector reduction.
fn parity_blocks_vs_dense() -> Check {
    let params = ModelParams::new(0.5, 1.0, 0.7)?;
    let trunc = FockTruncation::new(80)?;
    let k = 8;
    let merged = rabi_spectrum(&params, trunc, k)?;
    let dense = oracle::rabi_dense_spectrum(&params, trunc, k);
    let worst = merged
        .energies()
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok((
        worst <= 1e-10 * params.omega,
        format!("lowest {k} levels, max |diff| = {worst:.3e}"),
    ))
}

/// At zero coupling the merged spectrum is the exact ladder
/// `omega n -+ delta`.
fn zero_coupling_anchor() -> Check {
    let mut worst = 0.0f64;
    for (delta, omega) in [(0.5, 1.0), (1.2, 0.7)] {
        let params = ModelParams::new(delta, omega, 0.0)?;
        let spec = rabi_spectrum(&params, FockTruncation::new(60)?, 8)?;
        let mut expect: Vec<f64> = (0..8)
            .flat_map(|n| {
                let base = omega * n as f64;
                [base - delta, base + delta]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in spec.energies().iter().zip(&expect) {
            worst = worst.max((a - b).abs() / omega);
        }
    }
    Ok((worst <= 1e-12, format!("max |diff|/omega = {worst:.3e}")))
}

/// At zero gap the ground energy is the displaced-oscillator value
/// `-g^2 / omega`, exactly.
fn zero_gap_ground_anchor() -> Check {
    let mut worst = 0.0f64;
    for (omega, g) in [(1.0, 1.5), (2.0, 2.0)] {
        let params = ModelParams::new(0.0, omega, g)?;
        let spec = converge_truncation(&params, 1, 1e-10 * omega)?;
        let expect = -g * g / omega;
        worst = worst.max((spec.levels[0].energy - expect).abs() / omega);
    }
    Ok((worst <= 1e-10, format!("max |diff|/omega = {worst:.3e}")))
}

/// Closed-form ladder crossings against the bracketing bisection.
fn ladder_crossing_routes() -> Check {
    let mut worst = 0.0f64;
    for (delta, omega) in [(0.5, 1.0), (1.5, 1.0), (1.0, 2.0), (0.8, 1.3)] {
        let params = ModelParams::new(delta, omega, 0.0)?;
        for n in 0..9 {
            let closed = jc_crossing_closed_form(&params, n)?;
            let bisect = jc_crossing_bisection(&params, n)?;
            worst = worst.max((closed - bisect).abs() / closed.abs().max(bisect.abs()));
        }
    }
    Ok((worst <= 1e-12, format!("max relative gap = {worst:.3e}")))
}

/// Counts per flip-count bin at unit rate and horizon, with expected
/// probabilities `e^-t t^k / k!`.
pub fn poisson_histogram(t: f64, n: u64, seed: u64, top_bin: usize) -> Vec<u64> {
    let mut rng = worker_rng(seed, 0);
    let mut counts = vec![0u64; top_bin + 2];
    for _ in 0..n {
        let record = sample_jumps(t, Spin::Up, &mut rng).expect("valid window");
        let k = record.n_jumps().min(top_bin + 1);
        counts[k] += 1;
    }
    counts
}

/// `e^-t t^k / k!` for `k = 0..=top_bin` plus the complementary tail mass.
pub fn poisson_bin_probabilities(t: f64, top_bin: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(top_bin + 2);
    let mut pmf = (-t).exp();
    let mut cumulative = 0.0;
    for k in 0..=top_bin {
        if k > 0 {
            pmf *= t / k as f64;
        }
        p.push(pmf);
        cumulative += pmf;
    }
    p.push((1.0 - cumulative).max(0.0));
    p
}

/// Right tail of the chi-square law at an even dof:
/// `exp(-x/2) * sum_(j<dof/2) (x/2)^j / j!`.
pub fn chi_square_survival_even_dof(x: f64, dof: u32) -> f64 {
    assert!(dof >= 2 && dof % 2 == 0, "closed form needs an even dof");
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..(dof / 2) {
        term *= h / j as f64;
        sum += term;
    }
    ((-h).exp() * sum).min(1.0)
}

/// Flip counts at unit rate: per-bin z within 4 and a chi-square tail
/// probability above 1e-3. The top bin adapts to the draw count so every
/// expected count stays at 5 or more (and the dof stays even).
pub fn poisson_counts_law(seed: u64, n: u64) -> Check {
    let t = 1.0;
    let mut top_bin = 9usize;
    loop {
        let p = poisson_bin_probabilities(t, top_bin);
        // the tail carries the least mass, so it decides the merge
        let min_expected = p[top_bin].min(p[top_bin + 1]) * n as f64;
        if min_expected >= 5.0 || top_bin == 3 {
            break;
        }
        // stepping by two keeps bins + tail even for the closed-form tail
        top_bin -= 2;
    }
    let probs = poisson_bin_probabilities(t, top_bin);
    if probs[top_bin].min(probs[top_bin + 1]) * (n as f64) < 5.0 {
        return Ok((false, format!("needs more draws, n = {n}")));
    }
    let counts = poisson_histogram(t, n, seed, top_bin);
    let mut chi2 = 0.0;
    let mut max_z = 0.0f64;
    for (obs, p) in counts.iter().zip(&probs) {
        let expect = p * n as f64;
        let sd = (expect * (1.0 - p)).sqrt();
        max_z = max_z.max((*obs as f64 - expect).abs() / sd);
        chi2 += (*obs as f64 - expect).powi(2) / expect;
    }
    let dof = counts.len() as u32 - 1;
    let p_value = chi_square_survival_even_dof(chi2, dof);
    Ok((
        p_value > 1e-3 && max_z <= 4.0,
        format!("chi2 = {chi2:.2} at dof {dof}, p = {p_value:.4}, max |z| = {max_z:.2}"),
    ))
}

/// Stationary variance and lagged covariance of the position process
/// against `e^(-omega lag) / (2 omega)`, within 4 standard errors.
pub fn stationary_covariance_law(seed: u64, n: u64) -> Check {
    let omega = 1.0;
    let ou = OuProcess::new(omega)?;
    let mut rng = worker_rng(seed, 0);
    let mut max_z = 0.0f64;
    let mut details = Vec::new();
    for lag in [0.0, 0.5, 1.0, 2.0] {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x0 = ou.sample_stationary(&mut rng);
            let product = if lag == 0.0 {
                x0 * x0
            } else {
                x0 * ou.sample_segment(x0, lag, &mut rng).0
            };
            sum += product;
            sum_sq += product * product;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        let expect = ou.stationary_covariance(lag);
        let z = (mean - expect) / se;
        max_z = max_z.max(z.abs());
        details.push(format!("lag {lag}: z = {z:.2}"));
    }
    Ok((max_z <= 4.0, details.join("; ")))
}

#[derive(Default, Clone, Copy)]
struct FeatureSums {
    sums: [f64; 5],
    sum_sqs: [f64; 5],
    n: u64,
}

impl FeatureSums {
    fn add(&mut self, f: [f64; 5]) {
        for i in 0..5 {
            self.sums[i] += f[i];
            self.sum_sqs[i] += f[i] * f[i];
        }
        self.n += 1;
    }

    fn mean_se(&self, i: usize) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sums[i] / n;
        let var = (self.sum_sqs[i] / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }
}

fn segment_features(x_end: f64, integral: f64) -> [f64; 5] {
    [
        x_end,
        integral,
        x_end * x_end,
        integral * integral,
        x_end * integral,
    ]
}

/// First and second moments of the one-shot segment sampler against a
/// small-step Euler-Maruyama integration of the same segment, within 4
/// combined standard errors on each of the five moments.
pub fn segment_vs_euler(seed: u64) -> Check {
    let omega = 1.3;
    let x0 = 0.4;
    let dt = 0.7;
    let n_exact: u64 = 400_000;
    let n_euler: u64 = 40_000;
    let n_steps = 7_000; // step 1e-4

    let ou = OuProcess::new(omega)?;
    let mut exact = FeatureSums::default();
    let mut rng = worker_rng(seed, 0);
    for _ in 0..n_exact {
        let (x_end, integral) = ou.sample_segment(x0, dt, &mut rng);
        exact.add(segment_features(x_end, integral));
    }

    // independent paths, one RNG stream per path; collected in path order so
    // the final sums do not depend on the thread schedule
    let features: Vec<[f64; 5]> = (0..n_euler)
        .into_par_iter()
        .map(|i| {
            let mut rng = worker_rng(seed.wrapping_add(1), i as u32);
            let (x_end, integral) = oracle::euler_ou_path(omega, x0, dt, n_steps, &mut rng);
            segment_features(x_end, integral)
        })
        .collect();
    let mut euler = FeatureSums::default();
    for f in features {
        euler.add(f);
    }

    let names = ["end", "integral", "end^2", "integral^2", "end*integral"];
    let mut max_z = 0.0f64;
    let mut worst = names[0];
    for i in 0..5 {
        let (ma, sa) = exact.mean_se(i);
        let (mb, sb) = euler.mean_se(i);
        let z = (ma - mb) / (sa * sa + sb * sb).sqrt();
        if z.abs() > max_z {
            max_z = z.abs();
            worst = names[i];
        }
    }
    Ok((
        max_z <= 4.0,
        format!("worst moment {worst}, |z| = {max_z:.2}"),
    ))
}

/// With no gap and no coupling every path weight is exactly one, so the
/// matrix-element estimate must be the spin-sum constant with zero spread.
fn free_case_weights(seed: u64, n_workers: u32) -> Check {
    let config = FkConfig {
        params: ModelParams::new(0.0, 1.0, 0.0)?,
        t: 3.0,
        n_samples: 1_000,
        seed,
        n_workers,
    };
    let flat = |_: f64, _: Spin| 1.0;
    let est = parallel::fk_matrix_element(&flat, &flat, &config)?;
    Ok((
        est.mean == 2.0 && est.stderr == 0.0,
        format!("mean = {}, stderr = {}", est.mean, est.stderr),
    ))
}

/// At zero coupling the flat-function matrix element reduces to the flip
/// generating function `2 exp(t delta)`; checked within 4 standard errors.
fn flip_generating_function(seed: u64, n_samples: u64, n_workers: u32) -> Check {
    let delta = 0.5;
    let t = 1.0;
    let config = FkConfig {
        params: ModelParams::new(delta, 1.0, 0.0)?,
        t,
        n_samples,
        seed,
        n_workers,
    };
    let flat = |_: f64, _: Spin| 1.0;
    let est = parallel::fk_matrix_element(&flat, &flat, &config)?;
    let target = 2.0 * (t * delta).exp();
    let z = (est.mean - target) / est.stderr;
    Ok((z.abs() <= 4.0, format!("target {target:.6}, z = {z:.2}")))
}

/// The same configuration twice gives the same bits.
fn reproducible_estimates(seed: u64, n_workers: u32) -> Check {
    let config = FkConfig {
        params: ModelParams::new(0.5, 1.0, 0.5)?,
        t: 2.0,
        n_samples: 20_000,
        seed,
        n_workers,
    };
    let a = parallel::fk_ground_energy(&config, 1.0)?;
    let b = parallel::fk_ground_energy(&config, 1.0)?;
    let same = a.energy.to_bits() == b.energy.to_bits() && a.stderr.to_bits() == b.stderr.to_bits();
    Ok((
        same,
        format!("energy = {:.6}, stderr = {:.2e}", a.energy, a.stderr),
    ))
}

/// The rayon drivers agree with the sequential drivers bit for bit.
fn parallel_vs_sequential(seed: u64, n_workers: u32) -> Check {
    let config = FkConfig {
        params: ModelParams::new(0.5, 1.0, 0.5)?,
        t: 1.5,
        n_samples: 20_000,
        seed,
        n_workers,
    };
    let flat = |_: f64, _: Spin| 1.0;

    let me_par = parallel::fk_matrix_element(&flat, &flat, &config)?;
    let me_seq = fk::fk_matrix_element(&flat, &flat, &config)?;
    if me_par.mean.to_bits() != me_seq.mean.to_bits() {
        return Ok((false, "matrix element differs across drivers".to_string()));
    }

    let en_par = parallel::fk_ground_energy(&config, 1.0)?;
    let en_seq = fk::fk_ground_energy(&config, 1.0)?;
    if en_par.energy.to_bits() != en_seq.energy.to_bits()
        || en_par.stderr.to_bits() != en_seq.stderr.to_bits()
    {
        return Ok((false, "ground energy differs across drivers".to_string()));
    }

    let edges = stationary_quartile_edges(config.params.omega);
    let pr_par = parallel::positivity_probe(&config, &edges)?;
    let pr_seq = fk::positivity_probe(&config, &edges)?;
    for (a, b) in pr_par.cells.iter().zip(&pr_seq.cells) {
        if a.mean.to_bits() != b.mean.to_bits() || a.hits != b.hits {
            return Ok((false, "probe cells differ across drivers".to_string()));
        }
    }

    let params = ModelParams::new(0.5, 1.0, 0.0)?;
    let grid = coupling_grid(0.0, 1.0, 0.25)?;
    let sw_par = parallel::sweep(&params, &grid, 4, 1e-10)?;
    let sw_seq = spectra::sweep(&params, &grid, 4, 1e-10)?;
    for (ra, rb) in sw_par.rows.iter().zip(&sw_seq.rows) {
        for (la, lb) in ra.levels.iter().zip(&rb.levels) {
            if la.energy.to_bits() != lb.energy.to_bits() {
                return Ok((false, "sweep rows differ across drivers".to_string()));
            }
        }
    }

    Ok((true, "matrix element, energy, probe and sweep all match".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_survival_values() {
        // S(x; 2) = e^(-x/2)
        assert!((chi_square_survival_even_dof(2.0, 2) - (-1.0f64).exp()).abs() < 1e-15);
        // dof 4: e^(-x/2) (1 + x/2); median near 3.36
        let s = chi_square_survival_even_dof(3.3567, 4);
        assert!((s - 0.5).abs() < 1e-3, "{s}");
        // monotone decreasing in x
        assert!(
            chi_square_survival_even_dof(5.0, 8) > chi_square_survival_even_dof(9.0, 8)
        );
    }

    #[test]
    fn poisson_probabilities_sum_to_one() {
        let p = poisson_bin_probabilities(1.0, 7);
        assert_eq!(p.len(), 9);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((p[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((p[1] - p[0]).abs() < 1e-15);
    }

    #[test]
    fn gating_suite_is_green_at_the_default_seed() {
        // moderate draw count keeps this a unit test; the command itself
        // defaults to a million draws
        let results = run_all(42, 120_000, 4);
        assert_eq!(results.len(), 12);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn broken_inputs_surface_as_failed_checks() {
        // zero draws cannot satisfy the count floor of the histogram test
        let r = outcome("poisson-counts", poisson_counts_law(1, 10));
        assert!(!r.pass);
    }
}
