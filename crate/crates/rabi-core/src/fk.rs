//! Feynman-Kac estimators for the Rabi model.
//!
//! In the oscillator ground measure (stationary OU for the mode, uniform
//! initial spin, unit-rate Poisson flips for the two-level factor), matrix
//! elements of the heat semigroup of the rotated Hamiltonian
//!
//! ```text
//! H = omega a'a + g sigma_z (a + a') - delta sigma_x
//! ```
//!
//! take the sampling form
//!
//! ```text
//! <f, e^-tH g> = e^t * 2 * E[ f(X_0, s_0) g(X_t, s_t)
//!                              exp(-g sqrt(2 omega) A_t) delta^(N_t) ]
//! A_t = integral of s(u) X(u) du over [0, t]
//! ```
//!
//! with `X` the stationary OU path, `s` the flip history and `N_t` the flip
//! count. The factor 2 converts the uniform initial-spin average into the
//! sum over both spin components; `<., .>` is the ground-measure pairing, so
//! energies extracted from `t`-ratios are plain eigenvalues of `H` (no
//! zero-point shift). At `delta = 0` the weight `delta^(N_t)` kills every
//! path that flips; the surviving no-flip restriction carries probability
//! `e^-t`, which cancels the prefactor exactly, so that branch samples
//! constant-spin paths with no Poisson draws and prefactor `2`.
//!
//! Estimators are embarrassingly parallel and bit-reproducible: sample `i`
//! of worker `w` is a pure function of `(seed, w, i)`, and partial sums are
//! merged in worker order. Per sample the generator is consumed in a fixed
//! order: stationary start (1 normal), initial spin (1 bool), flip history
//! (1 Poisson count plus that many uniforms, skipped when `delta = 0`), then
//! 2 normals per path segment in time order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::jumps::{sample_jumps, JumpRecord};
use crate::ou::OuProcess;
use crate::params::{ModelParams, Spin};

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// Default worker count. Results depend on the worker layout (samples are
/// partitioned by worker), so this is a fixed constant rather than a probe
/// of the machine.
pub const DEFAULT_WORKERS: u32 = 8;

/// Upper quartile of the standard normal, for equal-mass position bins.
pub const NORMAL_UPPER_QUARTILE: f64 = 0.674_489_750_196_081_7;

/// Shared configuration of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkConfig {
    pub params: ModelParams,
    /// Time horizon of the semigroup.
    pub t: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub n_workers: u32,
}

impl FkConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidArgument("horizon t must be positive"));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidArgument("need at least 2 samples"));
        }
        if self.n_workers < 1 {
            return Err(Error::InvalidArgument("need at least 1 worker"));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error (`stderr = sd / sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Ground-energy estimate from the windowed log-ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkEnergyEstimate {
    pub energy: f64,
    /// Delta-method standard error of the log-ratio, divided by the window.
    ///
    /// This is an in-sample estimate. When the log-weights spread over many
    /// units (their variance grows like `2 g^2 t / omega`), rare heavy paths
    /// dominate the means, and a run that missed them reports a standard
    /// error that is too small. Calibrate against independent seeds before
    /// trusting it in that regime.
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// One sampled path with its weight, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub x0: f64,
    pub x_end: f64,
    pub spin_end: Spin,
    pub jumps: JumpRecord,
    /// `A_t`, the spin-signed time integral of the path.
    pub action: f64,
    /// `-g sqrt(2 omega) A_t + N_t ln(delta)` (no flip term at `delta = 0`).
    pub weight_log: f64,
}

/// The generator that produces worker `w`'s samples: one seed, one stream
/// per worker.
pub fn worker_rng(seed: u64, worker: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// How many of `n_samples` fall to `worker`: near-even split, remainder to
/// the lowest indices.
pub fn worker_sample_count(n_samples: u64, n_workers: u32, worker: u32) -> u64 {
    let base = n_samples / n_workers as u64;
    let rem = n_samples % n_workers as u64;
    base + u64::from((worker as u64) < rem)
}

/// Plain accumulating moments, mergeable across workers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSums {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: u64,
}

impl MomentSums {
    pub fn add(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.count += 1;
    }

    pub fn merged(&self, other: &MomentSums) -> MomentSums {
        MomentSums {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            count: self.count + other.count,
        }
    }
}

/// State of the walk at one time point.
struct WalkPoint {
    x: f64,
    spin: Spin,
    action: f64,
    n_jumps: usize,
}

/// Advances the piecewise-OU path over `[0, horizon]`, flipping the spin at
/// the recorded jump times and accumulating the spin-signed integral. If
/// `mark` is given, the state just before crossing it is captured (the
/// ground-energy estimator reads both `mark` and the endpoint off one path).
fn walk<R: Rng + ?Sized>(
    ou: &OuProcess,
    x0: f64,
    jumps: &JumpRecord,
    horizon: f64,
    mark: Option<f64>,
    rng: &mut R,
) -> (Option<WalkPoint>, WalkPoint) {
    let mut x = x0;
    let mut spin = jumps.sigma_0;
    let mut action = 0.0f64;
    let mut n_jumps = 0usize;
    let mut t_prev = 0.0f64;
    let mut marked: Option<WalkPoint> = None;
    for &tau in &jumps.jump_times {
        debug_assert!(tau <= horizon);
        if let Some(m) = mark {
            if marked.is_none() && m <= tau {
                if m > t_prev {
                    let (xe, i) = ou.sample_segment(x, m - t_prev, rng);
                    action += spin.value() * i;
                    x = xe;
                    t_prev = m;
                }
                marked = Some(WalkPoint {
                    x,
                    spin,
                    action,
                    n_jumps,
                });
            }
        }
        if tau > t_prev {
            let (xe, i) = ou.sample_segment(x, tau - t_prev, rng);
            action += spin.value() * i;
            x = xe;
            t_prev = tau;
        }
        spin = spin.flip();
        n_jumps += 1;
    }
    if let Some(m) = mark {
        if marked.is_none() {
            if m > t_prev {
                let (xe, i) = ou.sample_segment(x, m - t_prev, rng);
                action += spin.value() * i;
                x = xe;
                t_prev = m;
            }
            marked = Some(WalkPoint {
                x,
                spin,
                action,
                n_jumps,
            });
        }
    }
    if horizon > t_prev {
        let (xe, i) = ou.sample_segment(x, horizon - t_prev, rng);
        action += spin.value() * i;
        x = xe;
    }
    (
        marked,
        WalkPoint {
            x,
            spin,
            action,
            n_jumps,
        },
    )
}

fn draw_initial<R: Rng + ?Sized>(ou: &OuProcess, rng: &mut R) -> (f64, Spin) {
    let x0 = ou.sample_stationary(rng);
    let sigma_0 = if rng.random::<bool>() {
        Spin::Up
    } else {
        Spin::Down
    };
    (x0, sigma_0)
}

/// One path on `[0, t]` with its weight.
pub fn sample_path<R: Rng + ?Sized>(
    params: &ModelParams,
    t: f64,
    rng: &mut R,
) -> Result<PathSample> {
    params.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument("horizon t must be positive"));
    }
    let ou = OuProcess::new(params.omega)?;
    let c = params.g * (2.0 * params.omega).sqrt();
    let (x0, sigma_0) = draw_initial(&ou, rng);
    let jumps = if params.delta > 0.0 {
        sample_jumps(t, sigma_0, rng)?
    } else {
        JumpRecord {
            jump_times: Vec::new(),
            sigma_0,
        }
    };
    let (_, end) = walk(&ou, x0, &jumps, t, None, rng);
    let mut weight_log = -c * end.action;
    if params.delta > 0.0 {
        weight_log += end.n_jumps as f64 * params.delta.ln();
    }
    Ok(PathSample {
        x0,
        x_end: end.x,
        spin_end: end.spin,
        jumps,
        action: end.action,
        weight_log,
    })
}

/// `e^t * 2` for the flip-carrying branch; exactly `2` at `delta = 0`, where
/// the no-flip restriction already paid the `e^-t`.
fn matrix_element_prefactor(params: &ModelParams, t: f64) -> f64 {
    if params.delta > 0.0 {
        2.0 * t.exp()
    } else {
        2.0
    }
}

/// Worker `worker`'s share of the matrix-element sum for
/// `<f, e^-tH g>`, with `f` evaluated at the path start and `g` at the end.
pub fn fk_matrix_element_worker<F, G>(
    f: &F,
    g: &G,
    config: &FkConfig,
    worker: u32,
) -> Result<MomentSums>
where
    F: Fn(f64, Spin) -> f64,
    G: Fn(f64, Spin) -> f64,
{
    config.validate()?;
    let ou = OuProcess::new(config.params.omega)?;
    let c = config.params.g * (2.0 * config.params.omega).sqrt();
    let has_flips = config.params.delta > 0.0;
    let ln_delta = if has_flips {
        config.params.delta.ln()
    } else {
        0.0
    };
    let mut rng = worker_rng(config.seed, worker);
    let my_count = worker_sample_count(config.n_samples, config.n_workers, worker);
    let mut sums = MomentSums::default();
    let empty = |sigma_0: Spin| JumpRecord {
        jump_times: Vec::new(),
        sigma_0,
    };
    for _ in 0..my_count {
        let (x0, sigma_0) = draw_initial(&ou, &mut rng);
        let jumps = if has_flips {
            sample_jumps(config.t, sigma_0, &mut rng)?
        } else {
            empty(sigma_0)
        };
        let (_, end) = walk(&ou, x0, &jumps, config.t, None, &mut rng);
        let weight_log = -c * end.action + end.n_jumps as f64 * ln_delta;
        let v = f(x0, sigma_0) * g(end.x, end.spin) * weight_log.exp();
        sums.add(v);
    }
    Ok(sums)
}

/// Combines per-worker sums (in worker order) into the final estimate.
pub fn fk_matrix_element_from_partials(
    config: &FkConfig,
    partials: &[MomentSums],
) -> Result<FkEstimate> {
    config.validate()?;
    if partials.len() != config.n_workers as usize {
        return Err(Error::InvalidArgument(
            "one partial sum per worker is required",
        ));
    }
    let total = partials
        .iter()
        .fold(MomentSums::default(), |acc, p| acc.merged(p));
    if total.count != config.n_samples {
        return Err(Error::InvalidArgument(
            "partial counts do not add up to n_samples",
        ));
    }
    let n = total.count as f64;
    let mean_raw = total.sum / n;
    let var_raw = ((total.sum_sq / n - mean_raw * mean_raw) * n / (n - 1.0)).max(0.0);
    let pref = matrix_element_prefactor(&config.params, config.t);
    let mean = pref * mean_raw;
    let stderr = pref * (var_raw / n).sqrt();
    if !(mean.is_finite() && stderr.is_finite()) {
        return Err(Error::VarianceFailure(
            "matrix-element moments are not finite",
        ));
    }
    Ok(FkEstimate {
        mean,
        stderr,
        n_samples: config.n_samples,
        seed: config.seed,
    })
}

/// Sequential driver: runs every worker in order on this thread. A parallel
/// driver that fans the workers out must produce bit-identical results,
/// because each worker's stream is fixed by `(seed, worker)` and the merge
/// is ordered.
pub fn fk_matrix_element<F, G>(f: &F, g: &G, config: &FkConfig) -> Result<FkEstimate>
where
    F: Fn(f64, Spin) -> f64,
    G: Fn(f64, Spin) -> f64,
{
    config.validate()?;
    let mut partials = Vec::with_capacity(config.n_workers as usize);
    for w in 0..config.n_workers {
        partials.push(fk_matrix_element_worker(f, g, config, w)?);
    }
    fk_matrix_element_from_partials(config, &partials)
}

/// Accumulators for the windowed ratio estimator: numerator weights at
/// `t + dt`, denominator weights at `t`, off one shared path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatioSums {
    pub sum_num: f64,
    pub sum_den: f64,
    pub sum_num_sq: f64,
    pub sum_den_sq: f64,
    pub sum_cross: f64,
    pub count: u64,
}

impl RatioSums {
    pub fn add(&mut self, num: f64, den: f64) {
        self.sum_num += num;
        self.sum_den += den;
        self.sum_num_sq += num * num;
        self.sum_den_sq += den * den;
        self.sum_cross += num * den;
        self.count += 1;
    }

    pub fn merged(&self, other: &RatioSums) -> RatioSums {
        RatioSums {
            sum_num: self.sum_num + other.sum_num,
            sum_den: self.sum_den + other.sum_den,
            sum_num_sq: self.sum_num_sq + other.sum_num_sq,
            sum_den_sq: self.sum_den_sq + other.sum_den_sq,
            sum_cross: self.sum_cross + other.sum_cross,
            count: self.count + other.count,
        }
    }
}

fn check_window(dt_ratio: f64) -> Result<()> {
    if !(dt_ratio.is_finite() && dt_ratio > 0.0) {
        return Err(Error::InvalidArgument(
            "window dt_ratio must be positive",
        ));
    }
    Ok(())
}

/// Worker share of the ground-energy sums. Paths live on `[0, t + dt]`
/// with `dt = dt_ratio / omega`; flat test functions (identically 1) weight
/// the overlap, so both window ends share every random draw.
pub fn fk_ground_energy_worker(
    config: &FkConfig,
    dt_ratio: f64,
    worker: u32,
) -> Result<RatioSums> {
    config.validate()?;
    check_window(dt_ratio)?;
    let ou = OuProcess::new(config.params.omega)?;
    let dt = dt_ratio / config.params.omega;
    let horizon = config.t + dt;
    let c = config.params.g * (2.0 * config.params.omega).sqrt();
    let has_flips = config.params.delta > 0.0;
    let ln_delta = if has_flips {
        config.params.delta.ln()
    } else {
        0.0
    };
    let mut rng = worker_rng(config.seed, worker);
    let my_count = worker_sample_count(config.n_samples, config.n_workers, worker);
    let mut sums = RatioSums::default();
    for _ in 0..my_count {
        let (x0, sigma_0) = draw_initial(&ou, &mut rng);
        let jumps = if has_flips {
            sample_jumps(horizon, sigma_0, &mut rng)?
        } else {
            JumpRecord {
                jump_times: Vec::new(),
                sigma_0,
            }
        };
        let (marked, end) = walk(&ou, x0, &jumps, horizon, Some(config.t), &mut rng);
        let at_t = marked.expect("mark lies inside the horizon");
        let den_log = -c * at_t.action + at_t.n_jumps as f64 * ln_delta;
        let num_log = -c * end.action + end.n_jumps as f64 * ln_delta;
        sums.add(num_log.exp(), den_log.exp());
    }
    Ok(sums)
}

/// Combines per-worker ratio sums into the energy estimate
///
/// ```text
/// E_hat = -(1/dt) * [log-prefactor-difference + ln(num_mean / den_mean)]
/// ```
///
/// with the delta-method standard error from the joint second moments.
pub fn fk_ground_energy_from_partials(
    config: &FkConfig,
    dt_ratio: f64,
    partials: &[RatioSums],
) -> Result<FkEnergyEstimate> {
    config.validate()?;
    check_window(dt_ratio)?;
    if partials.len() != config.n_workers as usize {
        return Err(Error::InvalidArgument(
            "one partial sum per worker is required",
        ));
    }
    let total = partials
        .iter()
        .fold(RatioSums::default(), |acc, p| acc.merged(p));
    if total.count != config.n_samples {
        return Err(Error::InvalidArgument(
            "partial counts do not add up to n_samples",
        ));
    }
    let dt = dt_ratio / config.params.omega;
    let n = total.count as f64;
    let mean_num = total.sum_num / n;
    let mean_den = total.sum_den / n;
    if !(mean_num.is_finite() && mean_den.is_finite()) {
        return Err(Error::VarianceFailure("window means are not finite"));
    }
    if mean_num <= 0.0 || mean_den <= 0.0 {
        return Err(Error::VarianceFailure(
            "window means are not positive; raise n_samples or lower t",
        ));
    }
    let bessel = n / (n - 1.0);
    let var_num = (total.sum_num_sq / n - mean_num * mean_num) * bessel;
    let var_den = (total.sum_den_sq / n - mean_den * mean_den) * bessel;
    let cov = (total.sum_cross / n - mean_num * mean_den) * bessel;
    // the prefactor e^(t) cancels between the window ends up to e^(dt)
    // (identically 1 at delta = 0, where both prefactors are 1)
    let pref_log_diff = if config.params.delta > 0.0 { dt } else { 0.0 };
    let energy = -(pref_log_diff + (mean_num / mean_den).ln()) / dt;
    let var_log = (var_num / (mean_num * mean_num) + var_den / (mean_den * mean_den)
        - 2.0 * cov / (mean_num * mean_den))
        / n;
    let stderr = var_log.max(0.0).sqrt() / dt;
    if !(energy.is_finite() && stderr.is_finite()) {
        return Err(Error::VarianceFailure(
            "energy estimate is not finite",
        ));
    }
    Ok(FkEnergyEstimate {
        energy,
        stderr,
        n_samples: config.n_samples,
        seed: config.seed,
    })
}

/// Sequential ground-energy driver; see [`fk_matrix_element`] for the
/// parallel contract.
pub fn fk_ground_energy(config: &FkConfig, dt_ratio: f64) -> Result<FkEnergyEstimate> {
    config.validate()?;
    check_window(dt_ratio)?;
    let mut partials = Vec::with_capacity(config.n_workers as usize);
    for w in 0..config.n_workers {
        partials.push(fk_ground_energy_worker(config, dt_ratio, w)?);
    }
    fk_ground_energy_from_partials(config, dt_ratio, &partials)
}

/// Position bin edges splitting the stationary law into four equal-mass
/// bins: `[-q, 0, q]` with `q` the upper quartile of `N(0, 1/(2 omega))`.
pub fn stationary_quartile_edges(omega: f64) -> [f64; 3] {
    let q = NORMAL_UPPER_QUARTILE / (2.0 * omega).sqrt();
    [-q, 0.0, q]
}

/// One (start-cell, end-cell) entry of the positivity probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCell {
    /// Estimated `<1_A, e^-tH 1_B>`.
    pub mean: f64,
    pub stderr: f64,
    /// Samples that actually landed in this (A, B) pair.
    pub hits: u64,
}

/// Matrix of indicator-pair matrix elements over position-bin x spin cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub edges: Vec<f64>,
    /// Row-major over `(start_state, end_state)`; a state is
    /// `position_bin * 2 + spin_index` with spin up first.
    pub cells: Vec<ProbeCell>,
    pub n_states: usize,
    pub n_samples: u64,
    pub seed: u64,
}

impl ProbeReport {
    pub fn cell(&self, start_state: usize, end_state: usize) -> &ProbeCell {
        &self.cells[start_state * self.n_states + end_state]
    }

    /// Cells with fewer than `min_hits` contributing samples; their means
    /// are not trustworthy and must not be read as evidence.
    pub fn undersampled(&self, min_hits: u64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n_states {
            for b in 0..self.n_states {
                if self.cell(a, b).hits < min_hits {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Per-worker probe accumulators, one slot per (start, end) state pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePartial {
    pub sums: Vec<f64>,
    pub sums_sq: Vec<f64>,
    pub hits: Vec<u64>,
    pub count: u64,
}

fn state_index(x: f64, spin: Spin, edges: &[f64]) -> usize {
    let bin = edges.iter().take_while(|&&e| x >= e).count();
    let spin_idx = match spin {
        Spin::Up => 0,
        Spin::Down => 1,
    };
    bin * 2 + spin_idx
}

fn check_probe_inputs(config: &FkConfig, edges: &[f64]) -> Result<()> {
    config.validate()?;
    if config.params.delta <= 0.0 {
        return Err(Error::InvalidParams(
            "positivity probe needs delta > 0; without flips opposite-spin cells are exact zeros",
        ));
    }
    if edges.is_empty() || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "bin edges must be non-empty and strictly ascending",
        ));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument("bin edges must be finite"));
    }
    Ok(())
}

/// Worker share of the positivity probe: every indicator pair is estimated
/// from the same paths, so one pass fills the whole cell matrix.
pub fn positivity_probe_worker(
    config: &FkConfig,
    edges: &[f64],
    worker: u32,
) -> Result<ProbePartial> {
    check_probe_inputs(config, edges)?;
    let n_states = (edges.len() + 1) * 2;
    let n_cells = n_states * n_states;
    let ou = OuProcess::new(config.params.omega)?;
    let c = config.params.g * (2.0 * config.params.omega).sqrt();
    let ln_delta = config.params.delta.ln();
    let mut rng = worker_rng(config.seed, worker);
    let my_count = worker_sample_count(config.n_samples, config.n_workers, worker);
    let mut part = ProbePartial {
        sums: vec![0.0; n_cells],
        sums_sq: vec![0.0; n_cells],
        hits: vec![0; n_cells],
        count: my_count,
    };
    for _ in 0..my_count {
        let (x0, sigma_0) = draw_initial(&ou, &mut rng);
        let jumps = sample_jumps(config.t, sigma_0, &mut rng)?;
        let (_, end) = walk(&ou, x0, &jumps, config.t, None, &mut rng);
        let weight = (-c * end.action + end.n_jumps as f64 * ln_delta).exp();
        let a = state_index(x0, sigma_0, edges);
        let b = state_index(end.x, end.spin, edges);
        let cell = a * n_states + b;
        part.sums[cell] += weight;
        part.sums_sq[cell] += weight * weight;
        part.hits[cell] += 1;
    }
    Ok(part)
}

/// Combines per-worker probe accumulators into the cell matrix.
pub fn positivity_probe_from_partials(
    config: &FkConfig,
    edges: &[f64],
    partials: &[ProbePartial],
) -> Result<ProbeReport> {
    check_probe_inputs(config, edges)?;
    if partials.len() != config.n_workers as usize {
        return Err(Error::InvalidArgument(
            "one partial per worker is required",
        ));
    }
    let n_states = (edges.len() + 1) * 2;
    let n_cells = n_states * n_states;
    let mut sums = vec![0.0f64; n_cells];
    let mut sums_sq = vec![0.0f64; n_cells];
    let mut hits = vec![0u64; n_cells];
    let mut count = 0u64;
    for p in partials {
        if p.sums.len() != n_cells || p.sums_sq.len() != n_cells || p.hits.len() != n_cells {
            return Err(Error::InvalidArgument(
                "partial cell layout does not match the edges",
            ));
        }
        for i in 0..n_cells {
            sums[i] += p.sums[i];
            sums_sq[i] += p.sums_sq[i];
            hits[i] += p.hits[i];
        }
        count += p.count;
    }
    if count != config.n_samples {
        return Err(Error::InvalidArgument(
            "partial counts do not add up to n_samples",
        ));
    }
    let n = count as f64;
    let pref = matrix_element_prefactor(&config.params, config.t);
    let mut cells = Vec::with_capacity(n_cells);
    for i in 0..n_cells {
        // indicator estimators average over all samples; misses contribute 0
        let mean_raw = sums[i] / n;
        let var_raw = ((sums_sq[i] / n - mean_raw * mean_raw) * n / (n - 1.0)).max(0.0);
        let mean = pref * mean_raw;
        let stderr = pref * (var_raw / n).sqrt();
        if !(mean.is_finite() && stderr.is_finite()) {
            return Err(Error::VarianceFailure("probe cell moment is not finite"));
        }
        cells.push(ProbeCell {
            mean,
            stderr,
            hits: hits[i],
        });
    }
    Ok(ProbeReport {
        edges: edges.to_vec(),
        cells,
        n_states,
        n_samples: config.n_samples,
        seed: config.seed,
    })
}

/// Sequential probe driver; see [`fk_matrix_element`] for the parallel
/// contract.
pub fn positivity_probe(config: &FkConfig, edges: &[f64]) -> Result<ProbeReport> {
    check_probe_inputs(config, edges)?;
    let mut partials = Vec::with_capacity(config.n_workers as usize);
    for w in 0..config.n_workers {
        partials.push(positivity_probe_worker(config, edges, w)?);
    }
    positivity_probe_from_partials(config, edges, partials.as_slice())
}
