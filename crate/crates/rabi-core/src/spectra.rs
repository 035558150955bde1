//! Converged spectra of the full Rabi model, coupling sweeps, and detection
//! of level crossings between global (sector-merged) levels.
//!
//! Eigenvalue curves within one parity sector never cross as `g` varies (the
//! blocks are irreducible tridiagonal, so their spectra are simple), which
//! makes per-sector index tracking trivial: sorted order is constant. All
//! true degeneracies are between opposite sectors, and they show up in the
//! merged spectrum as two adjacent global slots exchanging their
//! `(sector, index-in-sector)` occupants between neighbouring grid points.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamiltonian::build_rabi_parity_block;
use crate::params::{FockTruncation, ModelParams, ParitySector};
use crate::tridiag::eigen_tridiagonal;

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// Hard upper bound on the Fock cutoff during adaptive refinement.
pub const N_MAX_CAP: usize = 4096;
/// Smallest cutoff the adaptive loop starts from.
pub const N_MAX_FLOOR: usize = 60;
/// Default per-level convergence tolerance, relative to `omega`.
pub const DEFAULT_TRUNCATION_RTOL: f64 = 1e-10;
/// Default degeneracy tolerance for crossing refinement, relative to `omega`.
pub const DEFAULT_DEGENERACY_RTOL: f64 = 1e-9;
/// How many times a window may be subdivided (by 10) before level tracking
/// reports the grid as too coarse.
const MAX_REFINE_DEPTH: usize = 3;

/// One merged energy level with its parity bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub sector: ParitySector,
    /// Position of this level within its own sector's sorted spectrum.
    pub index_in_sector: usize,
}

/// Lowest `k` merged levels at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub params: ModelParams,
    /// Ascending; ties across sectors order `+1` before `-1`.
    pub levels: Vec<Level>,
    pub n_max_used: usize,
    /// True only when produced by the adaptive loop and the final doubling
    /// moved no level by more than the tolerance.
    pub converged: bool,
    /// Largest per-level shift at the final doubling, when adaptive.
    pub truncation_error_estimate: Option<f64>,
}

impl SpectrumResult {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// Spectra along an ascending coupling grid, all at the same `delta, omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub g_grid: Vec<f64>,
    pub rows: Vec<SpectrumResult>,
    pub k: usize,
    /// Absolute convergence tolerance the rows were produced with.
    pub tol: f64,
}

/// A located degeneracy between two adjacent global levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRecord {
    pub g_star: f64,
    /// Global slots that exchange occupants, `(i, i + 1)`.
    pub level_pair: (usize, usize),
    /// Sectors of the two curves, ordered as `(occupant of slot i, occupant
    /// of slot i + 1)` just below the crossing.
    pub sectors: (ParitySector, ParitySector),
    /// Residual `|E_a - E_b|` at the reported coupling.
    pub gap_at_star: f64,
}

/// Scan result for the no-ground-crossing check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Report {
    /// Smallest `E_1 - E_0` seen on the grid.
    pub min_gap: f64,
    /// Coupling where the minimum occurred.
    pub argmin_g: f64,
    /// Floor the minimum is compared against.
    pub gap_floor: f64,
    pub pass: bool,
}

/// Starting Fock cutoff for the adaptive loop: at least [`N_MAX_FLOOR`], and
/// grown quadratically with the coupling ratio so strongly displaced
/// oscillators start near their converged size instead of doubling their way
/// up from far below.
pub fn default_n_max(params: &ModelParams) -> usize {
    let r = params.coupling_ratio();
    let grown = (15.0 * r * r).ceil();
    if grown > N_MAX_CAP as f64 {
        return N_MAX_CAP;
    }
    N_MAX_FLOOR.max(grown as usize)
}

/// Lowest `k` merged levels at a fixed truncation. Requires
/// `2 * k <= n_max` so the top of the returned spectrum is still shielded
/// from the cutoff.
pub fn rabi_spectrum(
    params: &ModelParams,
    trunc: FockTruncation,
    k: usize,
) -> Result<SpectrumResult> {
    params.validate()?;
    if k < 1 {
        return Err(Error::InvalidArgument("level count k must be at least 1"));
    }
    if 2 * k > trunc.n_max() {
        return Err(Error::TruncationGuard {
            k,
            n_max: trunc.n_max(),
        });
    }
    let levels = merged_levels(params, trunc, k)?;
    Ok(SpectrumResult {
        params: *params,
        levels,
        n_max_used: trunc.n_max(),
        converged: false,
        truncation_error_estimate: None,
    })
}

/// Doubles the Fock cutoff until no level among the lowest `k` moves by more
/// than `tol` (absolute energy units), then reports the larger spectrum of
/// the final pair. Errs if the cap would be exceeded first.
pub fn converge_truncation(params: &ModelParams, k: usize, tol: f64) -> Result<SpectrumResult> {
    params.validate()?;
    if k < 1 {
        return Err(Error::InvalidArgument("level count k must be at least 1"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let mut n_max = default_n_max(params).max(2 * k);
    if n_max > N_MAX_CAP {
        return Err(Error::TruncationCapReached {
            n_max_cap: N_MAX_CAP,
            last_shift: f64::INFINITY,
            tol,
        });
    }
    let mut current = merged_levels(params, FockTruncation::new(n_max)?, k)?;
    loop {
        let next_n = 2 * n_max;
        if next_n > N_MAX_CAP {
            let last_shift = f64::INFINITY;
            return Err(Error::TruncationCapReached {
                n_max_cap: N_MAX_CAP,
                last_shift,
                tol,
            });
        }
        let next = merged_levels(params, FockTruncation::new(next_n)?, k)?;
        let shift = current
            .iter()
            .zip(&next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a.energy - b.energy).abs()));
        if shift <= tol {
            return Ok(SpectrumResult {
                params: *params,
                levels: next,
                n_max_used: next_n,
                converged: true,
                truncation_error_estimate: Some(shift),
            });
        }
        n_max = next_n;
        current = next;
    }
}

/// Ascending grid `g_min, g_min + step, ...` up to `g_max` (inclusive when
/// the span is a whole number of steps, within rounding slop).
pub fn coupling_grid(g_min: f64, g_max: f64, g_step: f64) -> Result<Vec<f64>> {
    if !(g_min.is_finite() && g_max.is_finite() && g_step.is_finite()) {
        return Err(Error::InvalidArgument("grid bounds must be finite"));
    }
    if g_step <= 0.0 {
        return Err(Error::InvalidArgument("grid step must be positive"));
    }
    if g_max < g_min {
        return Err(Error::InvalidArgument("grid must have g_max >= g_min"));
    }
    let span = (g_max - g_min) / g_step;
    let rounded = span.round();
    let lands_on_end = (span - rounded).abs() <= 1e-9 * rounded.max(1.0);
    let count = if lands_on_end {
        rounded as usize
    } else {
        span.floor() as usize
    };
    if count > 10_000_000 {
        return Err(Error::InvalidArgument("grid has more than 1e7 points"));
    }
    let mut grid = Vec::with_capacity(count + 1);
    for i in 0..=count {
        grid.push(g_min + i as f64 * g_step);
    }
    if lands_on_end {
        // pin the endpoint exactly rather than accumulating step rounding
        *grid.last_mut().expect("grid is non-empty") = g_max;
    }
    Ok(grid)
}

/// Converged spectra over a coupling grid. Requires `k >= 2` (sweeps exist
/// to look at gaps and crossings) and a strictly ascending grid.
pub fn sweep(params: &ModelParams, g_grid: &[f64], k: usize, tol: f64) -> Result<SpectrumTable> {
    params.validate()?;
    if k < 2 {
        return Err(Error::InvalidArgument("sweeps need at least k = 2 levels"));
    }
    if g_grid.is_empty() {
        return Err(Error::InvalidArgument("coupling grid is empty"));
    }
    if g_grid.windows(2).any(|w| !(w[0] < w[1])) || g_grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidArgument(
            "coupling grid must be finite and strictly ascending",
        ));
    }
    let mut rows = Vec::with_capacity(g_grid.len());
    for &g in g_grid {
        let row = converge_truncation(&params.with_coupling(g), k, tol).map_err(|e| {
            Error::AtCoupling {
                g,
                source: Box::new(e),
            }
        })?;
        rows.push(row);
    }
    Ok(SpectrumTable {
        g_grid: g_grid.to_vec(),
        rows,
        k,
        tol,
    })
}

/// Occupant signature of a global slot: which sector curve sits there.
fn occupant(row: &SpectrumResult, slot: usize) -> (ParitySector, usize) {
    let l = &row.levels[slot];
    (l.sector, l.index_in_sector)
}

/// All crossings between global levels `pair = (i, i + 1)` inside the
/// table's grid, located to `deg_tol` (absolute energy units) by bisection
/// on the two tracked sector curves.
///
/// A window whose occupancy change is not a clean pairwise swap is subdivided
/// and re-examined; if the ambiguity survives [`MAX_REFINE_DEPTH`] rounds the
/// grid is reported as too coarse rather than guessed at.
pub fn detect_crossings(
    table: &SpectrumTable,
    pair: (usize, usize),
    deg_tol: f64,
) -> Result<Vec<CrossingRecord>> {
    let (i, j) = pair;
    if j != i + 1 || j >= table.k {
        return Err(Error::InvalidArgument(
            "crossing pair must be adjacent global levels (i, i + 1) below k",
        ));
    }
    if !(deg_tol.is_finite() && deg_tol > 0.0) {
        return Err(Error::InvalidArgument("degeneracy tolerance must be positive"));
    }
    let mut found = Vec::new();
    for w in 0..table.rows.len().saturating_sub(1) {
        scan_window(
            &table.rows[w],
            &table.rows[w + 1],
            table,
            pair,
            deg_tol,
            MAX_REFINE_DEPTH,
            &mut found,
        )?;
    }
    Ok(found)
}

fn scan_window(
    a: &SpectrumResult,
    b: &SpectrumResult,
    table: &SpectrumTable,
    pair: (usize, usize),
    deg_tol: f64,
    depth: usize,
    found: &mut Vec<CrossingRecord>,
) -> Result<()> {
    let (i, j) = pair;
    let (ai, aj) = (occupant(a, i), occupant(a, j));
    let (bi, bj) = (occupant(b, i), occupant(b, j));
    if ai == bi && aj == bj {
        return Ok(()); // nothing moved
    }
    if bi == aj && bj == ai {
        // clean swap: the two curves crossed exactly once in this window
        debug_assert_ne!(ai.0, aj.0, "same-sector curves cannot cross");
        let rec = bisect_crossing(a, b, pair, (ai, aj), deg_tol)?;
        found.push(rec);
        return Ok(());
    }
    // one slot kept its occupant: the other slot's change belongs to a
    // neighbouring pair, not this one
    if ai == bi || aj == bj {
        return Ok(());
    }
    // occupancy rearranged in a way a single swap cannot explain: refine
    if depth == 0 {
        return Err(Error::GridTooCoarse {
            g_lo: a.params.g,
            g_hi: b.params.g,
        });
    }
    let (g_lo, g_hi) = (a.params.g, b.params.g);
    let mut prev = a.clone();
    for m in 1..=10 {
        let g = if m == 10 {
            g_hi
        } else {
            g_lo + (g_hi - g_lo) * m as f64 / 10.0
        };
        let row = if m == 10 {
            b.clone()
        } else {
            converge_truncation(&a.params.with_coupling(g), table.k, table.tol).map_err(|e| {
                Error::AtCoupling {
                    g,
                    source: Box::new(e),
                }
            })?
        };
        scan_window(&prev, &row, table, pair, deg_tol, depth - 1, found)?;
        prev = row;
    }
    Ok(())
}

/// Energy of one tracked sector curve at arbitrary coupling.
fn curve_energy(
    params: &ModelParams,
    curve: (ParitySector, usize),
    n_max: usize,
) -> Result<f64> {
    let block = build_rabi_parity_block(params, curve.0, FockTruncation::new(n_max)?);
    let evs = eigen_tridiagonal(&block, curve.1 + 1)?;
    Ok(evs[curve.1])
}

fn bisect_crossing(
    a: &SpectrumResult,
    b: &SpectrumResult,
    pair: (usize, usize),
    curves: ((ParitySector, usize), (ParitySector, usize)),
    deg_tol: f64,
) -> Result<CrossingRecord> {
    let (low_curve, high_curve) = curves;
    let n_max = a.n_max_used.max(b.n_max_used);
    let base = a.params;
    // signed gap: negative below the crossing, positive above
    let gap = |g: f64| -> Result<f64> {
        let p = base.with_coupling(g);
        Ok(curve_energy(&p, low_curve, n_max)? - curve_energy(&p, high_curve, n_max)?)
    };
    let mut lo = a.params.g;
    let mut hi = b.params.g;
    let f_lo = gap(lo)?;
    let f_hi = gap(hi)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::GridTooCoarse { g_lo: lo, g_hi: hi });
    }
    for _ in 0..240 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = gap(mid)?;
        if f.abs() <= deg_tol {
            return Ok(CrossingRecord {
                g_star: mid,
                level_pair: pair,
                sectors: (low_curve.0, high_curve.0),
                gap_at_star: f.abs(),
            });
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the bracket collapsed to machine width without the gap dropping under
    // the tolerance; eigenvalue curves are continuous, so this only happens
    // when deg_tol is below the truncation noise floor
    Err(Error::GridTooCoarse { g_lo: lo, g_hi: hi })
}

/// Scans `E_1 - E_0` over a coupling grid and compares the smallest gap
/// against a floor. Requires `delta > 0` (at `delta = 0` the two sectors are
/// exactly degenerate at `g = 0` and the question is empty).
pub fn check_c1(
    params: &ModelParams,
    g_min: f64,
    g_max: f64,
    g_step: f64,
    gap_floor: f64,
) -> Result<C1Report> {
    params.validate()?;
    if params.delta <= 0.0 {
        return Err(Error::InvalidParams(
            "ground-gap scan needs delta > 0; the gap vanishes identically at delta = 0",
        ));
    }
    if !(gap_floor.is_finite() && gap_floor >= 0.0) {
        return Err(Error::InvalidArgument("gap floor must be non-negative"));
    }
    let grid = coupling_grid(g_min, g_max, g_step)?;
    let tol = DEFAULT_TRUNCATION_RTOL * params.omega;
    let mut min_gap = f64::INFINITY;
    let mut argmin_g = grid[0];
    for &g in &grid {
        let row = converge_truncation(&params.with_coupling(g), 2, tol).map_err(|e| {
            Error::AtCoupling {
                g,
                source: Box::new(e),
            }
        })?;
        let gap = row.levels[1].energy - row.levels[0].energy;
        if gap < min_gap {
            min_gap = gap;
            argmin_g = g;
        }
    }
    Ok(C1Report {
        min_gap,
        argmin_g,
        gap_floor,
        pass: min_gap > gap_floor,
    })
}

/// True when the ground level sits in the same parity sector at every grid
/// point. Requires `delta > 0` for the same reason as [`check_c1`].
pub fn ground_sector_constancy(
    params: &ModelParams,
    g_min: f64,
    g_max: f64,
    g_step: f64,
) -> Result<bool> {
    params.validate()?;
    if params.delta <= 0.0 {
        return Err(Error::InvalidParams(
            "ground-sector scan needs delta > 0; sectors are degenerate at delta = 0",
        ));
    }
    let grid = coupling_grid(g_min, g_max, g_step)?;
    let tol = DEFAULT_TRUNCATION_RTOL * params.omega;
    let mut first: Option<ParitySector> = None;
    for &g in &grid {
        let row = converge_truncation(&params.with_coupling(g), 1, tol).map_err(|e| {
            Error::AtCoupling {
                g,
                source: Box::new(e),
            }
        })?;
        let sector = row.levels[0].sector;
        match first {
            None => first = Some(sector),
            Some(s) if s != sector => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Lowest `k` of the union of both parity blocks, each solved independently.
fn merged_levels(
    params: &ModelParams,
    trunc: FockTruncation,
    k: usize,
) -> Result<Vec<Level>> {
    let mut spectra: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (idx, sector) in ParitySector::BOTH.into_iter().enumerate() {
        let block = build_rabi_parity_block(params, sector, trunc);
        spectra[idx] = eigen_tridiagonal(&block, k.min(trunc.block_dim()))?;
    }
    let (plus, minus) = (&spectra[0], &spectra[1]);
    let mut out = Vec::with_capacity(k);
    let (mut i, mut j) = (0usize, 0usize);
    while out.len() < k {
        let take_plus = match (plus.get(i), minus.get(j)) {
            (Some(p), Some(m)) => p <= m, // tie goes to the +1 sector
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "level count k exceeds available block levels",
                ))
            }
        };
        if take_plus {
            out.push(Level {
                energy: plus[i],
                sector: ParitySector::Plus,
                index_in_sector: i,
            });
            i += 1;
        } else {
            out.push(Level {
                energy: minus[j],
                sector: ParitySector::Minus,
                index_in_sector: j,
            });
            j += 1;
        }
    }
    Ok(out)
}
