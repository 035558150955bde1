//! One function per subcommand. Each resolves its knobs through the layered
//! config, runs the computation, and renders the result in the chosen
//! format. Check-style commands (`check-c1`, `fk-positivity`, `validate`)
//! additionally carry a failure marker so the process can exit nonzero after
//! the output is safely written.

use rabi_core::fk::{stationary_quartile_edges, FkConfig, DEFAULT_WORKERS};
use rabi_core::jc::{
    jc_crossing, jc_crossing_bisection, jc_crossing_closed_form, jc_energy, jc_ground_energy,
};
use rabi_core::spectra::{
    check_c1, converge_truncation, coupling_grid, detect_crossings, ground_sector_constancy,
    rabi_spectrum, SpectrumTable, DEFAULT_DEGENERACY_RTOL, DEFAULT_TRUNCATION_RTOL,
};
use rabi_core::{FockTruncation, ModelParams, ParitySector};
use serde::{Deserialize, Serialize};

use crate::config::{
    CheckC1Args, ConfigEcho, CountCrossingsArgs, FkEnergyArgs, FkPositivityArgs, GridArgs,
    JcCrossingsArgs, JcSpectrumArgs, ModelArgs, OutputFormat, RabiSweepArgs, Resolver,
    ValidateArgs,
};
use crate::output::{render_csv, render_json, Document, Field, Table};
use crate::validate::{run_all, CheckOutcome};
use crate::{parallel, CliError};

/// Finished output text plus an optional check-failure message; the caller
/// writes the text first and only then turns the marker into exit status 3.
pub struct Rendered {
    pub text: String,
    pub failure: Option<String>,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Rendered {
            text,
            failure: None,
        }
    }
}

fn config_err(e: rabi_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn compute_err(command: &str, e: rabi_core::Error) -> CliError {
    CliError::Compute(format!("{command}: {e}"))
}

fn compute_err_at(command: &str, g: f64, e: rabi_core::Error) -> CliError {
    CliError::Compute(format!("{command} at g = {g}: {e}"))
}

fn resolve_model(r: &Resolver, m: &ModelArgs, g: f64) -> Result<ModelParams, CliError> {
    let delta = r.f64("delta", m.delta, 0.5)?;
    let omega = r.f64("omega", m.omega, 1.0)?;
    ModelParams::new(delta, omega, g).map_err(config_err)
}

fn resolve_grid(r: &Resolver, grid: &GridArgs, g_max_default: f64) -> Result<Vec<f64>, CliError> {
    let g_min = r.f64("g_min", grid.g_min, 0.0)?;
    let g_max = r.f64("g_max", grid.g_max, g_max_default)?;
    let g_step = r.f64("g_step", grid.g_step, 0.02)?;
    coupling_grid(g_min, g_max, g_step).map_err(config_err)
}

fn sector_sign(sector: ParitySector) -> i64 {
    sector.sign() as i64
}

// ---------------------------------------------------------------- jc-spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcSpectrumRow {
    pub g: f64,
    pub nu: i32,
    pub energy: f64,
    pub is_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcSpectrumResults {
    pub rows: Vec<JcSpectrumRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcSpectrumDiagnostics {
    pub n_grid_points: usize,
    pub envelope_start: i32,
    pub envelope_end: i32,
    pub envelope_non_increasing: bool,
}

pub type JcSpectrumDocument = Document<JcSpectrumResults, JcSpectrumDiagnostics>;

pub fn jc_spectrum(args: &JcSpectrumArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "jc-spectrum";
    let r = Resolver::new(args.io.config.as_deref())?;
    let params = resolve_model(&r, &args.model, 0.0)?;
    let grid = resolve_grid(&r, &args.grid, 3.0)?;
    let nu_min = r.i32("nu_min", args.nu_min, -6)?;
    if nu_min >= 0 {
        return Err(CliError::Config(
            "nu_min must be negative (indices run from 0 downward)".to_string(),
        ));
    }
    let format = r.format(args.io.format)?;
    let nu_limit = nu_min.unsigned_abs();

    let mut rows = Vec::with_capacity(grid.len() * (nu_limit as usize + 1));
    let mut envelope = Vec::with_capacity(grid.len());
    for &g in &grid {
        let p = params.with_coupling(g);
        let (_, nu_g) = jc_ground_energy(&p, nu_limit).map_err(|e| compute_err_at(CMD, g, e))?;
        envelope.push(nu_g);
        for m in 0..=nu_limit {
            let nu = -(m as i32);
            rows.push(JcSpectrumRow {
                g,
                nu,
                energy: jc_energy(&p, nu),
                is_envelope: nu == nu_g,
            });
        }
    }
    let non_increasing = envelope.windows(2).all(|w| w[1] <= w[0]);

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g_min = Some(grid[0]);
    echo.g_max = Some(*grid.last().unwrap());
    echo.g_step = Some(r.f64("g_step", args.grid.g_step, 0.02)?);
    echo.nu_min = Some(nu_min);

    let diagnostics = JcSpectrumDiagnostics {
        n_grid_points: grid.len(),
        envelope_start: envelope[0],
        envelope_end: *envelope.last().unwrap(),
        envelope_non_increasing: non_increasing,
    };

    let text = match format {
        OutputFormat::Csv => {
            let table = Table {
                columns: &["g", "nu", "energy", "is_envelope"],
                rows: rows
                    .iter()
                    .map(|row| {
                        vec![
                            Field::Float(row.g),
                            Field::Int(row.nu as i64),
                            Field::Float(row.energy),
                            Field::UInt(row.is_envelope as u64),
                        ]
                    })
                    .collect(),
                notes: vec![format!(
                    "envelope index runs from {} to {}",
                    diagnostics.envelope_start, diagnostics.envelope_end
                )],
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: JcSpectrumResults { rows },
            diagnostics,
        })?,
    };
    Ok(Rendered::ok(text))
}

// --------------------------------------------------------------- jc-crossings

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcCrossingRow {
    /// Crossing between ladder levels `-n` and `-(n + 1)`.
    pub n: u32,
    pub g_star: f64,
    pub g_star_bisection: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcCrossingsResults {
    pub rows: Vec<JcCrossingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcCrossingsDiagnostics {
    pub max_route_rel_diff: f64,
    pub strictly_increasing: bool,
}

pub type JcCrossingsDocument = Document<JcCrossingsResults, JcCrossingsDiagnostics>;

pub fn jc_crossings(args: &JcCrossingsArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "jc-crossings";
    let r = Resolver::new(args.io.config.as_deref())?;
    let params = resolve_model(&r, &args.model, 0.0)?;
    let count = r.u32("count", args.count, 6)?;
    if count < 1 {
        return Err(CliError::Config("count must be at least 1".to_string()));
    }
    if 2.0 * params.delta < params.omega {
        return Err(CliError::Config(
            "crossings exist only for 2 delta >= omega".to_string(),
        ));
    }
    let format = r.format(args.io.format)?;

    let mut rows = Vec::with_capacity(count as usize);
    let mut max_rel = 0.0f64;
    for n in 0..count {
        let g_star = jc_crossing(&params, n).map_err(|e| compute_err(CMD, e))?;
        let closed = jc_crossing_closed_form(&params, n).map_err(|e| compute_err(CMD, e))?;
        let bisect = jc_crossing_bisection(&params, n).map_err(|e| compute_err(CMD, e))?;
        max_rel = max_rel.max((closed - bisect).abs() / closed.abs().max(bisect.abs()));
        let energy = jc_energy(&params.with_coupling(g_star), -(n as i32));
        rows.push(JcCrossingRow {
            n,
            g_star,
            g_star_bisection: bisect,
            energy,
        });
    }
    let increasing = rows.windows(2).all(|w| w[0].g_star < w[1].g_star);

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.count = Some(count);

    let diagnostics = JcCrossingsDiagnostics {
        max_route_rel_diff: max_rel,
        strictly_increasing: increasing,
    };

    let text = match format {
        OutputFormat::Csv => {
            let table = Table {
                columns: &["n", "g_star", "g_star_bisection", "energy"],
                rows: rows
                    .iter()
                    .map(|row| {
                        vec![
                            Field::UInt(row.n as u64),
                            Field::Float(row.g_star),
                            Field::Float(row.g_star_bisection),
                            Field::Float(row.energy),
                        ]
                    })
                    .collect(),
                notes: vec![
                    "row n: coupling where ladder levels -n and -(n+1) meet".to_string(),
                ],
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: JcCrossingsResults { rows },
            diagnostics,
        })?,
    };
    Ok(Rendered::ok(text))
}

// ----------------------------------------------------------------- rabi-sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub g: f64,
    pub level_index: usize,
    pub energy: f64,
    /// Parity sector sign, +1 or -1.
    pub parity: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub n_grid_points: usize,
    pub n_max_min: usize,
    pub n_max_max: usize,
    pub auto_converged: bool,
    /// Largest level shift seen in the final doubling step, when converged.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_level_shift: Option<f64>,
}

pub type SweepDocument = Document<SweepResults, SweepDiagnostics>;

pub fn rabi_sweep(args: &RabiSweepArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "rabi-sweep";
    let r = Resolver::new(args.io.config.as_deref())?;
    let params = resolve_model(&r, &args.model, 0.0)?;
    let grid = resolve_grid(&r, &args.grid, 3.0)?;
    let k = r.usize("k_levels", args.k_levels, 8)?;
    if k < 2 {
        return Err(CliError::Config(
            "k_levels must be at least 2".to_string(),
        ));
    }
    let tol_rel = r.f64("tol", args.tol, DEFAULT_TRUNCATION_RTOL)?;
    if !(tol_rel.is_finite() && tol_rel > 0.0) {
        return Err(CliError::Config("tol must be positive".to_string()));
    }
    let tol = tol_rel * params.omega;
    let n_max = r.opt_usize("n_max", args.n_max)?;
    let zero_point = r.flag("add_zero_point_energy", args.add_zero_point_energy)?;
    let format = r.format(args.io.format)?;

    let table = match n_max {
        None => parallel::sweep(&params, &grid, k, tol).map_err(|e| compute_err(CMD, e))?,
        Some(nm) => {
            let trunc = FockTruncation::new(nm).map_err(config_err)?;
            if 2 * k > trunc.n_max() {
                return Err(CliError::Config(
                    "n_max must be at least twice k_levels".to_string(),
                ));
            }
            let mut rows = Vec::with_capacity(grid.len());
            for &g in &grid {
                rows.push(
                    rabi_spectrum(&params.with_coupling(g), trunc, k)
                        .map_err(|e| compute_err_at(CMD, g, e))?,
                );
            }
            SpectrumTable {
                g_grid: grid.clone(),
                rows,
                k,
                tol,
            }
        }
    };

    let shift = if zero_point { params.omega / 2.0 } else { 0.0 };
    let mut rows = Vec::with_capacity(grid.len() * k);
    for (row, &g) in table.rows.iter().zip(&table.g_grid) {
        for (idx, level) in row.levels.iter().enumerate() {
            rows.push(SweepRow {
                g,
                level_index: idx,
                energy: level.energy + shift,
                parity: sector_sign(level.sector) as i8,
            });
        }
    }

    let n_max_min = table.rows.iter().map(|r| r.n_max_used).min().unwrap();
    let n_max_max = table.rows.iter().map(|r| r.n_max_used).max().unwrap();
    let auto_converged = table.rows.iter().all(|r| r.converged);
    let max_level_shift = table
        .rows
        .iter()
        .filter_map(|r| r.truncation_error_estimate)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g_min = Some(grid[0]);
    echo.g_max = Some(*grid.last().unwrap());
    echo.g_step = Some(r.f64("g_step", args.grid.g_step, 0.02)?);
    echo.k_levels = Some(k);
    echo.n_max = n_max;
    echo.tol = Some(tol_rel);
    echo.add_zero_point_energy = Some(zero_point);

    let diagnostics = SweepDiagnostics {
        n_grid_points: grid.len(),
        n_max_min,
        n_max_max,
        auto_converged,
        max_level_shift,
    };

    let text = match format {
        OutputFormat::Csv => {
            let mut notes = vec![format!(
                "cutoff range used: {n_max_min}..={n_max_max}, auto_converged: {auto_converged}"
            )];
            if n_max.is_some() {
                notes.push("fixed cutoff run; convergence not assessed".to_string());
            }
            let table = Table {
                columns: &["g", "level_index", "energy", "parity"],
                rows: rows
                    .iter()
                    .map(|row| {
                        vec![
                            Field::Float(row.g),
                            Field::UInt(row.level_index as u64),
                            Field::Float(row.energy),
                            Field::Int(row.parity as i64),
                        ]
                    })
                    .collect(),
                notes,
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: SweepResults { rows },
            diagnostics,
        })?,
    };
    Ok(Rendered::ok(text))
}

// ------------------------------------------------------------------- check-c1

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Results {
    pub min_gap: f64,
    pub argmin_g: f64,
    pub gap_floor: f64,
    pub gap_above_floor: bool,
    pub ground_sector_constant: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Diagnostics {
    pub n_grid_points: usize,
}

pub type C1Document = Document<C1Results, C1Diagnostics>;

pub fn check_c1_cmd(args: &CheckC1Args) -> Result<Rendered, CliError> {
    const CMD: &str = "check-c1";
    let r = Resolver::new(args.io.config.as_deref())?;
    let params = resolve_model(&r, &args.model, 0.0)?;
    if params.delta <= 0.0 {
        return Err(CliError::Config(
            "the gap scan needs delta > 0 (the two lowest levels are exactly degenerate at delta = 0)"
                .to_string(),
        ));
    }
    let g_min = r.f64("g_min", args.grid.g_min, 0.0)?;
    let g_max = r.f64("g_max", args.grid.g_max, 3.0)?;
    let g_step = r.f64("g_step", args.grid.g_step, 0.02)?;
    let grid = coupling_grid(g_min, g_max, g_step).map_err(config_err)?;
    // the default floor must clear the gap's own deep-coupling decay: by
    // g = 3 omega the first gap sits near 2 delta e^-18 ~ 1e-8, so anything
    // coarser than 1e-9 omega flags physics, not a fault
    let floor_rel = r.f64("gap_floor", args.gap_floor, 1e-9)?;
    let gap_floor = floor_rel * params.omega;
    let format = r.format(args.io.format)?;

    let report =
        check_c1(&params, g_min, g_max, g_step, gap_floor).map_err(|e| compute_err(CMD, e))?;
    let constant =
        ground_sector_constancy(&params, g_min, g_max, g_step).map_err(|e| compute_err(CMD, e))?;
    let pass = report.pass && constant;

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g_min = Some(g_min);
    echo.g_max = Some(g_max);
    echo.g_step = Some(g_step);
    echo.gap_floor = Some(floor_rel);

    let results = C1Results {
        min_gap: report.min_gap,
        argmin_g: report.argmin_g,
        gap_floor,
        gap_above_floor: report.pass,
        ground_sector_constant: constant,
        pass,
    };
    let diagnostics = C1Diagnostics {
        n_grid_points: grid.len(),
    };

    let text = match format {
        OutputFormat::Csv => {
            let table = Table {
                columns: &[
                    "min_gap",
                    "argmin_g",
                    "gap_floor",
                    "gap_above_floor",
                    "ground_sector_constant",
                    "pass",
                ],
                rows: vec![vec![
                    Field::Float(results.min_gap),
                    Field::Float(results.argmin_g),
                    Field::Float(results.gap_floor),
                    Field::UInt(results.gap_above_floor as u64),
                    Field::UInt(results.ground_sector_constant as u64),
                    Field::UInt(results.pass as u64),
                ]],
                notes: vec![format!("scanned {} grid points", grid.len())],
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: results.clone(),
            diagnostics,
        })?,
    };

    let failure = (!pass).then(|| {
        format!(
            "ground-gap check failed: min gap {:.6e} at g = {} (floor {:.1e}), sector constant: {}",
            results.min_gap, results.argmin_g, results.gap_floor, constant
        )
    });
    Ok(Rendered { text, failure })
}

// ------------------------------------------------------------ count-crossings

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub level_lo: usize,
    pub level_hi: usize,
    pub g_star: f64,
    pub gap_at_star: f64,
    pub sector_a: i8,
    pub sector_b: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub level_lo: usize,
    pub level_hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCrossingsResults {
    pub rows: Vec<CrossingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCrossingsDiagnostics {
    pub counts: Vec<PairCount>,
    pub all_opposite_parity: bool,
    pub n_grid_points: usize,
}

pub type CountCrossingsDocument = Document<CountCrossingsResults, CountCrossingsDiagnostics>;

pub fn count_crossings(args: &CountCrossingsArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "count-crossings";
    let r = Resolver::new(args.io.config.as_deref())?;
    let params = resolve_model(&r, &args.model, 0.0)?;
    let grid = resolve_grid(&r, &args.grid, 3.0)?;
    let max_level = r.usize("max_level", args.max_level, 5)?;
    let k = r.usize("k_levels", args.k_levels, 8)?;
    if k < max_level + 2 {
        return Err(CliError::Config(
            "k_levels must exceed max_level by at least 2 so the top pair keeps a neighbor"
                .to_string(),
        ));
    }
    let tol_rel = r.f64("tol", args.tol, DEFAULT_TRUNCATION_RTOL)?;
    let deg_rel = r.f64("deg_tol", args.deg_tol, DEFAULT_DEGENERACY_RTOL)?;
    let tol = tol_rel * params.omega;
    let deg_tol = deg_rel * params.omega;
    let format = r.format(args.io.format)?;

    let table = parallel::sweep(&params, &grid, k, tol).map_err(|e| compute_err(CMD, e))?;

    let mut rows = Vec::new();
    let mut counts = Vec::new();
    let mut all_opposite = true;
    let mut pair_lo = 0usize;
    while pair_lo + 1 <= max_level {
        let pair = (pair_lo, pair_lo + 1);
        let found = detect_crossings(&table, pair, deg_tol).map_err(|e| compute_err(CMD, e))?;
        counts.push(PairCount {
            level_lo: pair.0,
            level_hi: pair.1,
            count: found.len(),
        });
        for c in &found {
            all_opposite &= c.sectors.0 != c.sectors.1;
            rows.push(CrossingRow {
                level_lo: pair.0,
                level_hi: pair.1,
                g_star: c.g_star,
                gap_at_star: c.gap_at_star,
                sector_a: sector_sign(c.sectors.0) as i8,
                sector_b: sector_sign(c.sectors.1) as i8,
            });
        }
        pair_lo += 2;
    }

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g_min = Some(grid[0]);
    echo.g_max = Some(*grid.last().unwrap());
    echo.g_step = Some(r.f64("g_step", args.grid.g_step, 0.02)?);
    echo.max_level = Some(max_level);
    echo.k_levels = Some(k);
    echo.tol = Some(tol_rel);
    echo.deg_tol = Some(deg_rel);

    let diagnostics = CountCrossingsDiagnostics {
        counts: counts.clone(),
        all_opposite_parity: all_opposite,
        n_grid_points: grid.len(),
    };

    let text = match format {
        OutputFormat::Csv => {
            let notes = counts
                .iter()
                .map(|c| {
                    format!(
                        "pair {}-{}: {} crossing{}",
                        c.level_lo,
                        c.level_hi,
                        c.count,
                        if c.count == 1 { "" } else { "s" }
                    )
                })
                .collect();
            let table = Table {
                columns: &[
                    "level_lo",
                    "level_hi",
                    "g_star",
                    "gap_at_star",
                    "sector_a",
                    "sector_b",
                ],
                rows: rows
                    .iter()
                    .map(|row| {
                        vec![
                            Field::UInt(row.level_lo as u64),
                            Field::UInt(row.level_hi as u64),
                            Field::Float(row.g_star),
                            Field::Float(row.gap_at_star),
                            Field::Int(row.sector_a as i64),
                            Field::Int(row.sector_b as i64),
                        ]
                    })
                    .collect(),
                notes,
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: CountCrossingsResults { rows },
            diagnostics,
        })?,
    };
    Ok(Rendered::ok(text))
}

// ------------------------------------------------------------------ fk-energy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkEnergyResults {
    pub energy: f64,
    pub stderr: f64,
    /// Converged diagonalization value, under the same energy convention.
    pub e_reference: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkEnergyDiagnostics {
    /// Absolute finite-difference window, `dt_ratio / omega`.
    pub dt: f64,
    pub n_max_reference: usize,
    pub zero_point_added: bool,
}

pub type FkEnergyDocument = Document<FkEnergyResults, FkEnergyDiagnostics>;

pub fn fk_energy(args: &FkEnergyArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "fk-energy";
    let r = Resolver::new(args.io.config.as_deref())?;
    let g = r.f64("g", args.g, 0.5)?;
    let params = resolve_model(&r, &args.model, g)?;
    let t = r.f64("t", args.t, 6.0 / params.omega)?;
    let dt_ratio = r.f64("dt_ratio", args.dt_ratio, 1.0)?;
    let n_samples = r.u64("n_samples", args.n_samples, 1_000_000)?;
    let seed = r.seed(args.seed)?;
    let workers = r.u32("workers", args.workers, DEFAULT_WORKERS)?;
    let tol_rel = r.f64("tol", args.tol, DEFAULT_TRUNCATION_RTOL)?;
    let zero_point = r.flag("add_zero_point_energy", args.add_zero_point_energy)?;
    let format = r.format(args.io.format)?;

    let config = FkConfig {
        params,
        t,
        n_samples,
        seed,
        n_workers: workers,
    };
    config.validate().map_err(config_err)?;
    if !(dt_ratio.is_finite() && dt_ratio > 0.0) {
        return Err(CliError::Config("dt_ratio must be positive".to_string()));
    }

    let est = parallel::fk_ground_energy(&config, dt_ratio).map_err(|e| compute_err(CMD, e))?;
    let reference = converge_truncation(&params, 1, tol_rel * params.omega)
        .map_err(|e| compute_err(CMD, e))?;

    let shift = if zero_point { params.omega / 2.0 } else { 0.0 };
    let energy = est.energy + shift;
    let e_reference = reference.levels[0].energy + shift;
    // an exact estimator (zero spread) can only honestly score zero
    let z_score = if est.stderr > 0.0 {
        (energy - e_reference) / est.stderr
    } else {
        0.0
    };

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g = Some(params.g);
    echo.t = Some(t);
    echo.dt_ratio = Some(dt_ratio);
    echo.n_samples = Some(n_samples);
    echo.seed = Some(seed);
    echo.workers = Some(workers);
    echo.tol = Some(tol_rel);
    echo.add_zero_point_energy = Some(zero_point);

    let results = FkEnergyResults {
        energy,
        stderr: est.stderr,
        e_reference,
        z_score,
    };
    let diagnostics = FkEnergyDiagnostics {
        dt: dt_ratio / params.omega,
        n_max_reference: reference.n_max_used,
        zero_point_added: zero_point,
    };

    let text = match format {
        OutputFormat::Csv => {
            let table = Table {
                columns: &["energy", "stderr", "e_reference", "z_score"],
                rows: vec![vec![
                    Field::Float(results.energy),
                    Field::Float(results.stderr),
                    Field::Float(results.e_reference),
                    Field::Float(results.z_score),
                ]],
                notes: vec![format!(
                    "reference from diagonalization at cutoff {}",
                    diagnostics.n_max_reference
                )],
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: results.clone(),
            diagnostics,
        })?,
    };
    Ok(Rendered::ok(text))
}

// -------------------------------------------------------------- fk-positivity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub start_state: usize,
    pub end_state: usize,
    pub start_bin: usize,
    pub start_spin: i8,
    pub end_bin: usize,
    pub end_spin: i8,
    pub mean: f64,
    pub stderr: f64,
    pub hits: u64,
    /// Mean exceeds three standard errors.
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResults {
    pub rows: Vec<ProbeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDiagnostics {
    pub edges: Vec<f64>,
    pub n_states: usize,
    pub all_positive: bool,
    pub min_z: f64,
    pub undersampled: Vec<(usize, usize)>,
}

pub type ProbeDocument = Document<ProbeResults, ProbeDiagnostics>;

fn spin_sign_of_state(state: usize) -> i8 {
    if state % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn fk_positivity(args: &FkPositivityArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "fk-positivity";
    let r = Resolver::new(args.io.config.as_deref())?;
    let g = r.f64("g", args.g, 0.5)?;
    let params = resolve_model(&r, &args.model, g)?;
    if params.delta <= 0.0 {
        return Err(CliError::Config(
            "the probe needs delta > 0; without spin flips most cells are unreachable".to_string(),
        ));
    }
    let t = r.f64("t", args.t, 2.0 / params.omega)?;
    let n_samples = r.u64("n_samples", args.n_samples, 1_000_000)?;
    let seed = r.seed(args.seed)?;
    let workers = r.u32("workers", args.workers, DEFAULT_WORKERS)?;
    let min_hits = r.u64("min_hits", args.min_hits, 100)?;
    let format = r.format(args.io.format)?;

    let config = FkConfig {
        params,
        t,
        n_samples,
        seed,
        n_workers: workers,
    };
    config.validate().map_err(config_err)?;

    let edges = stationary_quartile_edges(params.omega);
    let report = parallel::positivity_probe(&config, &edges).map_err(|e| compute_err(CMD, e))?;

    let n_states = report.n_states;
    let mut rows = Vec::with_capacity(n_states * n_states);
    let mut all_positive = true;
    let mut min_z = f64::INFINITY;
    for start in 0..n_states {
        for end in 0..n_states {
            let cell = report.cell(start, end);
            let positive = cell.mean > 3.0 * cell.stderr && cell.mean > 0.0;
            all_positive &= positive;
            if cell.stderr > 0.0 {
                min_z = min_z.min(cell.mean / cell.stderr);
            }
            rows.push(ProbeRow {
                start_state: start,
                end_state: end,
                start_bin: start / 2,
                start_spin: spin_sign_of_state(start),
                end_bin: end / 2,
                end_spin: spin_sign_of_state(end),
                mean: cell.mean,
                stderr: cell.stderr,
                hits: cell.hits,
                positive,
            });
        }
    }
    if !min_z.is_finite() {
        min_z = 0.0;
    }
    let undersampled = report.undersampled(min_hits);

    let mut echo = ConfigEcho::new(CMD);
    echo.delta = Some(params.delta);
    echo.omega = Some(params.omega);
    echo.g = Some(params.g);
    echo.t = Some(t);
    echo.n_samples = Some(n_samples);
    echo.seed = Some(seed);
    echo.workers = Some(workers);
    echo.min_hits = Some(min_hits);

    let diagnostics = ProbeDiagnostics {
        edges: edges.to_vec(),
        n_states,
        all_positive,
        min_z,
        undersampled: undersampled.clone(),
    };

    let text = match format {
        OutputFormat::Csv => {
            let mut notes = vec![
                "state = position_bin * 2 + spin_index (spin up first)".to_string(),
                format!("smallest mean/stderr over the cells: {min_z:.3}"),
            ];
            if !undersampled.is_empty() {
                notes.push(format!(
                    "{} cell(s) under {min_hits} hits; treat their rows as unresolved",
                    undersampled.len()
                ));
            }
            let table = Table {
                columns: &[
                    "start_state",
                    "end_state",
                    "start_bin",
                    "start_spin",
                    "end_bin",
                    "end_spin",
                    "mean",
                    "stderr",
                    "hits",
                    "positive",
                ],
                rows: rows
                    .iter()
                    .map(|row| {
                        vec![
                            Field::UInt(row.start_state as u64),
                            Field::UInt(row.end_state as u64),
                            Field::UInt(row.start_bin as u64),
                            Field::Int(row.start_spin as i64),
                            Field::UInt(row.end_bin as u64),
                            Field::Int(row.end_spin as i64),
                            Field::Float(row.mean),
                            Field::Float(row.stderr),
                            Field::UInt(row.hits),
                            Field::UInt(row.positive as u64),
                        ]
                    })
                    .collect(),
                notes,
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: ProbeResults { rows: rows.clone() },
            diagnostics,
        })?,
    };

    let failure = (!all_positive).then(|| {
        let failing = rows.iter().filter(|r| !r.positive).count();
        format!("positivity probe: {failing} of {} cells not positive at 3 standard errors", rows.len())
    });
    Ok(Rendered { text, failure })
}

// ------------------------------------------------------------------- validate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResults {
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateDiagnostics {
    pub n_checks: usize,
    pub n_failed: usize,
}

pub type ValidateDocument = Document<ValidateResults, ValidateDiagnostics>;

pub fn validate_cmd(args: &ValidateArgs) -> Result<Rendered, CliError> {
    const CMD: &str = "validate";
    let r = Resolver::new(args.io.config.as_deref())?;
    let seed = r.seed(args.seed)?;
    let n_samples = r.u64("n_samples", args.n_samples, 1_000_000)?;
    if n_samples < 1_000 {
        return Err(CliError::Config(
            "the statistical checks need n_samples >= 1000".to_string(),
        ));
    }
    let workers = r.u32("workers", args.workers, DEFAULT_WORKERS)?;
    if workers < 1 {
        return Err(CliError::Config("workers must be at least 1".to_string()));
    }
    let format = r.format(args.io.format)?;

    let checks = run_all(seed, n_samples, workers);
    let n_failed = checks.iter().filter(|c| !c.pass).count();

    let mut echo = ConfigEcho::new(CMD);
    echo.seed = Some(seed);
    echo.n_samples = Some(n_samples);
    echo.workers = Some(workers);

    let diagnostics = ValidateDiagnostics {
        n_checks: checks.len(),
        n_failed,
    };

    let text = match format {
        OutputFormat::Csv => {
            let table = Table {
                columns: &["name", "pass", "detail"],
                rows: checks
                    .iter()
                    .map(|c| {
                        vec![
                            Field::Str(c.name.clone()),
                            Field::UInt(c.pass as u64),
                            Field::Str(c.detail.clone()),
                        ]
                    })
                    .collect(),
                notes: vec![format!("{} checks, {} failed", checks.len(), n_failed)],
            };
            render_csv(&echo, &table)
        }
        OutputFormat::Json => render_json(&Document {
            config: echo,
            results: ValidateResults {
                checks: checks.clone(),
            },
            diagnostics,
        })?,
    };

    let failure = (n_failed > 0).then(|| {
        let names: Vec<&str> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        format!("{n_failed} gating check(s) failed: {}", names.join(", "))
    });
    Ok(Rendered { text, failure })
}
