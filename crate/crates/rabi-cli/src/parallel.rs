//! Rayon drivers for the embarrassingly parallel work. The contract is
//! bit-identical results against the sequential drivers in `rabi-core`:
//! worker `w` always owns RNG stream `w` and its deterministic share of the
//! sample range, partial sums merge in worker order, and sweep rows keep
//! grid order, so the thread schedule cannot leak into any output.

use rabi_core::fk::{
    self, FkConfig, FkEnergyEstimate, FkEstimate, ProbeReport,
};
use rabi_core::spectra::{converge_truncation, SpectrumTable};
use rabi_core::{Error, ModelParams, Result, Spin};
use rayon::prelude::*;

pub fn fk_matrix_element<F, G>(f: &F, g: &G, config: &FkConfig) -> Result<FkEstimate>
where
    F: Fn(f64, Spin) -> f64 + Sync,
    G: Fn(f64, Spin) -> f64 + Sync,
{
    config.validate()?;
    let partials = (0..config.n_workers)
        .into_par_iter()
        .map(|w| fk::fk_matrix_element_worker(f, g, config, w))
        .collect::<Result<Vec<_>>>()?;
    fk::fk_matrix_element_from_partials(config, &partials)
}

pub fn fk_ground_energy(config: &FkConfig, dt_ratio: f64) -> Result<FkEnergyEstimate> {
    config.validate()?;
    let partials = (0..config.n_workers)
        .into_par_iter()
        .map(|w| fk::fk_ground_energy_worker(config, dt_ratio, w))
        .collect::<Result<Vec<_>>>()?;
    fk::fk_ground_energy_from_partials(config, dt_ratio, &partials)
}

pub fn positivity_probe(config: &FkConfig, edges: &[f64]) -> Result<ProbeReport> {
    config.validate()?;
    let partials = (0..config.n_workers)
        .into_par_iter()
        .map(|w| fk::positivity_probe_worker(config, edges, w))
        .collect::<Result<Vec<_>>>()?;
    fk::positivity_probe_from_partials(config, edges, &partials)
}

/// Grid-parallel version of the coupling sweep; one converged spectrum per
/// grid point, rows in grid order.
pub fn sweep(params: &ModelParams, g_grid: &[f64], k: usize, tol: f64) -> Result<SpectrumTable> {
    params.validate()?;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "a sweep needs at least two levels",
        ));
    }
    if g_grid.is_empty() {
        return Err(Error::InvalidArgument("empty coupling grid"));
    }
    if g_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "coupling grid must be strictly ascending",
        ));
    }
    let rows = g_grid
        .par_iter()
        .map(|&g| {
            converge_truncation(&params.with_coupling(g), k, tol).map_err(|e| Error::AtCoupling {
                g,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable {
        g_grid: g_grid.to_vec(),
        rows,
        k,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rabi_core::fk::stationary_quartile_edges;
    use rabi_core::spectra;

    fn mc_config() -> FkConfig {
        FkConfig {
            params: ModelParams::new(0.5, 1.0, 0.4).unwrap(),
            t: 1.5,
            n_samples: 6_000,
            seed: 71,
            n_workers: 5,
        }
    }

    #[test]
    fn matrix_element_matches_sequential_bits() {
        let config = mc_config();
        let flat = |_: f64, _: Spin| 1.0;
        let par = fk_matrix_element(&flat, &flat, &config).unwrap();
        let seq = fk::fk_matrix_element(&flat, &flat, &config).unwrap();
        assert_eq!(par.mean.to_bits(), seq.mean.to_bits());
        assert_eq!(par.stderr.to_bits(), seq.stderr.to_bits());
    }

    #[test]
    fn ground_energy_matches_sequential_bits() {
        let config = mc_config();
        let par = fk_ground_energy(&config, 1.0).unwrap();
        let seq = fk::fk_ground_energy(&config, 1.0).unwrap();
        assert_eq!(par.energy.to_bits(), seq.energy.to_bits());
        assert_eq!(par.stderr.to_bits(), seq.stderr.to_bits());
    }

    #[test]
    fn probe_matches_sequential_bits() {
        let config = mc_config();
        let edges = stationary_quartile_edges(config.params.omega);
        let par = positivity_probe(&config, &edges).unwrap();
        let seq = fk::positivity_probe(&config, &edges).unwrap();
        assert_eq!(par.cells.len(), seq.cells.len());
        for (a, b) in par.cells.iter().zip(&seq.cells) {
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
            assert_eq!(a.hits, b.hits);
        }
    }

    #[test]
    fn sweep_matches_sequential_bits() {
        let p = ModelParams::new(0.5, 1.0, 0.0).unwrap();
        let grid = spectra::coupling_grid(0.0, 1.0, 0.25).unwrap();
        let par = sweep(&p, &grid, 4, 1e-10).unwrap();
        let seq = spectra::sweep(&p, &grid, 4, 1e-10).unwrap();
        assert_eq!(par.rows.len(), seq.rows.len());
        for (a, b) in par.rows.iter().zip(&seq.rows) {
            assert_eq!(a.n_max_used, b.n_max_used);
            for (la, lb) in a.levels.iter().zip(&b.levels) {
                assert_eq!(la.energy.to_bits(), lb.energy.to_bits());
                assert_eq!(la.sector, lb.sector);
            }
        }
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let p = ModelParams::new(0.5, 1.0, 0.0).unwrap();
        assert!(sweep(&p, &[], 4, 1e-10).is_err());
        assert!(sweep(&p, &[0.0, 0.0], 4, 1e-10).is_err());
        assert!(sweep(&p, &[0.0, 1.0], 1, 1e-10).is_err());
    }
}
