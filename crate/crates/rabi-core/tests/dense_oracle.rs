//! Cross-checks of the in-crate eigensolver and the parity reduction against
//! nalgebra's dense symmetric eigendecomposition, which shares no code with
//! either.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use rabi_core::hamiltonian::build_rabi_dense;
use rabi_core::spectra::{converge_truncation, rabi_spectrum};
use rabi_core::tridiag::{eigen_tridiagonal, SymmetricTridiagonal};
use rabi_core::{FockTruncation, ModelParams};

fn dense_eigenvalues(dim: usize, entries: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(dim, dim, entries);
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn tridiagonal_to_dense(t: &SymmetricTridiagonal) -> Vec<f64> {
    let dim = t.dim();
    let mut full = vec![0.0; dim * dim];
    for i in 0..dim {
        full[i * dim + i] = t.diag()[i];
        if i + 1 < dim {
            full[i * dim + i + 1] = t.offdiag()[i];
            full[(i + 1) * dim + i] = t.offdiag()[i];
        }
    }
    full
}

#[test]
fn ql_iteration_agrees_with_nalgebra_on_random_matrices() {
    let mut rng = ChaCha12Rng::seed_from_u64(1815);
    for dim in [2usize, 3, 7, 24, 60] {
        for _ in 0..4 {
            let diag: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
            let offdiag: Vec<f64> = (0..dim - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t = SymmetricTridiagonal::new(diag, offdiag).unwrap();
            let scale: f64 = t
                .diag()
                .iter()
                .chain(t.offdiag())
                .fold(1.0f64, |a, v| a.max(v.abs()));
            let mine = eigen_tridiagonal(&t, dim).unwrap();
            let oracle = dense_eigenvalues(dim, &tridiagonal_to_dense(&t));
            for (a, b) in mine.iter().zip(&oracle) {
                assert!(
                    (a - b).abs() <= 1e-10 * scale,
                    "dim {dim}: {a} vs oracle {b}"
                );
            }
        }
    }
}

#[test]
fn parity_union_matches_the_dense_product_basis() {
    // the reduction must reproduce the unreduced spectrum, not just at one
    // friendly point but across the weak-to-ultrastrong range
    let trunc = FockTruncation::new(80).unwrap();
    let k = 8;
    for delta in [0.25, 0.5, 1.0, 2.0] {
        for g in [0.0, 0.2, 0.5, 1.0, 2.0] {
            let params = ModelParams::new(delta, 1.0, g).unwrap();
            let reduced = rabi_spectrum(&params, trunc, k).unwrap();
            let h = build_rabi_dense(&params, trunc);
            let oracle = dense_eigenvalues(h.dim(), h.as_slice());
            for (level, e_oracle) in reduced.energies().iter().zip(&oracle) {
                assert!(
                    (level - e_oracle).abs() <= 1e-10,
                    "delta {delta}, g {g}: {level} vs dense {e_oracle}"
                );
            }
        }
    }
}

#[test]
fn automatic_cutoff_growth_lands_on_the_dense_answer() {
    // converge_truncation picks its own n_max; the result must match a dense
    // diagonalization at a generous fixed cutoff
    let params = ModelParams::new(0.5, 1.0, 1.5).unwrap();
    let spec = converge_truncation(&params, 6, 1e-10).unwrap();
    let trunc = FockTruncation::new(160).unwrap();
    let h = build_rabi_dense(&params, trunc);
    let oracle = dense_eigenvalues(h.dim(), h.as_slice());
    for (level, e_oracle) in spec.energies().iter().zip(&oracle) {
        assert!((level - e_oracle).abs() <= 1e-9, "{level} vs {e_oracle}");
    }
    assert!(spec.converged);
}
