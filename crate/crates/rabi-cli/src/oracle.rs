//! Independent reference computations used to gate the fast paths: a dense
//! eigensolver from nalgebra and a brute-force stochastic integrator. Slow
//! and simple on purpose; nothing here is called on a hot path.

use nalgebra::DMatrix;
use rabi_core::hamiltonian::{build_rabi_dense, DenseSymMatrix};
use rabi_core::{FockTruncation, ModelParams};
use rand::Rng;
use rand_distr::StandardNormal;

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn dense_sym_eigenvalues(m: &DenseSymMatrix) -> Vec<f64> {
    let dim = m.dim();
    let mat = DMatrix::from_row_slice(dim, dim, m.as_slice());
    let mut vals: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigenvalues of a symmetric tridiagonal matrix by dense expansion.
pub fn tridiagonal_dense_eigenvalues(diag: &[f64], offdiag: &[f64]) -> Vec<f64> {
    assert_eq!(offdiag.len() + 1, diag.len());
    let n = diag.len();
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = diag[i];
        if i + 1 < n {
            mat[(i, i + 1)] = offdiag[i];
            mat[(i + 1, i)] = offdiag[i];
        }
    }
    let mut vals: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Lowest `k` levels from the dense two-block product-basis matrix, bypassing
/// the parity reduction entirely.
pub fn rabi_dense_spectrum(params: &ModelParams, trunc: FockTruncation, k: usize) -> Vec<f64> {
    let dense = build_rabi_dense(params, trunc);
    let mut vals = dense_sym_eigenvalues(&dense);
    vals.truncate(k);
    vals
}

/// One Euler-Maruyama path of the mean-reverting diffusion
/// `dX = -omega X ds + dW`, returning the endpoint and the trapezoid
/// approximation of the time integral.
pub fn euler_ou_path<R: Rng + ?Sized>(
    omega: f64,
    x0: f64,
    dt: f64,
    n_steps: usize,
    rng: &mut R,
) -> (f64, f64) {
    let h = dt / n_steps as f64;
    let sqrt_h = h.sqrt();
    let mut x = x0;
    let mut integral = 0.0;
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let x_next = x - omega * x * h + sqrt_h * z;
        integral += 0.5 * (x + x_next) * h;
        x = x_next;
    }
    (x, integral)
}
