//! Truncated matrix representations of the Rabi Hamiltonian.
//!
//! The parity operator `P = sigma_x (-1)^(a'a)` commutes with
//! `H = sigma_z delta + omega a'a + g sigma_x (a + a')`, so the truncated
//! Hamiltonian splits into two blocks, one per parity eigenvalue. In the
//! basis that diagonalizes `P`, each block is symmetric tridiagonal over the
//! Fock index `n`:
//!
//! ```text
//! diag[n]    = omega * n - p * delta * (-1)^n     (p = +-1 the parity)
//! offdiag[n] = g * sqrt(n + 1)
//! ```
//!
//! The dense builder assembles the full `2 (n_max + 1)` dimensional matrix in
//! the product basis `|atom> (x) |n>` without using parity at all; it exists
//! so the reduction can be cross-checked against an independent route.

use alloc::vec;
use alloc::vec::Vec;

use crate::params::{FockTruncation, ModelParams, ParitySector};
use crate::tridiag::SymmetricTridiagonal;

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// One parity block of the truncated Rabi Hamiltonian.
pub fn build_rabi_parity_block(
    params: &ModelParams,
    sector: ParitySector,
    trunc: FockTruncation,
) -> SymmetricTridiagonal {
    let dim = trunc.block_dim();
    let p = sector.sign();
    let mut diag = Vec::with_capacity(dim);
    let mut offdiag = Vec::with_capacity(dim - 1);
    for n in 0..dim {
        let alt = if n % 2 == 0 { 1.0 } else { -1.0 };
        diag.push(params.omega * n as f64 - p * params.delta * alt);
        if n + 1 < dim {
            offdiag.push(params.g * ((n + 1) as f64).sqrt());
        }
    }
    SymmetricTridiagonal::from_parts(diag, offdiag)
}

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseSymMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseSymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)` together.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Row-major backing slice, length `dim * dim`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Full truncated Rabi Hamiltonian in the product basis, ordered as
/// `|up, 0>, ..., |up, n_max>, |down, 0>, ..., |down, n_max>`.
pub fn build_rabi_dense(params: &ModelParams, trunc: FockTruncation) -> DenseSymMatrix {
    let b = trunc.block_dim();
    let dim = trunc.full_dim();
    let mut h = DenseSymMatrix::zeros(dim);
    for atom in 0..2 {
        // sigma_z eigenvalue +1 on the first block, -1 on the second
        let sz = if atom == 0 { 1.0 } else { -1.0 };
        for n in 0..b {
            let row = atom * b + n;
            h.set_sym(row, row, sz * params.delta + params.omega * n as f64);
            // sigma_x flips the atom; a + a' shifts the Fock index
            if n + 1 < b {
                let col = (1 - atom) * b + n + 1;
                let v = params.g * ((n + 1) as f64).sqrt();
                h.set_sym(row, col, v);
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tridiag::eigen_tridiagonal;

    fn params(delta: f64, omega: f64, g: f64) -> ModelParams {
        ModelParams::new(delta, omega, g).unwrap()
    }

    #[test]
    fn block_entries_follow_the_pattern() {
        let p = params(0.5, 1.0, 0.3);
        let t = FockTruncation::new(3).unwrap();
        let plus = build_rabi_parity_block(&p, ParitySector::Plus, t);
        assert_eq!(plus.diag(), &[-0.5, 1.5, 1.5, 3.5]);
        let expect_off = [0.3, 0.3 * 2f64.sqrt(), 0.3 * 3f64.sqrt()];
        for (a, b) in plus.offdiag().iter().zip(expect_off) {
            assert!((a - b).abs() < 1e-15);
        }
        let minus = build_rabi_parity_block(&p, ParitySector::Minus, t);
        assert_eq!(minus.diag(), &[0.5, 0.5, 2.5, 2.5]);
        assert_eq!(minus.offdiag(), plus.offdiag());
    }

    #[test]
    fn two_by_two_block_ground_energy() {
        // n_max = 1, plus sector, delta = 0.5, omega = 1, g = 1:
        // [[-0.5, 1], [1, 1.5]] has eigenvalues 0.5 -+ sqrt(2)
        let p = params(0.5, 1.0, 1.0);
        let t = FockTruncation::new(1).unwrap();
        let block = build_rabi_parity_block(&p, ParitySector::Plus, t);
        let ev = eigen_tridiagonal(&block, 2).unwrap();
        assert!((ev[0] - (0.5 - 2f64.sqrt())).abs() < 1e-14);
        assert!((ev[1] - (0.5 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn decoupled_spectrum_is_the_shifted_oscillator_pair() {
        // g = 0: union of both blocks must be {omega n +- delta}
        let p = params(0.7, 1.3, 0.0);
        let t = FockTruncation::new(5).unwrap();
        for sector in ParitySector::BOTH {
            let block = build_rabi_parity_block(&p, sector, t);
            let ev = eigen_tridiagonal(&block, t.block_dim()).unwrap();
            for &e in &ev {
                let hit = (0..=t.n_max()).any(|n| {
                    let base = p.omega * n as f64;
                    (e - (base - p.delta)).abs() < 1e-12 || (e - (base + p.delta)).abs() < 1e-12
                });
                assert!(hit, "eigenvalue {e} not of the form omega n +- delta");
            }
        }
    }

    #[test]
    fn dense_matrix_is_symmetric_with_expected_pattern() {
        let p = params(0.5, 1.0, 0.4);
        let t = FockTruncation::new(2).unwrap();
        let h = build_rabi_dense(&p, t);
        assert_eq!(h.dim(), 6);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
        // diagonal: up block then down block
        assert_eq!(h.get(0, 0), 0.5);
        assert_eq!(h.get(1, 1), 1.5);
        assert_eq!(h.get(3, 3), -0.5);
        assert_eq!(h.get(5, 5), 1.5);
        // coupling connects (up, n) with (down, n +- 1) only
        assert!((h.get(0, 4) - 0.4).abs() < 1e-15);
        assert!((h.get(1, 5) - 0.4 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.get(0, 1), 0.0);
        assert_eq!(h.get(0, 3), 0.0);
        assert_eq!(h.get(2, 5), 0.0);
    }

    #[test]
    fn blocks_are_even_in_g_entrywise_up_to_offdiag_sign() {
        let t = FockTruncation::new(8).unwrap();
        let pos = build_rabi_parity_block(&params(0.5, 1.0, 0.6), ParitySector::Plus, t);
        let neg = build_rabi_parity_block(&params(0.5, 1.0, -0.6), ParitySector::Plus, t);
        assert_eq!(pos.diag(), neg.diag());
        for (a, b) in pos.offdiag().iter().zip(neg.offdiag()) {
            assert_eq!(*a, -b);
        }
    }
}
