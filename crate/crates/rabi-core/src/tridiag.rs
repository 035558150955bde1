//! Symmetric tridiagonal matrices and their eigendecomposition.
//!
//! The solver is the classic QL iteration with implicit Wilkinson shifts
//! (the `tql2` lineage), which is exactly the right tool here: parity
//! reduction of the Rabi Hamiltonian produces real symmetric tridiagonal
//! blocks directly, so no Householder reduction step is ever needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[cfg(not(feature = "std"))]
use crate::math::FloatExt;

/// Total QL iteration budget, per matrix, scaled by its dimension.
const MAX_ITER_PER_DIM: usize = 60;

/// Real symmetric tridiagonal matrix.
///
/// `diag` has length `n`; `offdiag` has length `n - 1` and couples
/// neighbouring indices, so entry `(i, i+1) = (i+1, i) = offdiag[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(
                "offdiag length must be diag length - 1",
            ));
        }
        if !(diag.iter().all(|x| x.is_finite()) && offdiag.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidArgument("matrix entries must be finite"));
        }
        Ok(SymmetricTridiagonal { diag, offdiag })
    }

    /// Constructor for builders whose entries are finite by construction.
    pub(crate) fn from_parts(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        debug_assert_eq!(offdiag.len() + 1, diag.len());
        SymmetricTridiagonal { diag, offdiag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Matrix-vector product `T v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length must match matrix dimension");
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }
}

/// Eigenvalues (ascending) with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `vectors[j]` is the eigenvector for `values[j]`, length `dim`.
    pub vectors: Vec<Vec<f64>>,
}

/// Lowest `k` eigenvalues of `t`, ascending. Requires `1 <= k <= dim`.
pub fn eigen_tridiagonal(t: &SymmetricTridiagonal, k: usize) -> Result<Vec<f64>> {
    let n = t.dim();
    check_k(k, n)?;
    let mut d = t.diag.clone();
    let mut e = scratch_offdiag(t);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_unstable_by(f64::total_cmp);
    d.truncate(k);
    Ok(d)
}

/// Lowest `k` eigenpairs of `t`. Costs an extra `O(n^2)` per rotation for the
/// accumulated eigenvector matrix, so prefer [`eigen_tridiagonal`] when only
/// energies are needed.
pub fn eigen_tridiagonal_with_vectors(t: &SymmetricTridiagonal, k: usize) -> Result<EigenPairs> {
    let n = t.dim();
    check_k(k, n)?;
    let mut d = t.diag.clone();
    let mut e = scratch_offdiag(t);
    // z starts as the identity; the QL rotations accumulate into its columns
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().take(k).map(|&j| d[j]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .take(k)
        .map(|&j| (0..n).map(|row| z[row * n + j]).collect())
        .collect();
    Ok(EigenPairs { values, vectors })
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(
            "level count k must satisfy 1 <= k <= dim",
        ));
    }
    Ok(())
}

fn scratch_offdiag(t: &SymmetricTridiagonal) -> Vec<f64> {
    // one trailing scratch slot, as the deflation bookkeeping writes e[m]
    let n = t.dim();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&t.offdiag);
    e
}

/// QL iteration with implicit shifts. `d` (length `n`) holds the diagonal and
/// receives the eigenvalues, unordered. `e` (length `n`, last slot scratch)
/// holds the offdiagonal. If `z` is given it must be an `n x n` row-major
/// identity on entry and accumulates eigenvectors in its columns.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    debug_assert_eq!(e.len(), n);
    if n == 1 {
        return Ok(());
    }
    let cap = MAX_ITER_PER_DIM * n;
    let mut iterations = 0usize;
    for l in 0..n {
        loop {
            // find the first negligible offdiagonal at or after l
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break; // d[l] has deflated out
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::EigenNoConvergence {
                    iterations,
                    dim: n,
                });
            }
            // shift from the 2x2 block at l, with the sign choice that
            // picks the eigenvalue closer to d[l]
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // a rotation annihilated early: split here and retry
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in 0..n {
                        let a = row * n + i;
                        f = z[a + 1];
                        z[a + 1] = s * z[a] + c * f;
                        z[a] = c * z[a] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
