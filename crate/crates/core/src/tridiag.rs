//! Eigendecomposition of real symmetric tridiagonal matrices.
//!
//! Implicit QL iteration with Wilkinson-style shifts, accumulating the
//! rotations into the eigenvector matrix. Eigenvectors are stored one per
//! row so that both `Vᵀx` and `Vy` run over contiguous memory.

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues (ascending) and eigenvectors of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    /// Row `j` holds the normalized eigenvector belonging to `values[j]`.
    vectors: Vec<f64>,
    dim: usize,
}

impl TridiagEigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    /// Component `row` of eigenvector `j`, i.e. the matrix entry `V[row][j]`.
    #[inline]
    pub fn component(&self, row: usize, j: usize) -> f64 {
        self.vectors[j * self.dim + row]
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with main diagonal `diag`
/// and first off-diagonal `offdiag` (`offdiag.len() + 1 == diag.len()`).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<TridiagEigen> {
    let n = diag.len();
    assert!(
        n == 0 && offdiag.is_empty() || offdiag.len() + 1 == n,
        "off-diagonal length must be one less than the diagonal length"
    );
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(offdiag);

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    let eps = f64::EPSILON;
    let mut shift = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(Error::NoConvergence(l));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        vectors.extend_from_slice(&z[j * n..(j + 1) * n]);
    }
    Ok(TridiagEigen { values, vectors, dim: n })
}
