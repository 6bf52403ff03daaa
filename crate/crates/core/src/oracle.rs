//! Reference propagator on the full truncated Fock cube.
//!
//! Builds `a b c† + a† b† c` as a dense matrix from the ladder rules on the
//! cube `{0..=cutoff}³` and diagonalizes it as a whole, without using the
//! block structure. Only meant for cross-checking the block propagator on
//! small cutoffs.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::blocks::{fock_to_block, FockTriple};
use crate::error::{Error, Result};

pub const MAX_ORACLE_CUTOFF: usize = 8;

pub struct DenseOracle {
    cutoff: usize,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl DenseOracle {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff > MAX_ORACLE_CUTOFF {
            return Err(Error::OracleTooLarge(cutoff));
        }
        let side = cutoff + 1;
        let dim = side * side * side;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for n_a in 1..side {
            for n_b in 1..side {
                for n_c in 0..cutoff {
                    // a b c† |n_a, n_b, n_c> = sqrt(n_a n_b (n_c+1)) |n_a-1, n_b-1, n_c+1>
                    let from = Self::index_in(side, n_a, n_b, n_c);
                    let to = Self::index_in(side, n_a - 1, n_b - 1, n_c + 1);
                    let elem = ((n_a * n_b * (n_c + 1)) as f64).sqrt();
                    h[(to, from)] += elem;
                    h[(from, to)] += elem;
                }
            }
        }
        Ok(Self { cutoff, eigen: SymmetricEigen::new(h) })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(3)
    }

    fn index_in(side: usize, n_a: usize, n_b: usize, n_c: usize) -> usize {
        (n_a * side + n_b) * side + n_c
    }

    pub fn index(&self, t: FockTriple) -> usize {
        Self::index_in(self.cutoff + 1, t.n_a, t.n_b, t.n_c)
    }

    pub fn triple(&self, index: usize) -> FockTriple {
        let side = self.cutoff + 1;
        FockTriple::new(index / (side * side), (index / side) % side, index % side)
    }

    /// Rejects amplitudes whose invariant block is not contained in the cube,
    /// since the cube boundary would then truncate the dynamics.
    fn check_headroom(&self, amps: &[C64]) -> Result<()> {
        if amps.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "expected {} cube amplitudes, got {}",
                self.dim(),
                amps.len()
            )));
        }
        for (i, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (b, _) = fock_to_block(self.triple(i));
            if b.k() > self.cutoff || b.s() - b.k() > self.cutoff {
                return Err(Error::InvalidInput(format!(
                    "block {b} of {:?} leaves the cube of cutoff {}",
                    self.triple(i),
                    self.cutoff
                )));
            }
        }
        Ok(())
    }

    /// `V exp(-iτΛ) Vᵀ ψ` with the dense eigendecomposition.
    pub fn evolve(&self, amps: &[C64], tau: f64) -> Result<Vec<C64>> {
        self.check_headroom(amps)?;
        let v = &self.eigen.eigenvectors;
        let dim = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            let col = v.column(j);
            let proj: C64 = col.iter().zip(amps).map(|(&x, a)| a * x).sum();
            if proj.norm_sqr() == 0.0 {
                continue;
            }
            let w = proj * C64::from_polar(1.0, -tau * self.eigen.eigenvalues[j]);
            for (o, &x) in out.iter_mut().zip(col.iter()) {
                *o += w * x;
            }
        }
        Ok(out)
    }
}

/// One-shot dense propagation; see [`DenseOracle`] to reuse the
/// diagonalization across calls.
pub fn dense_oracle_evolve(amps: &[C64], tau: f64, cutoff: usize) -> Result<Vec<C64>> {
    DenseOracle::new(cutoff)?.evolve(amps, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_large_cutoff() {
        assert!(matches!(DenseOracle::new(9), Err(Error::OracleTooLarge(9))));
    }

    #[test]
    fn single_pair_matches_closed_form() {
        let oracle = DenseOracle::new(3).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); oracle.dim()];
        psi[oracle.index(FockTriple::new(1, 1, 0))] = C64::new(1.0, 0.0);
        let tau: f64 = 0.3;
        let out = oracle.evolve(&psi, tau).unwrap();
        let a = out[oracle.index(FockTriple::new(1, 1, 0))];
        let b = out[oracle.index(FockTriple::new(0, 0, 1))];
        assert!((a - C64::new(tau.cos(), 0.0)).norm() < 1e-12);
        assert!((b - C64::new(0.0, -tau.sin())).norm() < 1e-12);
    }

    #[test]
    fn vacuum_is_stationary() {
        let oracle = DenseOracle::new(2).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); oracle.dim()];
        psi[0] = C64::new(1.0, 0.0);
        let out = oracle.evolve(&psi, 1.7).unwrap();
        assert!((out[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_states_are_rejected() {
        let oracle = DenseOracle::new(3).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); oracle.dim()];
        // |3,3,1> sits in block (8, 4), which reaches n_a = 4.
        psi[oracle.index(FockTriple::new(3, 3, 1))] = C64::new(1.0, 0.0);
        assert!(oracle.evolve(&psi, 0.1).is_err());
    }
}
