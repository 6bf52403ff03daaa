//! Invariant subspaces of the trilinear Hamiltonian `a b c† + a† b† c`.
//!
//! The operators `n_a + n_b + 2 n_c` and `n_a + n_c` commute with the
//! Hamiltonian. A block is labelled by their eigenvalues `(s, k)` and is
//! spanned by `|k-n, s-k-n, n>` for `n = 0..=min(k, s-k)`, ordered by the
//! photon number `n` of mode c. In that ordering the block Hamiltonian is a
//! real symmetric tridiagonal matrix with zero diagonal.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::tridiag::{symmetric_tridiagonal_eigen, TridiagEigen};

/// Occupation numbers of modes a, b and c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockTriple {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl FockTriple {
    pub const fn new(n_a: usize, n_b: usize, n_c: usize) -> Self {
        Self { n_a, n_b, n_c }
    }
}

/// Label `(s, k)` of an invariant subspace, with `s = n_a + n_b + 2 n_c`
/// and `k = n_a + n_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    s: usize,
    k: usize,
}

impl BlockIndex {
    pub fn new(s: usize, k: usize) -> Result<Self> {
        if k > s {
            return Err(Error::InvalidBlockIndex { s, k });
        }
        Ok(Self { s, k })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k.min(self.s - self.k) + 1
    }
}

impl std::fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(s={}, k={})", self.s, self.k)
    }
}

pub fn block_dimension(s: usize, k: usize) -> Result<usize> {
    Ok(BlockIndex::new(s, k)?.dim())
}

pub fn fock_to_block(t: FockTriple) -> (BlockIndex, usize) {
    let index = BlockIndex { s: t.n_a + t.n_b + 2 * t.n_c, k: t.n_a + t.n_c };
    (index, t.n_c)
}

pub fn block_to_fock(b: BlockIndex, n: usize) -> Result<FockTriple> {
    let dim = b.dim();
    if n >= dim {
        return Err(Error::InvalidLocalIndex { s: b.s, k: b.k, n, dim });
    }
    Ok(FockTriple::new(b.k - n, b.s - b.k - n, n))
}

/// Which interaction generates the block matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interaction {
    /// Three-wave mixing `a b c† + a† b† c`.
    Trilinear,
    /// Ideal photon-number recombination
    /// `a† b† (b†b+1)^{-1/2} c + c† (b†b+1)^{-1/2} a b`.
    Recombination,
}

impl Interaction {
    /// Matrix element between local states `n` and `n + 1` of block `b`.
    pub fn coupling(self, b: BlockIndex, n: usize) -> f64 {
        let (s, k) = (b.s as f64, b.k as f64);
        let n = n as f64;
        match self {
            Interaction::Trilinear => ((k - n) * (s - k - n) * (n + 1.0)).sqrt(),
            Interaction::Recombination => ((k - n) * (n + 1.0)).sqrt(),
        }
    }
}

/// Hamiltonian restricted to one invariant subspace, with its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct BlockHamiltonian {
    pub index: BlockIndex,
    pub interaction: Interaction,
    /// `offdiag[n]` couples local states `n` and `n + 1`; the diagonal is zero.
    pub offdiag: Vec<f64>,
    eigen: TridiagEigen,
}

impl BlockHamiltonian {
    pub fn new(index: BlockIndex, interaction: Interaction) -> Self {
        let dim = index.dim();
        let offdiag: Vec<f64> = (0..dim - 1).map(|n| interaction.coupling(index, n)).collect();
        // The couplings are bounded by s^{3/2}; QL converges on such matrices
        // well inside the sweep limit.
        let eigen = symmetric_tridiagonal_eigen(&vec![0.0; dim], &offdiag)
            .unwrap_or_else(|e| panic!("block {index}: {e}"));
        Self { index, interaction, offdiag, eigen }
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &TridiagEigen {
        &self.eigen
    }

    /// Dense copy of the eigenvector matrix, `v[row][j]` being component
    /// `row` of eigenvector `j`.
    pub fn eigenvector_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|r| (0..d).map(|j| self.eigen.component(r, j)).collect()).collect()
    }

    /// `max |VᵀV - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let dot: f64 =
                    self.eigen.vector(i).iter().zip(self.eigen.vector(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max |V diag(λ) Vᵀ - H|` over all entries.
    pub fn reconstruction_residual(&self) -> f64 {
        let d = self.dim();
        let lambda = self.eigenvalues();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                let val: f64 = (0..d)
                    .map(|j| self.eigen.component(r, j) * lambda[j] * self.eigen.component(c, j))
                    .sum();
                let target = if c == r + 1 { self.offdiag[r] } else { 0.0 };
                worst = worst.max((val - target).abs());
            }
        }
        worst
    }
}

pub fn build_block_hamiltonian(b: BlockIndex) -> BlockHamiltonian {
    BlockHamiltonian::new(b, Interaction::Trilinear)
}

pub fn build_pnd_block_hamiltonian(b: BlockIndex) -> BlockHamiltonian {
    BlockHamiltonian::new(b, Interaction::Recombination)
}

/// Shared, lazily filled store of block eigendecompositions.
///
/// Concurrent readers never observe partially built entries. Two threads
/// missing the same key may both build it; the first insert wins.
#[derive(Debug, Default)]
pub struct BlockCache {
    entries: RwLock<HashMap<(Interaction, BlockIndex), Arc<BlockHamiltonian>>>,
}

impl BlockCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by the evolution routines.
    pub fn global() -> &'static BlockCache {
        static CACHE: OnceLock<BlockCache> = OnceLock::new();
        CACHE.get_or_init(BlockCache::new)
    }

    pub fn get(&self, interaction: Interaction, b: BlockIndex) -> Arc<BlockHamiltonian> {
        if let Some(h) = self.entries.read().expect("block cache poisoned").get(&(interaction, b)) {
            return Arc::clone(h);
        }
        let built = Arc::new(BlockHamiltonian::new(b, interaction));
        let mut map = self.entries.write().expect("block cache poisoned");
        Arc::clone(map.entry((interaction, b)).or_insert(built))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("block cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
