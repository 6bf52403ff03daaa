//! Block-sparse three-mode pure states and their exact unitary evolution.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::blocks::{block_to_fock, fock_to_block, BlockCache, BlockIndex, FockTriple, Interaction};

/// Pure state of modes (a, b, c) stored as one amplitude vector per
/// invariant block. Local index `n` of block `(s, k)` is `|k-n, s-k-n, n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeModeState {
    blocks: BTreeMap<BlockIndex, Vec<C64>>,
    /// Probability discarded when the state was truncated to a finite Fock
    /// support. Evolution never changes it.
    pub trunc_error: f64,
}

impl ThreeModeState {
    pub fn vacuum() -> Self {
        Self::fock(FockTriple::new(0, 0, 0))
    }

    pub fn fock(t: FockTriple) -> Self {
        Self::from_fock_amplitudes([(t, C64::new(1.0, 0.0))], 0.0)
    }

    /// Collects Fock amplitudes into blocks without renormalizing. Repeated
    /// triples are summed.
    pub fn from_fock_amplitudes(
        amps: impl IntoIterator<Item = (FockTriple, C64)>,
        trunc_error: f64,
    ) -> Self {
        let mut blocks: BTreeMap<BlockIndex, Vec<C64>> = BTreeMap::new();
        for (t, amp) in amps {
            let (b, n) = fock_to_block(t);
            blocks.entry(b).or_insert_with(|| vec![C64::new(0.0, 0.0); b.dim()])[n] += amp;
        }
        Self { blocks, trunc_error }
    }

    /// Builds a state from block vectors. Panics if a vector length does not
    /// match its block dimension.
    pub fn from_blocks(blocks: BTreeMap<BlockIndex, Vec<C64>>, trunc_error: f64) -> Self {
        for (b, v) in &blocks {
            assert_eq!(v.len(), b.dim(), "block {b} has wrong vector length");
        }
        Self { blocks, trunc_error }
    }

    pub fn blocks(&self) -> &BTreeMap<BlockIndex, Vec<C64>> {
        &self.blocks
    }

    pub fn block(&self, b: BlockIndex) -> Option<&[C64]> {
        self.blocks.get(&b).map(Vec::as_slice)
    }

    pub fn amplitude(&self, t: FockTriple) -> C64 {
        let (b, n) = fock_to_block(t);
        self.blocks.get(&b).map_or(C64::new(0.0, 0.0), |v| v[n])
    }

    /// All stored amplitudes with their Fock labels, in block order.
    pub fn iter_fock(&self) -> impl Iterator<Item = (FockTriple, C64)> + '_ {
        self.blocks.iter().flat_map(|(&b, v)| {
            v.iter().enumerate().map(move |(n, &amp)| {
                (block_to_fock(b, n).expect("stored vector matches block"), amp)
            })
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().flatten().map(C64::norm_sqr).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for amp in self.blocks.values_mut().flatten() {
                *amp /= norm;
            }
        }
        self
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        for amp in self.blocks.values_mut().flatten() {
            *amp *= factor;
        }
        self
    }

    /// Expectation of an observable diagonal in the Fock basis.
    pub fn expect_diagonal(&self, f: impl Fn(FockTriple) -> f64) -> f64 {
        self.iter_fock().map(|(t, amp)| amp.norm_sqr() * f(t)).sum()
    }

    /// Largest occupation of mode c over the block support.
    pub fn max_n_c(&self) -> usize {
        self.blocks.keys().map(|b| b.dim() - 1).max().unwrap_or(0)
    }

    /// Largest `max(n_a, n_b, n_c)` reachable inside the stored blocks.
    pub fn max_occupation(&self) -> usize {
        self.blocks.keys().map(|b| b.k().max(b.s() - b.k())).max().unwrap_or(0)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ThreeModeState) -> C64 {
        self.blocks
            .iter()
            .filter_map(|(b, v)| other.blocks.get(b).map(|w| (v, w)))
            .map(|(v, w)| v.iter().zip(w).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum()
    }
}

/// Applies `V exp(-iτΛ) Vᵀ` of the cached block to `v`.
fn propagate_block(cache: &BlockCache, interaction: Interaction, b: BlockIndex, v: &[C64], tau: f64) -> Vec<C64> {
    let d = v.len();
    if d == 1 {
        return v.to_vec();
    }
    let h = cache.get(interaction, b);
    let eig = h.eigen();
    let mut out = vec![C64::new(0.0, 0.0); d];
    for (j, &lambda) in eig.values.iter().enumerate() {
        let row = eig.vector(j);
        let proj: C64 = row.iter().zip(v).map(|(&x, y)| y * x).sum();
        let w = proj * C64::from_polar(1.0, -tau * lambda);
        for (o, &x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
    }
    out
}

/// Evolves `state` for scaled time `tau` under the chosen interaction, block
/// by block, using the given eigendecomposition cache.
pub fn evolve_with(
    state: &ThreeModeState,
    tau: f64,
    interaction: Interaction,
    cache: &BlockCache,
) -> ThreeModeState {
    if tau == 0.0 {
        return state.clone();
    }
    let entries: Vec<(&BlockIndex, &Vec<C64>)> = state.blocks.iter().collect();
    let blocks: BTreeMap<BlockIndex, Vec<C64>> = entries
        .into_par_iter()
        .map(|(&b, v)| (b, propagate_block(cache, interaction, b, v, tau)))
        .collect();
    ThreeModeState { blocks, trunc_error: state.trunc_error }
}

/// `exp(-iτH)|ψ>` for the three-wave mixing Hamiltonian.
pub fn evolve(state: &ThreeModeState, tau: f64) -> ThreeModeState {
    evolve_with(state, tau, Interaction::Trilinear, BlockCache::global())
}

/// `exp(-iτH_r)|ψ>` for the ideal photon-number recombination Hamiltonian.
pub fn evolve_pnd(state: &ThreeModeState, tau: f64) -> ThreeModeState {
    evolve_with(state, tau, Interaction::Recombination, BlockCache::global())
}
