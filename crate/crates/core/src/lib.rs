//! Exact simulation of non-degenerate three-wave mixing in the Fock basis.
//!
//! The Hamiltonian `a b c† + a† b† c` conserves `n_a + n_b + 2 n_c` and
//! `n_a + n_c`, so the three-mode Fock space splits into small invariant
//! blocks on which the evolution is computed exactly from cached
//! eigendecompositions. On top of that the crate provides the input states
//! and figures of merit needed to study phase-coherent state synthesis by
//! down-conversion followed by twin-beam up-conversion.

pub mod blocks;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod states;
pub mod tridiag;

pub use blocks::{
    block_dimension, block_to_fock, build_block_hamiltonian, build_pnd_block_hamiltonian, fock_to_block,
    BlockCache, BlockHamiltonian, BlockIndex, FockTriple, Interaction,
};
pub use error::{Error, Result};
pub use evolution::{evolve, evolve_pnd, evolve_with, ThreeModeState};
pub use experiments::{
    find_optimal_tau, full_pipeline, scaling_study, stage1_sweep, stage2_sweep, OptimalTau, ScalingStudy,
    SweepRecord,
};
pub use metrics::{
    conversion_rate_down, conversion_rate_up, matched_pcs_overlap, mean_photon, overlap_with_product,
    phase_distribution, purity, reciprocal_peak_likelihood, reduce_mode_c, Mode, ModeBra, PairBra,
    ReducedDensityMatrix,
};
pub use optimize::{fit_power_law, PowerLawFit};
pub use oracle::{dense_oracle_evolve, DenseOracle};
pub use states::{make_coherent_pump, make_pcs_amplitudes, make_twin_beam, predicted_twin_beam_param};

pub use num_complex::Complex64 as C64;
