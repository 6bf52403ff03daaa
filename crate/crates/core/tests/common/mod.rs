// Shared helpers for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use triwave::{FockTriple, ThreeModeState, C64};

/// Every triple with `n_a + n_b + 2 n_c <= max_s`.
pub fn triples_up_to(max_s: usize) -> Vec<FockTriple> {
    let mut out = Vec::new();
    for n_c in 0..=max_s / 2 {
        for n_a in 0..=max_s - 2 * n_c {
            for n_b in 0..=max_s - 2 * n_c - n_a {
                out.push(FockTriple::new(n_a, n_b, n_c));
            }
        }
    }
    out
}

/// Normalized state with random complex amplitudes on a random subset of the
/// triples with `s <= max_s`.
pub fn random_state(rng: &mut ChaCha8Rng, max_s: usize) -> ThreeModeState {
    let mut amps = Vec::new();
    for t in triples_up_to(max_s) {
        if rng.gen_bool(0.6) {
            amps.push((t, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    let state = ThreeModeState::from_fock_amplitudes(amps, 0.0);
    if state.norm_sqr() == 0.0 {
        return ThreeModeState::fock(FockTriple::new(1, 1, 0));
    }
    state.normalized()
}

/// Largest amplitude difference over the union of both supports.
pub fn max_amplitude_diff(x: &ThreeModeState, y: &ThreeModeState) -> f64 {
    x.iter_fock()
        .map(|(t, a)| (a - y.amplitude(t)).norm())
        .chain(y.iter_fock().map(|(t, a)| (a - x.amplitude(t)).norm()))
        .fold(0.0, f64::max)
}

/// `⟨n_a + n_c⟩`, `⟨n_a + n_b + 2 n_c⟩`, `⟨n_a − n_b⟩`.
pub fn conserved(state: &ThreeModeState) -> [f64; 3] {
    [
        state.expect_diagonal(|t| (t.n_a + t.n_c) as f64),
        state.expect_diagonal(|t| (t.n_a + t.n_b + 2 * t.n_c) as f64),
        state.expect_diagonal(|t| t.n_a as f64 - t.n_b as f64),
    ]
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}
