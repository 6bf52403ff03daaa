//! Figures of merit: photon numbers, overlaps with reference states,
//! conversion rates, the reduced state of mode c and its canonical phase
//! distribution.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64 as C64;

use crate::blocks::FockTriple;
use crate::error::{invalid, Error, Result};
use crate::evolution::ThreeModeState;
use crate::states::pcs_modulus_for_mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
    C,
}

impl Mode {
    fn occupation(self, t: FockTriple) -> usize {
        match self {
            Mode::A => t.n_a,
            Mode::B => t.n_b,
            Mode::C => t.n_c,
        }
    }
}

pub fn mean_photon(state: &ThreeModeState, mode: Mode) -> f64 {
    state.expect_diagonal(|t| mode.occupation(t) as f64)
}

/// `η = ½ (⟨n_a⟩ + ⟨n_b⟩) / E_pump` for down-conversion of a pump carrying
/// `pump_energy` photons.
pub fn conversion_rate_down(state_out: &ThreeModeState, pump_energy: f64) -> Result<f64> {
    if !(pump_energy > 0.0) {
        return Err(invalid("pump_energy", format!("{pump_energy} must be > 0")));
    }
    Ok(0.5 * (mean_photon(state_out, Mode::A) + mean_photon(state_out, Mode::B)) / pump_energy)
}

/// `η = 2 ⟨n_c⟩ / N_in` for up-conversion of a twin-beam carrying
/// `twin_beam_energy` photons in modes a and b.
pub fn conversion_rate_up(state_out: &ThreeModeState, twin_beam_energy: f64) -> Result<f64> {
    if !(twin_beam_energy > 0.0) {
        return Err(invalid("twin_beam_energy", format!("{twin_beam_energy} must be > 0")));
    }
    Ok(2.0 * mean_photon(state_out, Mode::C) / twin_beam_energy)
}

/// Reference on a single mode: either a pure state given by its Fock
/// amplitudes, or traced out.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeBra {
    Traced,
    State(Vec<C64>),
}

impl ModeBra {
    pub fn fock(n: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); n + 1];
        v[n] = C64::new(1.0, 0.0);
        ModeBra::State(v)
    }

    fn weight(&self, n: usize) -> Option<C64> {
        match self {
            ModeBra::Traced => None,
            ModeBra::State(v) => Some(v.get(n).map_or(C64::new(0.0, 0.0), |c| c.conj())),
        }
    }
}

/// Reference on the mode pair (a, b).
#[derive(Debug, Clone, PartialEq)]
pub enum PairBra {
    Product(ModeBra, ModeBra),
    /// Photon-number correlated state `Σ_j t_j |j, j>`, e.g. a twin-beam.
    Diagonal(Vec<C64>),
}

impl PairBra {
    pub fn traced() -> Self {
        PairBra::Product(ModeBra::Traced, ModeBra::Traced)
    }
}

/// `sqrt(Σ_traced |⟨ref ⊗ traced basis|ψ⟩|²)`, the overlap between the
/// reference on the kept modes and the reduced state of `state`, without
/// forming the reduced density matrix.
pub fn overlap_with_product(state: &ThreeModeState, ab: &PairBra, c: &ModeBra) -> f64 {
    let mut acc: BTreeMap<[usize; 3], C64> = BTreeMap::new();
    for (t, amp) in state.iter_fock() {
        let mut key = [usize::MAX; 3];
        let mut w = C64::new(1.0, 0.0);
        match ab {
            PairBra::Product(bra_a, bra_b) => {
                match bra_a.weight(t.n_a) {
                    Some(x) => w *= x,
                    None => key[0] = t.n_a,
                }
                match bra_b.weight(t.n_b) {
                    Some(x) => w *= x,
                    None => key[1] = t.n_b,
                }
            }
            PairBra::Diagonal(amps) => {
                if t.n_a != t.n_b {
                    continue;
                }
                w *= amps.get(t.n_a).map_or(C64::new(0.0, 0.0), |c| c.conj());
            }
        }
        match c.weight(t.n_c) {
            Some(x) => w *= x,
            None => key[2] = t.n_c,
        }
        if w.norm_sqr() == 0.0 {
            continue;
        }
        *acc.entry(key).or_insert(C64::new(0.0, 0.0)) += w * amp;
    }
    acc.values().map(C64::norm_sqr).sum::<f64>().sqrt().min(1.0)
}

/// Amplitudes of `state` grouped by the (n_a, n_b) occupations, each group a
/// dense vector over n_c starting at `offset`.
struct TracedGroups {
    groups: Vec<(usize, Vec<C64>)>,
}

impl TracedGroups {
    fn new(state: &ThreeModeState) -> Self {
        let mut map: BTreeMap<(usize, usize), Vec<(usize, C64)>> = BTreeMap::new();
        for (t, amp) in state.iter_fock() {
            map.entry((t.n_a, t.n_b)).or_default().push((t.n_c, amp));
        }
        let groups = map
            .into_values()
            .map(|entries| {
                let lo = entries.iter().map(|e| e.0).min().unwrap_or(0);
                let hi = entries.iter().map(|e| e.0).max().unwrap_or(0);
                let mut v = vec![C64::new(0.0, 0.0); hi - lo + 1];
                for (n, amp) in entries {
                    v[n - lo] += amp;
                }
                (lo, v)
            })
            .collect();
        Self { groups }
    }

    /// `K_d = Σ_n w_{n+d} w_n ρ_{n+d,n}` for `d = 0..dim`, where `ρ` is the
    /// reduced state of mode c.
    fn weighted_diagonals(&self, dim: usize, weight: impl Fn(usize) -> f64) -> Vec<C64> {
        let mut k = vec![C64::new(0.0, 0.0); dim];
        let mut g = Vec::new();
        for (lo, v) in &self.groups {
            g.clear();
            g.extend(v.iter().enumerate().map(|(i, a)| a * weight(lo + i)));
            for d in 0..g.len().min(dim) {
                let s: C64 = g[d..].iter().zip(&g).map(|(x, y)| x * y.conj()).sum();
                k[d] += s;
            }
        }
        k
    }
}

/// Single-mode density matrix of mode c in the Fock basis `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    dim: usize,
    /// Row-major, `data[n * dim + m] = ρ_{nm}`.
    data: Vec<C64>,
}

impl ReducedDensityMatrix {
    pub fn from_matrix(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    /// `|ψ><ψ|` for the given single-mode amplitudes, renormalized.
    pub fn from_pure(amps: &[C64]) -> Self {
        let norm: f64 = amps.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        let dim = amps.len();
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for n in 0..dim {
            for m in 0..dim {
                data[n * dim + m] = amps[n] * amps[m].conj() / (norm * norm);
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.data[n * self.dim + m]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.dim {
            for m in n..self.dim {
                worst = worst.max((self.get(n, m) - self.get(m, n).conj()).norm());
            }
        }
        worst
    }

    /// True when `ρ + tol·I` admits a Cholesky factorization, i.e. the
    /// smallest eigenvalue is at least `-tol`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let m = DMatrix::from_fn(self.dim, self.dim, |n, k| {
            let v = (self.get(n, k) + self.get(k, n).conj()) * 0.5;
            if n == k {
                v + tol
            } else {
                v
            }
        });
        Cholesky::new(m).is_some()
    }

    /// Hermitian, unit-trace and positive within the given tolerances.
    pub fn is_valid(&self, herm_tol: f64, trace_tol: f64, pos_tol: f64) -> bool {
        self.hermiticity_residual() <= herm_tol
            && (self.trace() - 1.0).abs() <= trace_tol
            && self.is_positive_semidefinite(pos_tol)
    }

    pub fn mean_photon(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// `D_d = Σ_n ρ_{n+d,n}` for `d = 0..dim`.
    pub fn coherence_diagonals(&self) -> Vec<C64> {
        (0..self.dim)
            .map(|d| (0..self.dim - d).map(|n| self.get(n + d, n)).sum())
            .collect()
    }

    /// Weighted sum of density matrices of equal or smaller dimension.
    pub fn accumulate(&mut self, other: &ReducedDensityMatrix, weight: f64) {
        if other.dim > self.dim {
            let mut grown = vec![C64::new(0.0, 0.0); other.dim * other.dim];
            for n in 0..self.dim {
                for m in 0..self.dim {
                    grown[n * other.dim + m] = self.get(n, m);
                }
            }
            self.dim = other.dim;
            self.data = grown;
        }
        for n in 0..other.dim {
            for m in 0..other.dim {
                self.data[n * self.dim + m] += other.get(n, m) * weight;
            }
        }
    }
}

/// Partial trace over modes a and b. `cutoff` defaults to the largest n_c
/// within the block support of `state`.
pub fn reduce_mode_c(state: &ThreeModeState, cutoff: Option<usize>) -> Result<ReducedDensityMatrix> {
    let support = state.iter_fock().filter(|(_, a)| a.norm_sqr() > 0.0).map(|(t, _)| t.n_c).max();
    let cutoff = match cutoff {
        Some(c) => {
            if let Some(needed) = support.filter(|&n| n > c) {
                return Err(Error::CutoffTooSmall { cutoff: c, needed });
            }
            c
        }
        None => state.max_n_c(),
    };
    let dim = cutoff + 1;
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for (lo, v) in TracedGroups::new(state).groups {
        for (i, x) in v.iter().enumerate() {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            let row = &mut data[(lo + i) * dim..(lo + i + 1) * dim];
            for (j, y) in v.iter().enumerate() {
                row[lo + j] += x * y.conj();
            }
        }
    }
    Ok(ReducedDensityMatrix { dim, data })
}

pub fn purity(rho: &ReducedDensityMatrix) -> f64 {
    rho.data.iter().map(C64::norm_sqr).sum()
}

/// Evaluates `(2π)⁻¹ [D_0 + 2 Re Σ_{d≥1} D_d e^{i d φ}]`.
fn phase_density(diagonals: &[C64], phi: f64) -> f64 {
    let step = C64::from_polar(1.0, phi);
    let mut rot = step;
    let mut sum = diagonals.first().map_or(0.0, |d| d.re);
    for d in diagonals.iter().skip(1) {
        sum += 2.0 * (d * rot).re;
        rot *= step;
    }
    sum / (2.0 * PI)
}

pub const MIN_PHASE_GRID: usize = 256;

/// Canonical phase distribution `p(φ_j)` on `φ_j = 2πj / grid_points`.
pub fn phase_distribution(rho: &ReducedDensityMatrix, grid_points: usize) -> Result<Vec<f64>> {
    if grid_points < MIN_PHASE_GRID {
        return Err(invalid("grid_points", format!("{grid_points} < {MIN_PHASE_GRID}")));
    }
    let diagonals = rho.coherence_diagonals();
    Ok(phase_grid(&diagonals, grid_points))
}

fn phase_grid(diagonals: &[C64], grid_points: usize) -> Vec<f64> {
    (0..grid_points)
        .map(|j| phase_density(diagonals, 2.0 * PI * j as f64 / grid_points as f64))
        .collect()
}

/// Location of the vertex of the parabola through `(-h, left)`, `(0, mid)`,
/// `(h, right)`, as an offset from the middle point.
fn parabolic_vertex_offset(left: f64, mid: f64, right: f64, h: f64) -> f64 {
    let denom = left - 2.0 * mid + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * h * (left - right) / denom).clamp(-h, h)
}

/// Maximizes a 2π-periodic function sampled on a uniform grid, refining the
/// best grid point by quadratic interpolation. Returns `(argmax, max)`.
fn refine_periodic_max(f: impl Fn(f64) -> f64, grid_points: usize) -> (f64, f64) {
    let h = 2.0 * PI / grid_points as f64;
    let values: Vec<f64> = (0..grid_points).map(|j| f(h * j as f64)).collect();
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    let left = values[(best + grid_points - 1) % grid_points];
    let right = values[(best + 1) % grid_points];
    let phi_grid = h * best as f64;
    let phi = phi_grid + parabolic_vertex_offset(left, values[best], right, h);
    let refined = f(phi);
    if refined > values[best] {
        (phi.rem_euclid(2.0 * PI), refined)
    } else {
        (phi_grid, values[best])
    }
}

pub const DEFAULT_PHASE_GRID: usize = 1024;

/// `δφ = 1 / max_φ p(φ)`.
pub fn reciprocal_peak_likelihood(rho: &ReducedDensityMatrix) -> f64 {
    reciprocal_peak_likelihood_with_grid(rho, DEFAULT_PHASE_GRID)
}

/// As [`reciprocal_peak_likelihood`], scanning at least `min_grid` phases
/// before the quadratic refinement.
pub fn reciprocal_peak_likelihood_with_grid(rho: &ReducedDensityMatrix, min_grid: usize) -> f64 {
    let diagonals = rho.coherence_diagonals();
    // The peak narrows like 1/dim; keep several grid points across it.
    let grid = (32 * diagonals.len()).max(min_grid).max(MIN_PHASE_GRID);
    let (_, peak) = refine_periodic_max(|phi| phase_density(&diagonals, phi), grid);
    1.0 / peak
}

/// Phase-coherent state matched to the mean photon number of mode c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPcs {
    pub overlap: f64,
    pub lambda: C64,
    /// False when mode c is empty and the phase of λ is meaningless.
    pub phase_defined: bool,
}

pub const PCS_PHASE_GRID: usize = 1024;

/// Overlap between the reduced state of mode c and the phase-coherent state
/// of equal mean photon number, maximized over the phase of λ.
pub fn matched_pcs_overlap(state: &ThreeModeState) -> MatchedPcs {
    let n_c = mean_photon(state, Mode::C);
    if !(n_c > 0.0) {
        let overlap = overlap_with_product(state, &PairBra::traced(), &ModeBra::fock(0));
        return MatchedPcs { overlap, lambda: C64::new(0.0, 0.0), phase_defined: false };
    }
    let r = pcs_modulus_for_mean(n_c);
    let norm = (1.0 - r * r).sqrt();
    let dim = state.max_n_c() + 1;
    let ln_r = r.ln();
    let weights: Vec<f64> = (0..dim).map(|n| norm * (n as f64 * ln_r).exp()).collect();
    let kernel = TracedGroups::new(state).weighted_diagonals(dim, |n| weights[n]);
    // ⟨λ|ρ|λ⟩ as a function of θ = arg λ is the phase density of the
    // weighted kernel evaluated at -θ.
    let f = |theta: f64| 2.0 * PI * phase_density(&kernel, -theta);
    let (theta, _) = refine_periodic_max(f, PCS_PHASE_GRID);
    let lambda = C64::from_polar(r, theta);
    let bra: Vec<C64> = weights.iter().enumerate().map(|(n, w)| C64::from_polar(*w, n as f64 * theta)).collect();
    let overlap = overlap_with_product(state, &PairBra::traced(), &ModeBra::State(bra));
    MatchedPcs { overlap, lambda, phase_defined: true }
}

/// Same as [`matched_pcs_overlap`] for a mode-c output given as a density
/// matrix, e.g. the mixed output of the chained pipeline.
pub fn matched_pcs_overlap_density(rho: &ReducedDensityMatrix) -> MatchedPcs {
    let n_c = rho.mean_photon();
    if !(n_c > 0.0) {
        let overlap = rho.get(0, 0).re.max(0.0).sqrt().min(1.0);
        return MatchedPcs { overlap, lambda: C64::new(0.0, 0.0), phase_defined: false };
    }
    let r = pcs_modulus_for_mean(n_c);
    let norm = (1.0 - r * r).sqrt();
    let ln_r = r.ln();
    let weights: Vec<f64> = (0..rho.dim).map(|n| norm * (n as f64 * ln_r).exp()).collect();
    let kernel: Vec<C64> = (0..rho.dim)
        .map(|d| (0..rho.dim - d).map(|n| rho.get(n + d, n) * weights[n + d] * weights[n]).sum())
        .collect();
    let f = |theta: f64| 2.0 * PI * phase_density(&kernel, -theta);
    let (theta, value) = refine_periodic_max(f, PCS_PHASE_GRID);
    MatchedPcs {
        overlap: value.max(0.0).sqrt().min(1.0),
        lambda: C64::from_polar(r, theta),
        phase_defined: true,
    }
}

/// Reduced state of mode c together with the quantities derived from it.
#[derive(Debug, Clone)]
pub struct ModeCSummary {
    pub purity: f64,
    pub delta_phi: f64,
    pub rho: ReducedDensityMatrix,
}

pub fn summarize_mode_c(state: &ThreeModeState, phase_grid: usize) -> Result<ModeCSummary> {
    let rho = reduce_mode_c(state, None)?;
    Ok(ModeCSummary {
        purity: purity(&rho),
        delta_phi: reciprocal_peak_likelihood_with_grid(&rho, phase_grid),
        rho,
    })
}
