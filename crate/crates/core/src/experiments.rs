//! The numerical studies of the two-stage scheme: down-conversion of a
//! coherent pump, up-conversion of a twin-beam, the optimized interaction
//! time versus input energy, and the chained pipeline.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{evolve, ThreeModeState};
use crate::metrics::{
    conversion_rate_down, conversion_rate_up, matched_pcs_overlap, mean_photon, overlap_with_product,
    purity, reduce_mode_c, summarize_mode_c, MatchedPcs, Mode, ModeBra,
    PairBra, ReducedDensityMatrix, DEFAULT_PHASE_GRID,
};
use crate::blocks::FockTriple;
use crate::optimize::{fit_power_law, golden_section_max, PowerLawFit};
use crate::states::{
    make_coherent_pump, make_twin_beam, predicted_twin_beam_param, twin_beam_modulus_for_energy, DEFAULT_EPS,
};

/// One point of an interaction-time sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub tau: f64,
    pub overlap: f64,
    pub eta: f64,
    pub purity: Option<f64>,
    pub delta_phi: Option<f64>,
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    /// Reference parameter the overlap was taken against: the predicted χ in
    /// stage 1, the matched λ in stage 2.
    pub reference: C64,
}

impl SweepRecord {
    pub fn in_range(&self, tol: f64) -> bool {
        let unit = |v: f64| (-tol..=1.0 + tol).contains(&v);
        unit(self.overlap)
            && unit(self.eta)
            && self.purity.is_none_or(|p| p > 0.0 && p <= 1.0 + tol)
            && self.delta_phi.is_none_or(|d| d > 0.0)
    }
}

/// Interaction-time search settings for the stage-2 optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSearch {
    pub tau_max: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
}

impl Default for TauSearch {
    fn default() -> Self {
        Self { tau_max: 3.0, coarse_points: 64, tolerance: 1e-5 }
    }
}

impl TauSearch {
    /// `τ_i = i·τ_max/points` for `i = 1..=points`.
    pub fn coarse_grid(&self) -> Vec<f64> {
        (1..=self.coarse_points).map(|i| self.tau_max * i as f64 / self.coarse_points as f64).collect()
    }
}

/// Numerical settings shared by the experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Tail probability discarded when truncating input states.
    pub eps: f64,
    /// Minimum number of phases scanned when locating the phase peak.
    pub phase_grid: usize,
    pub search: TauSearch,
}

impl Default for Settings {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS, phase_grid: DEFAULT_PHASE_GRID, search: TauSearch::default() }
    }
}

impl Settings {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}

fn check_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidInput("empty tau grid".into()));
    }
    if tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("tau grid must be finite and non-negative".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("tau grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Twin-beam amplitudes `sqrt(1-|χ|²) χ^j` for `j = 0..=max_pairs`.
fn twin_beam_bra(chi: C64, max_pairs: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(max_pairs + 1);
    let mut amp = C64::new((1.0 - chi.norm_sqr()).max(0.0).sqrt(), 0.0);
    for _ in 0..=max_pairs {
        v.push(amp);
        amp *= chi;
    }
    v
}

fn stage1_record(pump: &ThreeModeState, alpha: C64, pump_energy: f64, tau: f64) -> Result<SweepRecord> {
    let out = evolve(pump, tau);
    let chi = predicted_twin_beam_param(alpha, tau);
    let bra = PairBra::Diagonal(twin_beam_bra(chi, out.max_occupation()));
    let overlap = overlap_with_product(&out, &bra, &ModeBra::Traced);
    let eta = conversion_rate_down(&out, pump_energy)?;
    // For a pure three-mode state the (a,b) marginal and mode c share their
    // spectrum, so the purity of either is Tr ρ_c².
    let rho = reduce_mode_c(&out, None)?;
    Ok(SweepRecord {
        tau,
        overlap,
        eta,
        purity: Some(purity(&rho)),
        delta_phi: None,
        n_a: mean_photon(&out, Mode::A),
        n_b: mean_photon(&out, Mode::B),
        n_c: mean_photon(&out, Mode::C),
        reference: chi,
    })
}

/// Down-conversion of the coherent pump `|0,0,α>`: overlap with the
/// twin-beam predicted by the parametric approximation, and η.
pub fn stage1_sweep(pump_alpha: C64, tau_grid: &[f64], eps: f64) -> Result<Vec<SweepRecord>> {
    check_tau_grid(tau_grid)?;
    if pump_alpha.norm_sqr() == 0.0 {
        return Err(invalid("pump_alpha", "pump must carry photons"));
    }
    let pump = make_coherent_pump(pump_alpha, eps)?;
    let energy = mean_photon(&pump, Mode::C);
    tau_grid.par_iter().map(|&tau| stage1_record(&pump, pump_alpha, energy, tau)).collect()
}

/// Interaction time maximizing the down-conversion rate, found on the
/// coarse grid of `search` and refined by golden section.
pub fn stage1_max_conversion(pump_alpha: C64, eps: f64, search: &TauSearch) -> Result<(f64, f64)> {
    if pump_alpha.norm_sqr() == 0.0 {
        return Err(invalid("pump_alpha", "pump must carry photons"));
    }
    let pump = make_coherent_pump(pump_alpha, eps)?;
    let energy = mean_photon(&pump, Mode::C);
    let eta = |tau: f64| conversion_rate_down(&evolve(&pump, tau), energy).expect("energy > 0");
    let grid = search.coarse_grid();
    let values: Vec<f64> = grid.par_iter().map(|&t| eta(t)).collect();
    let best = argmax_first(&values, 0);
    let (tau, value) = refine(&eta, &grid, &values, best, search.tolerance);
    Ok((tau, value))
}

fn argmax_first(values: &[f64], from: usize) -> usize {
    let mut best = from;
    for (i, v) in values.iter().enumerate().skip(from) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Golden-section refinement around grid point `best`, keeping the grid
/// value if the refinement does not improve on it.
fn refine(f: &impl Fn(f64) -> f64, grid: &[f64], values: &[f64], best: usize, tol: f64) -> (f64, f64) {
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (tau, value) = golden_section_max(f, lo, hi, tol);
    if value > values[best] {
        (tau, value)
    } else {
        (grid[best], values[best])
    }
}

fn stage2_record(state_in: &ThreeModeState, n_in: f64, tau: f64, phase_grid: usize) -> Result<SweepRecord> {
    let out = evolve(state_in, tau);
    let MatchedPcs { overlap, lambda, .. } = matched_pcs_overlap(&out);
    let summary = summarize_mode_c(&out, phase_grid)?;
    Ok(SweepRecord {
        tau,
        overlap,
        eta: conversion_rate_up(&out, n_in)?,
        purity: Some(summary.purity),
        delta_phi: Some(summary.delta_phi),
        n_a: mean_photon(&out, Mode::A),
        n_b: mean_photon(&out, Mode::B),
        n_c: mean_photon(&out, Mode::C),
        reference: lambda,
    })
}

fn twin_beam_input(chi: C64, eps: f64) -> Result<(ThreeModeState, f64)> {
    if chi.norm_sqr() == 0.0 {
        return Err(invalid("chi", "twin-beam must carry photons"));
    }
    let state = make_twin_beam(chi, eps)?;
    let n_in = mean_photon(&state, Mode::A) + mean_photon(&state, Mode::B);
    Ok((state, n_in))
}

/// Up-conversion of the twin-beam `|χ>`: overlap with the matched
/// phase-coherent state, η, purity and δφ of mode c.
pub fn stage2_sweep(chi: C64, tau_grid: &[f64], eps: f64) -> Result<Vec<SweepRecord>> {
    stage2_sweep_with(chi, tau_grid, &Settings::with_eps(eps))
}

pub fn stage2_sweep_with(chi: C64, tau_grid: &[f64], settings: &Settings) -> Result<Vec<SweepRecord>> {
    check_tau_grid(tau_grid)?;
    let (state, n_in) = twin_beam_input(chi, settings.eps)?;
    tau_grid.par_iter().map(|&tau| stage2_record(&state, n_in, tau, settings.phase_grid)).collect()
}

/// Result of the stage-2 interaction-time optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTau {
    pub tau_opt: f64,
    pub overlap_max: f64,
    pub eta_at_opt: f64,
    pub n_in: f64,
    pub n_out: f64,
    pub purity: f64,
    pub delta_phi: f64,
    pub lambda: C64,
}

/// Index of the first interior local minimum of `values`, or 0 when the
/// sequence has none.
pub(crate) fn first_dip(values: &[f64]) -> usize {
    (1..values.len().saturating_sub(1))
        .find(|&i| values[i] <= values[i - 1] && values[i] < values[i + 1])
        .unwrap_or(0)
}

/// Maximizes the matched-PCS overlap of the up-converted twin-beam over the
/// interaction time.
///
/// At `τ → 0` mode c is nearly empty and matches a near-vacuum PCS, so the
/// overlap starts at 1 and first decreases. The optimum is the largest
/// overlap after that initial descent, located on the coarse grid and
/// refined by golden section.
pub fn find_optimal_tau(chi: C64, eps: f64) -> Result<OptimalTau> {
    find_optimal_tau_with(chi, &Settings::with_eps(eps))
}

pub fn find_optimal_tau_with(chi: C64, settings: &Settings) -> Result<OptimalTau> {
    let search = &settings.search;
    let (state, n_in) = twin_beam_input(chi, settings.eps)?;
    let objective = |tau: f64| matched_pcs_overlap(&evolve(&state, tau)).overlap;
    let mut grid = vec![0.0];
    grid.extend(search.coarse_grid());
    let values: Vec<f64> = grid.par_iter().map(|&t| objective(t)).collect();
    let best = argmax_first(&values, first_dip(&values));
    let (tau_opt, _) = refine(&objective, &grid, &values, best, search.tolerance);

    let record = stage2_record(&state, n_in, tau_opt, settings.phase_grid)?;
    Ok(OptimalTau {
        tau_opt,
        overlap_max: record.overlap,
        eta_at_opt: record.eta,
        n_in,
        n_out: record.n_c,
        purity: record.purity.unwrap_or(f64::NAN),
        delta_phi: record.delta_phi.unwrap_or(f64::NAN),
        lambda: record.reference,
    })
}

/// Optimized stage-2 figures of merit over a list of input energies, with
/// power-law fits of `τ_opt` and `δφ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub points: Vec<OptimalTau>,
    pub tau_vs_n_in: PowerLawFit,
    pub tau_vs_n_out: PowerLawFit,
    pub delta_phi_vs_n_out: PowerLawFit,
}

pub fn scaling_study(n_in_list: &[f64], eps: f64) -> Result<ScalingStudy> {
    scaling_study_with(n_in_list, &Settings::with_eps(eps))
}

pub fn scaling_study_with(n_in_list: &[f64], settings: &Settings) -> Result<ScalingStudy> {
    if let Some(bad) = n_in_list.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(invalid("n_in", format!("{bad}: energies must be positive")));
    }
    // Largest energies first: their blocks contain all smaller ones, so the
    // cache is filled once up front.
    let mut order: Vec<usize> = (0..n_in_list.len()).collect();
    order.sort_by(|&a, &b| n_in_list[b].total_cmp(&n_in_list[a]));
    let mut points = vec![None; n_in_list.len()];
    for i in order {
        let chi = C64::new(twin_beam_modulus_for_energy(n_in_list[i]), 0.0);
        points[i] = Some(find_optimal_tau_with(chi, settings)?);
    }
    let points: Vec<OptimalTau> = points.into_iter().map(|p| p.expect("every point computed")).collect();

    let n_in: Vec<f64> = points.iter().map(|p| p.n_in).collect();
    let n_out: Vec<f64> = points.iter().map(|p| p.n_out).collect();
    let tau: Vec<f64> = points.iter().map(|p| p.tau_opt).collect();
    let dphi: Vec<f64> = points.iter().map(|p| p.delta_phi).collect();
    Ok(ScalingStudy {
        tau_vs_n_in: fit_power_law(&n_in, &tau)?,
        tau_vs_n_out: fit_power_law(&n_out, &tau)?,
        delta_phi_vs_n_out: fit_power_law(&n_out, &dphi)?,
        points,
    })
}

/// Scaled time after which the parametric approximation predicts a
/// twin-beam of `n_in` photons from a pump of amplitude `|alpha|`.
pub fn stage1_time_for_energy(alpha: C64, n_in: f64) -> f64 {
    twin_beam_modulus_for_energy(n_in).atanh() / alpha.norm()
}

/// The full scheme: down-convert `|0,0,α>` for `tau1`, then send the
/// exact (non-ideal) twin-beam into a second crystal with mode c in vacuum
/// for `tau2`, and return the output state of mode c.
///
/// The stage-1 pump mode is traced out by expanding over its Fock basis:
/// each pump occupation leaves an unnormalized conditional state on (a, b),
/// which is propagated separately and contributes its reduced state.
pub fn full_pipeline(pump_alpha: C64, tau1: f64, tau2: f64, eps: f64) -> Result<ReducedDensityMatrix> {
    if !(tau1 >= 0.0 && tau2 >= 0.0) {
        return Err(invalid("tau", "interaction times must be non-negative"));
    }
    let stage1 = evolve(&make_coherent_pump(pump_alpha, eps)?, tau1);

    let max_pump = stage1.max_n_c();
    let mut conditional: Vec<Vec<(FockTriple, C64)>> = vec![Vec::new(); max_pump + 1];
    for (t, amp) in stage1.iter_fock() {
        if amp.norm_sqr() > 0.0 {
            conditional[t.n_c].push((FockTriple::new(t.n_a, t.n_b, 0), amp));
        }
    }
    let pieces: Vec<ReducedDensityMatrix> = conditional
        .into_par_iter()
        .filter(|amps| !amps.is_empty())
        .map(|amps| {
            let state = ThreeModeState::from_fock_amplitudes(amps, stage1.trunc_error);
            reduce_mode_c(&evolve(&state, tau2), None)
        })
        .collect::<Result<_>>()?;

    let mut rho = ReducedDensityMatrix::from_matrix(1, vec![C64::new(0.0, 0.0)]);
    for piece in &pieces {
        rho.accumulate(piece, 1.0);
    }
    Ok(rho)
}

/// Figures of merit of a mode-c output given as a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputSummary {
    pub overlap: f64,
    pub lambda: C64,
    pub n_c: f64,
    pub purity: f64,
    pub delta_phi: f64,
}

pub fn summarize_output(rho: &ReducedDensityMatrix, phase_grid: usize) -> OutputSummary {
    let matched = crate::metrics::matched_pcs_overlap_density(rho);
    OutputSummary {
        overlap: matched.overlap,
        lambda: matched.lambda,
        n_c: rho.mean_photon(),
        purity: purity(rho),
        delta_phi: crate::metrics::reciprocal_peak_likelihood_with_grid(rho, phase_grid),
    }
}
