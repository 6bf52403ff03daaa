//! Input states of the two-stage scheme and the reference states used to
//! score its output.

use num_complex::Complex64 as C64;

use crate::blocks::FockTriple;
use crate::error::{invalid, Result};
use crate::evolution::ThreeModeState;

/// Default tail probability discarded when truncating an input state.
pub const DEFAULT_EPS: f64 = 1e-10;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1e-4) {
        return Err(invalid("eps", format!("{eps} not in (0, 1e-4]")));
    }
    Ok(())
}

fn check_unit_disc(name: &'static str, z: C64) -> Result<()> {
    if !z.norm().is_finite() || z.norm() >= 1.0 {
        return Err(invalid(name, format!("|{name}| = {} must be < 1", z.norm())));
    }
    Ok(())
}

fn ln_factorial(n: usize) -> f64 {
    // Exact summation is fine for the few hundred terms needed here.
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent pump `|0,0,α>`: Poisson amplitudes on mode c, truncated at the
/// smallest cutoff whose tail probability falls below `eps`.
pub fn make_coherent_pump(alpha: C64, eps: f64) -> Result<ThreeModeState> {
    check_eps(eps)?;
    let n_mean = alpha.norm_sqr();
    if n_mean == 0.0 {
        return Ok(ThreeModeState::vacuum());
    }
    let ln_abs = alpha.norm().ln();
    let phase = alpha.arg();
    let mut amps = Vec::new();
    let mut kept = 0.0;
    let mut ln_fact = 0.0;
    let mut n = 0usize;
    loop {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let ln_mod = -0.5 * n_mean + n as f64 * ln_abs - 0.5 * ln_fact;
        let prob = (2.0 * ln_mod).exp();
        kept += prob;
        amps.push((FockTriple::new(0, 0, n), C64::from_polar(ln_mod.exp(), n as f64 * phase)));
        // Past the mode the remaining Poisson tail is bounded by 1 - kept.
        if n as f64 > n_mean && 1.0 - kept < eps {
            break;
        }
        n += 1;
    }
    let tail = (1.0 - kept).max(0.0);
    Ok(ThreeModeState::from_fock_amplitudes(amps, tail).normalized())
}

/// Twin-beam `sqrt(1-|χ|²) Σ χⁿ |n,n,0>`, truncated once the geometric tail
/// `|χ|^{2(N+1)}` drops below `eps`.
pub fn make_twin_beam(chi: C64, eps: f64) -> Result<ThreeModeState> {
    check_unit_disc("chi", chi)?;
    check_eps(eps)?;
    let amps = geometric_amplitudes(chi, eps);
    let tail = chi.norm_sqr().powi(amps.len() as i32);
    Ok(ThreeModeState::from_fock_amplitudes(
        amps.into_iter().enumerate().map(|(n, c)| (FockTriple::new(n, n, 0), c)),
        tail,
    )
    .normalized())
}

/// `sqrt(1-|z|²) zⁿ` for `n = 0..=N`, with `N` the first index whose tail
/// probability is below `eps`.
fn geometric_amplitudes(z: C64, eps: f64) -> Vec<C64> {
    let r2 = z.norm_sqr();
    let mut out = vec![C64::new((1.0 - r2).sqrt(), 0.0)];
    let mut tail = r2;
    while tail >= eps {
        let next = out[out.len() - 1] * z;
        out.push(next);
        tail *= r2;
    }
    out
}

/// Twin-beam parameter predicted by the parametric approximation for pump
/// amplitude `alpha` after scaled time `tau`: `-i tanh(τ|α|) e^{i arg α}`.
pub fn predicted_twin_beam_param(alpha: C64, tau: f64) -> C64 {
    C64::new(0.0, -1.0) * (tau * alpha.norm()).tanh() * C64::from_polar(1.0, alpha.arg())
}

/// Amplitudes `sqrt(1-|λ|²) λⁿ` of the phase-coherent state for
/// `n = 0..=cutoff`, without renormalization.
pub fn make_pcs_amplitudes(lambda: C64, cutoff: usize) -> Result<Vec<C64>> {
    check_unit_disc("lambda", lambda)?;
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut amp = C64::new((1.0 - lambda.norm_sqr()).sqrt(), 0.0);
    for _ in 0..=cutoff {
        out.push(amp);
        amp *= lambda;
    }
    Ok(out)
}

/// `|λ|` of the phase-coherent state with mean photon number `n_mean`.
pub fn pcs_modulus_for_mean(n_mean: f64) -> f64 {
    (n_mean / (1.0 + n_mean)).sqrt()
}

/// `|χ|` of the twin-beam carrying `n_in` photons in modes a and b together.
pub fn twin_beam_modulus_for_energy(n_in: f64) -> f64 {
    (n_in / (n_in + 2.0)).sqrt()
}

/// Single-mode coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!` up to `cutoff`.
pub fn coherent_amplitudes(alpha: C64, cutoff: usize) -> Vec<C64> {
    let n_mean = alpha.norm_sqr();
    if n_mean == 0.0 {
        let mut v = vec![C64::new(0.0, 0.0); cutoff + 1];
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    (0..=cutoff)
        .map(|n| {
            let ln_mod = -0.5 * n_mean + n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n);
            C64::from_polar(ln_mod.exp(), n as f64 * alpha.arg())
        })
        .collect()
}
