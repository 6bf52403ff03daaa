//! Scalar maximization and log-log power-law fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        // Ties move toward the left end of the bracket.
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `y ≈ prefactor · x^exponent`, fitted by least squares on `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("non-positive value {v} in power-law data")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerLawFit { prefactor: intercept.exp(), exponent: slope, residual: (ss / n).sqrt() })
}
