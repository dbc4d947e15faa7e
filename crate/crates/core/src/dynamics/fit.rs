//! Log-log power-law and stretched-exponential fits.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y = c0 + c1 x`: `(c0, c1, stderr(c1), r2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let se = if n > 2.0 && sxx > 0.0 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (icpt, slope, se, r2)
}

/// `y = prefactor * x^exponent` by least squares on `ln y` against `ln x`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() || x.len() < 4 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveInput);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c0, c1, se, r2) = linear_fit(&lx, &ly);
    Ok(PowerLawFit { exponent: c1, exponent_stderr: se, prefactor: c0.exp(), r2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StretchedExpFit {
    pub amplitude: f64,
    /// Decay scale in units of `x`.
    pub scale: f64,
    pub beta: f64,
    /// Coefficient of determination of `ln y`.
    pub r2: f64,
    /// The optimum sits on an edge of the `beta` search range, i.e. the data
    /// prefer a shape outside the stretched family (a pure power law drives
    /// `beta` to zero).
    pub at_bound: bool,
}

const BETA_MIN_PCT: u32 = 5;
const BETA_MIN: f64 = 0.05;

/// `y = amplitude * exp(-(x / scale)^beta)`. For each `beta` on a grid in
/// `[0.05, 2]` the model is linear in `x^beta` after taking logs; the best grid
/// point is then refined by golden-section search.
pub fn fit_stretched_exponential(x: &[f64], y: &[f64]) -> Result<StretchedExpFit> {
    if x.len() != y.len() || x.len() < 4 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveInput);
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    // Work in x / max(x) so x^beta stays well conditioned.
    let xm = x.iter().cloned().fold(0.0, f64::max);
    let xs: Vec<f64> = x.iter().map(|v| v / xm).collect();
    let eval = |beta: f64| {
        let u: Vec<f64> = xs.iter().map(|v| v.powf(beta)).collect();
        let (c0, c1, _, r2) = linear_fit(&u, &ly);
        (c0, c1, r2)
    };
    let grid: Vec<f64> = (BETA_MIN_PCT..=200).map(|k| k as f64 * 0.01).collect();
    let mut best = grid[0];
    let mut best_r2 = f64::NEG_INFINITY;
    for &b in &grid {
        let (_, c1, r2) = eval(b);
        if c1 < 0.0 && r2 > best_r2 {
            best_r2 = r2;
            best = b;
        }
    }
    if !best_r2.is_finite() {
        return Err(Error::InvalidInput("data do not decay; no stretched exponential fits".into()));
    }
    let (mut lo, mut hi) = ((best - 0.01).max(BETA_MIN), (best + 0.01).min(2.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if eval(a).2 > eval(b).2 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let beta = 0.5 * (lo + hi);
    let (c0, c1, r2) = eval(beta);
    if c1 >= 0.0 {
        return Err(Error::InvalidInput("data do not decay; no stretched exponential fits".into()));
    }
    let scale = xm * (-c1).powf(-1.0 / beta);
    let at_bound = beta < BETA_MIN + 1e-3 || beta > 2.0 - 1e-3;
    Ok(StretchedExpFit { amplitude: c0.exp(), scale, beta, r2, at_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_has_unit_exponent() {
        let x = [1.0, 2.0, 3.0, 5.0, 8.0];
        let f = fit_power_law(&x, &x).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-14);
        assert!((f.prefactor - 1.0).abs() < 1e-13);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_has_zero_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let f = fit_power_law(&x, &[3.0; 4]).unwrap();
        assert!(f.exponent.abs() < 1e-14);
    }

    #[test]
    fn cube_root_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..40).map(|k| 10f64.powf(k as f64 / 13.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.cbrt() * (1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0))).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::NonPositiveInput)));
        assert!(matches!(fit_power_law(&[1.0, 2.0, 3.0, 0.0], &[1.0; 4]), Err(Error::NonPositiveInput)));
    }

    #[test]
    fn stretched_exponential_recovered() {
        let x: Vec<f64> = (1..30).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 5.0 * (-(v / 0.7f64).powf(0.6)).exp()).collect();
        let f = fit_stretched_exponential(&x, &y).unwrap();
        assert!((f.beta - 0.6).abs() < 1e-4, "{f:?}");
        assert!((f.scale - 0.7).abs() < 1e-3);
        assert!((f.amplitude - 5.0).abs() < 1e-3);
    }
}
