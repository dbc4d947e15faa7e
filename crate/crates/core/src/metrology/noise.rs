//! Analytic noise model, sensitivity statistics and fundamental bounds.

use serde::Serialize;

use super::psd::{SpectrumEstimate, SpectrumUnits};
use crate::model::{oscillation_roots, photon_number_at};
use crate::params::{SystemParams, K_B};
use crate::{Error, Result};

/// Relative phase-noise density at zero spin detuning,
/// `(g + dg)^2 / ((g + dg)(g + x) - g^2)` with `x = gamma_s |alpha|^2`.
///
/// The proportionality constant is unknown, so the value is quoted with unit
/// constant; at `dg = 0` it reduces to `g / x`. All three rates must share
/// units.
pub fn phase_noise_ratio(g: f64, dg: f64, x: f64) -> Result<f64> {
    let gd = g + dg;
    let den = gd * (g + x) - g * g;
    if !(den > 0.0) {
        return Err(Error::DenominatorNonpositive(den));
    }
    Ok(gd * gd / den)
}

/// [`phase_noise_ratio`] at the operating point of `p`, which must have
/// `delta_s = 0`. The saturation term comes from the oscillation root
/// nearest zero detuning.
pub fn analytic_phase_noise(p: &SystemParams) -> Result<f64> {
    if p.delta_s != 0.0 {
        return Err(Error::InvalidInput("the analytic noise model holds at zero spin detuning".into()));
    }
    let delta = oscillation_roots(p)
        .into_iter()
        .map(|r| r.value)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::BelowThreshold)?;
    let x = p.gamma_s * photon_number_at(p, delta);
    phase_noise_ratio(p.g, p.delta_g(), x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sensitivity {
    /// T/sqrt(Hz).
    pub mean: f64,
    /// Spread of the bins in the band (T/sqrt(Hz)).
    pub std: f64,
}

/// Mean and standard deviation of the field ASD bins in `[lo, hi]` Hz.
pub fn sensitivity(asd: &SpectrumEstimate, band: (f64, f64)) -> Result<Sensitivity> {
    if asd.units != SpectrumUnits::TeslaPerRootHz {
        return Err(Error::InvalidInput(format!("sensitivity needs T/sqrt(Hz), got {}", asd.units.as_str())));
    }
    let r = asd.band_indices(band.0, band.1)?;
    let v = &asd.values[r];
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Sensitivity { mean, std })
}

/// Signal enhancement over noise enhancement.
pub fn snr_enhancement(s: f64, n: f64) -> f64 {
    s / n
}

/// Leeson-type floor `sqrt(3/2) f_L sqrt(k_B T / P) / gamma` in T/sqrt(Hz),
/// with `f_L` in Hz, `power` in W and `gamma` in Hz/T.
pub fn leeson_bound(f_l: f64, temperature: f64, power: f64, gamma: f64) -> f64 {
    1.5f64.sqrt() * f_l * (K_B * temperature / power).sqrt() / gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dbm_to_watts, hz, GAMMA_E};

    #[test]
    fn zero_offset_limit() {
        let (g, x) = (hz(220e3), hz(10e3));
        assert!((phase_noise_ratio(g, 0.0, x).unwrap() - 22.0).abs() < 1e-12);
        let r = phase_noise_ratio(g, 1e-9 * g, x).unwrap() / (g / x);
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_divergence_without_saturation() {
        let g = hz(220e3);
        let a = phase_noise_ratio(g, 1e-3 * g, 1e-12 * g).unwrap();
        let b = phase_noise_ratio(g, 1e-2 * g, 1e-12 * g).unwrap();
        let slope = (b / a).log10();
        assert!((slope + 1.0).abs() < 0.01);
    }

    #[test]
    fn nonpositive_denominator() {
        assert!(matches!(phase_noise_ratio(1.0, -0.5, 0.1), Err(Error::DenominatorNonpositive(_))));
    }

    #[test]
    fn preset_operating_point() {
        let p = SystemParams::fig4().with_delta_g(0.0);
        let x = p.gain - p.kappa / 2.0 - p.g;
        let v = analytic_phase_noise(&p).unwrap();
        assert!((v - p.g / x).abs() < 1e-9 * v);
        assert!(analytic_phase_noise(&p.with_delta_s(1.0)).is_err());
    }

    #[test]
    fn snr_arithmetic() {
        assert_eq!(snr_enhancement(135.0, 8.0), 16.875);
        assert_eq!(snr_enhancement(3.0, 3.0), 1.0);
    }

    #[test]
    fn leeson_scalings() {
        let b = leeson_bound(155e3, 290.0, dbm_to_watts(-40.0), GAMMA_E);
        assert!(b > 1.3e-12 && b < 1.5e-12, "{b}");
        let b4 = leeson_bound(155e3, 290.0, 4.0 * dbm_to_watts(-40.0), GAMMA_E);
        assert!((b / b4 - 2.0).abs() < 1e-12);
        assert!((b / leeson_bound(155e3, 290.0, dbm_to_watts(-40.0), 10.0 * GAMMA_E) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn flat_sensitivity() {
        let asd = SpectrumEstimate {
            freqs: (0..100).map(|k| k as f64 * 10.0).collect(),
            values: vec![1e-12; 100],
            units: SpectrumUnits::TeslaPerRootHz,
            resolution_bw: 10.0,
        };
        let s = sensitivity(&asd, (100.0, 200.0)).unwrap();
        assert!((s.mean - 1e-12).abs() < 1e-24 && s.std < 1e-24);
        assert!(matches!(sensitivity(&asd, (900.0, 1200.0)), Err(Error::BandOutOfRange { .. })));
    }
}
