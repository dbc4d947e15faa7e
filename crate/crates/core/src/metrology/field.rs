//! From demodulated phase to magnetic field.

use std::f64::consts::PI;

use serde::Serialize;

use super::psd::{welch, SpectrumEstimate, SpectrumUnits};
use crate::dynamics::{SeriesKind, TimeSeries};
use crate::exec::Execution;
use crate::params::GAMMA_E;
use crate::{Error, Result};

/// Minimum peak-to-floor ratio for a test tone to count as detected.
pub const TONE_MIN_SNR: f64 = 3.0;

/// `dphi/dt` in rad/s by central differences, one-sided at the ends.
pub fn phase_rate(phi: &[f64], sample_rate: f64) -> Vec<f64> {
    let n = phi.len();
    let mut d = Vec::with_capacity(n);
    d.push((phi[1] - phi[0]) * sample_rate);
    for i in 1..n - 1 {
        d.push(0.5 * (phi[i + 1] - phi[i - 1]) * sample_rate);
    }
    d.push((phi[n - 1] - phi[n - 2]) * sample_rate);
    d
}

/// `B = (dphi/dt) / (2 pi gamma)` with `gamma` in Hz/T: the phase rate is
/// angular, the gyromagnetic ratio is not.
pub fn phase_to_field(phi: &TimeSeries, gamma: f64) -> Result<TimeSeries> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gyromagnetic ratio must be positive, got {gamma}")));
    }
    let x = phi.as_real().ok_or_else(|| Error::InvalidInput("phase series must be real".into()))?;
    let k = 1.0 / (2.0 * PI * gamma);
    let b = phase_rate(x, phi.sample_rate()).into_iter().map(|v| v * k).collect();
    TimeSeries::real(b, phi.sample_rate(), phi.t0(), SeriesKind::Magnetic)
}

/// Welch spectrum of `dphi/dt`, in (rad/s)^2/Hz, half-overlapped segments.
pub fn rate_spectrum(phi: &TimeSeries, segment: usize, exec: Execution) -> Result<SpectrumEstimate> {
    let x = phi.as_real().ok_or_else(|| Error::InvalidInput("phase series must be real".into()))?;
    let d = phase_rate(x, phi.sample_rate());
    welch(&d, phi.sample_rate(), segment, segment / 2, SpectrumUnits::RadPerSecondSquaredPerHz, exec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GyroEstimate {
    /// Hz/T.
    pub gamma_eff: f64,
    /// `gamma_eff / gamma_e`.
    pub enhancement: f64,
    /// Tone bin over the median of its neighbourhood.
    pub tone_snr: f64,
}

/// Reads the test tone off an already computed `dphi/dt` spectrum.
///
/// `gamma_eff = sqrt(3) * sqrt(P_peak * df / 2) / (2 pi B_t)` where `P_peak`
/// is the tone bin. For a bin-centred tone under the Hann window this is the
/// RMS of `dphi/dt` at `f_test` over the RMS test field, so a bare spin gives
/// `gamma_e`.
pub fn gyromagnetic_from_spectrum(rate: &SpectrumEstimate, b_t: f64, f_test: f64) -> Result<GyroEstimate> {
    if !(b_t > 0.0) {
        return Err(Error::InvalidInput(format!("test field must be positive, got {b_t}")));
    }
    let k = rate.bin(f_test);
    let n = rate.values.len();
    let mut floor: Vec<f64> =
        (k.saturating_sub(20)..(k + 21).min(n)).filter(|&j| j.abs_diff(k) >= 4).map(|j| rate.values[j]).collect();
    if floor.is_empty() || k == 0 {
        return Err(Error::ToneNotFound { f_test, snr: 0.0 });
    }
    floor.sort_by(f64::total_cmp);
    let median = floor[floor.len() / 2];
    let peak = rate.values[k];
    let snr = if median > 0.0 { peak / median } else { f64::INFINITY };
    if !(snr >= TONE_MIN_SNR) {
        return Err(Error::ToneNotFound { f_test, snr });
    }
    let gamma_eff = 3f64.sqrt() * (peak * rate.resolution_bw / 2.0).sqrt() / (2.0 * PI * b_t);
    Ok(GyroEstimate { gamma_eff, enhancement: gamma_eff / GAMMA_E, tone_snr: snr })
}

/// Effective gyromagnetic ratio from a phase record carrying a test field of
/// RMS amplitude `b_t` (T) at `f_test` (Hz). `segment` sets the Welch
/// segment length in samples.
pub fn effective_gyromagnetic(phi: &TimeSeries, b_t: f64, f_test: f64, segment: usize) -> Result<GyroEstimate> {
    let s = rate_spectrum(phi, segment, Execution::Auto)?;
    gyromagnetic_from_spectrum(&s, b_t, f_test)
}
