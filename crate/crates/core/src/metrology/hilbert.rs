//! Analytic-signal demodulation of a real carrier into amplitude and phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dynamics::{SeriesKind, TimeSeries};
use crate::{Error, Result};

/// Fraction of samples dropped at each end to avoid the wrap-around
/// transients of the FFT construction.
pub const EDGE_FRACTION: f64 = 0.05;
/// Phase RMS above which the small-phase expansion is doubtful (rad).
pub const MAX_PHASE_RMS: f64 = 0.3;

/// `v + i H[v]` by zeroing negative frequencies and doubling positive ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= h / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// A validity condition of the demodulation that the input breaks. The
/// result is still returned; these are warnings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityViolated {
    /// Phase RMS about its linear trend above [`MAX_PHASE_RMS`].
    PhaseRms { rms: f64 },
    /// RMS bandwidth of the modulation above `omega_i / 10` (both in Hz).
    Bandwidth { bandwidth_hz: f64, limit_hz: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Demodulated {
    /// Relative amplitude deviation `|z| / V0 - 1`.
    pub amplitude: TimeSeries,
    /// Unwrapped phase with the carrier ramp removed (rad).
    pub phase: TimeSeries,
    /// Mean carrier amplitude.
    pub v0: f64,
    pub warnings: Vec<ValidityViolated>,
}

/// Splits `v(t) = V0 (1 + a(t)) cos(omega_i t + phi(t))` into `a` and `phi`.
/// The first and last [`EDGE_FRACTION`] of the record are discarded.
pub fn hilbert_demodulate(ts: &TimeSeries, omega_i: f64) -> Result<Demodulated> {
    let x = ts.as_real().ok_or_else(|| Error::InvalidInput("demodulation needs a real series".into()))?;
    let fs = ts.sample_rate();
    let f_i = omega_i / (2.0 * PI);
    let n = x.len();
    if !(f_i >= 10.0 * fs / n as f64) || !(f_i < fs / 2.0) {
        return Err(Error::InvalidInput(format!(
            "carrier {f_i} Hz must lie between 10 bins ({} Hz) and Nyquist ({} Hz)",
            10.0 * fs / n as f64,
            fs / 2.0
        )));
    }
    let z = analytic_signal(x);
    let cut = ((n as f64 * EDGE_FRACTION).ceil() as usize).min((n - 2) / 2);
    let keep = cut..n - cut;
    let base: Vec<Complex64> =
        keep.clone().map(|i| z[i] * Complex64::from_polar(1.0, -omega_i * ts.time(i))).collect();
    let v0 = base.iter().map(|b| b.norm()).sum::<f64>() / base.len() as f64;
    let amp: Vec<f64> = base.iter().map(|b| b.norm() / v0 - 1.0).collect();
    let mut phase = Vec::with_capacity(base.len());
    let mut acc = base[0].arg();
    phase.push(acc);
    for w in base.windows(2) {
        acc += (w[1] * w[0].conj()).arg();
        phase.push(acc);
    }

    let mut warnings = Vec::new();
    let rms = detrended_rms(&phase);
    if rms > MAX_PHASE_RMS {
        warnings.push(ValidityViolated::PhaseRms { rms });
    }
    let bw = rms_bandwidth(&base, fs);
    if bw > f_i / 10.0 {
        warnings.push(ValidityViolated::Bandwidth { bandwidth_hz: bw, limit_hz: f_i / 10.0 });
    }
    let t0 = ts.time(cut);
    Ok(Demodulated {
        amplitude: TimeSeries::real(amp, fs, t0, SeriesKind::Voltage)?,
        phase: TimeSeries::real(phase, fs, t0, SeriesKind::Phase)?,
        v0,
        warnings,
    })
}

/// RMS about the least-squares line: a constant frequency offset between
/// carrier and reference is not phase modulation.
fn detrended_rms(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mx = 0.5 * (n - 1.0);
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = (0..y.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
    let b = sxy / sxx;
    (y.iter().enumerate().map(|(i, v)| (v - my - b * (i as f64 - mx)).powi(2)).sum::<f64>() / n).sqrt()
}

/// RMS bandwidth (Hz) of the fluctuating part of a complex envelope.
fn rms_bandwidth(env: &[Complex64], fs: f64) -> f64 {
    let n = env.len();
    let mean: Complex64 = env.iter().sum::<Complex64>() / n as f64;
    let mut buf: Vec<Complex64> = env.iter().map(|z| z - mean).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, z) in buf.iter().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let f = kk * fs / n as f64;
        num += f * f * z.norm_sqr();
        den += z.norm_sqr();
    }
    // Rounding noise on an unmodulated carrier has no meaningful bandwidth.
    if den > 1e-20 * mean.norm_sqr() * (n * n) as f64 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Ideal heterodyne of a cavity-frame field onto an intermediate frequency:
/// `v = Re[conj(alpha) exp(i omega_i t)]`. An oscillation at detuning
/// `Delta` appears at `omega_i + Delta`, so the demodulated phase advances at
/// `+Delta`.
pub fn heterodyne(field: &TimeSeries, omega_i: f64) -> Result<TimeSeries> {
    let z = field.as_complex().ok_or_else(|| Error::InvalidInput("heterodyne needs a complex field".into()))?;
    let v = z.iter().enumerate().map(|(i, a)| (a.conj() * Complex64::from_polar(1.0, omega_i * field.time(i))).re).collect();
    TimeSeries::real(v, field.sample_rate(), field.t0(), SeriesKind::Voltage)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 1.0e6;
    const FI: f64 = 50.0e3;

    fn carrier(n: usize, f: impl Fn(f64) -> (f64, f64)) -> TimeSeries {
        let v = (0..n)
            .map(|i| {
                let t = i as f64 / FS;
                let (a, p) = f(t);
                1.7 * (1.0 + a) * (2.0 * PI * FI * t + p).cos()
            })
            .collect();
        TimeSeries::real(v, FS, 0.0, SeriesKind::Voltage).unwrap()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn pure_carrier() {
        let d = hilbert_demodulate(&carrier(20_000, |_| (0.0, 0.0)), 2.0 * PI * FI).unwrap();
        assert!(rms(d.phase.as_real().unwrap()) < 1e-9);
        assert!(rms(d.amplitude.as_real().unwrap()) < 1e-9);
        assert!((d.v0 - 1.7).abs() < 1e-9);
        assert!(d.warnings.is_empty());
        assert!((d.phase.t0() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn phase_tone_recovered() {
        let tone = |t: f64| 0.01 * (2.0 * PI * 3e3 * t).sin();
        let ts = carrier(50_001, |t| (0.0, tone(t)));
        let d = hilbert_demodulate(&ts, 2.0 * PI * FI).unwrap();
        let err: Vec<f64> =
            d.phase.as_real().unwrap().iter().enumerate().map(|(i, p)| p - tone(d.phase.time(i))).collect();
        let truth: Vec<f64> = (0..err.len()).map(|i| tone(d.phase.time(i))).collect();
        assert!(rms(&err) / rms(&truth) < 0.01, "{}", rms(&err) / rms(&truth));
    }

    #[test]
    fn amplitude_does_not_leak_into_phase() {
        let ts = carrier(50_001, |t| (0.05 * (2.0 * PI * 1e3 * t).sin(), 0.0));
        let d = hilbert_demodulate(&ts, 2.0 * PI * FI).unwrap();
        assert!(rms(d.phase.as_real().unwrap()) < 1e-3);
        let a = d.amplitude.as_real().unwrap();
        assert!((rms(a) - 0.05 / 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn warnings_raised() {
        let ts = carrier(50_000, |t| (0.0, (2.0 * PI * 20e3 * t).sin()));
        let d = hilbert_demodulate(&ts, 2.0 * PI * FI).unwrap();
        assert!(d.warnings.iter().any(|w| matches!(w, ValidityViolated::PhaseRms { .. })));
        assert!(d.warnings.iter().any(|w| matches!(w, ValidityViolated::Bandwidth { .. })));
        let ts = carrier(1000, |_| (0.0, 0.0));
        assert!(hilbert_demodulate(&ts, 2.0 * PI * 100.0).is_err());
        assert!(hilbert_demodulate(&ts, 2.0 * PI * 600e3).is_err());
    }

    #[test]
    fn heterodyne_phase_advances_at_detuning() {
        let delta = 2.0 * PI * 2e3;
        let z: Vec<Complex64> = (0..20_000).map(|i| Complex64::from_polar(3.0, -delta * i as f64 / FS)).collect();
        let f = TimeSeries::complex(z, FS, 0.0, SeriesKind::Field).unwrap();
        let v = heterodyne(&f, 2.0 * PI * FI).unwrap();
        let d = hilbert_demodulate(&v, 2.0 * PI * FI).unwrap();
        let p = d.phase.as_real().unwrap();
        let slope = (p[p.len() - 1] - p[0]) / (d.phase.time(p.len() - 1) - d.phase.time(0));
        assert!((slope / delta - 1.0).abs() < 1e-6);
    }
}
