//! Simulated magnetometer: noisy oscillator, ideal heterodyne, Hilbert
//! demodulation and spectral read-out of signal and noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::field::{gyromagnetic_from_spectrum, rate_spectrum, GyroEstimate};
use super::hilbert::{heterodyne, hilbert_demodulate, ValidityViolated};
use super::noise::{sensitivity, Sensitivity};
use super::psd::{SpectrumEstimate, SpectrumUnits};
use super::report::MagnetometryReport;
use crate::dynamics::{nearest_stable, Coeffs, Integrator, SeriesKind, SimConfig, State, TimeSeries};
use crate::exec::{try_map_indexed, Execution};
use crate::model::{photon_number_at, steady_state_solutions};
use crate::params::{SystemParams, GAMMA_E};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestTone {
    /// Hz.
    pub frequency: f64,
    /// RMS test field (T).
    pub b_rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainConfig {
    /// Heterodyne intermediate frequency (Hz).
    pub if_frequency: f64,
    /// Target sample rate of the recorded voltage (Hz); rounded to a whole
    /// number of integration steps.
    pub sample_rate: f64,
    pub tone: Option<TestTone>,
    /// Welch segment (s).
    pub segment: f64,
    /// Unrecorded lead-in (s).
    pub settle: f64,
    /// Recorded span (s).
    pub duration: f64,
    /// `(centre, width)` of the band where noise is compared (Hz).
    pub noise_band: (f64, f64),
    /// `(centre, width)` of the band where sensitivity is quoted (Hz).
    pub sensitivity_band: (f64, f64),
}

impl Default for ChainConfig {
    /// 0.5 MHz IF, 3 kHz tone of 0.2 nT RMS, 8 ms segments, noise compared in
    /// 125 Hz around 30 kHz and sensitivity quoted over 1 kHz around 10 kHz.
    fn default() -> Self {
        Self {
            if_frequency: 0.5e6,
            sample_rate: 5e6,
            tone: Some(TestTone { frequency: 3e3, b_rms: 0.2e-9 }),
            segment: 8e-3,
            settle: 5e-3,
            duration: 0.5,
            noise_band: (30e3, 125.0),
            sensitivity_band: (10e3, 1e3),
        }
    }
}

impl ChainConfig {
    fn band(c: (f64, f64)) -> (f64, f64) {
        (c.0 - 0.5 * c.1, c.0 + 0.5 * c.1)
    }

    pub fn noise_interval(&self) -> (f64, f64) {
        Self::band(self.noise_band)
    }

    pub fn sensitivity_interval(&self) -> (f64, f64) {
        Self::band(self.sensitivity_band)
    }

    pub fn without_tone(mut self) -> Self {
        self.tone = None;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainMeasurement {
    /// Spectrum of `dphi/dt`.
    pub rate: SpectrumEstimate,
    pub gyro: Option<GyroEstimate>,
    /// Mean `dphi/dt` density in the noise band ((rad/s)^2/Hz).
    pub noise_density: f64,
    /// Mean demodulated phase slope, i.e. the oscillation detuning (rad/s).
    pub mean_rate: f64,
    pub warnings: Vec<ValidityViolated>,
}

/// Runs the oscillator at `p` (starting on the stable branch nearest zero
/// detuning) with the optional test tone on the spin detuning and returns
/// the demodulated phase.
pub fn simulate_phase(p: &SystemParams, sim: &SimConfig, chain: &ChainConfig) -> Result<(TimeSeries, Vec<ValidityViolated>)> {
    let start = nearest_stable(p, 0.0).ok_or(Error::StartBranchMissing)?;
    let mut it = Integrator::new(p, State::on_branch(p, &start), sim)?;
    let mut c = Coeffs::new(p, sim.frame_offset);
    let stride = (1.0 / (chain.sample_rate * sim.dt)).round().max(1.0) as u64;
    let fs = 1.0 / (stride as f64 * sim.dt);
    let settle = sim.steps_for(chain.settle);
    let n = sim.steps_for(chain.duration) / stride * stride;
    let (amp, w) = match chain.tone {
        // A field B shifts the spin frequency by 2 pi gamma_e B.
        Some(t) => (2.0 * PI * GAMMA_E * 2f64.sqrt() * t.b_rms, 2.0 * PI * t.frequency),
        None => (0.0, 0.0),
    };
    let mut z: Vec<Complex64> = Vec::with_capacity((n / stride) as usize);
    for k in 0..settle + n {
        if amp != 0.0 {
            c.set_drive(p.delta_s + amp * (w * it.time()).sin(), p.g);
        }
        it.step(&c)?;
        if k >= settle && (k + 1 - settle) % stride == 0 {
            z.push(it.alpha());
        }
    }
    let t0 = (settle + stride) as f64 * sim.dt;
    let field = TimeSeries::complex(z, fs, t0, SeriesKind::Field)?;
    let v = heterodyne(&field, 2.0 * PI * chain.if_frequency)?;
    let d = hilbert_demodulate(&v, 2.0 * PI * chain.if_frequency)?;
    Ok((d.phase, d.warnings))
}

/// [`simulate_phase`] followed by the spectral read-out.
pub fn measure(p: &SystemParams, sim: &SimConfig, chain: &ChainConfig) -> Result<ChainMeasurement> {
    let (phi, warnings) = simulate_phase(p, sim, chain)?;
    let seg = (chain.segment * phi.sample_rate()).round() as usize;
    let rate = rate_spectrum(&phi, seg, Execution::Sequential)?;
    let (lo, hi) = chain.noise_interval();
    let noise_density = rate.band_mean(lo, hi)?;
    let gyro = match chain.tone {
        Some(t) => Some(gyromagnetic_from_spectrum(&rate, t.b_rms, t.frequency)?),
        None => None,
    };
    let x = phi.as_real().expect("real phase");
    let mean_rate = (x[x.len() - 1] - x[0]) / (phi.time(x.len() - 1) - phi.time(0));
    Ok(ChainMeasurement { rate, gyro, noise_density, mean_rate, warnings })
}

/// Noise reference for `p`: spin detuned by `10 g` and the gain shifted so
/// the photon number equals that of the operating branch of `p`.
pub fn noise_reference(p: &SystemParams) -> Result<SystemParams> {
    let op = nearest_stable(p, 0.0).ok_or(Error::StartBranchMissing)?;
    let mut q = p.with_delta_s(10.0 * p.g);
    let far = steady_state_solutions(&q)?
        .into_iter()
        .filter(|b| b.stable)
        .max_by(|a, b| a.photon_number.total_cmp(&b.photon_number))
        .ok_or(Error::StartBranchMissing)?;
    q.gain += q.gamma_s * (op.photon_number - far.photon_number) * p.loop_phase.cos();
    debug_assert!((photon_number_at(&q, far.delta) / op.photon_number - 1.0).abs() < 1e-9);
    Ok(q)
}

#[derive(Clone, Debug, Serialize)]
pub struct MagnetometryRun {
    pub report: MagnetometryReport,
    pub signal: ChainMeasurement,
    pub reference: ChainMeasurement,
    /// Field ASD of the signal run (T/sqrt(Hz)).
    pub field_asd: SpectrumEstimate,
}

/// Signal run at `p` with the test tone and reference run without it; the
/// two use seeds `sim.rng_seed` and `sim.rng_seed + 1`.
pub fn magnetometry(p: &SystemParams, sim: &SimConfig, chain: &ChainConfig, exec: Execution) -> Result<MagnetometryRun> {
    if chain.tone.is_none() {
        return Err(Error::InvalidInput("magnetometry needs a test tone".into()));
    }
    let q = noise_reference(p)?;
    let jobs = [(p.clone(), chain.clone(), 0u64), (q, chain.clone().without_tone(), 1u64)];
    let mut out = try_map_indexed(&jobs, exec, |_, (pp, cc, s)| {
        measure(pp, &sim.clone().with_seed(sim.rng_seed.wrapping_add(*s)), cc)
    })?;
    let reference = out.pop().expect("two runs");
    let signal = out.pop().expect("two runs");
    let gyro = signal.gyro.expect("tone configured");
    let n = (signal.noise_density / reference.noise_density).sqrt();
    let field_asd = signal
        .rate
        .to_asd()
        .scaled(1.0 / (2.0 * PI * gyro.gamma_eff), SpectrumUnits::TeslaPerRootHz);
    let sens: Sensitivity = sensitivity(&field_asd, chain.sensitivity_interval())?;
    let report = MagnetometryReport::new(gyro.gamma_eff, n, sens, chain.sensitivity_interval())?;
    Ok(MagnetometryRun { report, signal, reference, field_asd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::hz;

    #[test]
    fn reference_matches_photon_number() {
        let p = SystemParams::fig4().with_delta_g(hz(5e3));
        let q = noise_reference(&p).unwrap();
        let a = nearest_stable(&p, 0.0).unwrap().photon_number;
        let b = nearest_stable(&q, 0.0).unwrap().photon_number;
        assert!((a / b - 1.0).abs() < 1e-9);
        assert!((q.delta_s - 10.0 * p.g).abs() < 1e-6);
    }

    #[test]
    fn short_chain_runs_and_is_deterministic() {
        let p = SystemParams::fig4().with_delta_g(hz(20e3));
        let sim = SimConfig::for_params(&p).with_seed(3);
        let chain = ChainConfig { duration: 0.02, settle: 1e-3, segment: 4e-3, ..ChainConfig::default() };
        let a = magnetometry(&p, &sim, &chain, Execution::Sequential).unwrap();
        let b = magnetometry(&p, &sim, &chain, Execution::Parallel).unwrap();
        assert_eq!(a.report, b.report);
        assert!(a.report.s > 0.5 && a.report.s < 5.0, "{:?}", a.report);
        assert!(a.report.n > 0.5 && a.report.n < 10.0, "{:?}", a.report);
        assert!(a.signal.mean_rate.abs() < hz(100.0));
    }
}
