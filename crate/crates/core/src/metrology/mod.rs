//! Signal chain: spectra, demodulation, field conversion, noise model and
//! the simulated magnetometer built from them.

pub mod chain;
pub mod field;
pub mod hilbert;
pub mod noise;
pub mod psd;
pub mod report;

pub use chain::{
    magnetometry, measure, noise_reference, simulate_phase, ChainConfig, ChainMeasurement, MagnetometryRun, TestTone,
};
pub use field::{effective_gyromagnetic, gyromagnetic_from_spectrum, phase_rate, phase_to_field, rate_spectrum, GyroEstimate};
pub use hilbert::{analytic_signal, heterodyne, hilbert_demodulate, Demodulated, ValidityViolated};
pub use noise::{analytic_phase_noise, leeson_bound, phase_noise_ratio, sensitivity, snr_enhancement, Sensitivity};
pub use psd::{psd, psd_with, welch, SpectrumEstimate, SpectrumUnits};
pub use report::{MagnetometryReport, SensitivityRecord};
