//! Spin ensemble strongly coupled to a Van der Pol self-oscillator.
//!
//! The crate is layered bottom-up:
//!
//! * [`params`] holds the single parameter record and its text format.
//! * [`model`] solves the steady-state problem in closed form: oscillation
//!   roots, stability, folds, the bistable map, responsivity and spectra.
//! * [`dynamics`] integrates the noisy coupled-mode equations and runs
//!   hysteresis sweeps, encirclements and transition-edge timing.
//! * [`metrology`] is the signal chain from heterodyne voltage to field noise.
//! * [`experiments`] wires the layers into named, reproducible scenarios.
//!
//! All rates inside [`params::SystemParams`] are angular (rad/s); all spectral
//! axes are Hz.

pub mod dynamics;
pub mod exec;
pub mod experiments;
pub mod metrology;
pub mod model;
pub mod params;

pub use exec::Execution;
pub use params::SystemParams;

use thiserror::Error;

/// Every failure the library can report. `name()` gives a stable identifier
/// that the command-line front end prints on standard error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] params::ParamsError),
    #[error("no oscillation root has positive photon number (net gain too small)")]
    BelowThreshold,
    #[error("more than one Jacobian eigenvalue has zero real part (fold or Hopf point)")]
    DegenerateJacobian,
    #[error("search interval does not bracket the bistable transition: {0}")]
    NotBracketed(String),
    #[error("integration diverged at t = {t:.3e} s (|alpha| = {amplitude:.3e})")]
    Diverged { t: f64, amplitude: f64 },
    #[error("requested start branch does not exist at the start point")]
    StartBranchMissing,
    #[error("the original branch survives the step; no transition")]
    NoTransition,
    #[error("power-law fit requires at least 4 strictly positive values")]
    NonPositiveInput,
    #[error("segment length {segment} exceeds series length {len}")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("test tone at {f_test} Hz not found (bin SNR {snr:.2})")]
    ToneNotFound { f_test: f64, snr: f64 },
    #[error("noise-model denominator is not positive ({0:.3e})")]
    DenominatorNonpositive(f64),
    #[error("band [{lo}, {hi}] Hz lies outside the spectrum")]
    BandOutOfRange { lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::Params(_) => "InvalidParams",
            Error::BelowThreshold => "BelowThreshold",
            Error::DegenerateJacobian => "DegenerateJacobian",
            Error::NotBracketed(_) => "NotBracketed",
            Error::Diverged { .. } => "Diverged",
            Error::StartBranchMissing => "StartBranchMissing",
            Error::NoTransition => "NoTransition",
            Error::NonPositiveInput => "NonPositiveInput",
            Error::SegmentTooLong { .. } => "SegmentTooLong",
            Error::ToneNotFound { .. } => "ToneNotFound",
            Error::DenominatorNonpositive(_) => "DenominatorNonpositive",
            Error::BandOutOfRange { .. } => "BandOutOfRange",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
