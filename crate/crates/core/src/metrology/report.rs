//! Summary record of one magnetometry measurement.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::noise::Sensitivity;
use crate::params::GAMMA_E;
use crate::{Error, Result};

/// JSON layout (all numbers are plain floats):
///
/// ```json
/// {
///   "gamma_eff": 3.78e12,           // Hz/T
///   "gamma_e": 2.8e10,              // Hz/T, reference electron ratio
///   "S": 135.0,                     // gamma_eff / gamma_e
///   "N": 8.0,                       // noise amplitude over the reference
///   "snr_gain": 16.875,             // S / N
///   "sensitivity": { "mean": 1.7e-13, "std": 1e-14 },   // T/sqrt(Hz)
///   "band": [9500.0, 10500.0]       // Hz
/// }
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetometryReport {
    pub gamma_eff: f64,
    pub gamma_e: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub snr_gain: f64,
    pub sensitivity: SensitivityRecord,
    pub band: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub mean: f64,
    pub std: f64,
}

impl From<Sensitivity> for SensitivityRecord {
    fn from(s: Sensitivity) -> Self {
        Self { mean: s.mean, std: s.std }
    }
}

impl MagnetometryReport {
    pub fn new(gamma_eff: f64, n: f64, sensitivity: Sensitivity, band: (f64, f64)) -> Result<Self> {
        if !(gamma_eff > 0.0) || !(n > 0.0) || !(sensitivity.mean > 0.0) {
            return Err(Error::InvalidInput("gamma_eff, N and sensitivity must be positive".into()));
        }
        let s = gamma_eff / GAMMA_E;
        Ok(Self {
            gamma_eff,
            gamma_e: GAMMA_E,
            s,
            n,
            snr_gain: super::snr_enhancement(s, n),
            sensitivity: sensitivity.into(),
            band,
        })
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "gamma_eff = {:.6e} Hz/T", self.gamma_eff);
        let _ = writeln!(t, "gamma_e = {:.6e} Hz/T", self.gamma_e);
        let _ = writeln!(t, "S = {:.4}", self.s);
        let _ = writeln!(t, "N = {:.4}", self.n);
        let _ = writeln!(t, "snr_gain = {:.4}", self.snr_gain);
        let _ = writeln!(t, "sensitivity = {:.4e} +- {:.2e} T/sqrt(Hz)", self.sensitivity.mean, self.sensitivity.std);
        let _ = writeln!(t, "band = {} .. {} Hz", self.band.0, self.band.1);
        t
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain floats serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_ratios_and_formats() {
        let r = MagnetometryReport::new(135.0 * GAMMA_E, 8.0, Sensitivity { mean: 1.7e-13, std: 1e-14 }, (9.5e3, 10.5e3))
            .unwrap();
        assert_eq!(r.snr_gain, r.s / r.n);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["N"], 8.0);
        assert_eq!(v["band"][1], 10.5e3);
        assert_eq!(v["sensitivity"]["mean"], 1.7e-13);
        let back: MagnetometryReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("snr_gain = 16.8750"));
        assert!(MagnetometryReport::new(1.0, 0.0, Sensitivity { mean: 1.0, std: 0.0 }, (0.0, 1.0)).is_err());
    }
}
