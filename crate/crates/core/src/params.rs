//! The physical parameter record shared by every module, plus its flat
//! `key = value` text format.
//!
//! All rates and frequencies are angular (rad/s). Powers are watts. The text
//! format accepts `2pi*<x>` as shorthand for an angular value given in Hz and
//! a `dBm` suffix on `power` and `p_sat`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380649e-23;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// NV electron gyromagnetic ratio (Hz/T).
pub const GAMMA_E: f64 = 28e9;

/// Converts a frequency in Hz to an angular rate in rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// Converts an angular rate in rad/s to Hz.
#[inline]
pub fn to_hz(w: f64) -> f64 {
    w / TAU
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Parses a power literal: plain watts (`1e-7`) or dBm (`-40dBm`).
pub fn parse_power(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if let Some(num) = lower.strip_suffix("dbm") {
        num.trim()
            .parse::<f64>()
            .map(dbm_to_watts)
            .map_err(|e| format!("invalid dBm value `{t}`: {e}"))
    } else {
        let num = lower.strip_suffix('w').unwrap_or(&lower);
        num.trim()
            .parse::<f64>()
            .map_err(|e| format!("invalid power `{t}`: {e}"))
    }
}

/// Parses an angular value: `1.2e6` (rad/s) or `2pi*320e3` (Hz, converted).
pub fn parse_angular(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = compact.to_ascii_lowercase();
    let (neg, body) = match lower.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, lower.as_str()),
    };
    let value = if let Some(rest) = body.strip_prefix("2pi*") {
        rest.parse::<f64>().map(hz)
    } else {
        body.parse::<f64>()
    }
    .map_err(|e| format!("invalid number `{t}`: {e}"))?;
    Ok(if neg { -value } else { value })
}

/// One hyperfine sub-ensemble: detuning from the line centre (rad/s) and
/// fractional weight of the collective coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperfineLine {
    pub detuning: f64,
    pub weight: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Every physical rate and frequency of the hybrid system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity angular frequency; 0 makes the cavity the frame origin.
    pub omega_c: f64,
    /// Spin-cavity detuning `omega_s - omega_c`.
    pub delta_s: f64,
    /// Total cavity loss rate.
    pub kappa: f64,
    pub kappa_c1: f64,
    pub kappa_c2: f64,
    /// One-photon loop gain.
    pub gain: f64,
    /// Two-photon nonlinear damping (rad/s per photon).
    pub gamma_s: f64,
    /// Collective spin-cavity coupling.
    pub g: f64,
    /// Spin linewidth (full width).
    pub gamma_spin: f64,
    /// Residual loop phase (rad).
    pub loop_phase: f64,
    /// Offset subtracted in `delta_g()`.
    pub delta_g_offset: f64,
    pub hyperfine: Vec<HyperfineLine>,
    /// Temperature (K), sets the thermal noise floor.
    pub temperature: f64,
    /// Steady oscillating power (W).
    pub power: f64,
    /// Spin saturation power (W) used by the coupling saturation law.
    pub p_sat: f64,
    /// Absolute carrier frequency (rad/s) used for thermal occupation only.
    pub carrier_frequency: f64,
}

/// BP power reported for the spin-saturation sweep (dBm).
pub const BP_POWER_DBM: f64 = -42.5;

/// Coupling offset `Gamma/2 - g` of the hysteresis operating point, chosen so
/// the folds sit near +-20 kHz.
pub const HYSTERESIS_DELTA_G: f64 = -2.0 * std::f64::consts::PI * 37.0e3;

impl SystemParams {
    fn fitted_base(gamma_spin: f64) -> Self {
        let kappa = hz(320e3);
        let g0 = hz(0.22e6);
        let half = gamma_spin / 2.0;
        let p_star = dbm_to_watts(BP_POWER_DBM);
        Self {
            omega_c: 0.0,
            delta_s: 0.0,
            kappa,
            kappa_c1: hz(130e3),
            kappa_c2: hz(50e3),
            gain: kappa / 2.0 + hz(400e3),
            gamma_s: hz(1e-5),
            g: g0,
            gamma_spin,
            loop_phase: 0.0,
            delta_g_offset: 0.0,
            hyperfine: vec![HyperfineLine { detuning: 0.0, weight: 1.0 }],
            temperature: 290.0,
            power: dbm_to_watts(-40.0),
            // g(P*) = Gamma/2 under g0 / sqrt(1 + P/P_sat).
            p_sat: p_star / ((g0 / half).powi(2) - 1.0),
            carrier_frequency: hz(2.87e9),
        }
    }

    /// Fitted rates for spectroscopy, hysteresis and encirclement
    /// (`Gamma = 2pi * 315 kHz`).
    pub fn fig23() -> Self {
        Self::fitted_base(hz(0.315e6))
    }

    /// Fitted rates for magnetometry (`Gamma = 2pi * 301 kHz`).
    pub fn fig4() -> Self {
        Self::fitted_base(hz(0.301e6))
    }

    /// `fig23` with the cavity linewidth read off the reflection comparison
    /// (`kappa = 2pi * 260 kHz`) instead of the fitted 320 kHz.
    pub fn fig23_narrow_cavity() -> Self {
        let mut p = Self::fig23();
        let extra = p.gain - p.kappa / 2.0;
        p.kappa = hz(260e3);
        p.gain = p.kappa / 2.0 + extra;
        p
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "fig23" => Some(Self::fig23()),
            "fig4" => Some(Self::fig4()),
            "fig23-narrow" => Some(Self::fig23_narrow_cavity()),
            _ => None,
        }
    }

    /// `Gamma/2 - g - xi`.
    #[inline]
    pub fn delta_g(&self) -> f64 {
        self.gamma_spin / 2.0 - self.g - self.delta_g_offset
    }

    /// Returns a copy with `g` chosen so that `delta_g()` equals `dg`.
    pub fn with_delta_g(&self, dg: f64) -> Self {
        let mut p = self.clone();
        p.g = self.gamma_spin / 2.0 - self.delta_g_offset - dg;
        p
    }

    pub fn with_delta_s(&self, ds: f64) -> Self {
        let mut p = self.clone();
        p.delta_s = ds;
        p
    }

    #[inline]
    pub fn omega_s(&self) -> f64 {
        self.omega_c + self.delta_s
    }

    #[inline]
    pub fn half_linewidth(&self) -> f64 {
        self.gamma_spin / 2.0
    }

    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.kappa * self.gamma_spin)
    }

    /// Three-line hyperfine structure split by `splitting` (rad/s), equal weights.
    pub fn with_hyperfine_triplet(&self, splitting: f64) -> Self {
        let mut p = self.clone();
        let w = 1.0 / 3.0;
        p.hyperfine = vec![
            HyperfineLine { detuning: -splitting, weight: w },
            HyperfineLine { detuning: 0.0, weight: w },
            HyperfineLine { detuning: splitting, weight: w },
        ];
        p
    }

    /// Thermal photon occupation at the carrier frequency.
    pub fn thermal_occupation(&self) -> f64 {
        K_B * self.temperature / (HBAR * self.carrier_frequency)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let finite = [
            ("omega_c", self.omega_c),
            ("delta_s", self.delta_s),
            ("kappa", self.kappa),
            ("kappa_c1", self.kappa_c1),
            ("kappa_c2", self.kappa_c2),
            ("gain", self.gain),
            ("gamma_s", self.gamma_s),
            ("g", self.g),
            ("gamma_spin", self.gamma_spin),
            ("loop_phase", self.loop_phase),
            ("delta_g_offset", self.delta_g_offset),
            ("temperature", self.temperature),
            ("power", self.power),
            ("p_sat", self.p_sat),
            ("carrier_frequency", self.carrier_frequency),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ParamsError::Invalid(format!("{name} is not finite")));
            }
        }
        if self.kappa_c1 < 0.0 || self.kappa_c2 < 0.0 || self.kappa_c1 + self.kappa_c2 <= 0.0 {
            return Err(ParamsError::Invalid("port couplings must be non-negative with positive sum".into()));
        }
        if self.kappa < self.kappa_c1 + self.kappa_c2 {
            return Err(ParamsError::Invalid("kappa must be at least kappa_c1 + kappa_c2".into()));
        }
        if self.gamma_spin <= 0.0 {
            return Err(ParamsError::Invalid("gamma_spin must be positive".into()));
        }
        if self.gamma_s <= 0.0 {
            return Err(ParamsError::Invalid("gamma_s must be positive".into()));
        }
        if self.g < 0.0 {
            return Err(ParamsError::Invalid("g must be non-negative".into()));
        }
        if self.loop_phase.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(ParamsError::Invalid("|loop_phase| must be below pi/2".into()));
        }
        if self.hyperfine.is_empty() {
            return Err(ParamsError::Invalid("at least one hyperfine line is required".into()));
        }
        let wsum: f64 = self.hyperfine.iter().map(|l| l.weight).sum();
        if self.hyperfine.iter().any(|l| l.weight < 0.0 || !l.detuning.is_finite()) || (wsum - 1.0).abs() > 1e-9 {
            return Err(ParamsError::Invalid(format!("hyperfine weights must be non-negative and sum to 1 (got {wsum})")));
        }
        if self.temperature < 0.0 || self.power < 0.0 || self.p_sat <= 0.0 || self.carrier_frequency <= 0.0 {
            return Err(ParamsError::Invalid("temperature, power must be >= 0; p_sat, carrier_frequency > 0".into()));
        }
        Ok(())
    }

    /// Names accepted by [`SystemParams::set`] and the text format.
    pub const KEYS: [&'static str; 17] = [
        "omega_c",
        "delta_s",
        "kappa",
        "kappa_c1",
        "kappa_c2",
        "gain",
        "gamma_s",
        "g",
        "gamma_spin",
        "loop_phase",
        "delta_g_offset",
        "delta_g",
        "hyperfine",
        "temperature",
        "power",
        "p_sat",
        "carrier_frequency",
    ];

    /// Assigns one field from its textual value. `delta_g` is accepted as a
    /// derived key and adjusts `g`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        let ang = |v: &str| parse_angular(v).map_err(SetError::Value);
        match key {
            "omega_c" => self.omega_c = ang(value)?,
            "delta_s" => self.delta_s = ang(value)?,
            "kappa" => self.kappa = ang(value)?,
            "kappa_c1" => self.kappa_c1 = ang(value)?,
            "kappa_c2" => self.kappa_c2 = ang(value)?,
            "gain" => self.gain = ang(value)?,
            "gamma_s" => self.gamma_s = ang(value)?,
            "g" => self.g = ang(value)?,
            "gamma_spin" => self.gamma_spin = ang(value)?,
            "loop_phase" => self.loop_phase = ang(value)?,
            "delta_g_offset" => self.delta_g_offset = ang(value)?,
            "delta_g" => {
                let dg = ang(value)?;
                self.g = self.gamma_spin / 2.0 - self.delta_g_offset - dg;
            }
            "hyperfine" => self.hyperfine = parse_hyperfine(value).map_err(SetError::Value)?,
            "temperature" => {
                self.temperature = value.trim().parse().map_err(|e| SetError::Value(format!("invalid number `{}`: {e}", value.trim())))?
            }
            "power" => self.power = parse_power(value).map_err(SetError::Value)?,
            "p_sat" => self.p_sat = parse_power(value).map_err(SetError::Value)?,
            "carrier_frequency" => self.carrier_frequency = ang(value)?,
            _ => return Err(SetError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses the flat text format on top of `base`; keys not present keep
    /// their `base` value.
    pub fn parse_onto(base: &SystemParams, text: &str) -> Result<Self, ParamsError> {
        let mut p = base.clone();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ParamsError::Parse { line: line_no, message: format!("expected `key = value`, found `{line}`") });
            };
            let key = k.trim();
            p.set(key, v).map_err(|e| match e {
                SetError::UnknownKey(key) => ParamsError::UnknownKey { line: line_no, key },
                SetError::Value(message) => ParamsError::Parse { line: line_no, message },
            })?;
        }
        p.validate()?;
        Ok(p)
    }

    /// Parses a complete document; missing keys fall back to the `fig23` preset.
    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        Self::parse_onto(&Self::fig23(), text)
    }

    /// Writes every field, one per line, with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# SystemParams: angular rates in rad/s, powers in W\n");
        let fields = [
            ("omega_c", self.omega_c),
            ("delta_s", self.delta_s),
            ("kappa", self.kappa),
            ("kappa_c1", self.kappa_c1),
            ("kappa_c2", self.kappa_c2),
            ("gain", self.gain),
            ("gamma_s", self.gamma_s),
            ("g", self.g),
            ("gamma_spin", self.gamma_spin),
            ("loop_phase", self.loop_phase),
            ("delta_g_offset", self.delta_g_offset),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let hf: Vec<String> = self.hyperfine.iter().map(|l| format!("{:?}:{:?}", l.detuning, l.weight)).collect();
        let _ = writeln!(s, "hyperfine = {}", hf.join(", "));
        let _ = writeln!(s, "temperature = {:?}", self.temperature);
        let _ = writeln!(s, "power = {:?}", self.power);
        let _ = writeln!(s, "p_sat = {:?}", self.p_sat);
        let _ = writeln!(s, "carrier_frequency = {:?}", self.carrier_frequency);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetError {
    UnknownKey(String),
    Value(String),
}

impl std::fmt::Display for SetError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetError::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            SetError::Value(m) => f.write_str(m),
        }
    }
}

fn parse_hyperfine(value: &str) -> Result<Vec<HyperfineLine>, String> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (d, w) = item
                .split_once(':')
                .ok_or_else(|| format!("hyperfine entry `{}` must be `detuning:weight`", item.trim()))?;
            Ok(HyperfineLine {
                detuning: parse_angular(d)?,
                weight: w.trim().parse().map_err(|e| format!("invalid weight `{}`: {e}", w.trim()))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        SystemParams::fig23().validate().unwrap();
        SystemParams::fig4().validate().unwrap();
        SystemParams::fig23_narrow_cavity().validate().unwrap();
    }

    #[test]
    fn fitted_cooperativity_near_two() {
        let c = SystemParams::fig23().cooperativity();
        assert!((c - 1.92).abs() < 0.01, "{c}");
    }

    #[test]
    fn delta_g_definition() {
        let mut p = SystemParams::fig23();
        p.delta_g_offset = hz(2e3);
        assert_eq!(p.delta_g(), p.gamma_spin / 2.0 - p.g - p.delta_g_offset);
        let q = p.with_delta_g(hz(1e3));
        assert!((q.delta_g() - hz(1e3)).abs() < 1e-6);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(-40.0) - 1e-7).abs() < 1e-20);
        assert!((parse_power("-40dBm").unwrap() - 1e-7).abs() < 1e-20);
        assert_eq!(parse_power("2.5e-8").unwrap(), 2.5e-8);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn angular_shorthand() {
        assert_eq!(parse_angular("2pi*1e3").unwrap(), hz(1e3));
        assert_eq!(parse_angular("-2pi * 5e3").unwrap(), -hz(5e3));
        assert_eq!(parse_angular("12.5").unwrap(), 12.5);
    }

    #[test]
    fn text_round_trip() {
        let p = SystemParams::fig4().with_hyperfine_triplet(hz(2.1e6));
        let q = SystemParams::parse(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = SystemParams::parse("# header\nkappa = 1e6\nbogus = 3\n").unwrap_err();
        assert_eq!(err, ParamsError::UnknownKey { line: 3, key: "bogus".into() });
    }

    #[test]
    fn malformed_line_reports_line() {
        let err = SystemParams::parse("g = 2pi*220e3\ngain\n").unwrap_err();
        assert!(matches!(err, ParamsError::Parse { line: 2, .. }));
    }

    #[test]
    fn invalid_physics_rejected() {
        let mut p = SystemParams::fig23();
        p.kappa = p.kappa_c1;
        assert!(p.validate().is_err());
        let mut p = SystemParams::fig23();
        p.hyperfine[0].weight = 0.5;
        assert!(p.validate().is_err());
    }
}
