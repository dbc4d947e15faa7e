//! Welch power spectral density.

use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::exec::{map_indexed, Execution};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumUnits {
    #[serde(rename = "V^2/Hz")]
    VoltsSquaredPerHz,
    #[serde(rename = "rad^2/Hz")]
    RadSquaredPerHz,
    /// Frequency-noise density of `dphi/dt`.
    #[serde(rename = "(rad/s)^2/Hz")]
    RadPerSecondSquaredPerHz,
    #[serde(rename = "T^2/Hz")]
    TeslaSquaredPerHz,
    #[serde(rename = "V/sqrt(Hz)")]
    VoltsPerRootHz,
    #[serde(rename = "rad/sqrt(Hz)")]
    RadPerRootHz,
    #[serde(rename = "(rad/s)/sqrt(Hz)")]
    RadPerSecondPerRootHz,
    #[serde(rename = "T/sqrt(Hz)")]
    TeslaPerRootHz,
}

impl SpectrumUnits {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumUnits::VoltsSquaredPerHz => "V^2/Hz",
            SpectrumUnits::RadSquaredPerHz => "rad^2/Hz",
            SpectrumUnits::RadPerSecondSquaredPerHz => "(rad/s)^2/Hz",
            SpectrumUnits::TeslaSquaredPerHz => "T^2/Hz",
            SpectrumUnits::VoltsPerRootHz => "V/sqrt(Hz)",
            SpectrumUnits::RadPerRootHz => "rad/sqrt(Hz)",
            SpectrumUnits::RadPerSecondPerRootHz => "(rad/s)/sqrt(Hz)",
            SpectrumUnits::TeslaPerRootHz => "T/sqrt(Hz)",
        }
    }

    pub fn is_amplitude(self) -> bool {
        matches!(
            self,
            SpectrumUnits::VoltsPerRootHz
                | SpectrumUnits::RadPerRootHz
                | SpectrumUnits::RadPerSecondPerRootHz
                | SpectrumUnits::TeslaPerRootHz
        )
    }

    /// Power units of a series kind.
    pub fn power_for(kind: crate::dynamics::SeriesKind) -> Self {
        use crate::dynamics::SeriesKind::*;
        match kind {
            Voltage | Field => SpectrumUnits::VoltsSquaredPerHz,
            Phase => SpectrumUnits::RadSquaredPerHz,
            Magnetic => SpectrumUnits::TeslaSquaredPerHz,
        }
    }

    fn amplitude(self) -> Self {
        match self {
            SpectrumUnits::VoltsSquaredPerHz => SpectrumUnits::VoltsPerRootHz,
            SpectrumUnits::RadSquaredPerHz => SpectrumUnits::RadPerRootHz,
            SpectrumUnits::RadPerSecondSquaredPerHz => SpectrumUnits::RadPerSecondPerRootHz,
            SpectrumUnits::TeslaSquaredPerHz => SpectrumUnits::TeslaPerRootHz,
            a => a,
        }
    }
}

/// One-sided spectral density on a uniform Hz grid starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub units: SpectrumUnits,
    /// Bin spacing (Hz).
    pub resolution_bw: f64,
}

impl SpectrumEstimate {
    /// Square root of a power density; amplitude densities pass through.
    pub fn to_asd(&self) -> Self {
        if self.units.is_amplitude() {
            return self.clone();
        }
        Self {
            freqs: self.freqs.clone(),
            values: self.values.iter().map(|v| v.sqrt()).collect(),
            units: self.units.amplitude(),
            resolution_bw: self.resolution_bw,
        }
    }

    /// Multiplies every value by `factor` and relabels the units.
    pub fn scaled(&self, factor: f64, units: SpectrumUnits) -> Self {
        Self {
            freqs: self.freqs.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            units,
            resolution_bw: self.resolution_bw,
        }
    }

    /// Index of the bin nearest `f`.
    pub fn bin(&self, f: f64) -> usize {
        ((f / self.resolution_bw).round().max(0.0) as usize).min(self.freqs.len() - 1)
    }

    /// Indices of bins whose centres lie in `[lo, hi]`; the nearest bin when
    /// the band is narrower than one bin.
    pub fn band_indices(&self, lo: f64, hi: f64) -> Result<std::ops::Range<usize>> {
        let top = *self.freqs.last().expect("non-empty spectrum");
        if !(lo <= hi) || lo < 0.0 || hi > top + 0.5 * self.resolution_bw {
            return Err(Error::BandOutOfRange { lo, hi });
        }
        let eps = 1e-9 * self.resolution_bw;
        let a = ((lo - eps) / self.resolution_bw).ceil().max(0.0) as usize;
        let b = (((hi + eps) / self.resolution_bw).floor() as usize).min(self.freqs.len() - 1);
        if a > b {
            let k = self.bin(0.5 * (lo + hi));
            return Ok(k..k + 1);
        }
        Ok(a..b + 1)
    }

    /// Mean density in `[lo, hi]`.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Result<f64> {
        let r = self.band_indices(lo, hi)?;
        let n = r.len() as f64;
        Ok(self.values[r].iter().sum::<f64>() / n)
    }

    /// `freq_hz,value,units` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,value,units\n");
        for (f, v) in self.freqs.iter().zip(&self.values) {
            let _ = writeln!(s, "{:?},{:?},{}", f, v, self.units.as_str());
        }
        s
    }
}

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect()
}

/// Welch estimate with a periodic Hann window, per-segment mean removal and
/// density scaling, so `sum(values) * resolution_bw` equals the variance of
/// a stationary input. Complex input is reduced to its real part.
pub fn psd(ts: &TimeSeries, segment_length: usize, overlap: usize) -> Result<SpectrumEstimate> {
    psd_with(ts, segment_length, overlap, Execution::Auto)
}

pub fn psd_with(ts: &TimeSeries, segment_length: usize, overlap: usize, exec: Execution) -> Result<SpectrumEstimate> {
    let x: Vec<f64> = match ts.as_real() {
        Some(v) => v.to_vec(),
        None => ts.as_complex().expect("real or complex").iter().map(|z| z.re).collect(),
    };
    let units = SpectrumUnits::power_for(ts.kind());
    welch(&x, ts.sample_rate(), segment_length, overlap, units, exec)
}

/// [`psd`] on a bare sample slice.
pub fn welch(
    x: &[f64],
    sample_rate: f64,
    segment_length: usize,
    overlap: usize,
    units: SpectrumUnits,
    exec: Execution,
) -> Result<SpectrumEstimate> {
    let n = segment_length;
    if n > x.len() {
        return Err(Error::SegmentTooLong { segment: n, len: x.len() });
    }
    if n < 2 || overlap >= n {
        return Err(Error::InvalidInput(format!("need 2 <= segment ({n}) and overlap ({overlap}) < segment")));
    }
    let hop = n - overlap;
    let count = (x.len() - n) / hop + 1;
    let w = hann(n);
    let w2: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let starts: Vec<usize> = (0..count).map(|k| k * hop).collect();
    let half = n / 2 + 1;
    let periodograms = map_indexed(&starts, exec, |_, &s| {
        let seg = &x[s..s + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex64> = seg.iter().zip(&w).map(|(v, w)| Complex64::new((v - mean) * w, 0.0)).collect();
        fft.process(&mut buf);
        buf[..half].iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>()
    });
    // Index-ordered reduction keeps the sum independent of thread count.
    let mut acc = vec![0.0; half];
    for p in &periodograms {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let norm = 1.0 / (count as f64 * sample_rate * w2);
    let values: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            v * norm * one_sided
        })
        .collect();
    let df = sample_rate / n as f64;
    Ok(SpectrumEstimate { freqs: (0..half).map(|k| k as f64 * df).collect(), values, units, resolution_bw: df })
}
