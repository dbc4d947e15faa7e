//! Uniformly sampled signals shared by the integrator and the signal chain.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Field,
    Voltage,
    Phase,
    Magnetic,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Field => "field",
            SeriesKind::Voltage => "voltage",
            SeriesKind::Phase => "phase",
            SeriesKind::Magnetic => "magnetic",
        }
    }
}

impl FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field" => Ok(SeriesKind::Field),
            "voltage" => Ok(SeriesKind::Voltage),
            "phase" => Ok(SeriesKind::Phase),
            "magnetic" => Ok(SeriesKind::Magnetic),
            _ => Err(Error::InvalidInput(format!("unknown series kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Samples,
    sample_rate: f64,
    t0: f64,
    kind: SeriesKind,
}

impl TimeSeries {
    pub fn new(samples: Samples, sample_rate: f64, t0: f64, kind: SeriesKind) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidInput(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidInput("a time series needs at least two samples".into()));
        }
        Ok(Self { samples, sample_rate, t0, kind })
    }

    pub fn real(v: Vec<f64>, sample_rate: f64, t0: f64, kind: SeriesKind) -> Result<Self> {
        Self::new(Samples::Real(v), sample_rate, t0, kind)
    }

    pub fn complex(v: Vec<Complex64>, sample_rate: f64, t0: f64, kind: SeriesKind) -> Result<Self> {
        Self::new(Samples::Complex(v), sample_rate, t0, kind)
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match &self.samples {
            Samples::Real(v) => Some(v),
            Samples::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&[Complex64]> {
        match &self.samples {
            Samples::Complex(v) => Some(v),
            Samples::Real(_) => None,
        }
    }

    /// Sub-range `[start, end)` keeping rate, kind and absolute timing.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        let end = end.min(self.len());
        let samples = match &self.samples {
            Samples::Real(v) => Samples::Real(v[start.min(end)..end].to_vec()),
            Samples::Complex(v) => Samples::Complex(v[start.min(end)..end].to_vec()),
        };
        Self::new(samples, self.sample_rate, self.time(start), self.kind)
    }

    /// Two-column (`t,value`) or three-column (`t,re,im`) CSV with a
    /// `# sample_rate=<Hz> t0=<s> kind=<kind>` header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# sample_rate={:?} t0={:?} kind={}\n", self.sample_rate, self.t0, self.kind.as_str());
        match &self.samples {
            Samples::Real(v) => {
                s.push_str("t,value\n");
                for (i, x) in v.iter().enumerate() {
                    let _ = writeln!(s, "{:?},{:?}", self.time(i), x);
                }
            }
            Samples::Complex(v) => {
                s.push_str("t,re,im\n");
                for (i, z) in v.iter().enumerate() {
                    let _ = writeln!(s, "{:?},{:?},{:?}", self.time(i), z.re, z.im);
                }
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("time-series CSV: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let header = header.strip_prefix('#').ok_or_else(|| bad("missing `#` header"))?;
        let (mut rate, mut t0, mut kind) = (None, None, None);
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("sample_rate", v)) => rate = v.parse::<f64>().ok(),
                Some(("t0", v)) => t0 = v.parse::<f64>().ok(),
                Some(("kind", v)) => kind = Some(v.parse::<SeriesKind>()?),
                _ => return Err(bad(&format!("unexpected header token `{tok}`"))),
            }
        }
        let cols = lines.next().ok_or_else(|| bad("missing column line"))?;
        let complex = match cols.trim() {
            "t,value" => false,
            "t,re,im" => true,
            other => return Err(bad(&format!("unexpected columns `{other}`"))),
        };
        let mut re = Vec::new();
        let mut cz = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(&format!("line {}: {e}", n + 3)))?;
            match (complex, f.as_slice()) {
                (false, [_, v]) => re.push(*v),
                (true, [_, a, b]) => cz.push(Complex64::new(*a, *b)),
                _ => return Err(bad(&format!("line {}: wrong column count", n + 3))),
            }
        }
        let samples = if complex { Samples::Complex(cz) } else { Samples::Real(re) };
        Self::new(
            samples,
            rate.ok_or_else(|| bad("missing sample_rate"))?,
            t0.ok_or_else(|| bad("missing t0"))?,
            kind.ok_or_else(|| bad("missing kind"))?,
        )
    }
}
