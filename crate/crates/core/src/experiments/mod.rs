//! Named, reproducible scenarios built from the lower layers. Each emits
//! plot-ready CSV tables, a plain-text summary and a manifest.
//!
//! Output layout: `<out>/<experiment>/<table>.csv`, `summary.txt` and
//! `manifest.json` in the same directory. Nothing time- or host-dependent is
//! written, so reruns with the same spec are byte-identical.

mod fig1e;
mod fig2de;
mod fig3;
mod fig4;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exec::Execution;
use crate::params::SystemParams;
use crate::{Error, Result};

pub use fig1e::run_fig1e;
pub use fig2de::run_fig2de;
pub use fig3::run_fig3;
pub use fig4::run_fig4;

pub const EXPERIMENTS: [&str; 4] = ["fig1e", "fig2de", "fig3", "fig4"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.unwrap_or(f64::NAN))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column; text cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().map(|c| c.as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// A swept input of an experiment, in the units its name states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub params: SystemParams,
    pub sweeps: Vec<Sweep>,
    /// Tables to write; empty means all.
    pub outputs: Vec<String>,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl ExperimentSpec {
    /// Default spec of a named experiment: its preset and sweeps.
    pub fn named(name: &str, seed: u64) -> Result<Self> {
        let (params, sweeps) = match name {
            "fig1e" => (SystemParams::fig23(), fig1e::default_sweeps()),
            "fig2de" => (SystemParams::fig23(), fig2de::default_sweeps()),
            "fig3" => (SystemParams::fig23(), fig3::default_sweeps()),
            "fig4" => (SystemParams::fig4(), fig4::default_sweeps()),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown experiment `{name}` (expected one of {})",
                    EXPERIMENTS.join(", ")
                )))
            }
        };
        Ok(Self { name: name.into(), params, sweeps, outputs: Vec::new(), seed, exec: Execution::Auto })
    }

    pub fn with_params(mut self, p: SystemParams) -> Self {
        self.params = p;
        self
    }

    /// Replaces (or adds) a sweep.
    pub fn with_sweep(mut self, name: &str, values: Vec<f64>) -> Self {
        self.sweeps.retain(|s| s.name != name);
        self.sweeps.push(Sweep { name: name.into(), values });
        self
    }

    pub fn sweep(&self, name: &str) -> Result<&[f64]> {
        self.sweeps
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
            .ok_or_else(|| Error::InvalidInput(format!("experiment {} needs sweep `{name}`", self.name)))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (i, s) in self.sweeps.iter().enumerate() {
            if s.values.len() < 2 {
                return Err(Error::InvalidInput(format!("sweep `{}` needs at least 2 points", s.name)));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("sweep `{}` has a non-finite value", s.name)));
            }
            if self.sweeps[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::InvalidInput(format!("sweep `{}` given twice", s.name)));
            }
        }
        Ok(())
    }

    /// SHA-256 over the parameter text, sweeps and seed.
    pub fn inputs_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update(self.params.to_text().as_bytes());
        h.update(serde_json::to_vec(&self.sweeps).expect("sweeps serialize"));
        h.update(self.seed.to_le_bytes());
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub tables: Vec<Table>,
    /// Headline numbers, in a fixed order.
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    fn new(name: &str) -> Self {
        Self { name: name.into(), tables: Vec::new(), metrics: Vec::new(), notes: Vec::new() }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.push((key.into(), v));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("experiment = {}\n", self.name);
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s
    }
}

/// Runs the experiment named in `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    match spec.name.as_str() {
        "fig1e" => run_fig1e(spec),
        "fig2de" => run_fig2de(spec),
        "fig3" => run_fig3(spec),
        "fig4" => run_fig4(spec),
        other => Err(Error::InvalidInput(format!("unknown experiment `{other}`"))),
    }
}

#[derive(Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    seed: u64,
    inputs_sha256: String,
    versions: Vec<(&'static str, &'static str)>,
    files: Vec<ManifestFile>,
}

/// Writes tables, summary and manifest under `<out>/<name>/` and returns
/// the written paths.
pub fn write_output(out: &Path, spec: &ExperimentSpec, result: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    let dir = out.join(&result.name);
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut paths = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(&name);
        std::fs::write(&path, body.as_bytes())?;
        files.push(ManifestFile { name, sha256: hex(&Sha256::digest(body.as_bytes())) });
        paths.push(path);
        Ok(())
    };
    for t in &result.tables {
        if spec.outputs.is_empty() || spec.outputs.iter().any(|o| o == &t.name) {
            emit(format!("{}.csv", t.name), t.to_csv())?;
        }
    }
    emit("summary.txt".into(), result.summary())?;
    let manifest = Manifest {
        experiment: &result.name,
        seed: spec.seed,
        inputs_sha256: spec.inputs_hash(),
        versions: vec![("bpsim-core", env!("CARGO_PKG_VERSION"))],
        files,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    paths.push(path);
    Ok(paths)
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub(crate) fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv() {
        let mut t = Table::new("x", &["a", "b", "c"]);
        t.push(vec![1.5.into(), 2usize.into(), "up".into()]);
        t.push(vec![None.into(), true.into(), "down".into()]);
        assert_eq!(t.to_csv(), "a,b,c\n1.5,2,up\nNaN,1,down\n");
        assert_eq!(t.numbers("a").unwrap()[0], 1.5);
    }

    #[test]
    fn spec_validation() {
        let s = ExperimentSpec::named("fig1e", 0).unwrap();
        s.validate().unwrap();
        assert!(s.clone().with_sweep("delta_g_hz", vec![1.0]).validate().is_err());
        assert!(ExperimentSpec::named("nope", 0).is_err());
        let mut d = s.clone();
        d.sweeps.push(d.sweeps[0].clone());
        assert!(d.validate().is_err());
        assert_ne!(s.inputs_hash(), s.clone().with_sweep("delta_g_hz", vec![1.0, 2.0]).inputs_hash());
    }

    #[test]
    fn geomspace_ends() {
        let g = geomspace(1.0, 100.0, 3);
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
    }
}
