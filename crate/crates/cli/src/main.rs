//! `bpsim` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (the error name goes to
//! standard error), 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpsim::dynamics::{
    adiabatic_dwell, encircle_batch, fit_power_law, sweep_hysteresis, transition_edge_sweep, Direction,
    ParameterTrajectory, SimConfig,
};
use bpsim::experiments::{self, Cell, ExperimentSpec, Table};
use bpsim::metrology::{analytic_phase_noise, leeson_bound, magnetometry, ChainConfig, TestTone};
use bpsim::model::{
    bistable_map, fold_points, max_responsivity, polariton_eigenvalues, reflection_spectrum, steady_state_solutions,
    BranchLabel,
};
use bpsim::params::{hz, parse_power, to_hz, SystemParams, GAMMA_E};
use bpsim::{Error, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bpsim", version, about = "Spin ensemble coupled to a Van der Pol oscillator near its bistable transition point")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Parameter file (`key = value` lines, `#` comments), applied on top of the preset
    #[arg(long, global = true, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Base parameter set [default: fig23, or the experiment's own]
    #[arg(long, global = true, value_parser = ["fig23", "fig4", "fig23-narrow"])]
    preset: Option<String>,
    /// Override one parameter, e.g. `--set delta_s=2pi*10e3` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; without it tables go to standard output
    #[arg(long, global = true, env = "BPSIM_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Table format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Dir {
    Cw,
    Ccw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Start {
    Upper,
    Lower,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reflection spectrum and polariton eigenvalues of the passive system
    Spectrum {
        /// Lower probe detuning (Hz)
        #[arg(long, default_value_t = -1e6, allow_negative_numbers = true)]
        from_hz: f64,
        /// Upper probe detuning (Hz)
        #[arg(long, default_value_t = 1e6, allow_negative_numbers = true)]
        to_hz: f64,
        /// Number of probe points
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Steady-state branches at the configured detuning
    SteadyState,
    /// Root and stable-branch counts over a (Delta_g, Delta_s) grid
    BistableMap {
        /// Delta_g range (Hz)
        #[arg(long, default_value_t = -60e3, allow_negative_numbers = true)]
        dg_min_hz: f64,
        #[arg(long, default_value_t = 20e3, allow_negative_numbers = true)]
        dg_max_hz: f64,
        /// Delta_s range (Hz)
        #[arg(long, default_value_t = -60e3, allow_negative_numbers = true)]
        ds_min_hz: f64,
        #[arg(long, default_value_t = 60e3, allow_negative_numbers = true)]
        ds_max_hz: f64,
        /// Grid points per axis
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Time-domain up/down sweep of the spin detuning
    Hysteresis {
        /// Half span of the sweep (Hz)
        #[arg(long, default_value_t = 40e3)]
        span_hz: f64,
        /// Grid step (Hz)
        #[arg(long, default_value_t = 2e3)]
        step_hz: f64,
        /// Dwell per step (s); default is adiabatic for the configured Delta_g
        #[arg(long)]
        dwell: Option<f64>,
    },
    /// Closed loop around the BP in the (Delta_s, Delta_g) plane
    Encircle {
        #[arg(long, value_enum, default_value_t = Dir::Cw)]
        direction: Dir,
        #[arg(long, value_enum, default_value_t = Start::Upper)]
        start: Start,
        /// Far corner in Delta_s (Hz)
        #[arg(long, default_value_t = 60e3)]
        ds_far_hz: f64,
        /// Far corner in Delta_g (Hz)
        #[arg(long, default_value_t = 30e3)]
        dg_far_hz: f64,
        /// Time per leg (s)
        #[arg(long, default_value_t = 1e-3)]
        leg: f64,
        /// Number of seeds, starting at --seed
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Switching delay after a detuning step across the upper fold
    TransitionEdge {
        /// Start distance below the fold, as a fraction of the hysteresis width
        #[arg(long, default_value_t = 1e-4)]
        fold_distance: f64,
        /// Step sizes as fractions of the hysteresis width
        #[arg(long, value_delimiter = ',', default_value = "0.03,0.06,0.12,0.24,0.48")]
        steps: Vec<f64>,
        /// Give-up time (s)
        #[arg(long, default_value_t = 0.05)]
        timeout: f64,
    },
    /// Analytic phase-noise ratio and peak responsivity against Delta_g
    Noise {
        /// Delta_g range (Hz), log-spaced
        #[arg(long, default_value_t = 600.0)]
        dg_min_hz: f64,
        #[arg(long, default_value_t = 46.1e3)]
        dg_max_hz: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Simulated read-out: heterodyne, demodulation, S, N and sensitivity
    Magnetometry {
        /// Recorded span (s)
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
        /// Test tone frequency (Hz)
        #[arg(long, default_value_t = 3e3)]
        tone_hz: f64,
        /// Test tone RMS field (T)
        #[arg(long, default_value_t = 0.2e-9)]
        tone_t: f64,
    },
    /// Leeson-type sensitivity floor
    Leeson {
        /// Loop linewidth (Hz)
        #[arg(long = "f_l", default_value_t = 155e3)]
        f_l: f64,
        /// Temperature (K)
        #[arg(long, default_value_t = 290.0)]
        temp: f64,
        /// Oscillator power, watts or `-40dBm`
        #[arg(long, default_value = "-40dBm", allow_hyphen_values = true, value_parser = parse_power)]
        power: f64,
        /// Gyromagnetic ratio (Hz/T)
        #[arg(long, default_value_t = GAMMA_E)]
        gamma: f64,
    },
    /// Named scenario writing CSV tables, a summary and a manifest
    Experiment {
        /// One of fig1e, fig2de, fig3, fig4
        name: String,
        /// Replace a sweep: `NAME=v1,v2,...` (repeatable)
        #[arg(long = "sweep", value_name = "NAME=VALUES")]
        sweeps: Vec<String>,
        /// Write only these tables (repeatable)
        #[arg(long = "only", value_name = "TABLE")]
        only: Vec<String>,
    },
}

/// Failure with its exit code.
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Params(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Preset (or `fallback`), then the params file, then `--set` overrides.
fn load_params(g: &Global, fallback: &SystemParams) -> Outcome<SystemParams> {
    let base = match &g.preset {
        Some(name) => SystemParams::preset(name).ok_or_else(|| Failure::Usage(format!("unknown preset `{name}`")))?,
        None => fallback.clone(),
    };
    let mut p = match &g.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read params file {}: {e}", path.display())))?;
            SystemParams::parse_onto(&base, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    for kv in &g.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        p.set(k.trim(), v).map_err(|e| Failure::Usage(format!("--set {kv}: {e}")))?;
    }
    p.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(p)
}

fn table_json(t: &Table) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = t
        .rows
        .iter()
        .map(|r| {
            let m: serde_json::Map<String, serde_json::Value> = t
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| {
                    let j = match v {
                        Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
                        Cell::Int(i) => (*i).into(),
                        Cell::Text(s) => s.clone().into(),
                    };
                    (c.clone(), j)
                })
                .collect();
            serde_json::Value::Object(m)
        })
        .collect();
    serde_json::json!({ "table": t.name, "rows": rows })
}

fn render(t: &Table, f: Format) -> String {
    match f {
        Format::Csv => t.to_csv(),
        Format::Json => serde_json::to_string_pretty(&table_json(t)).expect("json") + "\n",
    }
}

/// Writes each table to `<out>/<table>.<ext>` or, without `--out`, to
/// standard output separated by a blank line.
fn emit(g: &Global, tables: &[Table]) -> Outcome<()> {
    let ext = match g.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.into()))?;
            for t in tables {
                let path = dir.join(format!("{}.{ext}", t.name));
                std::fs::write(&path, render(t, g.format)).map_err(|e| Failure::Runtime(e.into()))?;
            }
        }
        None => {
            let parts: Vec<String> = tables.iter().map(|t| render(t, g.format)).collect();
            print!("{}", parts.join("\n"));
        }
    }
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn exec() -> Execution {
    Execution::Auto
}

fn run(cli: Cli) -> Outcome<()> {
    let g = &cli.global;
    let p = load_params(g, &SystemParams::fig23())?;
    bpsim::exec::set_threads(g.threads);
    match &cli.command {
        Command::Spectrum { from_hz, to_hz: hi, points } => {
            if *points < 2 {
                return Err(Failure::Usage("--points must be at least 2".into()));
            }
            let f = linspace(*from_hz, *hi, *points);
            let probe: Vec<f64> = f.iter().map(|&x| hz(x)).collect();
            let r = reflection_spectrum(&p, &probe);
            let mut t = Table::new("spectrum", &["freq_hz", "reflection"]);
            for (x, v) in f.iter().zip(&r) {
                t.push(vec![(*x).into(), (*v).into()]);
            }
            let ev = polariton_eigenvalues(&p);
            let mut e = Table::new("eigenvalues", &["index", "freq_hz", "decay_hz"]);
            for (i, z) in ev.eigenvalues.iter().enumerate() {
                e.push(vec![i.into(), to_hz(z.im).into(), to_hz(-z.re).into()]);
            }
            emit(g, &[t, e])
        }
        Command::SteadyState => {
            let bs = steady_state_solutions(&p)?;
            let mut t = Table::new("steady_state", &["delta_hz", "photon_number", "stable", "label", "multiplicity"]);
            for b in &bs {
                t.push(vec![
                    to_hz(b.delta).into(),
                    b.photon_number.into(),
                    b.stable.into(),
                    b.branch_label.as_str().into(),
                    (b.multiplicity as u64).into(),
                ]);
            }
            emit(g, &[t])
        }
        Command::BistableMap { dg_min_hz, dg_max_hz, ds_min_hz, ds_max_hz, points } => {
            if *points < 2 {
                return Err(Failure::Usage("--points must be at least 2".into()));
            }
            let dg: Vec<f64> = linspace(*dg_min_hz, *dg_max_hz, *points);
            let ds: Vec<f64> = linspace(*ds_min_hz, *ds_max_hz, *points);
            let m = bistable_map(
                &p,
                &dg.iter().map(|&x| hz(x)).collect::<Vec<_>>(),
                &ds.iter().map(|&x| hz(x)).collect::<Vec<_>>(),
                exec(),
            );
            let mut t = Table::new("bistable_map", &["delta_g_hz", "delta_s_hz", "roots", "stable", "mean_delta_hz"]);
            for (i, a) in dg.iter().enumerate() {
                for (j, b) in ds.iter().enumerate() {
                    t.push(vec![
                        (*a).into(),
                        (*b).into(),
                        (m.root_count[i][j] as u64).into(),
                        (m.stable_count[i][j] as u64).into(),
                        m.mean_delta[i][j].map(to_hz).into(),
                    ]);
                }
            }
            emit(g, &[t])
        }
        Command::Hysteresis { span_hz, step_hz, dwell } => {
            if !(*step_hz > 0.0 && *span_hz > 0.0) {
                return Err(Failure::Usage("--span-hz and --step-hz must be positive".into()));
            }
            let n = (span_hz / step_hz).round() as i64;
            let grid: Vec<f64> = (-n..=n).map(|k| hz(k as f64 * step_hz)).collect();
            let cfg = SimConfig::for_params(&p).with_seed(g.seed);
            let sw = sweep_hysteresis(&p, &grid, dwell.unwrap_or_else(|| adiabatic_dwell(&p)), &cfg, exec())?;
            let mut t = Table::new("hysteresis", &["delta_s_hz", "up_hz", "down_hz", "up_label", "down_label"]);
            for i in 0..sw.delta_s.len() {
                t.push(vec![
                    to_hz(sw.delta_s[i]).into(),
                    to_hz(sw.up[i]).into(),
                    to_hz(sw.down[i]).into(),
                    sw.up_labels[i].as_str().into(),
                    sw.down_labels[i].as_str().into(),
                ]);
            }
            let mut s = Table::new("hysteresis_summary", &["up_jump_hz", "down_jump_hz", "jump_separation_hz", "discriminant_width_hz"]);
            s.push(vec![
                sw.up_jump.map(to_hz).into(),
                sw.down_jump.map(to_hz).into(),
                sw.jump_separation().map(to_hz).into(),
                fold_points(&p).map(|f| to_hz(f.width())).into(),
            ]);
            emit(g, &[t, s])
        }
        Command::Encircle { direction, start, ds_far_hz, dg_far_hz, leg, runs } => {
            if *runs == 0 {
                return Err(Failure::Usage("--runs must be at least 1".into()));
            }
            let dir = match direction {
                Dir::Cw => Direction::Clockwise,
                Dir::Ccw => Direction::Counterclockwise,
            };
            let label = match start {
                Start::Upper => BranchLabel::Upper,
                Start::Lower => BranchLabel::Lower,
            };
            let traj = ParameterTrajectory::bp_loop(p.delta_g(), hz(*ds_far_hz), hz(*dg_far_hz), *leg, dir)?;
            let cfgs: Vec<SimConfig> =
                (0..*runs).map(|k| SimConfig::for_params(&p).with_seed(g.seed.wrapping_add(k))).collect();
            let res = encircle_batch(&p, &traj, label, &cfgs, exec());
            let mut t = Table::new("encircle", &["seed", "final_branch", "jumps", "first_jump_s"]);
            for (c, r) in cfgs.iter().zip(res) {
                let r = r?;
                t.push(vec![
                    c.rng_seed.into(),
                    r.final_branch.as_str().into(),
                    r.jumps().into(),
                    r.jump_times.first().copied().into(),
                ]);
            }
            emit(g, &[t])
        }
        Command::TransitionEdge { fold_distance, steps, timeout } => {
            let folds = fold_points(&p).ok_or(Error::NoTransition)?;
            let w = folds.width();
            let d = fold_distance * w;
            let dps: Vec<f64> = steps.iter().map(|f| d + f * w).collect();
            let mut cfg = SimConfig::for_params(&p).noiseless();
            cfg.duration = *timeout;
            let edges = transition_edge_sweep(&p, d, &dps, &cfg, exec())?;
            let mut t = Table::new("transition_edge", &["delta_p_hz", "delay_s", "f_origin_hz", "f_dest_hz"]);
            for e in &edges {
                t.push(vec![to_hz(e.delta_p).into(), e.delay.into(), to_hz(e.f_origin).into(), to_hz(e.f_dest).into()]);
            }
            let mut tables = vec![t];
            if edges.len() >= 4 {
                let xs: Vec<f64> = edges.iter().map(|e| e.delta_p).collect();
                let ys: Vec<f64> = edges.iter().map(|e| e.delay).collect();
                let f = fit_power_law(&xs, &ys)?;
                let mut ft = Table::new("transition_edge_fit", &["exponent", "exponent_stderr", "r2"]);
                ft.push(vec![f.exponent.into(), f.exponent_stderr.into(), f.r2.into()]);
                tables.push(ft);
            }
            emit(g, &tables)
        }
        Command::Noise { dg_min_hz, dg_max_hz, points } => {
            if *points < 2 || !(*dg_min_hz > 0.0 && dg_max_hz > dg_min_hz) {
                return Err(Failure::Usage("need 0 < --dg-min-hz < --dg-max-hz and --points >= 2".into()));
            }
            let base = p.with_delta_s(0.0);
            let mut t = Table::new("noise", &["delta_g_hz", "phase_noise_ratio", "s_max"]);
            for k in 0..*points {
                let dg = dg_min_hz * (dg_max_hz / dg_min_hz).powf(k as f64 / (*points - 1) as f64);
                let q = base.with_delta_g(hz(dg));
                t.push(vec![dg.into(), analytic_phase_noise(&q)?.into(), max_responsivity(&q).magnitude.into()]);
            }
            emit(g, &[t])
        }
        Command::Magnetometry { duration, tone_hz, tone_t } => {
            let chain = ChainConfig {
                duration: *duration,
                tone: Some(TestTone { frequency: *tone_hz, b_rms: *tone_t }),
                ..ChainConfig::default()
            };
            let sim = SimConfig::for_params(&p).with_seed(g.seed);
            let run = magnetometry(&p, &sim, &chain, exec())?;
            match &g.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.into()))?;
                    let (name, body) = match g.format {
                        Format::Csv => ("report.txt", run.report.to_text()),
                        Format::Json => ("report.json", run.report.to_json()),
                    };
                    write(&dir.join(name), &body)?;
                    write(&dir.join("field_asd.csv"), &run.field_asd.to_csv())?;
                }
                None => match g.format {
                    Format::Csv => print!("{}", run.report.to_text()),
                    Format::Json => print!("{}", run.report.to_json()),
                },
            }
            Ok(())
        }
        Command::Leeson { f_l, temp, power, gamma } => {
            let v = leeson_bound(*f_l, *temp, *power, *gamma);
            let mut t = Table::new("leeson", &["f_l_hz", "temperature_k", "power_w", "gamma_hz_per_t", "floor_t_per_rthz"]);
            t.push(vec![(*f_l).into(), (*temp).into(), (*power).into(), (*gamma).into(), v.into()]);
            emit(g, &[t])
        }
        Command::Experiment { name, sweeps, only } => {
            let out = g.out.clone().ok_or_else(|| Failure::Usage("experiment needs --out or BPSIM_OUT".into()))?;
            let mut spec = ExperimentSpec::named(name, g.seed).map_err(|e| Failure::Usage(e.to_string()))?;
            let _ = p;
            let params = load_params(g, &spec.params)?;
            spec = spec.with_params(params);
            for s in sweeps {
                let (k, v) = s.split_once('=').ok_or_else(|| Failure::Usage(format!("--sweep expects NAME=VALUES, got `{s}`")))?;
                if spec.sweep(k.trim()).is_err() {
                    return Err(Failure::Usage(format!("experiment {name} has no sweep `{}`", k.trim())));
                }
                let vals = v
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Failure::Usage(format!("--sweep {s}: {e}")))?;
                spec = spec.with_sweep(k.trim(), vals);
            }
            spec.outputs = only.clone();
            spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let result = experiments::run(&spec)?;
            if let Some(bad) = only.iter().find(|o| result.table(o).is_none()) {
                return Err(Failure::Usage(format!("experiment {name} has no table `{bad}`")));
            }
            experiments::write_output(&out, &spec, &result)?;
            print!("{}", result.summary());
            Ok(())
        }
    }
}

fn write(path: &Path, body: &str) -> Outcome<()> {
    std::fs::write(path, body).map_err(|e| Failure::Runtime(e.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
