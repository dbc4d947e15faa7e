//! BP-enhanced magnetometry: responsivity scaling, the simulated read-out
//! chain, triangular-drive tracking and the Leeson floor.

use super::{geomspace, ExperimentOutput, ExperimentSpec, Sweep, Table};
use crate::dynamics::{fit_power_law, integrate_driven, mean_frequency, nearest_stable, SimConfig, State};
use crate::exec::{try_map_indexed, Execution};
use crate::metrology::{analytic_phase_noise, leeson_bound, magnetometry, ChainConfig, MagnetometryRun};
use crate::model::{max_responsivity, oscillation_roots, stable_branches};
use crate::params::{dbm_to_watts, hz, to_hz, SystemParams, GAMMA_E};
use crate::{Error, Result};

/// Triangular drive: 200 ms period, two periods, +-5 kHz.
const TRI_PERIOD: f64 = 0.2;
const TRI_PERIODS: usize = 2;
const TRI_AMPLITUDE_HZ: f64 = 5e3;
/// Frequency-tracking window (s).
const TRACK_WINDOW: f64 = 0.5e-3;
/// Recorded sample spacing for tracking (s).
const TRACK_SAMPLE: f64 = 1e-6;
/// Slope of the tracked curve is fitted over `|Delta_s| < TRI_LINEAR * Delta_g`.
const TRI_LINEAR: f64 = 0.25;
/// Recorded span per read-out run (s). Longer than the chain default so the
/// single 125 Hz noise bin averages over ~500 segments.
const CHAIN_DURATION: f64 = 2.0;
/// Leeson line: 155 kHz loop linewidth at room temperature and -40 dBm.
const LEESON_FL: f64 = 155e3;

pub(super) fn default_sweeps() -> Vec<Sweep> {
    let g = 220e3;
    vec![
        Sweep { name: "delta_g_hz".into(), values: geomspace(600.0, 46.1e3, 10) },
        Sweep { name: "snr_seeds".into(), values: vec![0.0, 1.0, 2.0, 3.0] },
        Sweep { name: "responsivity_delta_g_hz".into(), values: geomspace(1e-3 * g, 1e-1 * g, 21) },
        Sweep { name: "cube_root_delta_s_hz".into(), values: geomspace(1e-5 * g, 1e-2 * g, 16) },
        Sweep { name: "crossover_delta_g_hz".into(), values: vec![300.0, 1e3, 3e3] },
        Sweep { name: "triangular_delta_g_hz".into(), values: vec![600.0, 5e3] },
    ]
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Root nearest zero detuning, i.e. the operating point of the read-out.
fn operating_delta(p: &SystemParams) -> Result<f64> {
    oscillation_roots(p)
        .into_iter()
        .map(|r| r.value)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::BelowThreshold)
}

/// Spin detuning where the local log-log slope of `|Delta|` against
/// `Delta_s` falls through 2/3, halfway between linear and cube-root response.
fn crossover(p: &SystemParams, ds: &[f64]) -> Result<Option<f64>> {
    let mut prev: Option<(f64, f64)> = None;
    for w in ds.windows(2) {
        let d0 = operating_delta(&p.with_delta_s(w[0]))?.abs();
        let d1 = operating_delta(&p.with_delta_s(w[1]))?.abs();
        let slope = (d1 / d0).ln() / (w[1] / w[0]).ln();
        let mid = (w[0] * w[1]).sqrt();
        if let Some((m0, s0)) = prev {
            if s0 >= 2.0 / 3.0 && slope < 2.0 / 3.0 {
                let f = (s0 - 2.0 / 3.0) / (s0 - slope);
                return Ok(Some(m0 * (mid / m0).powf(f)));
            }
        }
        prev = Some((mid, slope));
    }
    Ok(None)
}

fn triangle(t: f64, amplitude: f64) -> f64 {
    let u = (t / TRI_PERIOD).rem_euclid(1.0);
    amplitude * (1.0 - 4.0 * (u - 0.5).abs())
}

struct Tracking {
    time: Vec<f64>,
    delta_s: Vec<f64>,
    delta: Vec<f64>,
    model: Vec<f64>,
}

/// Triangular `Delta_s` drive with frequency tracking in short windows.
fn track_triangular(p: &SystemParams, seed: u64) -> Result<Tracking> {
    let amp = hz(TRI_AMPLITUDE_HZ);
    let mut cfg = SimConfig::for_params(p).with_seed(seed);
    cfg.record_every = (TRACK_SAMPLE / cfg.dt).round().max(1.0) as usize;
    cfg.duration = TRI_PERIOD * TRI_PERIODS as f64;
    let start = p.with_delta_s(triangle(0.0, amp));
    let b = nearest_stable(&start, 0.0).ok_or(Error::StartBranchMissing)?;
    let z = integrate_driven(p, State::on_branch(&start, &b), &cfg, |t| (triangle(t, amp), p.g))?;
    let z = z.as_complex().expect("field is complex");
    let dt_rec = cfg.dt * cfg.record_every as f64;
    let per = (TRACK_WINDOW / dt_rec).round() as usize;
    let mut tr = Tracking { time: Vec::new(), delta_s: Vec::new(), delta: Vec::new(), model: Vec::new() };
    for (k, w) in z.chunks_exact(per + 1).enumerate() {
        // Chunks of per + 1 samples overlap nothing but lose one increment per
        // window, which is immaterial for the mean.
        let t = (k as f64 + 0.5) * (per + 1) as f64 * dt_rec;
        let ds = triangle(t, amp);
        let model = stable_branches(&p.with_delta_s(ds))?
            .into_iter()
            .min_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()))
            .map_or(f64::NAN, |b| b.delta);
        tr.time.push(t);
        tr.delta_s.push(ds);
        tr.delta.push(mean_frequency(w, dt_rec));
        tr.model.push(model);
    }
    Ok(tr)
}

/// Least-squares slope of `y` on `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Tables `responsivity` and `responsivity_fit`: analytic peak responsivity
/// against `Delta_g`. Tables `cube_root` and `crossover`: response at the BP
/// and the onset of the cube-root regime. Table `chain`: simulated S, N, SNR
/// and sensitivity per `Delta_g` with the analytic noise ratio. Table
/// `snr_seeds`: repeated runs at the smallest `Delta_g`. Tables `tracking`
/// and `triangular`: triangular-drive read-out. Table `leeson`: the floor.
pub fn run_fig4(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new("fig4");
    let base = spec.params.with_delta_s(0.0);

    // Responsivity scaling.
    let rdg = spec.sweep("responsivity_delta_g_hz")?;
    let mut resp = Table::new("responsivity", &["delta_g_hz", "s_max", "delta_hz"]);
    let mut svals = Vec::new();
    for &dg in rdg {
        let r = max_responsivity(&base.with_delta_g(hz(dg)));
        resp.push(vec![dg.into(), r.magnitude.into(), to_hz(r.delta).into()]);
        svals.push(r.magnitude);
    }
    let rf = fit_power_law(rdg, &svals)?;
    let mut rft = Table::new("responsivity_fit", &["exponent", "exponent_stderr", "prefactor", "r2"]);
    rft.push(vec![rf.exponent.into(), rf.exponent_stderr.into(), rf.prefactor.into(), rf.r2.into()]);
    out.metric("responsivity_exponent", rf.exponent);
    let s600 = max_responsivity(&base.with_delta_g(hz(600.0))).magnitude;
    out.metric("s_max_600hz", s600);

    // Cube-root response at the BP.
    let bp = base.with_delta_g(0.0);
    let cds = spec.sweep("cube_root_delta_s_hz")?;
    let mut cube = Table::new("cube_root", &["delta_s_hz", "delta_hz"]);
    let mut cd = Vec::new();
    for &ds in cds {
        let d = operating_delta(&bp.with_delta_s(hz(ds)))?;
        cube.push(vec![ds.into(), to_hz(d).into()]);
        cd.push(to_hz(d).abs());
    }
    let cf = fit_power_law(cds, &cd)?;
    out.metric("cube_root_exponent", cf.exponent);
    out.metric("cube_root_r2", cf.r2);

    let mut cross = Table::new("crossover", &["delta_g_hz", "onset_delta_s_hz", "onset_over_delta_g"]);
    for &dg in spec.sweep("crossover_delta_g_hz")? {
        let ds: Vec<f64> = geomspace(hz(1e-2 * dg), hz(1e2 * dg), 81);
        let on = crossover(&base.with_delta_g(hz(dg)), &ds)?.map(to_hz);
        cross.push(vec![dg.into(), on.into(), on.map(|o| o / dg).into()]);
    }

    // Simulated read-out chain.
    let chain = ChainConfig { duration: CHAIN_DURATION, ..ChainConfig::default() };
    let dgs = spec.sweep("delta_g_hz")?;
    let seeds = spec.sweep("snr_seeds")?;
    let smallest = dgs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut jobs: Vec<(f64, u64)> = dgs.iter().enumerate().map(|(i, &dg)| (dg, spec.seed.wrapping_add(2 * i as u64))).collect();
    jobs.extend(seeds.iter().map(|&s| (smallest, spec.seed.wrapping_add(1000 + 2 * s as u64))));
    let runs: Vec<MagnetometryRun> = try_map_indexed(&jobs, spec.exec, |_, &(dg, seed)| {
        let p = base.with_delta_g(hz(dg));
        magnetometry(&p, &SimConfig::for_params(&p).with_seed(seed), &chain, Execution::Sequential)
    })?;
    let (sweep_runs, seed_runs) = runs.split_at(dgs.len());
    let mut ct = Table::new(
        "chain",
        &[
            "delta_g_hz", "gamma_eff", "S", "S_analytic", "N", "N_squared", "noise_ratio_analytic", "snr_gain", "tone_snr",
            "sensitivity_t_per_rthz", "sensitivity_std", "warnings",
        ],
    );
    let mut n2 = Vec::new();
    let mut analytic = Vec::new();
    for (&dg, r) in dgs.iter().zip(sweep_runs) {
        let p = base.with_delta_g(hz(dg));
        let e = analytic_phase_noise(&p)?;
        let rep = &r.report;
        ct.push(vec![
            dg.into(),
            rep.gamma_eff.into(),
            rep.s.into(),
            max_responsivity(&p).magnitude.into(),
            rep.n.into(),
            (rep.n * rep.n).into(),
            e.into(),
            rep.snr_gain.into(),
            r.signal.gyro.map(|g| g.tone_snr).into(),
            rep.sensitivity.mean.into(),
            rep.sensitivity.std.into(),
            (r.signal.warnings.len() + r.reference.warnings.len()).into(),
        ]);
        n2.push(rep.n * rep.n);
        analytic.push(e);
    }
    out.metric("noise_correlation", pearson(&n2, &analytic));

    let mut st = Table::new("snr_seeds", &["seed", "delta_g_hz", "S", "N", "snr_gain"]);
    for (&s, r) in seeds.iter().zip(seed_runs) {
        st.push(vec![s.into(), smallest.into(), r.report.s.into(), r.report.n.into(), r.report.snr_gain.into()]);
    }
    let k = seed_runs.len() as f64;
    let s_mean = seed_runs.iter().map(|r| r.report.s).sum::<f64>() / k;
    let n_mean = seed_runs.iter().map(|r| r.report.n).sum::<f64>() / k;
    out.metric("smallest_delta_g_hz", smallest);
    out.metric("snr_s_mean", s_mean);
    out.metric("snr_n_mean", n_mean);
    out.metric("snr_gain_smallest", s_mean / n_mean);

    // Triangular drive.
    let tdg = spec.sweep("triangular_delta_g_hz")?;
    let tracks = try_map_indexed(tdg, spec.exec, |i, &dg| track_triangular(&base.with_delta_g(hz(dg)), spec.seed.wrapping_add(500 + i as u64)))?;
    let mut trk = Table::new("tracking", &["delta_g_hz", "t_s", "delta_s_hz", "delta_hz", "model_hz"]);
    let mut tri = Table::new("triangular", &["delta_g_hz", "s_tracked", "s_model_secant", "s_analytic", "period", "offset_hz", "max_model_hz"]);
    let mut worst_offset = 0.0f64;
    for (&dg, tr) in tdg.iter().zip(&tracks) {
        for i in 0..tr.time.len() {
            trk.push(vec![
                dg.into(),
                tr.time[i].into(),
                to_hz(tr.delta_s[i]).into(),
                to_hz(tr.delta[i]).into(),
                to_hz(tr.model[i]).into(),
            ]);
        }
        let lim = TRI_LINEAR * hz(dg);
        // The window grid is coarse next to the linear range at small
        // Delta_g, so the tracked slope is compared with the model's secant
        // over the same windows as well as with the peak responsivity.
        let near: Vec<usize> = (0..tr.time.len()).filter(|&i| tr.delta_s[i].abs() < lim).collect();
        let xs: Vec<f64> = near.iter().map(|&i| tr.delta_s[i]).collect();
        let fit = |v: &[f64]| {
            let ys: Vec<f64> = near.iter().map(|&i| v[i]).collect();
            if xs.len() >= 2 { slope(&xs, &ys).abs() } else { f64::NAN }
        };
        let (s_tr, s_sec) = (fit(&tr.delta), fit(&tr.model));
        let s_an = max_responsivity(&base.with_delta_g(hz(dg))).magnitude;
        // Drift correction: one offset per period between tracked and model
        // frequency. Without ambient drift it should vanish.
        let max_model = tr.model.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for period in 0..TRI_PERIODS {
            let idx: Vec<usize> = (0..tr.time.len())
                .filter(|&i| (tr.time[i] / TRI_PERIOD) as usize == period)
                .collect();
            let off = idx.iter().map(|&i| tr.delta[i] - tr.model[i]).sum::<f64>() / idx.len() as f64;
            worst_offset = worst_offset.max(off.abs() / max_model);
            tri.push(vec![dg.into(), s_tr.into(), s_sec.into(), s_an.into(), period.into(), to_hz(off).into(), to_hz(max_model).into()]);
        }
        if dg == smallest {
            out.metric("s_tracked_smallest", s_tr);
            out.metric("s_tracked_over_secant", s_tr / s_sec);
        }
    }
    out.metric("drift_offset_relative", worst_offset);

    let floor = leeson_bound(LEESON_FL, base.temperature, dbm_to_watts(-40.0), GAMMA_E);
    let mut lt = Table::new("leeson", &["f_l_hz", "temperature_k", "power_w", "gamma_hz_per_t", "floor_t_per_rthz"]);
    lt.push(vec![LEESON_FL.into(), base.temperature.into(), dbm_to_watts(-40.0).into(), GAMMA_E.into(), floor.into()]);
    out.metric("leeson_floor", floor);

    out.tables = vec![resp, rft, cube, cross, ct, st, trk, tri, lt];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_scalings() {
        let base = SystemParams::fig4();
        let dg = geomspace(220.0, 22e3, 9);
        let s: Vec<f64> = dg.iter().map(|&d| max_responsivity(&base.with_delta_g(hz(d))).magnitude).collect();
        let f = fit_power_law(&dg, &s).unwrap();
        assert!((f.exponent + 1.0).abs() < 0.05, "{}", f.exponent);
        let bp = base.with_delta_g(0.0);
        let ds = geomspace(2.2, 2.2e3, 7);
        let d: Vec<f64> = ds.iter().map(|&x| operating_delta(&bp.with_delta_s(hz(x))).unwrap().abs()).collect();
        let c = fit_power_law(&ds, &d).unwrap();
        assert!((c.exponent - 1.0 / 3.0).abs() < 0.02, "{}", c.exponent);
    }

    #[test]
    fn crossover_near_delta_g() {
        let p = SystemParams::fig4().with_delta_g(hz(1e3));
        let ds = geomspace(hz(10.0), hz(1e5), 81);
        let on = to_hz(crossover(&p, &ds).unwrap().unwrap());
        assert!(on > 100.0 && on < 1e4, "{on}");
    }

    #[test]
    fn triangle_shape() {
        assert_eq!(triangle(0.0, 1.0), -1.0);
        assert!((triangle(0.5 * TRI_PERIOD, 1.0) - 1.0).abs() < 1e-12);
        assert!(triangle(0.25 * TRI_PERIOD, 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
    }
}
