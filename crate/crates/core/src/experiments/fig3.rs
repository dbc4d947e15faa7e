//! Chirality of BP encirclement and critical slowing at the fold.

use super::{ExperimentOutput, ExperimentSpec, Sweep, Table};
use crate::dynamics::{
    encircle, fit_power_law, fit_stretched_exponential, transition_edge_with, Direction, ParameterTrajectory,
    SimConfig, TransitionEdge, ARRIVAL_FRACTION,
};
use crate::exec::try_map_indexed;
use crate::model::{fold_points, BranchLabel};
use crate::params::{hz, to_hz, HYSTERESIS_DELTA_G};
use crate::{Error, Result};

/// Loop geometry: far corners at `Delta_s = +-60 kHz`, `Delta_g = +30 kHz`,
/// 1 ms per leg.
const DS_FAR_HZ: f64 = 60e3;
const DG_FAR_HZ: f64 = 30e3;
const LEG_S: f64 = 1e-3;
/// Starting distance below the upper fold, as a fraction of the window.
const FOLD_DISTANCE: f64 = 1e-4;
/// Give-up time for a transition (s).
const EDGE_TIMEOUT: f64 = 0.05;

pub(super) fn default_sweeps() -> Vec<Sweep> {
    vec![
        Sweep { name: "seeds".into(), values: (0..10).map(f64::from).collect() },
        // Step sizes as fractions of the hysteresis width. The smallest is
        // kept an order of magnitude above the fold shift of the Euler step.
        Sweep { name: "step_fraction".into(), values: (0..11).map(|k| 0.03 * 2f64.sqrt().powi(k)).collect() },
        Sweep { name: "arrival_fraction".into(), values: vec![0.05, ARRIVAL_FRACTION, 0.2] },
    ]
}

pub fn expected_outcome(dir: Direction, start: BranchLabel) -> (BranchLabel, usize) {
    match (dir, start) {
        (Direction::Clockwise, BranchLabel::Upper) => (BranchLabel::Lower, 0),
        (Direction::Clockwise, _) => (BranchLabel::Lower, 1),
        (Direction::Counterclockwise, BranchLabel::Upper) => (BranchLabel::Upper, 1),
        (Direction::Counterclockwise, _) => (BranchLabel::Upper, 0),
    }
}

fn dir_str(d: Direction) -> &'static str {
    match d {
        Direction::Clockwise => "cw",
        Direction::Counterclockwise => "ccw",
    }
}

/// Table `encircle`: every (direction, start, seed) run with final branch,
/// jump count and whether it matches the chirality table. Table
/// `transition_edge`: delay against step size at `dt` and `dt/2`. Tables
/// `edge_fit` and `edge_threshold`: fits of the delays and their dependence on
/// the arrival threshold.
pub fn run_fig3(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new("fig3");
    let p = spec.params.with_delta_g(HYSTERESIS_DELTA_G);
    let seeds: Vec<u64> = spec.sweep("seeds")?.iter().map(|s| *s as u64).collect();

    let mut jobs = Vec::new();
    for dir in [Direction::Clockwise, Direction::Counterclockwise] {
        for start in [BranchLabel::Upper, BranchLabel::Lower] {
            for &s in &seeds {
                jobs.push((dir, start, s));
            }
        }
    }
    let runs = try_map_indexed(&jobs, spec.exec, |_, &(dir, start, s)| {
        let traj = ParameterTrajectory::bp_loop(HYSTERESIS_DELTA_G, hz(DS_FAR_HZ), hz(DG_FAR_HZ), LEG_S, dir)?;
        let cfg = SimConfig::for_params(&p).with_seed(spec.seed.wrapping_add(s));
        encircle(&p, &traj, start, &cfg)
    })?;
    let mut enc = Table::new("encircle", &["direction", "start", "seed", "final_branch", "jumps", "first_jump_s", "expected"]);
    let mut matched = 0usize;
    for ((dir, start, s), r) in jobs.iter().zip(&runs) {
        let ok = expected_outcome(*dir, *start) == (r.final_branch, r.jumps());
        matched += ok as usize;
        enc.push(vec![
            dir_str(*dir).into(),
            start.as_str().into(),
            (*s).into(),
            r.final_branch.as_str().into(),
            r.jumps().into(),
            r.jump_times.first().copied().into(),
            ok.into(),
        ]);
    }
    out.metric("encircle_matched", matched as f64);
    out.metric("encircle_runs", jobs.len() as f64);

    let folds = fold_points(&p).ok_or(Error::NoTransition)?;
    let width = folds.width();
    let d = FOLD_DISTANCE * width;
    let steps: Vec<f64> = spec.sweep("step_fraction")?.iter().map(|f| d + f * width).collect();
    let mut cfg = SimConfig::for_params(&p).noiseless();
    cfg.duration = EDGE_TIMEOUT;
    let mut half = cfg.clone();
    half.dt /= 2.0;
    let fractions = spec.sweep("arrival_fraction")?.to_vec();
    // All (config, threshold, step) combinations in one batch.
    let mut edge_jobs: Vec<(bool, f64, f64)> = steps.iter().map(|&s| (false, ARRIVAL_FRACTION, s)).collect();
    edge_jobs.extend(steps.iter().map(|&s| (true, ARRIVAL_FRACTION, s)));
    for &a in fractions.iter().filter(|a| **a != ARRIVAL_FRACTION) {
        edge_jobs.extend(steps.iter().map(|&s| (false, a, s)));
    }
    let edges: Vec<TransitionEdge> = try_map_indexed(&edge_jobs, spec.exec, |_, &(h, a, s)| {
        transition_edge_with(&p, d, s, if h { &half } else { &cfg }, a)
    })?;
    let n = steps.len();
    let (full, rest) = edges.split_at(n);
    let (halved, others) = rest.split_at(n);

    let mut te = Table::new("transition_edge", &["delta_p_hz", "delay_s", "delay_half_dt_s", "f_origin_hz", "f_dest_hz"]);
    for i in 0..n {
        te.push(vec![
            to_hz(full[i].delta_p).into(),
            full[i].delay.into(),
            halved[i].delay.into(),
            to_hz(full[i].f_origin).into(),
            to_hz(full[i].f_dest).into(),
        ]);
    }
    let monotone = full.windows(2).all(|w| w[1].delay < w[0].delay);
    out.metric("edge_monotone", monotone as u8 as f64);

    let xs: Vec<f64> = full.iter().map(|e| e.delta_p).collect();
    let mut fits = Table::new("edge_fit", &["model", "dt_s", "exponent_or_beta", "stderr_or_scale", "r2", "at_bound"]);
    let mut exps = Vec::new();
    for (set, dt) in [(full, cfg.dt), (halved, half.dt)] {
        let ys: Vec<f64> = set.iter().map(|e| e.delay).collect();
        let pl = fit_power_law(&xs, &ys)?;
        fits.push(vec!["power_law".into(), dt.into(), pl.exponent.into(), pl.exponent_stderr.into(), pl.r2.into(), false.into()]);
        exps.push(pl);
        match fit_stretched_exponential(&xs, &ys) {
            Ok(se) => fits.push(vec![
                "stretched_exponential".into(),
                dt.into(),
                se.beta.into(),
                se.scale.into(),
                se.r2.into(),
                se.at_bound.into(),
            ]),
            Err(e) => out.notes.push(format!("stretched exponential fit at dt={dt:e}: {e}")),
        }
    }
    out.metric("edge_exponent", exps[0].exponent);
    out.metric("edge_r2", exps[0].r2);
    out.metric("edge_exponent_half_dt", exps[1].exponent);
    out.metric("edge_exponent_shift", (exps[1].exponent - exps[0].exponent).abs());
    // Measured exponent, reported for comparison only.
    out.metric("edge_reference_exponent", -0.83);

    let mut thr = Table::new("edge_threshold", &["arrival_fraction", "exponent", "r2"]);
    thr.push(vec![ARRIVAL_FRACTION.into(), exps[0].exponent.into(), exps[0].r2.into()]);
    for (k, chunk) in others.chunks(n).enumerate() {
        let a = fractions.iter().filter(|a| **a != ARRIVAL_FRACTION).nth(k).copied().expect("chunk per fraction");
        let ys: Vec<f64> = chunk.iter().map(|e| e.delay).collect();
        let pl = fit_power_law(&xs, &ys)?;
        thr.push(vec![a.into(), pl.exponent.into(), pl.r2.into()]);
    }
    out.tables = vec![enc, te, fits, thr];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chirality_and_slowing() {
        let spec = ExperimentSpec::named("fig3", 0)
            .unwrap()
            .with_sweep("seeds", vec![0.0, 1.0])
            .with_sweep("step_fraction", vec![0.05, 0.1, 0.2, 0.4, 0.8])
            .with_sweep("arrival_fraction", vec![0.1, 0.2]);
        let out = run_fig3(&spec).unwrap();
        assert_eq!(out.get("encircle_matched"), Some(8.0));
        assert_eq!(out.get("edge_monotone"), Some(1.0));
        assert!(out.get("edge_exponent").unwrap() < 0.0);
        assert_eq!(out.table("edge_threshold").unwrap().rows.len(), 2);
    }
}
