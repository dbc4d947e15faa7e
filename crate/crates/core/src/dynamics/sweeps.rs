//! Time-domain protocols: hysteresis sweeps, BP encirclement and
//! transition-edge timing.
//!
//! Branch identity comes from the fold topology of the steady-state model:
//! the measured frequency is assigned to the nearest stable branch, and a
//! jump is a direct switch between the `Upper` and `Lower` labels. Passing
//! through the monostable region relabels the state as `Single`, so an
//! adiabatic flip never counts as a jump.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;

use super::integrate::{mean_frequency, Coeffs, Integrator, SimConfig, State};
use crate::exec::{map_indexed, try_map_indexed, Execution};
use crate::model::{fold_points, steady_state_solutions, BranchLabel, SteadyStateBranch};
use crate::params::SystemParams;
use crate::{Error, Result};

/// Nearest stable branch to a measured detuning.
pub fn nearest_stable(p: &SystemParams, delta: f64) -> Option<SteadyStateBranch> {
    steady_state_solutions(p)
        .ok()?
        .into_iter()
        .filter(|b| b.stable)
        .min_by(|a, b| (a.delta - delta).abs().total_cmp(&(b.delta - delta).abs()))
}

fn stable_with_label(p: &SystemParams, prefer: &[BranchLabel]) -> Option<SteadyStateBranch> {
    let st: Vec<SteadyStateBranch> = steady_state_solutions(p).ok()?.into_iter().filter(|b| b.stable).collect();
    prefer.iter().find_map(|l| st.iter().find(|b| b.branch_label == *l).cloned())
}

fn is_outer(l: BranchLabel) -> bool {
    matches!(l, BranchLabel::Upper | BranchLabel::Lower)
}

/// Dwell per sweep step that keeps the sweep adiabatic away from the folds:
/// `100 / |Delta_g|`, capped at 10 ms.
pub fn adiabatic_dwell(p: &SystemParams) -> f64 {
    (100.0 / p.delta_g().abs()).min(1e-2)
}

#[derive(Clone, Debug, Serialize)]
pub struct HysteresisSweep {
    pub delta_s: Vec<f64>,
    /// Measured oscillation detuning per step, in `delta_s` order.
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub up_labels: Vec<BranchLabel>,
    pub down_labels: Vec<BranchLabel>,
    /// `Delta_s` at which the upward trace first sits on the new branch.
    pub up_jump: Option<f64>,
    pub down_jump: Option<f64>,
}

impl HysteresisSweep {
    pub fn jump_separation(&self) -> Option<f64> {
        Some(self.up_jump? - self.down_jump?)
    }
}

fn run_path(
    p: &SystemParams,
    path: &[f64],
    dwell: f64,
    cfg: &SimConfig,
    prefer: &[BranchLabel],
) -> Result<(Vec<f64>, Vec<BranchLabel>)> {
    let p0 = p.with_delta_s(path[0]);
    let start = stable_with_label(&p0, prefer).ok_or(Error::StartBranchMissing)?;
    let mut it = Integrator::new(&p0, State::on_branch(&p0, &start), cfg)?;
    let mut c = Coeffs::new(&p0, cfg.frame_offset);
    let n = cfg.steps_for(dwell);
    let settle = n / 2;
    let stride = ((n - settle) / 2000).max(1) as usize;
    let mut freqs = Vec::with_capacity(path.len());
    let mut labels = Vec::with_capacity(path.len());
    let mut buf = Vec::new();
    for &ds in path {
        c.set_drive(ds, p.g);
        it.run(&c, settle, 1, None)?;
        buf.clear();
        buf.push(it.alpha());
        it.run(&c, n - settle, stride, Some(&mut buf))?;
        let f = mean_frequency(&buf, it.dt() * stride as f64);
        let label = nearest_stable(&p.with_delta_s(ds), f).map_or(BranchLabel::Single, |b| b.branch_label);
        freqs.push(f);
        labels.push(label);
    }
    Ok((freqs, labels))
}

fn first_switch(path: &[f64], labels: &[BranchLabel]) -> Option<f64> {
    labels.windows(2).position(|w| is_outer(w[0]) && is_outer(w[1]) && w[0] != w[1]).map(|i| path[i + 1])
}

/// Quasi-static up and down sweeps of `Delta_s` over the ascending grid
/// `delta_s`, spending `dwell` seconds per point. The two directions run
/// concurrently with seeds `cfg.rng_seed` and `cfg.rng_seed + 1`.
pub fn sweep_hysteresis(
    p: &SystemParams,
    delta_s: &[f64],
    dwell: f64,
    cfg: &SimConfig,
    exec: Execution,
) -> Result<HysteresisSweep> {
    if delta_s.len() < 2 || delta_s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("sweep grid must be strictly ascending with at least 2 points".into()));
    }
    let up_path = delta_s.to_vec();
    let down_path: Vec<f64> = delta_s.iter().rev().cloned().collect();
    let jobs = [
        (up_path, vec![BranchLabel::Upper, BranchLabel::Single, BranchLabel::Lower], 0u64),
        (down_path, vec![BranchLabel::Lower, BranchLabel::Single, BranchLabel::Upper], 1u64),
    ];
    let mut res = try_map_indexed(&jobs, exec, |_, (path, prefer, s)| {
        let c = cfg.clone().with_seed(cfg.rng_seed.wrapping_add(*s));
        run_path(p, path, dwell, &c, prefer)
    })?;
    let (mut down, mut down_labels) = res.pop().expect("two jobs");
    let (up, up_labels) = res.pop().expect("two jobs");
    let down_jump = first_switch(&jobs[1].0, &down_labels);
    down.reverse();
    down_labels.reverse();
    Ok(HysteresisSweep {
        delta_s: delta_s.to_vec(),
        up_jump: first_switch(delta_s, &up_labels),
        down_jump,
        up,
        down,
        up_labels,
        down_labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Hold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Clockwise,
    Counterclockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Waypoint {
    pub delta_g: f64,
    pub delta_s: f64,
    /// Time spent reaching this waypoint from the previous one (for the
    /// first waypoint, the initial hold).
    pub dwell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterTrajectory {
    waypoints: Vec<Waypoint>,
    interpolation: Interpolation,
}

impl ParameterTrajectory {
    pub fn new(waypoints: Vec<Waypoint>, interpolation: Interpolation) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput("a trajectory needs at least two waypoints".into()));
        }
        if waypoints.iter().any(|w| !(w.dwell >= 0.0) || !w.delta_g.is_finite() || !w.delta_s.is_finite()) {
            return Err(Error::InvalidInput("waypoints must be finite with non-negative dwell".into()));
        }
        let t = Self { waypoints, interpolation };
        if !(t.duration() > 0.0) {
            return Err(Error::InvalidInput("trajectory duration must be positive".into()));
        }
        Ok(t)
    }

    /// The loop A-B-C-D-E-A around the BP, with `A = (dg_a, 0)`,
    /// `B = (dg_a, -ds_far)`, `C = (dg_far, -ds_far)`, `D = (dg_far, ds_far)`,
    /// `E = (dg_a, ds_far)`; `Counterclockwise` runs A-E-D-C-B-A. Each leg
    /// takes `leg` seconds.
    pub fn bp_loop(dg_a: f64, ds_far: f64, dg_far: f64, leg: f64, dir: Direction) -> Result<Self> {
        let a = (dg_a, 0.0);
        let pts = [(dg_a, -ds_far), (dg_far, -ds_far), (dg_far, ds_far), (dg_a, ds_far)];
        let mut wps = vec![Waypoint { delta_g: a.0, delta_s: a.1, dwell: leg / 4.0 }];
        let order: Vec<(f64, f64)> = match dir {
            Direction::Clockwise => pts.to_vec(),
            Direction::Counterclockwise => pts.iter().rev().cloned().collect(),
        };
        wps.extend(order.into_iter().chain(std::iter::once(a)).map(|(g, s)| Waypoint { delta_g: g, delta_s: s, dwell: leg }));
        Self::new(wps, Interpolation::Linear)
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn duration(&self) -> f64 {
        self.waypoints.iter().map(|w| w.dwell).sum()
    }

    pub fn is_closed(&self) -> bool {
        let (a, b) = (self.waypoints[0], self.waypoints[self.waypoints.len() - 1]);
        a.delta_g == b.delta_g && a.delta_s == b.delta_s
    }

    /// Orientation in the plane with `Delta_s` horizontal and `Delta_g`
    /// vertical, from the signed (shoelace) area.
    pub fn direction(&self) -> Direction {
        let w = &self.waypoints;
        let mut area = 0.0;
        for k in 0..w.len() {
            let (p, q) = (w[k], w[(k + 1) % w.len()]);
            area += p.delta_s * q.delta_g - q.delta_s * p.delta_g;
        }
        if area < 0.0 {
            Direction::Clockwise
        } else {
            Direction::Counterclockwise
        }
    }

    /// `(delta_g, delta_s)` at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let w = &self.waypoints;
        let mut t0 = w[0].dwell;
        if t <= t0 {
            return (w[0].delta_g, w[0].delta_s);
        }
        for k in 1..w.len() {
            let t1 = t0 + w[k].dwell;
            if t <= t1 {
                return match self.interpolation {
                    Interpolation::Hold => (w[k].delta_g, w[k].delta_s),
                    Interpolation::Linear => {
                        let s = if w[k].dwell > 0.0 { (t - t0) / w[k].dwell } else { 1.0 };
                        (
                            w[k - 1].delta_g + s * (w[k].delta_g - w[k - 1].delta_g),
                            w[k - 1].delta_s + s * (w[k].delta_s - w[k - 1].delta_s),
                        )
                    }
                };
            }
            t0 = t1;
        }
        let last = w[w.len() - 1];
        (last.delta_g, last.delta_s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub delta_g: f64,
    pub delta_s: f64,
    /// Measured oscillation detuning over the window ending at `t`.
    pub delta: f64,
    pub label: BranchLabel,
}

#[derive(Clone, Debug, Serialize)]
pub struct EncircleResult {
    pub trace: Vec<TracePoint>,
    pub final_branch: BranchLabel,
    /// Times at which the state switched directly between outer branches.
    pub jump_times: Vec<f64>,
}

impl EncircleResult {
    pub fn jumps(&self) -> usize {
        self.jump_times.len()
    }
}

/// Frequency-tracking window for encirclement traces (s).
pub const TRACK_WINDOW: f64 = 5e-6;

/// Drives `(Delta_g, Delta_s)` along `traj` starting on `start` and tracks
/// the branch the oscillator occupies.
pub fn encircle(p0: &SystemParams, traj: &ParameterTrajectory, start: BranchLabel, cfg: &SimConfig) -> Result<EncircleResult> {
    let (dg0, ds0) = traj.at(0.0);
    let q0 = p0.with_delta_g(dg0).with_delta_s(ds0);
    let b0 = steady_state_solutions(&q0)
        .ok()
        .and_then(|bs| bs.into_iter().find(|b| b.stable && b.branch_label == start))
        .ok_or(Error::StartBranchMissing)?;
    let mut it = Integrator::new(&q0, State::on_branch(&q0, &b0), cfg)?;
    let mut c = Coeffs::new(&q0, cfg.frame_offset);
    let g_of = |dg: f64| p0.with_delta_g(dg).g;
    let total = cfg.steps_for(traj.duration());
    let win = cfg.steps_for(TRACK_WINDOW).max(2);
    let stride = (win / 50).max(1);
    let mut trace = Vec::with_capacity((total / win + 1) as usize);
    let mut jumps = Vec::new();
    let mut prev = start;
    let mut buf = Vec::with_capacity(64);
    let mut k = 0u64;
    while k < total {
        let n = win.min(total - k);
        buf.clear();
        buf.push(it.alpha());
        for j in 1..=n {
            let (dg, ds) = traj.at(it.time());
            c.set_drive(ds, g_of(dg));
            it.step(&c)?;
            if j % stride == 0 {
                buf.push(it.alpha());
            }
        }
        k += n;
        let (dg, ds) = traj.at(it.time());
        let f = mean_frequency(&buf, it.dt() * stride as f64);
        let label = nearest_stable(&p0.with_delta_g(dg).with_delta_s(ds), f).map_or(prev, |b| b.branch_label);
        if is_outer(prev) && is_outer(label) && label != prev {
            jumps.push(it.time());
        }
        prev = label;
        trace.push(TracePoint { t: it.time(), delta_g: dg, delta_s: ds, delta: f, label });
    }
    Ok(EncircleResult { final_branch: prev, trace, jump_times: jumps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionEdge {
    pub delta_p: f64,
    /// `t1 - t0` (s).
    pub delay: f64,
    pub f_origin: f64,
    pub f_dest: f64,
}

/// Arrival threshold as a fraction of the origin-destination gap.
pub const ARRIVAL_FRACTION: f64 = 0.1;
/// Sliding window for the instantaneous-frequency estimate (s).
pub const EDGE_WINDOW: f64 = 1e-6;

/// Sits on the upper branch a distance `fold_distance` below the upper fold,
/// steps `Delta_s` up by `delta_p` at `t0 = 0` and times the arrival on the
/// lower branch. Gives up after `cfg.duration`.
pub fn transition_edge(p: &SystemParams, fold_distance: f64, delta_p: f64, cfg: &SimConfig) -> Result<TransitionEdge> {
    transition_edge_with(p, fold_distance, delta_p, cfg, ARRIVAL_FRACTION)
}

/// [`transition_edge`] with the arrival threshold given as a fraction of the
/// origin-destination frequency gap.
pub fn transition_edge_with(
    p: &SystemParams,
    fold_distance: f64,
    delta_p: f64,
    cfg: &SimConfig,
    arrival_fraction: f64,
) -> Result<TransitionEdge> {
    if !(arrival_fraction > 0.0 && arrival_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("arrival fraction must lie in (0, 1), got {arrival_fraction}")));
    }
    let folds = fold_points(p).ok_or(Error::NoTransition)?;
    let ds0 = folds.ds_upper - fold_distance;
    let ds1 = ds0 + delta_p;
    if ds1 <= folds.ds_upper {
        return Err(Error::NoTransition);
    }
    let q0 = p.with_delta_s(ds0);
    let origin = stable_with_label(&q0, &[BranchLabel::Upper]).ok_or(Error::StartBranchMissing)?;
    let q1 = p.with_delta_s(ds1);
    let dest = stable_with_label(&q1, &[BranchLabel::Lower])
        .ok_or_else(|| Error::InvalidInput("no stable destination branch after the step".into()))?;
    let mut it = Integrator::new(&q1, State::on_branch(&q0, &origin), cfg)?;
    let c = Coeffs::new(&q1, cfg.frame_offset);
    let win = cfg.steps_for(EDGE_WINDOW).max(2) as usize;
    let mut ring: VecDeque<Complex64> = VecDeque::with_capacity(win + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    let gap = (dest.delta - origin.delta).abs();
    let total = cfg.steps_for(cfg.duration);
    let mut prev = it.alpha();
    for k in 1..=total {
        it.step(&c)?;
        let z = it.alpha();
        let inc = z * prev.conj();
        prev = z;
        ring.push_back(inc);
        acc += inc;
        if ring.len() > win {
            acc -= ring.pop_front().expect("non-empty");
        }
        // Re-sum now and then to stop rounding drift in the running sum.
        if k % 100_000 == 0 {
            acc = ring.iter().sum();
        }
        if ring.len() >= 2 {
            let f = -acc.arg() / it.dt();
            if (f - dest.delta).abs() < arrival_fraction * gap {
                let delay = it.time() - 0.5 * ring.len() as f64 * it.dt();
                return Ok(TransitionEdge { delta_p, delay, f_origin: origin.delta, f_dest: dest.delta });
            }
        }
    }
    Err(Error::InvalidInput(format!("no arrival within {:e} s", cfg.duration)))
}

/// [`transition_edge`] over a list of step sizes, in input order.
pub fn transition_edge_sweep(
    p: &SystemParams,
    fold_distance: f64,
    steps: &[f64],
    cfg: &SimConfig,
    exec: Execution,
) -> Result<Vec<TransitionEdge>> {
    try_map_indexed(steps, exec, |_, &dp| transition_edge(p, fold_distance, dp, cfg))
}

/// Runs independent encirclements (e.g. over seeds) in input order.
pub fn encircle_batch(
    p0: &SystemParams,
    traj: &ParameterTrajectory,
    start: BranchLabel,
    cfgs: &[SimConfig],
    exec: Execution,
) -> Vec<Result<EncircleResult>> {
    map_indexed(cfgs, exec, |_, c| encircle(p0, traj, start, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::hz;

    #[test]
    fn trajectory_geometry() {
        let cw = ParameterTrajectory::bp_loop(-hz(20e3), hz(60e3), hz(30e3), 1e-3, Direction::Clockwise).unwrap();
        assert!(cw.is_closed());
        assert_eq!(cw.direction(), Direction::Clockwise);
        let ccw = ParameterTrajectory::bp_loop(-hz(20e3), hz(60e3), hz(30e3), 1e-3, Direction::Counterclockwise).unwrap();
        assert_eq!(ccw.direction(), Direction::Counterclockwise);
        assert!((cw.duration() - 5.25e-3).abs() < 1e-15);
        let (g, s) = cw.at(0.25e-3 + 0.5e-3);
        assert!((g + hz(20e3)).abs() < 1e-9 && (s + hz(30e3)).abs() < 1e-6);
        assert_eq!(cw.at(1.0), (-hz(20e3), 0.0));
    }

    #[test]
    fn hold_interpolation() {
        let t = ParameterTrajectory::new(
            vec![
                Waypoint { delta_g: 0.0, delta_s: 0.0, dwell: 1.0 },
                Waypoint { delta_g: 1.0, delta_s: 2.0, dwell: 1.0 },
            ],
            Interpolation::Hold,
        )
        .unwrap();
        assert_eq!(t.at(1.5), (1.0, 2.0));
        assert!(!t.is_closed());
        assert!(ParameterTrajectory::new(vec![Waypoint { delta_g: 0.0, delta_s: 0.0, dwell: 0.0 }; 2], Interpolation::Linear).is_err());
    }

    #[test]
    fn edge_requires_crossing() {
        let p = SystemParams::fig23().with_delta_g(-hz(37e3));
        let cfg = SimConfig::for_params(&p).noiseless();
        let d = hz(1e3);
        assert!(matches!(transition_edge(&p, d, 0.5 * d, &cfg), Err(Error::NoTransition)));
        let mono = SystemParams::fig23().with_delta_g(hz(5e3));
        assert!(matches!(transition_edge(&mono, d, 2.0 * d, &cfg), Err(Error::NoTransition)));
    }

    #[test]
    fn start_branch_must_exist() {
        let p = SystemParams::fig23().with_delta_g(hz(5e3));
        let t = ParameterTrajectory::bp_loop(hz(5e3), hz(10e3), hz(20e3), 1e-5, Direction::Clockwise).unwrap();
        let cfg = SimConfig::for_params(&p).noiseless();
        assert!(matches!(encircle(&p, &t, BranchLabel::Upper, &cfg), Err(Error::StartBranchMissing)));
    }
}
