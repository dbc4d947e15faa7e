//! Hysteresis in the time domain and its closure with loop power.

use super::{ExperimentOutput, ExperimentSpec, Sweep, Table};
use crate::dynamics::{adiabatic_dwell, sweep_hysteresis, HysteresisSweep, SimConfig};
use crate::exec::try_map_indexed;
use crate::model::{fold_points, locate_bp, saturated_coupling, Tunable};
use crate::params::{dbm_to_watts, hz, to_hz, watts_to_dbm, SystemParams, BP_POWER_DBM, HYSTERESIS_DELTA_G};
use crate::Result;

/// Sweep grid spacing used for every time-domain sweep (Hz).
pub const STEP_HZ: f64 = 2e3;
/// Extra span beyond the folds on each side (Hz).
const MARGIN_HZ: f64 = 10e3;

pub(super) fn default_sweeps() -> Vec<Sweep> {
    vec![Sweep {
        name: "power_dbm".into(),
        values: vec![-52.0, -50.0, -48.0, -46.0, -45.0, -44.0, -43.5, -43.0, -42.8, -42.6, -42.4, -42.0, -41.0, -40.0],
    }]
}

fn grid(p: &SystemParams) -> Vec<f64> {
    let half = fold_points(p).map_or(0.0, |f| 0.5 * to_hz(f.width()));
    let n = ((half + MARGIN_HZ) / STEP_HZ).ceil() as i64;
    (-n..=n).map(|k| hz(k as f64 * STEP_HZ)).collect()
}

fn sweep_at(p: &SystemParams, seed: u64) -> Result<HysteresisSweep> {
    let cfg = SimConfig::for_params(p).with_seed(seed);
    sweep_hysteresis(p, &grid(p), adiabatic_dwell(p), &cfg, crate::exec::Execution::Sequential)
}

/// Table `hysteresis`: up/down traces at the operating point with a 40 kHz
/// window. Table `width_vs_power`: discriminant and time-domain widths per
/// loop power. Table `bp_power`: power at which the window closes.
pub fn run_fig2de(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new("fig2de");

    let op = spec.params.with_delta_g(HYSTERESIS_DELTA_G);
    let sw = sweep_at(&op, spec.seed)?;
    let mut hyst = Table::new(
        "hysteresis",
        &["delta_s_hz", "up_hz", "down_hz", "up_label", "down_label"],
    );
    for i in 0..sw.delta_s.len() {
        hyst.push(vec![
            to_hz(sw.delta_s[i]).into(),
            to_hz(sw.up[i]).into(),
            to_hz(sw.down[i]).into(),
            sw.up_labels[i].as_str().into(),
            sw.down_labels[i].as_str().into(),
        ]);
    }
    let folds = fold_points(&op);
    out.metric("operating_delta_g_hz", to_hz(op.delta_g()));
    out.metric("operating_width_hz", folds.map_or(0.0, |f| to_hz(f.width())));
    out.metric("operating_jump_separation_hz", sw.jump_separation().map_or(0.0, to_hz));
    out.metric("grid_step_hz", STEP_HZ);

    let powers = spec.sweep("power_dbm")?;
    let points: Vec<(f64, SystemParams)> =
        powers.iter().map(|&dbm| (dbm, saturated_coupling(&spec.params, dbm_to_watts(dbm)))).collect();
    let sweeps = try_map_indexed(&points, spec.exec, |i, (_, p)| sweep_at(p, spec.seed.wrapping_add(2 * i as u64 + 2)))?;
    let mut wp = Table::new(
        "width_vs_power",
        &["power_dbm", "g_hz", "delta_g_hz", "width_hz", "up_jump_hz", "down_jump_hz", "jump_separation_hz", "fold_lower_hz", "fold_upper_hz"],
    );
    let mut worst = 0.0f64;
    for ((dbm, p), s) in points.iter().zip(&sweeps) {
        let f = fold_points(p);
        let width = f.map_or(0.0, |f| to_hz(f.width()));
        let sep = s.jump_separation().map_or(0.0, to_hz);
        worst = worst.max((sep - width).abs() / STEP_HZ);
        wp.push(vec![
            (*dbm).into(),
            to_hz(p.g).into(),
            to_hz(p.delta_g()).into(),
            width.into(),
            s.up_jump.map(to_hz).into(),
            s.down_jump.map(to_hz).into(),
            sep.into(),
            f.map(|f| to_hz(f.ds_lower)).into(),
            f.map(|f| to_hz(f.ds_upper)).into(),
        ]);
    }
    out.metric("max_width_mismatch_steps", worst);

    let p_star = dbm_to_watts(BP_POWER_DBM);
    let bp = locate_bp(&spec.params, Tunable::Power { lo: p_star / 100.0, hi: p_star * 100.0 })?;
    let mut bpt = Table::new("bp_power", &["power_dbm", "power_w", "target_dbm"]);
    bpt.push(vec![watts_to_dbm(bp).into(), bp.into(), BP_POWER_DBM.into()]);
    out.metric("bp_power_dbm", watts_to_dbm(bp));

    out.tables = vec![hyst, wp, bpt];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_closes_with_power() {
        let spec = ExperimentSpec::named("fig2de", 1).unwrap().with_sweep("power_dbm", vec![-50.0, -44.0, -40.0]);
        let out = run_fig2de(&spec).unwrap();
        let w = out.table("width_vs_power").unwrap().numbers("width_hz").unwrap();
        assert!(w[0] > w[1] && w[1] > 0.0 && w[2] == 0.0, "{w:?}");
        assert!(out.get("max_width_mismatch_steps").unwrap() <= 2.0);
        assert!((out.get("bp_power_dbm").unwrap() - BP_POWER_DBM).abs() < 0.5);
        let sep = out.get("operating_jump_separation_hz").unwrap();
        assert!((sep - 40e3).abs() < 10e3, "{sep}");
    }
}
