//! Root coalescence at zero spin detuning as the coupling offset passes
//! through the BP.

use super::{geomspace, ExperimentOutput, ExperimentSpec, Sweep, Table};
use crate::dynamics::fit_power_law;
use crate::model::{locate_bp, steady_state_solutions, Tunable};
use crate::params::{hz, to_hz};
use crate::Result;

pub(super) fn default_sweeps() -> Vec<Sweep> {
    // Two decades of |Delta_g| on each side, in units of the nominal 220 kHz
    // coupling, plus the BP itself.
    let g = 220e3;
    let mut dg: Vec<f64> = geomspace(1e-1 * g, 1e-3 * g, 21).into_iter().map(|v| -v).collect();
    dg.push(0.0);
    dg.extend(geomspace(1e-3 * g, 1e-1 * g, 9));
    vec![Sweep { name: "delta_g_hz".into(), values: dg }]
}

/// Table `roots`: every root at `Delta_s = 0` per `Delta_g`, with stability
/// and the outer-branch separation. Table `separation_fit`: power law of the
/// separation against `|Delta_g|` on the bistable side. Table `bp`: the
/// coupling at which the bistable region closes.
pub fn run_fig1e(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let base = spec.params.with_delta_s(0.0);
    let mut roots = Table::new(
        "roots",
        &["delta_g_hz", "n_roots", "delta_hz", "stable", "label", "photon_number", "separation_hz", "separation_oracle_hz"],
    );
    let mut fit_x = Vec::new();
    let mut fit_y = Vec::new();
    for &dg in spec.sweep("delta_g_hz")? {
        let p = base.with_delta_g(hz(dg));
        let bs = steady_state_solutions(&p)?;
        let h = p.half_linewidth();
        let (sep, oracle) = if bs.len() == 3 {
            let s = bs[2].delta - bs[0].delta;
            (Some(to_hz(s)), Some(to_hz(2.0 * (p.g * p.g - h * h).sqrt())))
        } else {
            (None, None)
        };
        if let (Some(s), true) = (sep, dg < 0.0) {
            fit_x.push(-dg);
            fit_y.push(s);
        }
        for b in &bs {
            roots.push(vec![
                dg.into(),
                bs.len().into(),
                to_hz(b.delta).into(),
                b.stable.into(),
                b.branch_label.as_str().into(),
                b.photon_number.into(),
                sep.into(),
                oracle.into(),
            ]);
        }
    }
    let mut out = ExperimentOutput::new("fig1e");
    let mut fit = Table::new("separation_fit", &["exponent", "exponent_stderr", "prefactor", "r2", "points"]);
    if fit_x.len() >= 4 {
        let f = fit_power_law(&fit_x, &fit_y)?;
        fit.push(vec![f.exponent.into(), f.exponent_stderr.into(), f.prefactor.into(), f.r2.into(), fit_x.len().into()]);
        out.metric("separation_exponent", f.exponent);
        out.metric("separation_r2", f.r2);
    } else {
        out.notes.push("fewer than 4 bistable points; no separation fit".into());
    }

    let h = base.half_linewidth();
    let g_bp = locate_bp(&base, Tunable::Coupling { lo: 0.5 * h, hi: 1.5 * h })?;
    let dg_bp = base.with_delta_g(0.0).g - g_bp;
    let mut bp = Table::new("bp", &["g_bp_hz", "delta_g_bp_hz", "relative_to_g"]);
    bp.push(vec![to_hz(g_bp).into(), to_hz(dg_bp).into(), (dg_bp / g_bp).into()]);
    out.metric("delta_g_bp_hz", to_hz(dg_bp));
    out.metric("delta_g_bp_relative", dg_bp / g_bp);

    out.tables = vec![roots, fit, bp];
    Ok(out)
}
