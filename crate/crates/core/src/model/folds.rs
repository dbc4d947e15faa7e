//! Saddle-node folds, hysteresis width, BP location and the bistable map.
//!
//! The frequency condition is linear in `Delta_s`, so each root `delta` maps
//! back to `Delta_s = R(delta) = -P0(delta) / (delta^2 + h^2)`. Folds are the
//! extrema of `R`, i.e. the zeros of the quartic
//!
//! ```text
//! Q(delta) = delta^4 + (2h^2 + g^2) delta^2 - 2 t g^2 h delta + (h^2 - g^2) h^2
//! ```
//!
//! `Q` is strictly convex, so it has zero or two real zeros. Three roots of
//! the cubic coexist exactly for `Delta_s` strictly between the two fold
//! values.

use serde::Serialize;

use super::cubic;
use super::steady::{steady_state_solutions, BranchLabel};
use crate::exec::{map_indexed, Execution};
use crate::params::SystemParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FoldPoints {
    /// Spin-frame detuning at the lower fold (local minimum of `R`).
    pub delta_lower: f64,
    pub delta_upper: f64,
    /// `Delta_s` below which the lower branch ceases to exist.
    pub ds_lower: f64,
    /// `Delta_s` above which the upper branch ceases to exist.
    pub ds_upper: f64,
}

impl FoldPoints {
    pub fn width(&self) -> f64 {
        (self.ds_upper - self.ds_lower).abs()
    }

    pub fn contains(&self, ds: f64) -> bool {
        ds > self.ds_lower && ds < self.ds_upper
    }
}

struct Quartic {
    c2: f64,
    c1: f64,
    c0: f64,
}

impl Quartic {
    fn new(p: &SystemParams) -> Self {
        let h = p.half_linewidth();
        let g2 = p.g * p.g;
        let t = p.loop_phase.tan();
        Self { c2: 2.0 * h * h + g2, c1: -2.0 * t * g2 * h, c0: (h * h - g2) * h * h }
    }

    fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        x2 * x2 + self.c2 * x2 + self.c1 * x + self.c0
    }

    /// Unique zero of `Q'`, where `Q` is smallest.
    fn argmin(&self) -> f64 {
        // Q'/4 = x^3 + (c2/2) x + c1/4, strictly increasing.
        cubic::real_roots(0.0, self.c2 / 2.0, self.c1 / 4.0)[0].value
    }
}

/// Bisects `f` on `[lo, hi]` (opposite signs) down to adjacent floats.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Delta_s` that puts a root of the frequency condition at spin-frame
/// detuning `delta`.
pub fn detuning_for_root(p: &SystemParams, delta: f64) -> f64 {
    let q = p.with_delta_s(0.0);
    let (a, b, c) = super::steady::cubic_coeffs(&q);
    let h = p.half_linewidth();
    -cubic::eval(a, b, c, delta) / (delta * delta + h * h)
}

/// Both folds, or `None` outside the bistable phase.
pub fn fold_points(p: &SystemParams) -> Option<FoldPoints> {
    let q = Quartic::new(p);
    let xm = q.argmin();
    if !(q.eval(xm) < 0.0) {
        return None;
    }
    let h = p.half_linewidth();
    let mut span = 4.0 * (p.g + h) * (1.0 + p.loop_phase.tan().abs());
    while q.eval(xm - span) <= 0.0 || q.eval(xm + span) <= 0.0 {
        span *= 2.0;
    }
    let d1 = bisect(xm - span, xm, |x| q.eval(x));
    let d2 = bisect(xm, xm + span, |x| q.eval(x));
    let m1 = detuning_for_root(p, d1);
    let m2 = detuning_for_root(p, d2);
    Some(FoldPoints { delta_lower: d1, delta_upper: d2, ds_lower: m1.min(m2), ds_upper: m1.max(m2) })
}

/// Length of the `Delta_s` interval with three coexisting roots; zero outside
/// the bistable phase.
pub fn hysteresis_width(p: &SystemParams) -> f64 {
    fold_points(p).map_or(0.0, |f| f.width())
}

/// Whether a branch with this fold label exists at the current `Delta_s`.
pub fn branch_exists(p: &SystemParams, label: BranchLabel) -> bool {
    match (fold_points(p), label) {
        (None, BranchLabel::Single) => true,
        (None, _) => false,
        (Some(f), BranchLabel::Lower) => p.delta_s > f.ds_lower,
        (Some(f), BranchLabel::Upper) => p.delta_s < f.ds_upper,
        (Some(f), BranchLabel::Middle) => f.contains(p.delta_s),
        (Some(_), BranchLabel::Single) => false,
    }
}

/// Two-level saturation of the collective coupling:
/// `g -> g0 / sqrt(1 + power / p_sat)`, with `g0 = p0.g`.
pub fn saturated_coupling(p0: &SystemParams, power: f64) -> SystemParams {
    let mut p = p0.clone();
    p.g = p0.g / (1.0 + power.max(0.0) / p0.p_sat).sqrt();
    p.power = power;
    p
}

/// Which parameter [`locate_bp`] varies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tunable {
    /// Collective coupling `g` over `[lo, hi]` rad/s.
    Coupling { lo: f64, hi: f64 },
    /// Oscillator power over `[lo, hi]` W through [`saturated_coupling`].
    Power { lo: f64, hi: f64 },
}

fn is_bistable(p: &SystemParams) -> bool {
    fold_points(p).is_some()
}

/// Value of the tunable at which the bistable region closes.
pub fn locate_bp(p: &SystemParams, tunable: Tunable) -> Result<f64> {
    let (lo, hi, at): (f64, f64, Box<dyn Fn(f64) -> SystemParams>) = match tunable {
        Tunable::Coupling { lo, hi } => (lo, hi, Box::new(move |g| {
            let mut q = p.clone();
            q.g = g;
            q
        })),
        Tunable::Power { lo, hi } => {
            if lo < 0.0 || hi <= 0.0 {
                return Err(Error::InvalidInput("power bounds must be non-negative".into()));
            }
            (lo, hi, Box::new(move |w| saturated_coupling(p, w)))
        }
    };
    let b_lo = is_bistable(&at(lo));
    let b_hi = is_bistable(&at(hi));
    if b_lo == b_hi {
        return Err(Error::NotBracketed(format!(
            "bistable at both ends: {b_lo}, search [{lo:e}, {hi:e}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        if is_bistable(&at(m)) == b_lo {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `tan(loop_phase)` root search: returns the loop phase that places the BP
/// at `Gamma/2 - g = xi` (`xi >= 0`). With a loop phase the folds survive
/// slightly past `g = Gamma/2`, which is what the offset absorbs.
pub fn calibrate_loop_phase(p: &SystemParams, xi: f64) -> Result<f64> {
    if xi < 0.0 {
        return Err(Error::InvalidInput("xi must be non-negative".into()));
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    let mut q = p.clone();
    q.g = p.half_linewidth() - xi;
    let qmin = |t: f64| {
        let mut r = q.clone();
        r.loop_phase = t.atan();
        let quart = Quartic::new(&r);
        quart.eval(quart.argmin())
    };
    let mut hi = 1e-3;
    while qmin(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::NotBracketed("no loop phase reaches the requested offset".into()));
        }
    }
    Ok(bisect(0.0, hi, qmin).atan())
}

/// Saturation power that closes the bistable region at `p_star` watts, with
/// `g0 = p.g` and the rest of `p` held fixed.
pub fn calibrate_p_sat(p: &SystemParams, p_star: f64) -> Result<f64> {
    let g_star = locate_bp(p, Tunable::Coupling { lo: 0.0, hi: p.g.max(p.gamma_spin) * 2.0 })?;
    if g_star >= p.g {
        return Err(Error::NotBracketed("g0 is not in the bistable phase".into()));
    }
    Ok(p_star / ((p.g / g_star).powi(2) - 1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct BistableMap {
    pub delta_g: Vec<f64>,
    pub delta_s: Vec<f64>,
    /// `[i_g][i_s]` number of real roots.
    pub root_count: Vec<Vec<u8>>,
    /// `[i_g][i_s]` number of stable above-threshold branches.
    pub stable_count: Vec<Vec<u8>>,
    /// Mean frequency of the two stable branches where bistable.
    pub mean_delta: Vec<Vec<Option<f64>>>,
}

/// Root and stable-branch counts over a `(Delta_g, Delta_s)` grid.
pub fn bistable_map(p: &SystemParams, delta_g: &[f64], delta_s: &[f64], exec: Execution) -> BistableMap {
    let cells: Vec<(usize, usize)> =
        (0..delta_g.len()).flat_map(|i| (0..delta_s.len()).map(move |j| (i, j))).collect();
    let vals = map_indexed(&cells, exec, |_, &(i, j)| {
        let q = p.with_delta_g(delta_g[i]).with_delta_s(delta_s[j]);
        match steady_state_solutions(&q) {
            Ok(bs) => {
                let stable: Vec<f64> = bs.iter().filter(|b| b.stable).map(|b| b.delta).collect();
                let mean = (stable.len() == 2).then(|| 0.5 * (stable[0] + stable[1]));
                (bs.len() as u8, stable.len() as u8, mean)
            }
            Err(_) => (0, 0, None),
        }
    });
    let ns = delta_s.len();
    let mut m = BistableMap {
        delta_g: delta_g.to_vec(),
        delta_s: delta_s.to_vec(),
        root_count: vec![vec![0; ns]; delta_g.len()],
        stable_count: vec![vec![0; ns]; delta_g.len()],
        mean_delta: vec![vec![None; ns]; delta_g.len()],
    };
    for (k, &(i, j)) in cells.iter().enumerate() {
        m.root_count[i][j] = vals[k].0;
        m.stable_count[i][j] = vals[k].1;
        m.mean_delta[i][j] = vals[k].2;
    }
    m
}

impl BistableMap {
    /// Number of 4-connected components of the `stable_count == 2` region.
    pub fn bistable_components(&self) -> usize {
        let (ng, ns) = (self.delta_g.len(), self.delta_s.len());
        let mut seen = vec![vec![false; ns]; ng];
        let mut comps = 0;
        for i0 in 0..ng {
            for j0 in 0..ns {
                if seen[i0][j0] || self.stable_count[i0][j0] != 2 {
                    continue;
                }
                comps += 1;
                let mut stack = vec![(i0, j0)];
                seen[i0][j0] = true;
                while let Some((i, j)) = stack.pop() {
                    let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
                    for (a, b) in nbrs {
                        if a < ng && b < ns && !seen[a][b] && self.stable_count[a][b] == 2 {
                            seen[a][b] = true;
                            stack.push((a, b));
                        }
                    }
                }
            }
        }
        comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady::oscillation_roots;
    use crate::params::hz;
    use proptest::prelude::*;

    #[test]
    fn no_folds_outside_bistable_phase() {
        let p = SystemParams::fig23().with_delta_g(hz(1e3));
        assert!(fold_points(&p).is_none());
        assert_eq!(hysteresis_width(&p), 0.0);
        assert_eq!(hysteresis_width(&SystemParams::fig23().with_delta_g(0.0)), 0.0);
    }

    #[test]
    fn folds_are_symmetric_without_loop_phase() {
        let p = SystemParams::fig23();
        let f = fold_points(&p).unwrap();
        assert!((f.ds_lower + f.ds_upper).abs() < 1e-9 * f.width());
        assert!((f.delta_lower + f.delta_upper).abs() < 1e-9 * f.delta_upper.abs());
    }

    #[test]
    fn folds_are_double_roots() {
        let mut p = SystemParams::fig23().with_delta_g(-hz(20e3));
        p.loop_phase = 0.1;
        let f = fold_points(&p).unwrap();
        for (ds, d) in [(f.ds_lower, f.delta_lower), (f.ds_upper, f.delta_upper)] {
            let q = p.with_delta_s(ds);
            let (a, b, c) = crate::model::steady::cubic_coeffs(&q);
            let s = cubic::scale(a, b, c);
            assert!(cubic::eval(a, b, c, d).abs() < 1e-9 * s.powi(3));
            let dp = (3.0 * d + 2.0 * a) * d + b;
            assert!(dp.abs() < 1e-7 * s * s, "{dp}");
        }
    }

    #[test]
    fn width_matches_brute_force_root_count() {
        let p = SystemParams::fig23().with_delta_g(-hz(30e3));
        let f = fold_points(&p).unwrap();
        let n = 401;
        let span = 2.0 * f.width();
        for k in 0..n {
            let ds = -span + 2.0 * span * k as f64 / (n - 1) as f64;
            let roots = oscillation_roots(&p.with_delta_s(ds));
            let inside = f.contains(ds);
            let margin = (ds - f.ds_lower).abs().min((ds - f.ds_upper).abs());
            if margin > 1e-6 * f.width() {
                assert_eq!(roots.len() == 3, inside, "ds={ds}");
            }
        }
    }

    #[test]
    fn bp_in_coupling_is_half_linewidth() {
        let p = SystemParams::fig23();
        let g = locate_bp(&p, Tunable::Coupling { lo: 0.5 * p.gamma_spin / 2.0, hi: 2.0 * p.gamma_spin }).unwrap();
        assert!((g - p.half_linewidth()).abs() < 1e-12 * g);
        assert!(matches!(
            locate_bp(&p, Tunable::Coupling { lo: p.g, hi: 2.0 * p.g }),
            Err(Error::NotBracketed(_))
        ));
    }

    #[test]
    fn loop_phase_calibration_moves_bp() {
        let mut p = SystemParams::fig23();
        let xi = hz(2e3);
        p.loop_phase = calibrate_loop_phase(&p, xi).unwrap();
        p.delta_g_offset = xi;
        let g = locate_bp(&p, Tunable::Coupling { lo: 0.5 * p.half_linewidth(), hi: p.gamma_spin }).unwrap();
        assert!((p.half_linewidth() - g - xi).abs() < 1e-6 * xi);
        let dg = p.half_linewidth() - g - p.delta_g_offset;
        assert!(dg.abs() < 1e-6 * p.g);
    }

    #[test]
    fn asymmetry_only_with_loop_phase() {
        let mut p = SystemParams::fig23().with_delta_g(-hz(20e3));
        let f = fold_points(&p).unwrap();
        assert!((f.ds_lower + f.ds_upper).abs() < 1e-6 * f.width());
        p.loop_phase = 0.2;
        let f = fold_points(&p).unwrap();
        assert!((f.ds_lower + f.ds_upper).abs() > 1e-3 * f.width());
    }

    #[test]
    fn saturation_law() {
        let p = SystemParams::fig23();
        assert_eq!(saturated_coupling(&p, 0.0).g, p.g);
        assert!((saturated_coupling(&p, p.p_sat).g - p.g / 2f64.sqrt()).abs() < 1e-9 * p.g);
    }

    #[test]
    fn p_sat_calibration_round_trip() {
        let p = SystemParams::fig23();
        let p_star = crate::params::dbm_to_watts(crate::params::BP_POWER_DBM);
        let ps = calibrate_p_sat(&p, p_star).unwrap();
        assert!((ps - p.p_sat).abs() < 1e-6 * ps);
        let w = locate_bp(&p, Tunable::Power { lo: 0.0, hi: 1e-3 }).unwrap();
        assert!((crate::params::watts_to_dbm(w) - crate::params::BP_POWER_DBM).abs() < 1e-6);
    }

    #[test]
    fn map_connected_and_symmetric() {
        let p = SystemParams::fig23();
        let dg: Vec<f64> = (0..9).map(|k| -hz(40e3) + hz(10e3) * k as f64).collect();
        let ds: Vec<f64> = (0..41).map(|k| -hz(40e3) + hz(2e3) * k as f64).collect();
        let m = bistable_map(&p, &dg, &ds, Execution::Auto);
        assert_eq!(m.bistable_components(), 1);
        for (i, &g) in dg.iter().enumerate() {
            if g > 0.0 {
                assert!(m.stable_count[i].iter().all(|&c| c == 1), "{:?}", m.stable_count[i]);
            }
            for j in 0..ds.len() {
                assert_eq!(m.stable_count[i][j], m.stable_count[i][ds.len() - 1 - j]);
            }
        }
    }

    proptest! {
        #[test]
        fn width_non_increasing_in_delta_g(a in 1.0f64..60.0, b in 1.0f64..60.0) {
            let p = SystemParams::fig23();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            // more negative delta_g -> wider
            let w_far = hysteresis_width(&p.with_delta_g(-hz(hi * 1e3)));
            let w_near = hysteresis_width(&p.with_delta_g(-hz(lo * 1e3)));
            prop_assert!(w_far >= w_near);
        }

        #[test]
        fn saturation_monotone(p1 in 0.0f64..1e-5, p2 in 0.0f64..1e-5) {
            let p = SystemParams::fig23();
            let (a, b) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(saturated_coupling(&p, a).g >= saturated_coupling(&p, b).g);
        }
    }
}
