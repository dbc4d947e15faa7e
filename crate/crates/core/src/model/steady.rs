//! Oscillation roots, photon number and linear stability.
//!
//! With the rotating ansatz `alpha = A exp(-i Delta t)` the coupled-mode pair
//! reduces to one complex equation. Its imaginary part is a cubic in the
//! spin-frame detuning `delta = Delta - Delta_s`:
//!
//! ```text
//! delta^3 + (Delta_s + t kappa/2) delta^2 + (h^2 - g^2) delta
//!        + Delta_s h^2 + t (kappa h^2 / 2 + g^2 h) = 0
//! ```
//!
//! with `h = Gamma/2` and `t = tan(loop_phase)`. At `t = 0` this is
//! `Delta [(Delta - Delta_s)^2 + h^2] - g^2 (Delta - Delta_s) = 0`. The real
//! part fixes the amplitude:
//! `gamma_s A^2 = G - (kappa/2 + g^2 h / (delta^2 + h^2)) / cos(loop_phase)`.

use num_complex::Complex64;
use serde::Serialize;

use super::cubic::{self, Root};
use super::folds::{fold_points, FoldPoints};
use crate::params::SystemParams;
use crate::{Error, Result};

/// Identity of a branch on the folded response curve. `Lower` is the branch
/// below the lower fold in `delta`, `Upper` the one above the upper fold and
/// `Middle` the one between. `Single` is used when there are no folds at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchLabel {
    Lower,
    Middle,
    Upper,
    Single,
}

impl BranchLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchLabel::Lower => "lower",
            BranchLabel::Middle => "middle",
            BranchLabel::Upper => "upper",
            BranchLabel::Single => "single",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadyStateBranch {
    /// Oscillation detuning from the cavity, rad/s.
    pub delta: f64,
    /// `|alpha|^2`, clamped at zero below threshold.
    pub photon_number: f64,
    pub stable: bool,
    pub branch_label: BranchLabel,
    /// 2 or 3 at a fold or at the BP itself.
    pub multiplicity: u8,
    pub below_threshold: bool,
}

impl SteadyStateBranch {
    /// `delta - delta_s`.
    pub fn spin_detuning(&self, params: &SystemParams) -> f64 {
        self.delta - params.delta_s
    }

    pub fn amplitude(&self) -> f64 {
        self.photon_number.sqrt()
    }
}

/// Monic cubic coefficients in `delta = Delta - Delta_s`.
pub(crate) fn cubic_coeffs(p: &SystemParams) -> (f64, f64, f64) {
    let h = p.half_linewidth();
    let t = p.loop_phase.tan();
    let g2 = p.g * p.g;
    let a = p.delta_s + t * p.kappa / 2.0;
    let b = h * h - g2;
    let c = p.delta_s * h * h + t * (p.kappa * h * h / 2.0 + g2 * h);
    (a, b, c)
}

/// Residual of the frequency condition at oscillation detuning `delta`.
pub fn frequency_residual(p: &SystemParams, delta: f64) -> f64 {
    let (a, b, c) = cubic_coeffs(p);
    cubic::eval(a, b, c, delta - p.delta_s)
}

/// Residual scale `max(Gamma, g)^3` used in root-accuracy checks.
pub fn residual_scale(p: &SystemParams) -> f64 {
    p.gamma_spin.max(p.g).powi(3)
}

/// All real roots of the frequency condition, as oscillation detunings
/// `Delta`, ascending. A repeated root is reported once with its multiplicity.
pub fn oscillation_roots(p: &SystemParams) -> Vec<Root> {
    let (a, b, c) = cubic_coeffs(p);
    cubic::real_roots(a, b, c)
        .into_iter()
        .map(|r| Root { value: r.value + p.delta_s, multiplicity: r.multiplicity })
        .collect()
}

/// Unclamped `|alpha|^2` from the amplitude condition at detuning `delta`.
pub fn photon_number_at(p: &SystemParams, delta: f64) -> f64 {
    let h = p.half_linewidth();
    let d = delta - p.delta_s;
    let loss = p.kappa / 2.0 + p.g * p.g * h / (d * d + h * h);
    (p.gain - loss / p.loop_phase.cos()) / p.gamma_s
}

fn label_for(root_delta: f64, n_roots: usize, idx: usize, folds: Option<&FoldPoints>) -> BranchLabel {
    match (folds, n_roots) {
        (None, _) => BranchLabel::Single,
        (Some(_), 3) => [BranchLabel::Lower, BranchLabel::Middle, BranchLabel::Upper][idx],
        (Some(f), _) => {
            // One or two roots: the surviving outer branch is on the far side
            // of the fold that was crossed. A double root sits on a fold.
            let mid = 0.5 * (f.delta_lower + f.delta_upper);
            if root_delta < mid {
                BranchLabel::Lower
            } else {
                BranchLabel::Upper
            }
        }
    }
}

/// Every root of the frequency condition with photon number, stability and
/// fold-topology label.
pub fn steady_state_solutions(p: &SystemParams) -> Result<Vec<SteadyStateBranch>> {
    let roots = oscillation_roots(p);
    let folds = fold_points(p);
    let n = roots.len();
    let mut out = Vec::with_capacity(n);
    for (idx, r) in roots.iter().enumerate() {
        let n_raw = photon_number_at(p, r.value);
        let below = n_raw <= 0.0;
        let mut branch = SteadyStateBranch {
            delta: r.value,
            photon_number: n_raw.max(0.0),
            stable: false,
            branch_label: label_for(r.value - p.delta_s, n, idx, folds.as_ref()),
            multiplicity: r.multiplicity,
            below_threshold: below,
        };
        if !below {
            branch.stable = match classify_stability(&branch, p) {
                Ok(s) => s,
                Err(Error::DegenerateJacobian) => false,
                Err(e) => return Err(e),
            };
        }
        out.push(branch);
    }
    if out.iter().all(|b| b.below_threshold) {
        return Err(Error::BelowThreshold);
    }
    Ok(out)
}

/// Stable, above-threshold branches only.
pub fn stable_branches(p: &SystemParams) -> Result<Vec<SteadyStateBranch>> {
    Ok(steady_state_solutions(p)?.into_iter().filter(|b| b.stable).collect())
}

/// Neutral-mode tolerance on eigenvalue real parts.
pub fn stability_tolerance(p: &SystemParams) -> f64 {
    1e-8 * p.kappa.max(p.gamma_spin)
}

/// Real 4x4 Jacobian of `(Re a, Im a, Re b, Im b)` in the frame rotating at
/// the branch frequency, about the fixed point with real cavity amplitude.
pub fn jacobian(p: &SystemParams, delta: f64, photon_number: f64) -> [[f64; 4]; 4] {
    let h = p.half_linewidth();
    let d = delta - p.delta_s;
    let e = Complex64::from_polar(1.0, p.loop_phase);
    let i = Complex64::i();
    let a2 = photon_number;
    // da/dt = c1 a + c2 a* - i g b ;  db/dt = c3 b - i g a
    let c1 = i * delta - p.kappa / 2.0 + p.gain * e - 2.0 * p.gamma_s * a2 * e;
    let c2 = -p.gamma_s * a2 * e;
    let cg = -i * p.g;
    let c3 = Complex64::new(-h, d);

    let lin = |c: Complex64| [[c.re, -c.im], [c.im, c.re]];
    let conj = |c: Complex64| [[c.re, c.im], [c.im, -c.re]];
    let m11 = lin(c1);
    let m11c = conj(c2);
    let m12 = lin(cg);
    let m21 = lin(cg);
    let m22 = lin(c3);
    let mut j = [[0.0; 4]; 4];
    for r in 0..2 {
        for c in 0..2 {
            j[r][c] = m11[r][c] + m11c[r][c];
            j[r][c + 2] = m12[r][c];
            j[r + 2][c] = m21[r][c];
            j[r + 2][c + 2] = m22[r][c];
        }
    }
    j
}

fn det3(m: &[[f64; 4]; 4], i: usize, j: usize, k: usize) -> f64 {
    let idx = [i, j, k];
    let a = |r: usize, c: usize| m[idx[r]][idx[c]];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

/// The three Jacobian eigenvalues left after removing the exact zero of the
/// global-phase symmetry. The characteristic polynomial is
/// `l^4 + c3 l^3 + c2 l^2 + c1 l + c0` with `c0 = det J = 0`, so the rest are
/// roots of `l^3 + c3 l^2 + c2 l + c1`.
pub fn reduced_spectrum(p: &SystemParams, delta: f64, photon_number: f64) -> [Complex64; 3] {
    let j = jacobian(p, delta, photon_number);
    let c3 = -(j[0][0] + j[1][1] + j[2][2] + j[3][3]);
    let mut c2 = 0.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            c2 += j[a][a] * j[b][b] - j[a][b] * j[b][a];
        }
    }
    let c1 = -(det3(&j, 0, 1, 2) + det3(&j, 0, 1, 3) + det3(&j, 0, 2, 3) + det3(&j, 1, 2, 3));
    cubic::complex_roots(c3, c2, c1)
}

/// True iff every non-neutral eigenvalue has negative real part.
pub fn classify_stability(branch: &SteadyStateBranch, p: &SystemParams) -> Result<bool> {
    if branch.below_threshold || branch.photon_number <= 0.0 {
        return Ok(false);
    }
    let tol = stability_tolerance(p);
    let eig = reduced_spectrum(p, branch.delta, branch.photon_number);
    if eig.iter().any(|l| l.re.abs() < tol) {
        return Err(Error::DegenerateJacobian);
    }
    Ok(eig.iter().all(|l| l.re < 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::hz;

    #[test]
    fn three_roots_at_zero_detuning() {
        let p = SystemParams::fig23();
        let w = (p.g * p.g - p.half_linewidth().powi(2)).sqrt();
        let roots = oscillation_roots(&p);
        assert_eq!(roots.len(), 3);
        assert!((roots[0].value + w).abs() < 1e-9 * w);
        assert!(roots[1].value.abs() < 1e-9 * w);
        assert!((roots[2].value - w).abs() < 1e-9 * w);
    }

    #[test]
    fn fig23_pattern_stable_unstable_stable() {
        let p = SystemParams::fig23();
        let b = steady_state_solutions(&p).unwrap();
        let pattern: Vec<bool> = b.iter().map(|x| x.stable).collect();
        assert_eq!(pattern, vec![true, false, true]);
        let labels: Vec<BranchLabel> = b.iter().map(|x| x.branch_label).collect();
        assert_eq!(labels, vec![BranchLabel::Lower, BranchLabel::Middle, BranchLabel::Upper]);
    }

    #[test]
    fn monostable_single_stable_root() {
        let p = SystemParams::fig23().with_delta_g(hz(5e3));
        for ds in [-hz(200e3), 0.0, hz(37e3)] {
            let b = steady_state_solutions(&p.with_delta_s(ds)).unwrap();
            assert_eq!(b.len(), 1);
            assert!(b[0].stable);
            assert_eq!(b[0].branch_label, BranchLabel::Single);
        }
    }

    #[test]
    fn threshold() {
        let mut p = SystemParams::fig23();
        p.g = 0.0;
        p.gain = p.kappa / 2.0;
        assert!(matches!(steady_state_solutions(&p), Err(Error::BelowThreshold)));
        assert_eq!(photon_number_at(&p, 0.0), 0.0);
    }

    #[test]
    fn bare_vdp_amplitude() {
        let mut p = SystemParams::fig23();
        p.g = 0.0;
        let b = steady_state_solutions(&p).unwrap();
        let expect = (p.gain - p.kappa / 2.0) / p.gamma_s;
        assert!((b[0].photon_number - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn neutral_mode_is_exact() {
        let p = SystemParams::fig23();
        let b = &steady_state_solutions(&p).unwrap()[0];
        let j = jacobian(&p, b.delta, b.photon_number);
        let a = b.amplitude();
        let bb = Complex64::new(0.0, -p.g) * a / Complex64::new(p.half_linewidth(), -(b.delta - p.delta_s));
        // (iA, iB) in real coordinates
        let v = [0.0, a, -bb.im, bb.re];
        for row in j {
            let s: f64 = row.iter().zip(v).map(|(x, y)| x * y).sum();
            assert!(s.abs() < 1e-6 * a * p.kappa, "{s}");
        }
    }

    #[test]
    fn fixed_point_satisfies_both_conditions() {
        let mut p = SystemParams::fig23().with_delta_s(hz(8e3));
        p.loop_phase = 0.05;
        for b in steady_state_solutions(&p).unwrap() {
            assert!(frequency_residual(&p, b.delta).abs() < 1e-9 * residual_scale(&p));
        }
    }
}
