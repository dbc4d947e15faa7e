//! Linear spectra and the frequency responsivity.

use num_complex::Complex64;
use serde::Serialize;

use super::steady::{oscillation_roots, stable_branches};
use crate::params::SystemParams;
use crate::{Error, Result};

/// Eigenvalues of the passive 2x2 cavity-spin matrix. Real part is the
/// frequency, imaginary part minus half the decay rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolaritonSpectrum {
    pub eigenvalues: [Complex64; 2],
}

impl PolaritonSpectrum {
    pub fn splitting(&self) -> f64 {
        (self.eigenvalues[0].re - self.eigenvalues[1].re).abs()
    }
}

/// Eigenvalues of `[[w_c - i kappa/2, g], [g, w_s - i Gamma/2]]`, ordered by
/// descending real part, ties by imaginary part.
pub fn polariton_eigenvalues(p: &SystemParams) -> PolaritonSpectrum {
    let a = Complex64::new(p.omega_c, -p.kappa / 2.0);
    let d = Complex64::new(p.omega_s(), -p.gamma_spin / 2.0);
    let mean = (a + d) / 2.0;
    let half = (a - d) / 2.0;
    let root = (half * half + p.g * p.g).sqrt();
    let mut ev = [mean + root, mean - root];
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    PolaritonSpectrum { eigenvalues: ev }
}

/// `|r|^2` at each absolute probe frequency (rad/s), single-port form with
/// the hyperfine sub-ensembles sharing `g^2` by weight. Gain is ignored.
pub fn reflection_spectrum(p: &SystemParams, probe: &[f64]) -> Vec<f64> {
    let g2 = p.g * p.g;
    let h = p.half_linewidth();
    probe
        .iter()
        .map(|&w| {
            let spin: Complex64 = p
                .hyperfine
                .iter()
                .map(|l| l.weight * g2 / Complex64::new(h, p.omega_s() + l.detuning - w))
                .sum();
            let den = Complex64::new(p.kappa / 2.0, p.omega_c - w) + spin;
            (Complex64::new(1.0, 0.0) - p.kappa_c1 / den).norm_sqr()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Responsivity {
    /// `dDelta/dDelta_s` with sign.
    pub value: f64,
    pub magnitude: f64,
    /// True at a fold or at the BP, where the derivative is unbounded.
    pub divergent: bool,
    /// Oscillation detuning at which it was evaluated.
    pub delta: f64,
}

/// Exact implicit derivative of the frequency condition at root `delta`.
pub fn responsivity_at(p: &SystemParams, delta: f64) -> Responsivity {
    let h = p.half_linewidth();
    let t = p.loop_phase.tan();
    let d = delta - p.delta_s;
    let g2 = p.g * p.g;
    let dd = d * d + h * h;
    let num = 2.0 * d * delta - g2 + t * p.kappa * d;
    let den = dd + 2.0 * d * delta - g2 + t * p.kappa * d;
    let scale = h * h + g2 + d * d + delta.abs() * d.abs();
    if den.abs() <= 1e-13 * scale {
        return Responsivity { value: f64::INFINITY, magnitude: f64::INFINITY, divergent: true, delta };
    }
    let value = num / den;
    Responsivity { value, magnitude: value.abs(), divergent: false, delta }
}

/// Responsivity of the unique stable branch. In the bistable phase the caller
/// has to pick a branch and use [`responsivity_at`].
pub fn responsivity(p: &SystemParams) -> Result<Responsivity> {
    let roots = oscillation_roots(p);
    if roots.len() == 1 {
        return Ok(responsivity_at(p, roots[0].value));
    }
    let stable = stable_branches(p)?;
    match stable.as_slice() {
        [b] => Ok(responsivity_at(p, b.delta)),
        _ => Err(Error::InvalidInput(format!(
            "{} stable branches; select one with responsivity_at",
            stable.len()
        ))),
    }
}

/// Peak responsivity of the linear-response point at `Delta_s = 0`.
pub fn max_responsivity(p: &SystemParams) -> Responsivity {
    let q = p.with_delta_s(0.0);
    let roots = oscillation_roots(&q);
    // The response is steepest on the root nearest the spin line.
    let r = roots.iter().min_by(|a, b| a.value.abs().total_cmp(&b.value.abs())).expect("cubic has a real root");
    if r.multiplicity > 1 {
        return Responsivity { value: f64::INFINITY, magnitude: f64::INFINITY, divergent: true, delta: r.value };
    }
    responsivity_at(&q, r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::hz;

    #[test]
    fn decoupled_eigenvalues() {
        let mut p = SystemParams::fig23();
        p.g = 0.0;
        p.delta_s = hz(1e6);
        let s = polariton_eigenvalues(&p);
        let tol = 1e-9 * p.kappa;
        assert!((s.eigenvalues[0] - Complex64::new(p.omega_s(), -p.gamma_spin / 2.0)).norm() < tol);
        assert!((s.eigenvalues[1] - Complex64::new(p.omega_c, -p.kappa / 2.0)).norm() < tol);
    }

    #[test]
    fn symmetric_loss_splitting() {
        let mut p = SystemParams::fig23();
        p.gamma_spin = p.kappa;
        let s = polariton_eigenvalues(&p);
        assert!((s.splitting() - 2.0 * p.g).abs() < 1e-9 * p.g);
    }

    #[test]
    fn trace_is_preserved() {
        let mut p = SystemParams::fig23();
        p.omega_c = hz(2.87e9);
        p.delta_s = hz(130e3);
        let s = polariton_eigenvalues(&p);
        let sum = s.eigenvalues[0] + s.eigenvalues[1];
        let want = Complex64::new(p.omega_c + p.omega_s(), -(p.kappa + p.gamma_spin) / 2.0);
        assert!((sum - want).norm() <= 4.0 * f64::EPSILON * want.norm());
    }

    #[test]
    fn bare_cavity_dip() {
        let mut p = SystemParams::fig23();
        p.g = 0.0;
        let r = reflection_spectrum(&p, &[p.omega_c, p.omega_c + 50.0 * p.kappa]);
        let depth = (1.0 - 2.0 * p.kappa_c1 / p.kappa).powi(2);
        assert!((r[0] - depth).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn passive_reflection_bounded() {
        let p = SystemParams::fig23().with_hyperfine_triplet(hz(2.1e6));
        let probe: Vec<f64> = (0..2001).map(|k| hz(-4e6 + 4e3 * k as f64)).collect();
        assert!(reflection_spectrum(&p, &probe).iter().all(|&r| (0.0..=1.0 + 1e-12).contains(&r)));
    }

    #[test]
    fn weak_coupling_third() {
        let mut p = SystemParams::fig23();
        p.gamma_spin = 4.0 * p.g;
        let s = max_responsivity(&p);
        assert!((s.magnitude - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn diverges_at_bp() {
        let p = SystemParams::fig23().with_delta_g(0.0);
        assert!(max_responsivity(&p).divergent);
    }

    #[test]
    fn implicit_derivative_matches_finite_difference() {
        let mut p = SystemParams::fig23().with_delta_g(hz(3e3)).with_delta_s(hz(4e3));
        p.loop_phase = 0.07;
        let r = responsivity(&p).unwrap();
        let e = hz(1.0);
        let f = |ds: f64| oscillation_roots(&p.with_delta_s(ds))[0].value;
        let fd = (f(p.delta_s + e) - f(p.delta_s - e)) / (2.0 * e);
        assert!((r.value - fd).abs() < 1e-5 * fd.abs(), "{} vs {fd}", r.value);
    }
}
