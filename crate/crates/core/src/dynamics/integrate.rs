//! Euler-Maruyama integration of the noisy coupled-mode equations.
//!
//! In a frame rotating at `omega_c + frame_offset`:
//!
//! ```text
//! da/dt = [i f + (G - gamma_s |a|^2) e^{i phi} - kappa/2] a - i g b + sigma xi(t)
//! db/dt = [-i (Delta_s - f) - Gamma/2] b - i g a
//! ```
//!
//! with complex white noise `E|dW|^2 = dt`. Recorded fields are rotated back
//! to the cavity frame, where a branch at detuning `Delta` reads
//! `A exp(-i Delta t)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::series::{SeriesKind, TimeSeries};
use crate::model::SteadyStateBranch;
use crate::params::SystemParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Field noise per sqrt(Hz) on the cavity equation.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
    /// Total simulated time (s) for [`integrate`].
    pub duration: f64,
    /// Keep every n-th step in recorded series.
    pub record_every: usize,
    /// Frame rotation relative to the cavity (rad/s).
    pub frame_offset: f64,
}

/// Largest rate the integrator has to resolve.
pub fn max_rate(p: &SystemParams) -> f64 {
    p.kappa.max(p.gamma_spin).max(p.g)
}

/// Largest step allowed for `p`: `0.05 / max(kappa, Gamma, g)`.
pub fn max_dt(p: &SystemParams) -> f64 {
    0.05 / max_rate(p)
}

/// Additive cavity noise from the thermal occupation at `p.temperature`:
/// `sqrt(kappa n_th)`.
pub fn thermal_noise_amplitude(p: &SystemParams) -> f64 {
    (p.kappa * p.thermal_occupation()).sqrt()
}

impl SimConfig {
    /// Thermal noise and the largest 1-2-5 step under the resolution bound.
    pub fn for_params(p: &SystemParams) -> Self {
        let limit = max_dt(p);
        let decade = 10f64.powf(limit.log10().floor());
        let dt = [5.0, 2.0, 1.0].iter().map(|m| m * decade).find(|&d| d <= limit).unwrap_or(decade);
        Self {
            dt,
            noise_amplitude: thermal_noise_amplitude(p),
            rng_seed: 0,
            duration: 1e-3,
            record_every: 1,
            frame_offset: 0.0,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_amplitude = 0.0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        if self.dt > max_dt(p) * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "dt = {:e} s exceeds 0.05/max(kappa, Gamma, g) = {:e} s",
                self.dt,
                max_dt(p)
            )));
        }
        if !(self.noise_amplitude >= 0.0) || !(self.duration > 0.0) || self.record_every == 0 {
            return Err(Error::InvalidInput("noise >= 0, duration > 0, record_every >= 1 required".into()));
        }
        Ok(())
    }

    pub fn steps_for(&self, span: f64) -> u64 {
        (span / self.dt).round().max(1.0) as u64
    }
}

/// Cavity and spin amplitudes in the cavity frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl State {
    /// Fixed point of a steady-state branch with real cavity amplitude.
    pub fn on_branch(p: &SystemParams, b: &SteadyStateBranch) -> Self {
        let a = b.amplitude();
        let den = Complex64::new(p.half_linewidth(), -(b.delta - p.delta_s));
        Self { alpha: Complex64::new(a, 0.0), beta: Complex64::new(0.0, -p.g) * a / den }
    }

    pub fn perturbed(mut self, eps: f64) -> Self {
        self.alpha *= 1.0 + eps;
        self
    }
}

/// Per-step drift coefficients for one parameter set.
#[derive(Clone, Copy, Debug)]
pub struct Coeffs {
    lin_a: Complex64,
    gs_e: Complex64,
    cb: Complex64,
    g: f64,
    half: f64,
    frame: f64,
}

impl Coeffs {
    pub fn new(p: &SystemParams, frame: f64) -> Self {
        let e = Complex64::from_polar(1.0, p.loop_phase);
        Self {
            lin_a: Complex64::new(-p.kappa / 2.0, frame) + p.gain * e,
            gs_e: p.gamma_s * e,
            cb: Complex64::new(-p.half_linewidth(), -(p.delta_s - frame)),
            g: p.g,
            half: p.half_linewidth(),
            frame,
        }
    }

    /// Updates the two swept quantities in place.
    #[inline]
    pub fn set_drive(&mut self, delta_s: f64, g: f64) {
        self.cb = Complex64::new(-self.half, -(delta_s - self.frame));
        self.g = g;
    }
}

pub struct Integrator {
    a: Complex64,
    b: Complex64,
    steps: u64,
    dt: f64,
    noise: f64,
    frame: f64,
    rng: ChaCha8Rng,
    limit2: f64,
}

impl Integrator {
    pub fn new(p: &SystemParams, init: State, cfg: &SimConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate(p)?;
        if !(init.alpha.re.is_finite() && init.alpha.im.is_finite() && init.beta.re.is_finite() && init.beta.im.is_finite()) {
            return Err(Error::InvalidInput("initial state is not finite".into()));
        }
        let biggest = p.gain.abs().max(p.kappa) / p.gamma_s;
        Ok(Self {
            a: init.alpha,
            b: init.beta,
            steps: 0,
            dt: cfg.dt,
            noise: cfg.noise_amplitude * (cfg.dt / 2.0).sqrt(),
            frame: cfg.frame_offset,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            limit2: 1e6 * biggest,
        })
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Cavity field in the cavity frame.
    #[inline]
    pub fn alpha(&self) -> Complex64 {
        if self.frame == 0.0 {
            self.a
        } else {
            self.a * Complex64::from_polar(1.0, -self.frame * self.time())
        }
    }

    pub fn state(&self) -> State {
        let rot = Complex64::from_polar(1.0, -self.frame * self.time());
        State { alpha: self.a * rot, beta: self.b * rot }
    }

    #[inline]
    pub fn step(&mut self, c: &Coeffs) -> Result<()> {
        let (a, b, dt) = (self.a, self.b, self.dt);
        let n2 = a.norm_sqr();
        let da = (c.lin_a - c.gs_e * n2) * a + Complex64::new(0.0, -c.g) * b;
        let db = c.cb * b + Complex64::new(0.0, -c.g) * a;
        self.a = a + da * dt;
        self.b = b + db * dt;
        if self.noise > 0.0 {
            let x: f64 = self.rng.sample(StandardNormal);
            let y: f64 = self.rng.sample(StandardNormal);
            self.a += Complex64::new(x, y) * self.noise;
        }
        self.steps += 1;
        let m = self.a.norm_sqr();
        if !(m <= self.limit2) {
            return Err(Error::Diverged { t: self.time(), amplitude: m.sqrt() });
        }
        Ok(())
    }

    /// Runs `n` steps with fixed coefficients, pushing every `stride`-th
    /// cavity-frame field (after the step) into `out`.
    pub fn run(&mut self, c: &Coeffs, n: u64, stride: usize, out: Option<&mut Vec<Complex64>>) -> Result<()> {
        match out {
            None => {
                for _ in 0..n {
                    self.step(c)?;
                }
            }
            Some(out) => {
                let stride = stride.max(1) as u64;
                for k in 1..=n {
                    self.step(c)?;
                    if k % stride == 0 {
                        out.push(self.alpha());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Integrates for `cfg.duration` with fixed parameters. The series starts
/// with the initial field at `t = 0`.
pub fn integrate(p: &SystemParams, init: State, cfg: &SimConfig) -> Result<TimeSeries> {
    integrate_driven(p, init, cfg, |_| (p.delta_s, p.g))
}

/// As [`integrate`] with `(delta_s, g)` supplied by `drive(t)` at each step.
pub fn integrate_driven(
    p: &SystemParams,
    init: State,
    cfg: &SimConfig,
    drive: impl Fn(f64) -> (f64, f64),
) -> Result<TimeSeries> {
    let mut it = Integrator::new(p, init, cfg)?;
    let mut c = Coeffs::new(p, cfg.frame_offset);
    let n = cfg.steps_for(cfg.duration);
    let stride = cfg.record_every as u64;
    let mut out = Vec::with_capacity((n / stride + 1) as usize);
    out.push(it.alpha());
    for k in 1..=n {
        let (ds, g) = drive(it.time());
        c.set_drive(ds, g);
        it.step(&c)?;
        if k % stride == 0 {
            out.push(it.alpha());
        }
    }
    TimeSeries::complex(out, 1.0 / (cfg.dt * cfg.record_every as f64), 0.0, SeriesKind::Field)
}

/// Mean oscillation detuning `Delta` of a cavity-frame field sampled every
/// `dt` seconds, from the averaged phase increment.
pub fn mean_frequency(z: &[Complex64], dt: f64) -> f64 {
    let acc: Complex64 = z.windows(2).map(|w| w[1] * w[0].conj()).sum();
    -acc.arg() / dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady_state_solutions;

    #[test]
    fn default_step_resolves_rates() {
        let p = SystemParams::fig23();
        let c = SimConfig::for_params(&p);
        assert!(c.dt <= max_dt(&p));
        c.validate(&p).unwrap();
        let mut bad = c.clone();
        bad.dt = 2.0 * max_dt(&p);
        assert!(bad.validate(&p).is_err());
    }

    #[test]
    fn deterministic_replay() {
        let p = SystemParams::fig23();
        let b = &steady_state_solutions(&p).unwrap()[0];
        let mut cfg = SimConfig::for_params(&p).with_seed(7);
        cfg.duration = 2e-5;
        cfg.noise_amplitude *= 1e3;
        let x = integrate(&p, State::on_branch(&p, b), &cfg).unwrap();
        let y = integrate(&p, State::on_branch(&p, b), &cfg).unwrap();
        assert_eq!(x, y);
        let z = integrate(&p, State::on_branch(&p, b), &cfg.clone().with_seed(8)).unwrap();
        assert_ne!(x, z);
    }

    #[test]
    fn fixed_point_is_stationary_in_its_frame() {
        let p = SystemParams::fig23();
        let b = steady_state_solutions(&p).unwrap()[2].clone();
        let mut cfg = SimConfig::for_params(&p).noiseless();
        cfg.duration = 2e-4;
        cfg.frame_offset = b.delta;
        cfg.record_every = 100;
        let ts = integrate(&p, State::on_branch(&p, &b), &cfg).unwrap();
        let a0 = b.amplitude();
        for z in ts.as_complex().unwrap() {
            assert!((z.norm() - a0).abs() < 1e-9 * a0);
        }
        let f = mean_frequency(ts.as_complex().unwrap(), 1.0 / ts.sample_rate());
        assert!((f - b.delta).abs() < 1e-6 * b.delta.abs());
    }

    #[test]
    fn diverges_with_huge_step() {
        let p = SystemParams::fig23();
        let b = &steady_state_solutions(&p).unwrap()[0];
        let mut it = Integrator::new(&p, State::on_branch(&p, b), &SimConfig::for_params(&p)).unwrap();
        it.dt = 1e-4;
        let c = Coeffs::new(&p, 0.0);
        assert!(matches!(it.run(&c, 1000, 1, None), Err(Error::Diverged { .. })));
    }

    #[test]
    fn bare_vdp_limit_cycle() {
        let mut p = SystemParams::fig23();
        p.g = 0.0;
        let mut cfg = SimConfig::for_params(&p).noiseless();
        cfg.duration = 1e-4;
        let init = State { alpha: Complex64::new(1e3, 0.0), beta: Complex64::new(0.0, 0.0) };
        let ts = integrate(&p, init, &cfg).unwrap();
        let last = ts.as_complex().unwrap().last().unwrap().norm_sqr();
        let want = (p.gain - p.kappa / 2.0) / p.gamma_s;
        assert!((last - want).abs() < 1e-6 * want, "{last} vs {want}");
    }
}
