use std::f64::consts::PI;

use bpsim::dynamics::{integrate, SeriesKind, SimConfig, State, TimeSeries};
use bpsim::metrology::{hilbert_demodulate, psd, snr_enhancement, MagnetometryReport, Sensitivity};
use bpsim::model::steady::{frequency_residual, residual_scale};
use bpsim::model::{oscillation_roots, polariton_eigenvalues, steady_state_solutions, BranchLabel};
use bpsim::params::{hz, SystemParams, GAMMA_E};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_root_has_small_residual(dg in -80e3f64..40e3, ds in -200e3f64..200e3, fig4 in any::<bool>()) {
        let base = if fig4 { SystemParams::fig4() } else { SystemParams::fig23() };
        let p = base.with_delta_g(hz(dg)).with_delta_s(hz(ds));
        for r in oscillation_roots(&p) {
            prop_assert!(frequency_residual(&p, r.value).abs() <= 1e-9 * residual_scale(&p));
        }
    }

    #[test]
    fn three_branches_are_stable_unstable_stable(dg in -80e3f64..-1e3, ds in -30e3f64..30e3) {
        let p = SystemParams::fig23().with_delta_g(hz(dg)).with_delta_s(hz(ds));
        let bs: Vec<_> = steady_state_solutions(&p).unwrap().into_iter().filter(|b| !b.below_threshold).collect();
        if bs.len() == 3 && bs.iter().all(|b| b.multiplicity == 1) {
            let pattern: Vec<bool> = bs.iter().map(|b| b.stable).collect();
            prop_assert_eq!(pattern, vec![true, false, true]);
            prop_assert_eq!(bs[0].branch_label, BranchLabel::Lower);
            prop_assert_eq!(bs[2].branch_label, BranchLabel::Upper);
        }
    }

    #[test]
    fn eigenvalue_sum_is_the_trace(
        wc in 0.0f64..3e9,
        ds in -1e6f64..1e6,
        g in 0.0f64..1e6,
        kappa in 1e3f64..1e6,
        gamma in 1e3f64..1e6,
    ) {
        let mut p = SystemParams::fig23();
        p.omega_c = hz(wc);
        p.delta_s = hz(ds);
        p.g = hz(g);
        p.kappa = hz(kappa);
        p.gamma_spin = hz(gamma);
        let s = polariton_eigenvalues(&p);
        let sum = s.eigenvalues[0] + s.eigenvalues[1];
        let want = Complex64::new(p.omega_c + p.omega_s(), -(p.kappa + p.gamma_spin) / 2.0);
        prop_assert!((sum - want).norm() <= 8.0 * f64::EPSILON * (want.norm() + p.g));
    }

    #[test]
    fn welch_obeys_parseval(seed in any::<u64>(), seg_pow in 8u32..12) {
        // Per-segment mean removal costs ~1/segment of the variance.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fs = 1e4;
        let x: Vec<f64> = (0..1 << 17).map(|_| rng.random::<f64>() - 0.5).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        let ts = TimeSeries::real(x, fs, 0.0, SeriesKind::Voltage).unwrap();
        let seg = 1usize << seg_pow;
        let s = psd(&ts, seg, seg / 2).unwrap();
        let total: f64 = s.values.iter().sum::<f64>() * s.resolution_bw;
        prop_assert!((total / var - 1.0).abs() < 0.01, "{}", total / var);
    }

    #[test]
    fn hilbert_round_trip(
        amp in 0.01f64..0.14,
        f_mod in 200.0f64..2.5e3,
        am in 0.0f64..0.1,
        f_am in 200.0f64..2.5e3,
    ) {
        // phase RMS amp/sqrt(2) <= 0.1 rad; modulation below f_i / 20.
        let (fs, fi, n) = (1e6, 50e3, 40_001usize);
        let phase = |t: f64| amp * (2.0 * PI * f_mod * t).sin();
        let env = |t: f64| 1.0 + am * (2.0 * PI * f_am * t).cos();
        let v = (0..n).map(|i| {
            let t = i as f64 / fs;
            env(t) * (2.0 * PI * fi * t + phase(t)).cos()
        }).collect();
        let d = hilbert_demodulate(&TimeSeries::real(v, fs, 0.0, SeriesKind::Voltage).unwrap(), 2.0 * PI * fi).unwrap();
        let p = d.phase.as_real().unwrap();
        let truth: Vec<f64> = (0..p.len()).map(|i| phase(d.phase.time(i))).collect();
        let err: Vec<f64> = p.iter().zip(&truth).map(|(a, b)| a - b).collect();
        prop_assert!(rms(&err) <= 0.01 * rms(&truth), "phase {}", rms(&err) / rms(&truth));
        let a = d.amplitude.as_real().unwrap();
        let a_truth: Vec<f64> = (0..a.len()).map(|i| env(d.amplitude.time(i)) / d.v0 - 1.0).collect();
        let a_err: Vec<f64> = a.iter().zip(&a_truth).map(|(x, y)| x - y).collect();
        prop_assert!(rms(&a_err) <= 0.01 * am.max(0.01));
    }

    #[test]
    fn snr_gain_is_s_over_n(s in 1.0f64..500.0, n in 0.5f64..20.0) {
        let r = MagnetometryReport::new(s * GAMMA_E, n, Sensitivity { mean: 1e-12, std: 0.0 }, (9.5e3, 10.5e3)).unwrap();
        prop_assert_eq!(r.snr_gain, snr_enhancement(r.s, r.n));
        prop_assert!((r.s / s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn integration_is_bit_identical_under_a_seed() {
    let p = SystemParams::fig23().with_delta_g(hz(-37e3));
    let b = steady_state_solutions(&p).unwrap().into_iter().find(|b| b.stable).unwrap();
    let mut cfg = SimConfig::for_params(&p).with_seed(11);
    cfg.duration = 2e-4;
    let a = integrate(&p, State::on_branch(&p, &b), &cfg).unwrap();
    let c = integrate(&p, State::on_branch(&p, &b), &cfg).unwrap();
    assert_eq!(a, c);
    let d = integrate(&p, State::on_branch(&p, &b), &cfg.clone().with_seed(12)).unwrap();
    assert_ne!(a, d);
}

#[test]
fn euler_error_halves_with_the_step() {
    // Noise-free transient from a perturbed fixed point; error against a
    // fine reference shrinks linearly with dt.
    let p = SystemParams::fig23().with_delta_g(hz(-37e3));
    let b = steady_state_solutions(&p).unwrap().into_iter().find(|b| b.stable).unwrap();
    let init = State::on_branch(&p, &b).perturbed(0.05);
    let end = |dt: f64| {
        let mut cfg = SimConfig::for_params(&p).noiseless();
        cfg.dt = dt;
        cfg.duration = 2e-5;
        let z = integrate(&p, init, &cfg).unwrap();
        *z.as_complex().unwrap().last().unwrap()
    };
    let dt = SimConfig::for_params(&p).dt;
    let reference = end(dt / 64.0);
    let e1 = (end(dt) - reference).norm();
    let e2 = (end(dt / 2.0) - reference).norm();
    let e4 = (end(dt / 4.0) - reference).norm();
    let (r1, r2) = (e1 / e2, e2 / e4);
    assert!((r1 - 2.0).abs() < 0.3 && (r2 - 2.0).abs() < 0.3, "{r1} {r2}");
}

#[test]
fn noise_free_branch_keeps_its_photon_number() {
    let p = SystemParams::fig4().with_delta_g(hz(5e3));
    let b = steady_state_solutions(&p).unwrap().into_iter().find(|b| b.stable).unwrap();
    let mut cfg = SimConfig::for_params(&p).noiseless();
    cfg.duration = 1e-3;
    let z = integrate(&p, State::on_branch(&p, &b).perturbed(1e-3), &cfg).unwrap();
    let tail = &z.as_complex().unwrap()[z.len() / 2..];
    let mean = tail.iter().map(|a| a.norm_sqr()).sum::<f64>() / tail.len() as f64;
    assert!((mean / b.photon_number - 1.0).abs() < 1e-3, "{}", mean / b.photon_number);
}
