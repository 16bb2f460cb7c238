mod common;

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use common::c;
use trimer_core::dynamics::fit_slope;
use trimer_core::ode::Tolerances;
use trimer_core::waveguide::{
    antisymmetric_eigenvalue, break_even_asymptotic, break_even_finite, output_ratio, power,
    propagate_expm, propagate_rk, recording_sweep, symmetric_block_eigenvalues,
    symmetric_growth_rate, system_eigenvalues, CouplerConfig, GainConvention, GainSchedule,
    CENTRAL_INPUT,
};

const K: f64 = 0.2;
const L: f64 = 20.0;

fn template() -> CouplerConfig {
    CouplerConfig::new(K, L, [0.0; 3], CENTRAL_INPUT).unwrap()
}

#[test]
fn asymptotic_break_even_by_convention() {
    for k in [0.2, 1.0] {
        let half = break_even_asymptotic(GainConvention::Half, k, 0.0, 10.0 * k).unwrap();
        assert!((half.gamma_over_k - 2.0 * SQRT_2).abs() <= 1e-3, "{half:?}");
        let full = break_even_asymptotic(GainConvention::Full, k, 0.0, 10.0 * k).unwrap();
        assert!((full.gamma_over_k - SQRT_2).abs() <= 1e-3, "{full:?}");
    }
}

#[test]
fn block_eigenvalue_examples() {
    let [l1, l2] = symmetric_block_eigenvalues(0.0, 0.0, K);
    let mut im = [l1.im, l2.im];
    im.sort_by(f64::total_cmp);
    assert!((im[0] + SQRT_2 * K).abs() < 1e-14 && (im[1] - SQRT_2 * K).abs() < 1e-14);
    assert!(l1.re.abs() < 1e-14 && l2.re.abs() < 1e-14);
    for gamma in [0.05, 0.1, 0.2, 0.28] {
        let [l1, l2] = symmetric_block_eigenvalues(gamma, -gamma, K);
        assert!(l1.re.abs() < 1e-12 && l2.re.abs() < 1e-12, "{gamma}");
    }
}

#[test]
fn block_growth_rate_matches_propagated_power() {
    // above break-even (gamma / k > 2 sqrt 2)
    for gamma in [0.7, 1.0, 1.4] {
        let gains = GainConvention::Half.gains(gamma, 0.0);
        let cfg = template().with_gains(gains);
        let rate = symmetric_growth_rate(GainConvention::Half, gamma, K, 0.0);
        let zs = [200.0, 250.0, 300.0];
        let lp: Vec<f64> = zs
            .iter()
            .map(|&z| power(&propagate_expm(&cfg, z)).ln())
            .collect();
        let slope = fit_slope(&zs, &lp);
        assert!(
            (slope - 2.0 * rate).abs() <= 1e-6 * rate.abs().max(1e-3),
            "{gamma}: {slope} vs {rate}"
        );
    }
}

#[test]
fn zero_gain_transfer_is_unitary() {
    // central excitation empties the centre at z = pi / (2 sqrt 2 k)
    let z_full = std::f64::consts::PI / (2.0 * SQRT_2 * K);
    let cfg = CouplerConfig::new(K, z_full, [0.0; 3], CENTRAL_INPUT).unwrap();
    for i in 0..=50 {
        let z = z_full * i as f64 / 50.0;
        assert!((power(&propagate_expm(&cfg, z)) - 1.0).abs() < 1e-12);
    }
    let out = propagate_expm(&cfg, z_full);
    assert!(out[1].norm() < 1e-12);
}

#[test]
fn antisymmetric_mode_stays_dark() {
    for g in [0.05, 0.2, 0.5] {
        let cfg = template().with_gains([g, -g, g]);
        for i in 0..=20 {
            let u = propagate_expm(&cfg, L * i as f64 / 20.0);
            assert!((u[0] - u[2]).norm() < 1e-12);
        }
    }
}

#[test]
fn expm_and_rk_agree_on_the_device() {
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-14,
    };
    for gamma_over_k in [0.0, 1.0, 2.0, 2.8, 4.0] {
        let cfg = template().with_gains(GainConvention::Half.gains(gamma_over_k * K, 0.0));
        let a = propagate_expm(&cfg, L);
        let b = propagate_rk(&cfg, L, &tol).unwrap();
        for j in 0..3 {
            assert!((a[j] - b[j]).norm() < 1e-10);
        }
    }
}

#[test]
fn all_channels_grow_above_break_even() {
    for conv in [GainConvention::Half, GainConvention::Full] {
        let be = break_even_asymptotic(conv, K, 0.0, 10.0 * K).unwrap();
        for factor in [1.05, 1.5, 2.0] {
            let gamma = be.gamma * factor;
            let cfg = template().with_gains(conv.gains(gamma, 0.0));
            let zs = [400.0, 500.0, 600.0];
            let outs: Vec<_> = zs.iter().map(|&z| propagate_expm(&cfg, z)).collect();
            for j in 0..3 {
                let lp: Vec<f64> = outs.iter().map(|u| u[j].norm_sqr().ln()).collect();
                assert!(fit_slope(&zs, &lp) > 0.0, "{conv:?} x{factor}: channel {j}");
            }
        }
        // below break-even the symmetric block decays or oscillates
        assert!(symmetric_growth_rate(conv, 0.9 * be.gamma, K, 0.0) <= 1e-12);
    }
}

#[test]
fn finite_length_crossings_have_unit_ratio() {
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-14,
    };
    for conv in [GainConvention::Half, GainConvention::Full] {
        let crossings =
            break_even_finite(&template(), conv, 0.0, 1e-3, 5.0 * K, 500, 1e-9).unwrap();
        assert!(!crossings.is_empty());
        for be in &crossings {
            let cfg = template().with_gains(conv.gains(be.gamma, 0.0));
            let ratio = power(&propagate_rk(&cfg, L, &tol).unwrap()) / cfg.input_power();
            assert!((ratio - 1.0).abs() < 1e-6, "{conv:?}: {be:?} ratio {ratio}");
        }
        // past the last crossing the device amplifies
        let last = crossings.last().unwrap().gamma;
        assert!(output_ratio(&template(), conv, last * 1.01, 0.0) > 1.0);
    }
}

#[test]
fn lossless_ratio_is_exactly_one_and_search_starts_above_zero() {
    assert!((output_ratio(&template(), GainConvention::Half, 0.0, 0.0) - 1.0).abs() < 1e-12);
    assert!(break_even_finite(&template(), GainConvention::Half, 0.0, 0.0, 1.0, 10, 1e-6).is_err());
}

#[test]
fn baseline_loss_shifts_every_channel() {
    let gains = GainConvention::Half.gains(0.4, 0.1);
    for (g, want) in gains.iter().zip([0.1, -0.3, 0.1]) {
        assert!((g - want).abs() < 1e-15);
    }
    let shifted = system_eigenvalues(K, gains).unwrap();
    let base = system_eigenvalues(K, GainConvention::Half.gains(0.4, 0.0)).unwrap();
    for z in &base {
        let d = shifted
            .iter()
            .map(|w| (w - (z - 0.1)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-12);
    }
    assert!((antisymmetric_eigenvalue(0.2) - c(0.2, 0.0)).norm() < 1e-15);
}

#[test]
fn recording_sweep_is_monotone_and_ends_in_quadrature() {
    let schedule = GainSchedule::new(1.5 * K, 1.0).unwrap();
    let times: Vec<f64> = (0..=200).map(|i| 0.05 * i as f64).collect();
    let records = recording_sweep(&schedule, &template(), GainConvention::Half, 0.0, &times);
    assert_eq!(records[0].gamma, 0.0);
    assert!((records[0].total - 1.0).abs() < 1e-12);
    for w in records.windows(2) {
        assert!(w[1].gamma >= w[0].gamma && w[1].gamma < schedule.gamma0);
        assert!(
            w[1].total >= w[0].total - 1e-12,
            "at t_rec = {}",
            w[1].t_rec
        );
    }
    for r in &records {
        // the outer channels stay in phase with each other
        assert!((r.relative_phases[0] - r.relative_phases[1]).abs() < 1e-9);
    }
    let last = records.last().unwrap();
    assert!((last.gamma - schedule.gamma0).abs() < 1e-4 * schedule.gamma0);
    assert!((last.relative_phases[0].abs() - FRAC_PI_2).abs() < 1e-9);
}
