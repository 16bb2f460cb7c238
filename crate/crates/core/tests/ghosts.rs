mod common;

use common::{c, unit_studies};
use trimer_core::continuation::{ghost_at, pitchfork_locator, EventKind, Origin};
use trimer_core::ghost::{consistency_residual, ghost_trig, solve_ghost, GhostPoint};
use trimer_core::model::{mirror_map, stationary_residual, vector_field};
use trimer_core::spectra::{ghost_spectrum, multiset_distance};
use trimer_core::TrimerParams;

fn ghost_points(label: &str) -> Vec<GhostPoint> {
    let (_, g) = unit_studies();
    g.branch(label)
        .unwrap()
        .points
        .iter()
        .map(|p| match p.solution {
            trimer_core::continuation::Solution::Ghost(g) => g,
            _ => panic!("regular point on a ghost branch"),
        })
        .collect()
}

#[test]
fn stored_ghosts_solve_the_complex_stationary_problem() {
    for label in ["magenta", "green"] {
        for g in ghost_points(label) {
            let r = stationary_residual(&g.polar, &g.propagation, &g.params);
            assert!(
                r.iter().all(|v| v.abs() <= 1e-10),
                "{label} at {}: {r:?}",
                g.gamma()
            );
            let t = ghost_trig(g.amplitudes(), &g.params, g.propagation.e_hat).unwrap();
            for (s, co) in [(t.sin_a, t.cos_a), (t.sin_c, t.cos_c), (t.sin_e, t.cos_e)] {
                assert!((s * s + co * co - 1.0).abs() <= 1e-10);
            }
            let [a, _, cc] = g.amplitudes();
            assert!(g.propagation.phi_e != 0.0 && a != cc);
        }
    }
}

#[test]
fn mirror_branches_map_onto_each_other() {
    let (_, study) = unit_studies();
    for g in ghost_points("magenta") {
        let gamma = g.gamma();
        let Ok(partner) = ghost_at(study, "green", gamma) else {
            continue;
        };
        let (m, me) = mirror_map(&g.polar, &g.propagation);
        assert!(
            m.to_state().distance(&partner.polar.to_state()) <= 1e-8,
            "at {gamma}"
        );
        assert!((me.value() - partner.propagation.value()).norm() <= 1e-8);
        assert!((g.propagation.phi_e + partner.propagation.phi_e).abs() <= 1e-10);
    }
}

#[test]
fn mirror_seed_converges_to_the_mirror_ghost() {
    let (_, study) = unit_studies();
    let m = ghost_at(study, "magenta", 1.5).unwrap();
    let [a, b, cc] = m.amplitudes();
    let g = solve_ghost(&m.params, 1.0, [cc, b, a]).unwrap();
    assert!((g.propagation.phi_e + m.propagation.phi_e).abs() <= 1e-10);
    let (mirrored, _) = mirror_map(&m.polar, &m.propagation);
    assert!(mirrored.to_state().distance(&g.polar.to_state()) <= 1e-8);
}

#[test]
fn magenta_grows_and_green_decays() {
    for g in ghost_points("magenta") {
        assert!(g.e_imag() < 0.0 && g.predicted_power_slope() > 0.0);
    }
    for g in ghost_points("green") {
        assert!(g.e_imag() > 0.0 && g.predicted_power_slope() < 0.0);
    }
}

#[test]
fn mirror_spectra_are_reflections() {
    let (_, study) = unit_studies();
    for gamma in [1.05, 1.1, 1.3, 1.5, 1.7] {
        let m = ghost_spectrum(&ghost_at(study, "magenta", gamma).unwrap()).unwrap();
        let g = ghost_spectrum(&ghost_at(study, "green", gamma).unwrap()).unwrap();
        let reflected: Vec<_> = m.eigenvalues.iter().map(|z| -z.conj()).collect();
        let d = multiset_distance(&reflected, &g.eigenvalues);
        assert!(d <= 1e-8, "at {gamma}: {d:e}");
    }
}

#[test]
fn ghost_spectra_at_one_and_a_half() {
    let (_, study) = unit_studies();
    for label in ["magenta", "green"] {
        let s = ghost_spectrum(&ghost_at(study, label, 1.5).unwrap()).unwrap();
        assert!(s.is_unstable(), "{label}");
        assert!(s.imaginary_axis_asymmetry() > 1e-3, "{label}");
    }
    // magenta: weakly unstable through one small positive real eigenvalue
    let s = ghost_spectrum(&ghost_at(study, "magenta", 1.5).unwrap()).unwrap();
    let real: Vec<_> = s
        .eigenvalues
        .iter()
        .filter(|z| z.re > 1e-8 && z.im.abs() < 1e-8)
        .collect();
    assert_eq!(real.len(), 1);
    assert!(real[0].re < 0.2);
}

#[test]
fn ghosts_terminate_at_vanishing_amplitude() {
    let (_, study) = unit_studies();
    let expected = 3.0_f64.sqrt();
    assert_eq!(study.termination.len(), 2);
    for t in &study.termination {
        assert!((t - expected).abs() <= 1e-3, "{t}");
        assert!((t - 1.732).abs() <= 0.005);
    }
    assert_eq!(
        study
            .events
            .iter()
            .filter(|e| e.kind == EventKind::GhostTermination)
            .count(),
        2
    );
    for label in ["magenta", "green"] {
        let b = study.branch(label).unwrap();
        let (lo, hi) = b.gamma_range();
        assert!(
            (lo - 1.035).abs() <= 0.005 && (hi - expected).abs() <= 1e-3,
            "{lo} {hi}"
        );
        assert!(matches!(b.origin, Origin::Pitchfork { .. }));
        let last = b.points.last().unwrap().solution.polar().total_power();
        assert!(last < 1e-2, "{label}: power {last}");
    }
}

#[test]
fn no_ghost_past_termination() {
    let (_, study) = unit_studies();
    let m = ghost_at(study, "magenta", 1.7).unwrap();
    let p = TrimerParams::new(1.0, 1.0, 1.74).unwrap();
    match solve_ghost(&p, 1.0, m.amplitudes()) {
        Err(_) => {}
        Ok(g) => assert!(g.polar.total_power() < 1e-6, "{:?}", g.amplitudes()),
    }
}

#[test]
fn pitchfork_from_the_blue_branch() {
    let (regular, study) = unit_studies();
    let report = pitchfork_locator(regular, "blue", study).unwrap();
    assert!((report.gamma_c - 1.035).abs() <= 0.005, "{report:?}");
    assert!((report.gamma_fork - 1.035).abs() <= 0.005);
    assert!(report.mismatch <= 5e-3);
    assert!((report.scaling_exponent - 0.5).abs() <= 0.1, "{report:?}");
    // both mirror branches leave from the same point
    let starts: Vec<f64> = ["magenta", "green"]
        .iter()
        .map(|l| study.branch(l).unwrap().gamma_range().0)
        .collect();
    assert!((starts[0] - starts[1]).abs() <= 1e-9);
    // asymmetry shrinks towards the fork
    let pts = ghost_points("magenta");
    let asym: Vec<f64> = pts.iter().take(10).map(|g| g.asymmetry().abs()).collect();
    assert!(asym.windows(2).all(|w| w[1] > w[0]), "{asym:?}");
}

#[test]
fn ghosts_are_not_dynamical_solutions() {
    let (_, study) = unit_studies();
    for label in ["magenta", "green"] {
        let g = ghost_at(study, label, 1.5).unwrap();
        let v = g.polar.to_state();
        let f = vector_field(&v, &g.params).to_array();
        let u = v.to_array();
        let e_real = g.propagation.value().re;
        for j in 0..3 {
            // what is left after the real rotation is the E_i part
            let mismatch = f[j] - c(0.0, e_real) * u[j];
            assert!((mismatch + u[j] * g.e_imag()).norm() <= 1e-9);
            assert!(mismatch.norm() > 1e-3);
        }
    }
}

#[test]
fn generic_triple_is_not_a_ghost() {
    let p = TrimerParams::new(1.0, 1.0, 1.5).unwrap();
    let r = consistency_residual([0.5, 0.7, 0.9], &p, 1.0).unwrap();
    assert!(r.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e-4);
}
