//! Acceptance suite: one PASS / FAIL line per criterion.

mod common;

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::process::ExitCode;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{
    c, characteristic_polynomial, fd_linearization, flow_growth_rate, polynomial_roots,
    unit_studies, weak_coupling_study,
};
use trimer_core::continuation::{
    ghost_at, linear_pt_threshold, pitchfork_locator, regular_at, EventKind, RegularStudy,
};
use trimer_core::dynamics::{
    classify_scenario, departure_from_ghost, fit_slope, ghost_slope_check, initial_from_branch,
    integrate, perturb, uniform_grid, IntegrationOptions, Scenario, DEFAULT_PERTURBATION,
};
use trimer_core::linalg::{eigenvalues, ComplexMatrix};
use trimer_core::model::{hamiltonian, stationary_residual, total_power};
use trimer_core::ode::Tolerances;
use trimer_core::spectra::{
    build_linearization, ghost_spectrum, multiset_distance, spectrum_at, stationary_spectrum,
};
use trimer_core::waveguide::{
    break_even_asymptotic, power, propagate_expm, propagate_rk, CouplerConfig, GainConvention,
    CENTRAL_INPUT,
};
use trimer_core::{PolarState, PropagationConstant, TrimerParams, TrimerState};

#[derive(Default)]
struct Criterion {
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((ok, what.into()));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(ok, _)| *ok)
    }

    fn report(&self, n: usize, title: &str) {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, s)| s.as_str())
            .collect();
        let shown: Vec<&str> = if failed.is_empty() {
            self.checks.iter().map(|(_, s)| s.as_str()).collect()
        } else {
            failed
        };
        let status = if self.passed() { "PASS" } else { "FAIL" };
        println!("criterion {n} {status}: {title} [{}]", shown.join("; "));
    }
}

fn events(study: &RegularStudy, kind: EventKind, label: &str) -> Vec<f64> {
    study
        .events_of(kind)
        .filter(|e| label.is_empty() || e.involves(label))
        .map(|e| e.gamma_critical)
        .collect()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn unstable(study: &RegularStudy, label: &str, gamma: f64) -> bool {
    stationary_spectrum(&regular_at(study, label, gamma).unwrap())
        .unwrap()
        .is_unstable()
}

fn criterion_1() -> Criterion {
    let mut cr = Criterion::default();
    let s = weak_coupling_study();
    let census: Vec<usize> = [0.005, 0.015, 0.05, 0.12]
        .iter()
        .map(|&g| s.census(g))
        .collect();
    cr.check(
        census == [5, 5, 3, 1],
        format!("census {census:?} at 0.005/0.015/0.05/0.12"),
    );
    let folds = events(s, EventKind::Fold, "");
    let ok = folds.len() == 2 && within(folds[0], 0.020, 0.005) && within(folds[1], 0.100, 0.005);
    cr.check(ok, format!("folds {folds:.6?}"));
    let persistent = s
        .branches
        .iter()
        .find(|b| b.contains_gamma(0.12))
        .map(|b| b.label.clone());
    cr.check(
        persistent.is_some(),
        format!("persistent branch {persistent:?} at 0.12"),
    );
    if let Some(label) = persistent {
        let lo = regular_at(s, &label, 0.12 - 1e-4).unwrap().amplitudes();
        let hi = regular_at(s, &label, 0.12 + 1e-4).unwrap().amplitudes();
        let (db, da) = ((hi[1] - lo[1]) / 2e-4, (hi[0] - lo[0]) / 2e-4);
        cr.check(
            db > 0.0 && da < 0.0,
            format!("dB/dgamma {db:.4e}, dA/dgamma {da:.4e}"),
        );
    }
    cr
}

fn criterion_2() -> Criterion {
    let mut cr = Criterion::default();
    let (regular, ghosts) = unit_studies();
    let birth = events(regular, EventKind::ZeroBirth, "black");
    cr.check(
        birth.len() == 1 && within(birth[0], 1.0, 1e-3),
        format!("zero birth {birth:.6?}"),
    );
    let fold = events(regular, EventKind::Fold, "blue");
    cr.check(
        fold.len() == 1 && within(fold[0], 1.043, 0.005),
        format!("blue/red fold {fold:.6?}"),
    );
    match pitchfork_locator(regular, "blue", ghosts) {
        Ok(r) => cr.check(
            within(r.gamma_c, 1.035, 0.005) && within(r.gamma_fork, 1.035, 0.005),
            format!(
                "ghost pitchfork {:.6} (fork {:.6}, destabilization {:.6})",
                r.gamma_c, r.gamma_fork, r.gamma_destabilization
            ),
        ),
        Err(e) => cr.check(false, format!("pitchfork: {e}")),
    }
    let exact = (2.0_f64 + 1.0).sqrt();
    for t in &ghosts.termination {
        cr.check(
            within(*t, 1.732, 0.005) && within(*t, exact, 1e-3),
            format!("ghost termination {t:.6} vs sqrt(2k^2+E^2) {exact:.6}"),
        );
    }
    let pt = linear_pt_threshold(1.0).unwrap();
    cr.check(
        within(pt.analytic, SQRT_2, 1e-15) && within(pt.numeric, SQRT_2, 1e-6),
        format!(
            "PT threshold analytic {:.9}, numeric {:.9}",
            pt.analytic, pt.numeric
        ),
    );
    cr
}

fn criterion_3() -> Criterion {
    let mut cr = Criterion::default();
    let (s, _) = unit_studies();
    let blue = events(s, EventKind::StabilityChange, "blue");
    let ok = blue.len() == 2 && within(blue[0], 1.00, 0.005) && within(blue[1], 1.035, 0.005);
    let sampled =
        unstable(s, "blue", 0.99) && !unstable(s, "blue", 1.02) && unstable(s, "blue", 1.041);
    cr.check(
        ok && sampled,
        format!(
            "blue stable on [{:.6}, {:.6}]",
            blue[0],
            blue.get(1).copied().unwrap_or(f64::NAN)
        ),
    );
    let red = events(s, EventKind::StabilityChange, "red");
    let red_end = s.branch("red").unwrap().gamma_range().1;
    let ok = red.len() == 1 && within(red[0], 1.035, 0.005) && within(red_end, 1.043, 0.005);
    let sampled = !unstable(s, "red", 1.02) && unstable(s, "red", 1.041);
    cr.check(
        ok && sampled,
        format!("red unstable on [{:.6}, {red_end:.6}]", red[0]),
    );
    let black = events(s, EventKind::StabilityChange, "black");
    cr.check(
        black.len() == 1 && within(black[0], 1.13, 0.01),
        format!("black destabilizes {black:.6?}"),
    );
    let off_axis = |g: f64| {
        stationary_spectrum(&regular_at(s, "blue", g).unwrap())
            .unwrap()
            .eigenvalues
            .iter()
            .filter(|z| z.re.abs() > 1e-8)
            .count()
    };
    let (before, after) = (off_axis(0.99), off_axis(1.01));
    cr.check(
        before == 4 && after == 0 && within(blue[0], 1.0, 0.01),
        format!("blue quartet off-axis count {before} at 0.99, {after} at 1.01"),
    );
    cr
}

fn criterion_4() -> Criterion {
    let mut cr = Criterion::default();
    let (_, ghosts) = unit_studies();
    let m = ghost_spectrum(&ghost_at(ghosts, "magenta", 1.5).unwrap()).unwrap();
    let g = ghost_spectrum(&ghost_at(ghosts, "green", 1.5).unwrap()).unwrap();
    cr.check(
        m.is_unstable() && g.is_unstable(),
        format!(
            "max Re lambda magenta {:.4}, green {:.4}",
            m.max_real_part, g.max_real_part
        ),
    );
    let reflected: Vec<_> = m.eigenvalues.iter().map(|z| -z.conj()).collect();
    let d = multiset_distance(&reflected, &g.eigenvalues);
    cr.check(d <= 1e-8, format!("mirror spectra distance {d:.2e}"));
    let (am, ag) = (m.imaginary_axis_asymmetry(), g.imaginary_axis_asymmetry());
    cr.check(
        am > 1e-3 && ag > 1e-3,
        format!("axis asymmetry {am:.4}, {ag:.4}"),
    );
    cr
}

fn criterion_5() -> Criterion {
    let mut cr = Criterion::default();
    let (regular, ghosts) = unit_studies();
    let opts = IntegrationOptions::default();
    for gamma in [1.1, 1.5] {
        for label in ["magenta", "green"] {
            let g = ghost_at(ghosts, label, gamma).unwrap();
            let s = ghost_slope_check(&g, 1.0, &opts).unwrap();
            cr.check(
                s.relative_deviation < 0.05,
                format!(
                    "{label} {gamma} slope {:.4} vs {:.4}",
                    s.measured, s.predicted
                ),
            );
            let traj = integrate(
                &g.polar.to_state(),
                &g.params,
                60.0,
                &uniform_grid(60.0, 600),
                &opts,
            )
            .unwrap();
            let t = departure_from_ghost(&traj, g.amplitudes(), g.e_imag(), 0.1);
            cr.check(
                t.is_some(),
                format!("departure {:.2}", t.unwrap_or(f64::INFINITY)),
            );
        }
    }
    for (label, gamma, terminal, want) in [
        ("blue", 1.1, true, Scenario::CentralSidesWithGain),
        ("red", 1.1, true, Scenario::CentralSidesWithGain),
        ("black", 1.5, false, Scenario::CentralSidesWithLoss),
    ] {
        let (state, _) =
            initial_from_branch(regular.branch(label).unwrap(), gamma, terminal).unwrap();
        let p = TrimerParams::new(1.0, 1.0, gamma).unwrap();
        let traj = integrate(
            &perturb(&state, DEFAULT_PERTURBATION),
            &p,
            60.0,
            &uniform_grid(60.0, 600),
            &opts,
        )
        .unwrap();
        let sc = classify_scenario(&traj).unwrap();
        cr.check(
            sc.scenario == want,
            format!("{label} {gamma}: {}", sc.scenario.as_str()),
        );
    }
    cr
}

fn criterion_6() -> Criterion {
    let mut cr = Criterion::default();
    let opts = IntegrationOptions::default();
    let polar = PolarState::new([1.0; 3], [FRAC_PI_2, 0.0, -FRAC_PI_2]).unwrap();
    let p = TrimerParams::new(1.0, 1.0, 1.0).unwrap();
    let r = stationary_residual(&polar, &PropagationConstant::real(1.0), &p);
    let r_max = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
    cr.check(r_max < 1e-12, format!("exact residual {r_max:.1e}"));
    let traj = integrate(&polar.to_state(), &p, 50.0, &uniform_grid(50.0, 500), &opts).unwrap();
    let drift = traj
        .moduli()
        .iter()
        .flatten()
        .map(|m| (m - 1.0).abs())
        .fold(0.0, f64::max);
    cr.check(drift < 1e-8, format!("exact moduli drift {drift:.1e}"));

    let s0 = TrimerState::new(c(0.3, 0.0), c(0.0, 0.4), c(-0.2, 0.0));
    let p0 = TrimerParams::new(1.0, 1.0, 0.0).unwrap();
    let traj = integrate(&s0, &p0, 100.0, &uniform_grid(100.0, 1000), &opts).unwrap();
    let (n0, h0) = (total_power(&s0), hamiltonian(&s0, 1.0));
    let dn = traj
        .states
        .iter()
        .map(|s| (total_power(s) - n0).abs())
        .fold(0.0, f64::max);
    let dh = traj
        .states
        .iter()
        .map(|s| (hamiltonian(s, 1.0) - h0).abs())
        .fold(0.0, f64::max);
    cr.check(
        dn < 1e-8 && dh < 1e-8,
        format!("gamma=0 drift power {dn:.1e}, H {dh:.1e}"),
    );

    let e = c(1.0, 0.0);
    let fd = build_linearization(&polar.to_state(), e, &p)
        .sub(&fd_linearization(&polar.to_state(), e, &p, 1e-6))
        .max_abs();
    cr.check(fd < 1e-6, format!("FD Jacobian {fd:.1e}"));

    let (regular, _) = unit_studies();
    let mut worst_flow: f64 = 0.0;
    let mut worst_poly: f64 = 0.0;
    for (label, gamma) in [("blue", 0.5), ("black", 1.5), ("red", 1.04)] {
        let pt = regular_at(regular, label, gamma).unwrap();
        let state = pt.polar.to_state();
        let spec = spectrum_at(&state, pt.propagation.value(), &pt.params).unwrap();
        let lambda = spec.eigenvalues[0];
        let rate = flow_growth_rate(
            &state,
            pt.propagation.e_hat,
            &pt.params,
            lambda,
            1e-6,
            1e3_f64.ln() / lambda.re,
        );
        worst_flow = worst_flow.max((rate - lambda.re).abs() / lambda.re);
        let m = build_linearization(&state, pt.propagation.value(), &pt.params);
        let nonzero = |z: &&trimer_core::Complex64| z.norm() > 1e-5;
        let a: Vec<_> = spec.eigenvalues.iter().filter(nonzero).copied().collect();
        let b: Vec<_> = polynomial_roots(&characteristic_polynomial(&m))
            .iter()
            .filter(nonzero)
            .copied()
            .collect();
        worst_poly = worst_poly.max(if a.len() == b.len() {
            multiset_distance(&a, &b)
        } else {
            f64::INFINITY
        });
    }
    cr.check(
        worst_flow < 0.02,
        format!("flow growth vs Re lambda {:.3}%", 100.0 * worst_flow),
    );
    let mut rng = StdRng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 100 {
        let rows: Vec<Vec<_>> = (0..6)
            .map(|_| {
                (0..6)
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let a = ComplexMatrix::from_rows(&rows);
        let z = eigenvalues(&a).unwrap();
        let gap = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
            .map(|(i, j)| (z[i] - z[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if gap < 1e-2 {
            continue;
        }
        worst_poly = worst_poly.max(multiset_distance(
            &z,
            &polynomial_roots(&characteristic_polynomial(&a)),
        ));
        checked += 1;
    }
    cr.check(
        worst_poly < 1e-8,
        format!("char. polynomial roots {worst_poly:.1e}"),
    );
    cr
}

fn criterion_7() -> Criterion {
    let mut cr = Criterion::default();
    let k = 0.2;
    let be = break_even_asymptotic(GainConvention::Half, k, 0.0, 2.0).unwrap();
    cr.check(
        within(be.gamma_over_k, 2.0 * SQRT_2, 1e-3),
        format!("break-even gamma/k {:.6}", be.gamma_over_k),
    );
    let mut rng = StdRng::seed_from_u64(5);
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-14,
    };
    let (mut norm_err, mut rk_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let input = [0; 3].map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let gains = [0; 3].map(|_| rng.random_range(-0.3..0.3));
        let cfg = CouplerConfig::new(
            rng.random_range(0.05..0.5),
            rng.random_range(1.0..30.0),
            gains,
            input,
        )
        .unwrap();
        let lossless = cfg.with_gains([0.0; 3]);
        let z = rng.random_range(0.0..30.0);
        norm_err = norm_err.max(
            (power(&propagate_expm(&lossless, z)) - lossless.input_power()).abs()
                / lossless.input_power().max(1.0),
        );
        let a = propagate_expm(&cfg, cfg.length);
        let b = propagate_rk(&cfg, cfg.length, &tol).unwrap();
        let scale = power(&a).sqrt().max(1.0);
        rk_err = rk_err.max((0..3).map(|j| (a[j] - b[j]).norm()).fold(0.0, f64::max) / scale);
    }
    cr.check(
        norm_err < 1e-12,
        format!("lossless norm error {norm_err:.1e}"),
    );
    cr.check(rk_err < 1e-10, format!("expm vs RK {rk_err:.1e}"));
    let gamma = 1.2 * be.gamma;
    let cfg = CouplerConfig::new(
        k,
        20.0,
        GainConvention::Half.gains(gamma, 0.0),
        CENTRAL_INPUT,
    )
    .unwrap();
    let zs = [400.0, 500.0, 600.0];
    let outs: Vec<_> = zs.iter().map(|&z| propagate_expm(&cfg, z)).collect();
    let slopes: Vec<f64> = (0..3)
        .map(|j| {
            fit_slope(
                &zs,
                &outs
                    .iter()
                    .map(|u| u[j].norm_sqr().ln())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    cr.check(
        slopes.iter().all(|s| *s > 0.0),
        format!("channel log-power slopes at 1.2x break-even {slopes:.4?}"),
    );
    cr
}

type Check = fn() -> Criterion;

fn main() -> ExitCode {
    let suite: [(&str, Check); 7] = [
        ("branch census E=0.5 k=0.1", criterion_1),
        ("E=k=1 bifurcation set", criterion_2),
        ("stability intervals", criterion_3),
        ("ghost spectra", criterion_4),
        ("ghost dynamics and growth scenarios", criterion_5),
        ("exact-solution and conservation oracles", criterion_6),
        ("waveguide break-even and propagation", criterion_7),
    ];
    let mut all = true;
    for (i, (title, run)) in suite.iter().enumerate() {
        let cr = run();
        cr.report(i + 1, title);
        all &= cr.passed();
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
