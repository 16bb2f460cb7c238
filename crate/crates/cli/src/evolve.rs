use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use trimer_core::continuation::{ghost_branches, regular_study, Branch, Solution, StudyOptions};
use trimer_core::dynamics::{
    classify_scenario, departure_from_ghost, ghost_slope_check, initial_from_branch, integrate,
    perturb, uniform_grid, IntegrationOptions,
};
use trimer_core::ode::Tolerances;
use trimer_core::{TrimerError, TrimerParams};

use crate::args::{usage, EvolveArgs};
use crate::output::{num, write_script, Dataset, Manifest};

const GHOST_LABELS: [&str; 2] = ["magenta", "green"];
/// Relative deviation from the ghost's exponential law that counts as departure.
const DEPARTURE_THRESHOLD: f64 = 0.1;
const SLOPE_WINDOW: f64 = 1.0;

pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "t", "abs_u1", "abs_u2", "abs_u3", "power", "u1_re", "u1_im", "u2_re", "u2_im", "u3_re",
    "u3_im",
];

fn validate(args: &EvolveArgs) -> Result<()> {
    if !(args.at_gamma >= 0.0 && args.at_gamma.is_finite()) {
        return Err(usage(format!(
            "--at-gamma must be a nonnegative number, got {}",
            args.at_gamma
        )));
    }
    if args.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if !(args.perturbation >= 0.0 && args.perturbation.is_finite()) {
        return Err(usage(format!(
            "--perturbation must be nonnegative, got {}",
            args.perturbation
        )));
    }
    Ok(())
}

/// Continuation reaching past `gamma` and past the ghost end point.
fn gamma_max(args: &EvolveArgs) -> f64 {
    let ghost_end = (2.0 * args.k * args.k + args.e * args.e).sqrt();
    (1.25 * args.at_gamma).max(1.2 * ghost_end)
}

fn find_branch(branches: &[Branch], label: &str) -> Result<Branch> {
    match branches.iter().find(|b| b.label == label) {
        Some(b) => Ok(b.clone()),
        None => {
            let known: Vec<&str> = branches.iter().map(|b| b.label.as_str()).collect();
            Err(usage(format!(
                "unknown branch {label:?}; available: {}",
                known.join(", ")
            )))
        }
    }
}

pub fn options(args: &EvolveArgs) -> IntegrationOptions {
    IntegrationOptions {
        tolerances: Tolerances {
            rtol: args.rtol,
            atol: args.atol,
        },
        blow_up: args.blow_up,
        ..IntegrationOptions::default()
    }
}

pub fn run(args: &EvolveArgs, dir: &Path, gnuplot: bool) -> Result<Manifest> {
    validate(args)?;
    let config = serde_json::to_value(args)?;
    let opts = StudyOptions::default();
    let is_ghost = GHOST_LABELS.contains(&args.from_branch.as_str());
    let branch = if is_ghost {
        let (_, g) = ghost_branches(args.e, args.k, gamma_max(args), &opts)
            .context("ghost continuation failed")?;
        find_branch(&g.branches, &args.from_branch)?
    } else {
        let r =
            regular_study(args.e, args.k, gamma_max(args), &opts).context("continuation failed")?;
        find_branch(&r.branches, &args.from_branch)?
    };

    let (state, profile_gamma) =
        match initial_from_branch(&branch, args.at_gamma, args.terminal_profile) {
            Ok(v) => v,
            Err(e @ TrimerError::InvalidParameter(_)) => return Err(usage(e.to_string())),
            Err(e) => return Err(e.into()),
        };
    let params = TrimerParams::new(args.e, args.k, args.at_gamma)?;
    let iopts = options(args);
    let grid = uniform_grid(args.t_end, args.samples);
    let traj = integrate(
        &perturb(&state, args.perturbation),
        &params,
        args.t_end,
        &grid,
        &iopts,
    )
    .context("integration failed")?;

    let mut ds = Dataset::create(
        &dir.join("trajectory.csv"),
        "trajectory",
        &config,
        "time dimensionless; fields as (re, im)",
        &TRAJECTORY_COLUMNS,
    )?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let m = s.moduli();
        let u = s.to_array();
        ds.row([
            num(*t),
            num(m[0]),
            num(m[1]),
            num(m[2]),
            num(m.iter().map(|x| x * x).sum()),
            num(u[0].re),
            num(u[0].im),
            num(u[1].re),
            num(u[1].im),
            num(u[2].re),
            num(u[2].im),
        ])?;
    }
    let mut manifest = Manifest::new("evolve", config);
    manifest.files.push(ds.finish()?);
    if gnuplot {
        manifest.files.push(write_script(dir, "evolve.gp", SCRIPT)?);
    }

    let scenario = classify_scenario(&traj).ok();
    let mut summary = json!({
        "initial_gamma": profile_gamma,
        "terminal_profile_used": profile_gamma != args.at_gamma,
        "termination": traj.termination.as_str(),
        "final_time": traj.final_time,
        "steps": {"accepted": traj.stats.accepted, "rejected": traj.stats.rejected},
        "scenario": scenario.map(|s| s.scenario.as_str()),
        "log_modulus_slopes": scenario.map(|s| s.slopes),
    });
    if is_ghost && profile_gamma == args.at_gamma {
        summary["ghost"] = ghost_summary(&branch, args, &traj, &iopts)?;
    }
    manifest.summary = summary;
    Ok(manifest)
}

fn ghost_summary(
    branch: &Branch,
    args: &EvolveArgs,
    traj: &trimer_core::dynamics::Trajectory,
    iopts: &IntegrationOptions,
) -> Result<Value> {
    let Solution::Ghost(g) = trimer_core::continuation::solution_at(branch, args.at_gamma)? else {
        return Ok(Value::Null);
    };
    let slope = ghost_slope_check(&g, SLOPE_WINDOW, iopts)?;
    Ok(json!({
        "E_imag": g.e_imag(),
        "power_slope": slope,
        "departure_time": departure_from_ghost(traj, g.amplitudes(), g.e_imag(), DEPARTURE_THRESHOLD),
    }))
}

const SCRIPT: &str = r##"set datafile separator ","
set datafile commentschars "#"
set logscale y
set xlabel "t"
set ylabel "|u_j|"
plot "trajectory.csv" using 1:2 with lines title "|u1|", \
     "" using 1:3 with lines title "|u2|", \
     "" using 1:4 with lines title "|u3|"
"##;
