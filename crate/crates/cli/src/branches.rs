use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use trimer_core::continuation::{regular_study, BifurcationEvent, Branch, Origin, StudyOptions};

use crate::args::{usage, BranchesArgs, Range};
use crate::output::{num, write_script, Dataset, Manifest};

pub const POINT_UNITS: &str =
    "dimensionless; angles in radians in (-pi, pi]; eigenvalues as (re, im) pairs";

pub fn point_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "branch",
        "origin",
        "gamma",
        "A",
        "B",
        "C",
        "phi_a",
        "phi_b",
        "phi_c",
        "E_hat",
        "phi_e",
        "E_re",
        "E_im",
        "residual",
        "max_re_lambda",
        "max_abs_im_lambda",
        "classification",
    ]
    .map(String::from)
    .to_vec();
    for j in 1..=6 {
        cols.push(format!("lambda{j}_re"));
        cols.push(format!("lambda{j}_im"));
    }
    cols
}

pub fn origin_name(o: &Origin) -> String {
    match o {
        Origin::GammaZero { pattern, .. } => format!("gamma_zero {pattern}"),
        Origin::ZeroBirth => "zero_birth".into(),
        Origin::Pitchfork { .. } => "pitchfork".into(),
        Origin::Interior => "interior".into(),
    }
}

/// One row per stored point of `branch` with `gamma` in `range`.
pub fn write_points(ds: &mut Dataset, branch: &Branch, range: &Range) -> Result<usize> {
    let origin = origin_name(&branch.origin);
    let mut n = 0;
    for p in branch.points.iter().filter(|p| range.contains(p.gamma)) {
        let sol = &p.solution;
        let [a, b, c] = sol.amplitudes();
        let [pa, pb, pc] = sol.phases();
        let epc = sol.propagation();
        let e = epc.value();
        let s = &p.spectrum;
        let mut row = vec![
            branch.label.clone(),
            origin.clone(),
            num(p.gamma),
            num(a),
            num(b),
            num(c),
            num(pa),
            num(pb),
            num(pc),
            num(epc.e_hat),
            num(epc.phi_e),
            num(e.re),
            num(e.im),
            num(sol.residual()),
            num(s.max_real_part),
            num(s.max_abs_imag()),
            s.classification.as_str().to_string(),
        ];
        for z in &s.eigenvalues {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        ds.row(&row)?;
        n += 1;
    }
    Ok(n)
}

pub fn write_events(
    path: &Path,
    kind: &str,
    config: &Value,
    events: &[&BifurcationEvent],
) -> Result<Dataset> {
    let mut ds = Dataset::create(
        path,
        kind,
        config,
        "gamma dimensionless",
        &[
            "kind",
            "gamma",
            "bracket_lo",
            "bracket_hi",
            "branches",
            "detail",
        ],
    )?;
    for e in events {
        let labels: Vec<&str> = e.witnesses.iter().map(|w| w.label.as_str()).collect();
        ds.row([
            e.kind.as_str().to_string(),
            num(e.gamma_critical),
            num(e.gamma_bracket[0]),
            num(e.gamma_bracket[1]),
            labels.join(" "),
            e.detail.clone(),
        ])?;
    }
    Ok(ds)
}

pub fn run(args: &BranchesArgs, dir: &Path, gnuplot: bool) -> Result<Manifest> {
    if args.census_steps == 0 {
        return Err(usage("--census-steps must be positive"));
    }
    let config = serde_json::to_value(args)?;
    let study = regular_study(args.e, args.k, args.gamma.hi, &StudyOptions::default())
        .context("continuation failed")?;
    let mut manifest = Manifest::new("branches", config.clone());

    let cols = point_columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut ds = Dataset::create(
        &dir.join("branches.csv"),
        "branches",
        &config,
        POINT_UNITS,
        &cols,
    )?;
    for b in &study.branches {
        write_points(&mut ds, b, &args.gamma)?;
    }
    manifest.files.push(ds.finish()?);

    let events: Vec<&BifurcationEvent> = study
        .events
        .iter()
        .filter(|e| args.gamma.contains(e.gamma_critical))
        .collect();
    manifest
        .files
        .push(write_events(&dir.join("events.csv"), "events", &config, &events)?.finish()?);

    let mut census = Dataset::create(
        &dir.join("census.csv"),
        "census",
        &config,
        "gamma dimensionless",
        &["gamma", "count"],
    )?;
    for g in args.gamma.grid(args.census_steps) {
        census.row([num(g), study.census(g).to_string()])?;
    }
    manifest.files.push(census.finish()?);

    if gnuplot {
        let labels: Vec<&str> = study.branches.iter().map(|b| b.label.as_str()).collect();
        manifest
            .files
            .push(write_script(dir, "branches.gp", &script(&labels))?);
    }
    manifest.summary = json!({
        "branches": study.branches.iter().map(|b| {
            let (lo, hi) = b.gamma_range();
            json!({"label": b.label, "origin": origin_name(&b.origin), "gamma_range": [lo, hi]})
        }).collect::<Vec<_>>(),
        "events": events.iter().map(|e| json!({
            "kind": e.kind.as_str(),
            "gamma": e.gamma_critical,
            "branches": e.witnesses.iter().map(|w| w.label.clone()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "pitchforks": study.pitchforks,
    });
    Ok(manifest)
}

fn script(labels: &[&str]) -> String {
    let list = labels.join(" ");
    format!(
        r##"set datafile separator ","
set datafile commentschars "#"
set key outside
branches = "{list}"
set multiplot layout 1,2
set xlabel "gamma"
set ylabel "amplitude"
plot for [b in branches] "branches.csv" using 3:(strcol(1) eq b ? $4 : NaN) with points title b." A", \
     for [b in branches] "branches.csv" using 3:(strcol(1) eq b ? $5 : NaN) with points title b." B"
set ylabel "max Re lambda"
plot for [b in branches] "branches.csv" using 3:(strcol(1) eq b ? $15 : NaN) with points title b
unset multiplot
"##
    )
}
