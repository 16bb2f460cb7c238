use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;
use trimer_core::continuation::{ghost_branches, BifurcationEvent, StudyOptions};

use crate::args::GhostsArgs;
use crate::branches::{point_columns, write_events, write_points, POINT_UNITS};
use crate::output::{write_script, Dataset, Manifest};

pub fn run(args: &GhostsArgs, dir: &Path, gnuplot: bool) -> Result<Manifest> {
    let config = serde_json::to_value(args)?;
    let (_, study) = ghost_branches(args.e_hat, args.k, args.gamma.hi, &StudyOptions::default())
        .context("ghost continuation failed")?;
    let mut manifest = Manifest::new("ghosts", config.clone());

    let cols = point_columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut names = Vec::new();
    for b in &study.branches {
        let name = format!("ghost_{}.csv", b.label);
        let mut ds = Dataset::create(&dir.join(&name), "ghosts", &config, POINT_UNITS, &cols)?;
        write_points(&mut ds, b, &args.gamma)?;
        manifest.files.push(ds.finish()?);
        names.push(name);
    }

    let events: Vec<&BifurcationEvent> = study
        .events
        .iter()
        .filter(|e| args.gamma.contains(e.gamma_critical))
        .collect();
    manifest
        .files
        .push(write_events(&dir.join("ghost_events.csv"), "events", &config, &events)?.finish()?);

    if gnuplot {
        manifest
            .files
            .push(write_script(dir, "ghosts.gp", &script(&names))?);
    }
    manifest.summary = json!({
        "pitchfork": study.pitchfork,
        "termination": study.termination,
        "termination_closed_form": (2.0 * args.k * args.k + args.e_hat * args.e_hat).sqrt(),
        "branches": study.branches.iter().map(|b| {
            let (lo, hi) = b.gamma_range();
            json!({"label": b.label, "gamma_range": [lo, hi]})
        }).collect::<Vec<_>>(),
    });
    Ok(manifest)
}

fn script(files: &[String]) -> String {
    let list = files.join(" ");
    format!(
        r##"set datafile separator ","
set datafile commentschars "#"
files = "{list}"
set multiplot layout 1,2
set xlabel "gamma"
set ylabel "amplitude"
plot for [f in files] f using 3:4 with lines title f." A", \
     for [f in files] f using 3:6 with lines title f." C"
set ylabel "Im E"
plot for [f in files] f using 3:13 with lines title f
unset multiplot
"##
    )
}
