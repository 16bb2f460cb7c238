//! `ptt`: data-emitting front end for the PT-symmetric trimer toolkit.
//!
//! Every subcommand writes CSV files plus a `<command>.manifest.json` into
//! the output directory (`--out-dir`, or `$PTT_OUT_DIR`). Exit codes: 0 on
//! success, 1 on a numerical failure or a failed `verify`, 2 on a usage
//! error.

mod args;
mod branches;
mod evolve;
mod ghosts;
mod output;
mod verify;
mod waveguide;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use args::{BranchesArgs, EvolveArgs, GhostsArgs, UsageError, VerifyArgs, WaveguideArgs};
use output::Manifest;

#[derive(Parser, Debug)]
#[command(
    name = "ptt",
    version,
    about = "Stationary, ghost and dynamical states of the PT-symmetric trimer"
)]
struct Cli {
    /// Directory receiving the output files.
    #[arg(long, global = true, env = "PTT_OUT_DIR", default_value = "ptt-out")]
    out_dir: std::path::PathBuf,

    /// Also write a gnuplot script plotting the emitted data.
    #[arg(long, global = true)]
    gnuplot_script: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regular branches over a gamma range with spectra and events.
    Branches(BranchesArgs),
    /// The mirror pair of ghost branches born at the symmetry-breaking point.
    Ghosts(GhostsArgs),
    /// Time evolution from a branch state.
    Evolve(EvolveArgs),
    /// Gain sweep of the linear three-channel coupler.
    Waveguide(WaveguideArgs),
    /// Re-read datasets and re-check residuals and invariants.
    Verify(VerifyArgs),
}

fn run(cli: &Cli) -> Result<bool> {
    let manifest: Manifest = match &cli.command {
        Command::Verify(a) => return verify::run(a),
        Command::Branches(a) => {
            prepare(&cli.out_dir)?;
            branches::run(a, &cli.out_dir, cli.gnuplot_script)?
        }
        Command::Ghosts(a) => {
            prepare(&cli.out_dir)?;
            ghosts::run(a, &cli.out_dir, cli.gnuplot_script)?
        }
        Command::Evolve(a) => {
            prepare(&cli.out_dir)?;
            evolve::run(a, &cli.out_dir, cli.gnuplot_script)?
        }
        Command::Waveguide(a) => {
            prepare(&cli.out_dir)?;
            waveguide::run(a, &cli.out_dir, cli.gnuplot_script)?
        }
    };
    let path = manifest.write(&cli.out_dir)?;
    for f in &manifest.files {
        println!(
            "wrote {} ({} rows)",
            cli.out_dir.join(&f.name).display(),
            f.rows
        );
    }
    println!("wrote {}", path.display());
    Ok(true)
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
