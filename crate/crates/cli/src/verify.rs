//! Re-reads datasets and re-checks them against the model independently of
//! how they were produced: stationary rows by their residual and spectrum,
//! trajectory rows by re-integrating between consecutive samples, coupler
//! rows by Runge-Kutta propagation.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde_json::Value;
use trimer_core::model::stationary_residual_complex;
use trimer_core::ode::{self, Control, Tolerances};
use trimer_core::spectra::spectrum_at;
use trimer_core::stationary::STATIONARY_TOL;
use trimer_core::waveguide::{propagate_rk, CouplerConfig, GainConvention, CENTRAL_INPUT};
use trimer_core::{model::vector_field, Complex64, TrimerParams, TrimerState};

use crate::args::VerifyArgs;
use crate::output::{load, Loaded, SCHEMA};

const SPECTRUM_TOL: f64 = 1e-8;
const FLOW_TOL: f64 = 1e-6;
const COUPLER_TOL: f64 = 1e-7;
const TIGHT: Tolerances = Tolerances {
    rtol: 1e-12,
    atol: 1e-14,
};

pub fn run(args: &VerifyArgs) -> Result<bool> {
    let mut all_ok = true;
    for path in &args.files {
        match check(path) {
            Ok(n) => println!("ok {} ({n} rows checked)", path.display()),
            Err(e) => {
                all_ok = false;
                println!("FAILED {}: {e:#}", path.display());
            }
        }
    }
    Ok(all_ok)
}

fn check(path: &Path) -> Result<usize> {
    if path.extension().is_some_and(|e| e == "json") {
        return check_manifest(path);
    }
    let d = load(path)?;
    match d.kind.as_str() {
        "branches" | "ghosts" => check_points(&d),
        "trajectory" => check_trajectory(&d),
        "waveguide" => check_coupler(&d, "gamma_over_k", None),
        "waveguide_field" => check_coupler(&d, "gamma_over_k", Some("z")),
        "recording" => check_recording(&d),
        "events" | "census" => check_finite(&d),
        other => bail!("unknown dataset kind {other:?}"),
    }
}

fn check_manifest(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    ensure!(
        v["schema"] == SCHEMA,
        "schema is {}, expected {SCHEMA}",
        v["schema"]
    );
    let dir = path.parent().unwrap_or(Path::new("."));
    let files = v["files"].as_array().context("manifest has no file list")?;
    for f in files {
        let name = f["name"].as_str().context("file entry without name")?;
        ensure!(dir.join(name).exists(), "listed file {name} is missing");
    }
    Ok(files.len())
}

fn field(d: &Loaded, row: &[String], name: &str) -> Result<f64> {
    let s = &row[d.column(name)?];
    s.parse()
        .with_context(|| format!("column {name}: {s:?} is not a number"))
}

fn check_finite(d: &Loaded) -> Result<usize> {
    for (i, row) in d.rows.iter().enumerate() {
        let col = d.column("gamma")?;
        let g: f64 = row[col].parse().with_context(|| format!("row {i}"))?;
        ensure!(g.is_finite(), "row {i}: gamma is not finite");
    }
    Ok(d.rows.len())
}

fn check_points(d: &Loaded) -> Result<usize> {
    let e_key = if d.kind == "ghosts" { "Ehat" } else { "E" };
    let (e_cfg, k) = (d.config_f64(e_key)?, d.config_f64("k")?);
    for (i, row) in d.rows.iter().enumerate() {
        let f = |name: &str| field(d, row, name);
        let gamma = f("gamma")?;
        let params = TrimerParams::new(e_cfg, k, gamma)?;
        let state = TrimerState::new(
            Complex64::from_polar(f("A")?, f("phi_a")?),
            Complex64::from_polar(f("B")?, f("phi_b")?),
            Complex64::from_polar(f("C")?, f("phi_c")?),
        );
        let e = Complex64::new(f("E_re")?, f("E_im")?);
        let res = stationary_residual_complex(&state, e, &params)
            .iter()
            .fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
        ensure!(
            res <= STATIONARY_TOL,
            "row {i} (gamma {gamma}): residual {res:e}"
        );
        let max_re = spectrum_at(&state, e, &params)?.max_real_part;
        let stored = f("max_re_lambda")?;
        ensure!(
            (max_re - stored).abs() <= SPECTRUM_TOL,
            "row {i} (gamma {gamma}): max Re lambda {max_re} vs stored {stored}"
        );
    }
    Ok(d.rows.len())
}

fn row_state(d: &Loaded, row: &[String]) -> Result<TrimerState> {
    let f = |name: &str| field(d, row, name);
    Ok(TrimerState::new(
        Complex64::new(f("u1_re")?, f("u1_im")?),
        Complex64::new(f("u2_re")?, f("u2_im")?),
        Complex64::new(f("u3_re")?, f("u3_im")?),
    ))
}

fn check_trajectory(d: &Loaded) -> Result<usize> {
    let params = TrimerParams::new(
        d.config_f64("E")?,
        d.config_f64("k")?,
        d.config_f64("at_gamma")?,
    )?;
    ensure!(!d.rows.is_empty(), "empty trajectory");
    for (i, pair) in d.rows.windows(2).enumerate() {
        let (t0, t1) = (field(d, &pair[0], "t")?, field(d, &pair[1], "t")?);
        ensure!(t1 > t0, "row {}: times not increasing", i + 1);
        let (u0, u1) = (row_state(d, &pair[0])?, row_state(d, &pair[1])?);
        let (_, y, _) = ode::integrate(
            |_t, u| vector_field(&TrimerState::from_array(*u), &params).to_array(),
            t0,
            u0.to_array(),
            t1,
            &[],
            &TIGHT,
            |_, _| {},
            |_, _| Control::Continue,
        )?;
        let peak = u1.moduli().iter().cloned().fold(1.0, f64::max);
        let dev = TrimerState::from_array(y).distance(&u1) / peak;
        // the local frequency |u|^2 sets how fast step errors accumulate
        let tol = FLOW_TOL * (1.0 + peak * peak * (t1 - t0));
        ensure!(
            dev <= tol,
            "row {}: re-integrated state differs by {dev:e}",
            i + 1
        );
    }
    Ok(d.rows.len())
}

struct Coupler {
    template: CouplerConfig,
    convention: GainConvention,
    k: f64,
    baseline_loss: f64,
}

impl Coupler {
    fn from_config(d: &Loaded) -> Result<Self> {
        let k = d.config_f64("k")?;
        let convention: GainConvention = d.config["convention"]
            .as_str()
            .context("config has no convention")?
            .parse()?;
        Ok(Self {
            template: CouplerConfig::new(k, d.config_f64("L")?, [0.0; 3], CENTRAL_INPUT)?,
            convention,
            k,
            baseline_loss: d.config_f64("baseline_loss")?,
        })
    }

    fn powers(&self, gamma: f64, z: f64) -> Result<[f64; 3]> {
        let cfg = self
            .template
            .with_gains(self.convention.gains(gamma, self.baseline_loss));
        Ok(propagate_rk(&cfg, z, &TIGHT)?.map(|u| u.norm_sqr()))
    }
}

fn compare(i: usize, expected: [f64; 3], stored: [f64; 3]) -> Result<()> {
    let scale = expected.iter().sum::<f64>().max(1.0);
    for j in 0..3 {
        let dev = (expected[j] - stored[j]).abs() / scale;
        ensure!(
            dev <= COUPLER_TOL,
            "row {i}: channel {} power off by {dev:e}",
            j + 1
        );
    }
    Ok(())
}

fn check_coupler(d: &Loaded, ratio_col: &str, z_col: Option<&str>) -> Result<usize> {
    let c = Coupler::from_config(d)?;
    let names = if z_col.is_some() {
        ["I1", "I2", "I3"]
    } else {
        ["P1", "P2", "P3"]
    };
    for (i, row) in d.rows.iter().enumerate() {
        let gamma = field(d, row, ratio_col)? * c.k;
        let z = match z_col {
            Some(col) => field(d, row, col)?,
            None => c.template.length,
        };
        let stored = [
            field(d, row, names[0])?,
            field(d, row, names[1])?,
            field(d, row, names[2])?,
        ];
        compare(i, c.powers(gamma, z)?, stored)?;
    }
    Ok(d.rows.len())
}

fn check_recording(d: &Loaded) -> Result<usize> {
    let c = Coupler::from_config(d)?;
    let gamma0 = d.config_f64("gamma0_over_k")? * c.k;
    let tau = d.config_f64("tau")?;
    for (i, row) in d.rows.iter().enumerate() {
        let gamma = field(d, row, "gamma")?;
        let expected_gamma = gamma0 * (1.0 - (-field(d, row, "t_rec")? / tau).exp());
        ensure!(
            (gamma - expected_gamma).abs() <= 1e-12 * gamma0.max(1.0),
            "row {i}: gamma {gamma} does not follow the recording schedule"
        );
        let stored = [
            field(d, row, "P1")?,
            field(d, row, "P2")?,
            field(d, row, "P3")?,
        ];
        compare(i, c.powers(gamma, c.template.length)?, stored)?;
    }
    Ok(d.rows.len())
}
