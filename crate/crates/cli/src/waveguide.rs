use std::path::Path;

use anyhow::Result;
use serde_json::{json, Value};
use trimer_core::waveguide::{
    break_even_asymptotic, break_even_finite, field_evolution, propagate_expm, recording_sweep,
    symmetric_growth_rate, CouplerConfig, GainSchedule, CENTRAL_INPUT,
};

use crate::args::{usage, WaveguideArgs};
use crate::output::{num, write_script, Dataset, Manifest};

const SCAN: usize = 400;
const BISECT_TOL: f64 = 1e-10;

pub fn template(args: &WaveguideArgs) -> Result<CouplerConfig> {
    Ok(CouplerConfig::new(
        args.k,
        args.length,
        [0.0; 3],
        CENTRAL_INPUT,
    )?)
}

pub fn run(args: &WaveguideArgs, dir: &Path, gnuplot: bool) -> Result<Manifest> {
    if args.steps == 0 || args.z_samples == 0 || args.t_rec_steps == 0 {
        return Err(usage(
            "--steps, --z-samples and --t-rec-steps must be positive",
        ));
    }
    if !(args.baseline_loss >= 0.0 && args.baseline_loss.is_finite()) {
        return Err(usage(format!(
            "--baseline-loss must be nonnegative, got {}",
            args.baseline_loss
        )));
    }
    let config = serde_json::to_value(args)?;
    let tpl = template(args)?;
    let conv = args.convention;
    let mut manifest = Manifest::new("waveguide", config.clone());

    let mut ds = Dataset::create(
        &dir.join("waveguide.csv"),
        "waveguide",
        &config,
        "k, gains and growth rate in 1/mm; powers relative to unit input; phases in radians",
        &[
            "gamma_over_k",
            "gamma",
            "g1",
            "g2",
            "g3",
            "P1",
            "P2",
            "P3",
            "total",
            "ratio",
            "phase_1",
            "phase_3",
            "sym_growth_rate",
        ],
    )?;
    for r in args.gamma_over_k.grid(args.steps) {
        let gamma = r * args.k;
        let g = conv.gains(gamma, args.baseline_loss);
        let u = propagate_expm(&tpl.with_gains(g), args.length);
        let p = u.map(|z| z.norm_sqr());
        let total: f64 = p.iter().sum();
        ds.row([
            num(r),
            num(gamma),
            num(g[0]),
            num(g[1]),
            num(g[2]),
            num(p[0]),
            num(p[1]),
            num(p[2]),
            num(total),
            num(total / tpl.input_power()),
            num((u[0] / u[1]).arg()),
            num((u[2] / u[1]).arg()),
            num(symmetric_growth_rate(
                conv,
                gamma,
                args.k,
                args.baseline_loss,
            )),
        ])?;
    }
    manifest.files.push(ds.finish()?);

    let (lo, hi) = (args.gamma_over_k.lo * args.k, args.gamma_over_k.hi * args.k);
    let asymptotic = break_even_asymptotic(conv, args.k, args.baseline_loss, hi).ok();
    let finite = break_even_finite(
        &tpl,
        conv,
        args.baseline_loss,
        lo.max(1e-6 * args.k),
        hi,
        SCAN,
        BISECT_TOL,
    )
    .unwrap_or_default();

    let mut field_gammas = vec![hi];
    if let Some(b) = &asymptotic {
        field_gammas.insert(0, b.gamma);
    }
    let mut fd = Dataset::create(
        &dir.join("waveguide_field.csv"),
        "waveguide_field",
        &config,
        "z in mm; intensities relative to unit input",
        &["gamma_over_k", "z", "I1", "I2", "I3"],
    )?;
    for gamma in field_gammas {
        let cfg = tpl.with_gains(conv.gains(gamma, args.baseline_loss));
        for (z, u) in field_evolution(&cfg, args.z_samples) {
            fd.row([
                num(gamma / args.k),
                num(z),
                num(u[0].norm_sqr()),
                num(u[1].norm_sqr()),
                num(u[2].norm_sqr()),
            ])?;
        }
    }
    manifest.files.push(fd.finish()?);

    let mut recording = Value::Null;
    if let Some(tau) = args.tau {
        let schedule = GainSchedule::new(args.gamma0_over_k * args.k, tau)
            .map_err(|e| usage(e.to_string()))?;
        let recs = recording_sweep(
            &schedule,
            &tpl,
            conv,
            args.baseline_loss,
            &args.t_rec.grid(args.t_rec_steps),
        );
        let mut rd = Dataset::create(
            &dir.join("recording.csv"),
            "recording",
            &config,
            "t_rec in units of tau's time unit; gamma in 1/mm; phases in radians",
            &[
                "t_rec", "gamma", "P1", "P2", "P3", "total", "phase_1", "phase_3",
            ],
        )?;
        for r in &recs {
            rd.row([
                num(r.t_rec),
                num(r.gamma),
                num(r.powers[0]),
                num(r.powers[1]),
                num(r.powers[2]),
                num(r.total),
                num(r.relative_phases[0]),
                num(r.relative_phases[1]),
            ])?;
        }
        manifest.files.push(rd.finish()?);
        recording = json!({"gamma0": schedule.gamma0, "tau": tau, "final_total": recs.last().map(|r| r.total)});
    }

    if gnuplot {
        let marker = asymptotic.map_or(String::new(), |b| {
            format!(
                "set arrow from {0},graph 0 to {0},graph 1 nohead dt 2\n",
                b.gamma_over_k
            )
        });
        manifest
            .files
            .push(write_script(dir, "waveguide.gp", &script(&marker))?);
    }
    manifest.summary = json!({
        "break_even_asymptotic": asymptotic,
        "break_even_finite": finite,
        "recording": recording,
    });
    Ok(manifest)
}

fn script(marker: &str) -> String {
    format!(
        r##"set datafile separator ","
set datafile commentschars "#"
set logscale y
set xlabel "gamma / k"
set ylabel "output intensity"
{marker}plot "waveguide.csv" using 1:6 with lines title "P1", \
     "" using 1:7 with lines title "P2", \
     "" using 1:9 with lines title "total"
"##
    )
}
