//! Propagate the smoothing kernel under the hyperbolic wave flow and write
//! one radial snapshot per requested time, with the leapfrog energy drift as
//! the pass/fail figure.

use std::collections::BTreeMap;

use clap::Args;
use serde_json::json;

use cuspwave::modular::{default_window, smoothing_kernel};
use cuspwave::wave::{wave_propagate, WaveOptions};

use crate::artifacts::{fmt, Artifacts};
use crate::settings::parse_f64_list;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Propagation times, comma-separated.
    #[arg(long)]
    times: Option<String>,

    /// Halve dr once and attach a Richardson error estimate.
    #[arg(long)]
    richardson: bool,

    /// Radial step of the leapfrog grid.
    #[arg(long)]
    dr: Option<f64>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let raw_times = g.settings.string("times", opts.times.as_deref(), "0.35,0.69")?;
    let richardson = g.settings.switch("richardson", opts.richardson)?;
    let defaults = WaveOptions::default();
    let dr = g.settings.f64("dr", opts.dr, defaults.dr)?;
    let tol = g.tol(1e-8)?;
    let times = parse_f64_list(&raw_times, "times")?;
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Failure::Usage(format!("times must be positive, got {raw_times:?}")));
    }

    let out = Artifacts::create(&g.out_dir("wave"))?;
    let mut config = BTreeMap::new();
    config.insert("times".into(), json!(times));
    config.insert("richardson".into(), json!(richardson));
    config.insert("dr".into(), json!(dr));
    config.insert("tol".into(), json!(tol));
    out.manifest("wave", &config)?;

    let (base, _) = smoothing_kernel(&default_window())?;
    let wave_opts = WaveOptions { dr, richardson, ..defaults };
    let mut snapshots = Vec::new();
    let mut worst_drift: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let (k, report) = wave_propagate(&base, t, &wave_opts)?;
        let values = k.values();
        // Keep the snapshot plot-sized.
        let stride = (values.len() / 1200).max(1);
        let rows: Vec<Vec<String>> = values
            .iter()
            .enumerate()
            .step_by(stride)
            .map(|(j, v)| vec![fmt(j as f64 * k.step()), fmt(*v)])
            .collect();
        out.csv(&format!("wave_{:02}.csv", i + 1), &["r", "u"], &rows)?;
        worst_drift = worst_drift.max(report.energy_drift);
        snapshots.push(json!({
            "t": t,
            "file": format!("wave_{:02}.csv", i + 1),
            "steps": report.steps,
            "dt": report.dt,
            "energy_drift": report.energy_drift,
            "boundary_max": report.boundary_max,
            "richardson_error": report.richardson_error,
        }));
    }

    let pass = worst_drift <= tol;
    out.json(
        "summary.json",
        &json!({
            "times": times,
            "dr": dr,
            "support_radius": base.support_radius(),
            "snapshots": snapshots,
            "worst_energy_drift": worst_drift,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "energy drift {worst_drift:.3e} exceeds tolerance {tol:.1e}"
        )));
    }
    Ok(())
}
