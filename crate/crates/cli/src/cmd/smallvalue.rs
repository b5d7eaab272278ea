//! Monte Carlo table of mu{ |F| <= eps } / mu(B_T) for an almost-periodic
//! exponential sum with real frequencies. The default two-frequency sum
//! 2 cos(x) has the arcsine law as its exact small-value measure, which the
//! summary checks in units of the Monte Carlo standard error.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::Args;
use serde_json::json;

use cuspwave::pointmass::{small_value_table, Point};
use cuspwave::Complex64;

use crate::artifacts::{fmt, Artifacts};
use crate::settings::parse_f64_list;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Real frequencies of the sum (unit coefficients), comma-separated.
    #[arg(long)]
    freqs: Option<String>,

    /// Small-value thresholds, comma-separated and increasing.
    #[arg(long)]
    epsilons: Option<String>,

    /// Radius of the sampling ball.
    #[arg(long)]
    radius: Option<f64>,

    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let raw_freqs = g.settings.string("freqs", opts.freqs.as_deref(), "1,-1")?;
    let raw_eps = g.settings.string("epsilons", opts.epsilons.as_deref(), "0.25,0.5,1,1.5")?;
    let radius = g.settings.f64("radius", opts.radius, 4000.0 * PI)?;
    let samples = g.settings.u64("samples", opts.samples, 1_000_000)?;
    let seed = g.seed(17)?;
    let tol = g.tol(3.0)?;
    let freqs = parse_f64_list(&raw_freqs, "freqs")?;
    let epsilons = parse_f64_list(&raw_eps, "epsilons")?;

    let out = Artifacts::create(&g.out_dir("smallvalue"))?;
    let mut config = BTreeMap::new();
    config.insert("freqs".into(), json!(freqs));
    config.insert("epsilons".into(), json!(epsilons));
    config.insert("radius".into(), json!(radius));
    config.insert("samples".into(), json!(samples));
    config.insert("seed".into(), json!(seed));
    config.insert("tol".into(), json!(tol));
    out.manifest("smallvalue", &config)?;

    let points: Vec<Point> = freqs.iter().map(|&f| Point::new(vec![f], vec![])).collect();
    let coeffs = vec![Complex64::new(1.0, 0.0); points.len()];
    let rows = small_value_table(&points, &coeffs, &epsilons, radius, samples, seed)?;

    // The arcsine law is the oracle for the default +/-1 pair only.
    let mut sorted = freqs.clone();
    sorted.sort_by(f64::total_cmp);
    let has_oracle = sorted == [-1.0, 1.0];
    let oracle = |eps: f64| if eps >= 2.0 { 1.0 } else { 2.0 / PI * (eps / 2.0).asin() };

    let mut csv_rows = Vec::new();
    let mut worst_sigmas: f64 = 0.0;
    for row in &rows {
        let (target, sigmas) = if has_oracle {
            let t = oracle(row.epsilon);
            let s = (row.fraction - t).abs() / row.stderr;
            worst_sigmas = worst_sigmas.max(s);
            (fmt(t), fmt(s))
        } else {
            (String::new(), String::new())
        };
        csv_rows.push(vec![
            fmt(row.epsilon),
            fmt(row.ball_radius),
            fmt(row.fraction),
            fmt(row.stderr),
            target,
            sigmas,
        ]);
    }
    out.csv(
        "smallvalue.csv",
        &["epsilon", "ball_radius", "fraction", "stderr", "arcsine", "deviation_sigmas"],
        &csv_rows,
    )?;

    let monotone = rows.windows(2).all(|w| w[1].fraction >= w[0].fraction);
    let pass = monotone && (!has_oracle || worst_sigmas <= tol);
    out.json(
        "summary.json",
        &json!({
            "freqs": freqs,
            "epsilons": epsilons,
            "radius": radius,
            "samples": samples,
            "seed": seed,
            "monotone": monotone,
            "arcsine_oracle": has_oracle,
            "deviation_sigmas": if has_oracle { json!(worst_sigmas) } else { json!(null) },
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "small-value table off the oracle: worst deviation {worst_sigmas:.2} sigma \
             (tol {tol}), monotone = {monotone}"
        )));
    }
    Ok(())
}
