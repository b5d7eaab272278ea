//! Whittaker series diagnostics: unfold the constant term of the shifted
//! series against individual Fourier modes, and scan a high band for the
//! certified-positive maximum of |f|.

use std::collections::BTreeMap;

use clap::Args;
use serde_json::json;

use cuspwave::special::HyperbolicPoint;
use cuspwave::whittaker::{
    casselman_shalika_weights, constant_term_unfold, siegel_nonvanishing_scan, whittaker_eval,
    WhittakerFunction, WhittakerSeries,
};

use crate::artifacts::{fmt, Artifacts};
use crate::settings::{parse_f64_list, parse_u64_list};
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Spectral parameter of the base Whittaker function.
    #[arg(long)]
    s: Option<f64>,

    /// Prime indexing the series frequencies p^k.
    #[arg(long)]
    p: Option<u64>,

    /// Satake angle of the Hecke weights, in [0, pi].
    #[arg(long)]
    theta: Option<f64>,

    /// Series truncation depth.
    #[arg(long)]
    kmax: Option<usize>,

    /// Unfolding height.
    #[arg(long)]
    y: Option<f64>,

    /// Fourier modes to unfold, comma-separated.
    #[arg(long)]
    modes: Option<String>,

    /// Scan heights T, comma-separated.
    #[arg(long)]
    scan: Option<String>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let s = g.settings.f64("s", opts.s, 2.0)?;
    let p = g.settings.u64("p", opts.p, 2)?;
    let theta = g.settings.f64("theta", opts.theta, 1.1)?;
    let kmax = g.settings.usize("kmax", opts.kmax, 8)?;
    let y = g.settings.f64("y", opts.y, 0.5)?;
    let raw_modes = g.settings.string("modes", opts.modes.as_deref(), "1,2,3,4")?;
    let raw_scan = g.settings.string("scan", opts.scan.as_deref(), "1,2,3")?;
    let tol = g.tol(1e-8)?;
    let modes = parse_u64_list(&raw_modes, "modes")?;
    let scan = parse_f64_list(&raw_scan, "scan")?;

    let out = Artifacts::create(&g.out_dir("whittaker"))?;
    let mut config = BTreeMap::new();
    config.insert("s".into(), json!(s));
    config.insert("p".into(), json!(p));
    config.insert("theta".into(), json!(theta));
    config.insert("kmax".into(), json!(kmax));
    config.insert("y".into(), json!(y));
    config.insert("modes".into(), json!(modes));
    config.insert("scan".into(), json!(scan));
    config.insert("tol".into(), json!(tol));
    out.manifest("whittaker", &config)?;

    let w = WhittakerFunction::new(s)?;
    let weights = casselman_shalika_weights(p, theta, kmax)?;
    let fs = WhittakerSeries::new(w, p, weights)?;

    let mut unfold_rows = Vec::new();
    for &m in &modes {
        let v = constant_term_unfold(&fs, y, m)?;
        unfold_rows.push(vec![m.to_string(), fmt(v.re), fmt(v.im), fmt(v.norm())]);
    }
    out.csv("unfold.csv", &["m", "re", "im", "abs"], &unfold_rows)?;

    // Mode 1 carries the unit leading weight: it must reproduce the base
    // function on the imaginary axis.
    let m1 = constant_term_unfold(&fs, y, 1)?;
    let axis = whittaker_eval(&w, HyperbolicPoint::new(0.0, y)?)?;
    let unfold_err = (m1 - axis).norm() / axis.norm();

    let siegel = siegel_nonvanishing_scan(&fs, &scan)?;
    let siegel_rows: Vec<Vec<String>> = siegel
        .iter()
        .map(|r| {
            vec![
                fmt(r.t),
                fmt(r.max_abs),
                fmt(r.argmax.0),
                fmt(r.argmax.1),
                fmt(r.tail_bound),
                r.certified_positive.to_string(),
            ]
        })
        .collect();
    out.csv(
        "siegel.csv",
        &["T", "max_abs", "argmax_x", "argmax_y", "tail_bound", "certified_positive"],
        &siegel_rows,
    )?;

    let certified_all = siegel.iter().all(|r| r.certified_positive);
    let pass = unfold_err <= tol && certified_all;
    out.json(
        "summary.json",
        &json!({
            "s": s,
            "p": p,
            "theta": theta,
            "kmax": kmax,
            "y": y,
            "unfold_err": unfold_err,
            "certified_positive": certified_all,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "whittaker diagnostics failed: unfolding error {unfold_err:.3e} (tol {tol:.1e}), \
             scan certified = {certified_all}"
        )));
    }
    Ok(())
}
