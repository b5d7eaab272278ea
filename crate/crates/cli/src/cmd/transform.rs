//! Round-trip residuals for a fixed suite of band-limited multipliers: the
//! forward transform of the inverted kernel against the multiplier, the
//! Fourier transform of its Abel transform against the forward transform,
//! and the geometric-vs-spectral L2 mass.

use std::collections::BTreeMap;

use clap::Args;
use serde_json::json;

use cuspwave::special::plancherel_density_arch;
use cuspwave::transform::{
    abel_transform, spherical_forward_real, spherical_inverse, InverseOptions, SpectralMultiplier,
};

use crate::artifacts::{fmt, Artifacts};
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Scale the Abel side by 2: a deliberate unitary-normalization bug that
    /// must trip the diagram residual and exit 2.
    #[arg(long)]
    break_normalization: bool,
}

fn suite() -> Result<Vec<(&'static str, SpectralMultiplier)>, Failure> {
    Ok(vec![
        ("bspline_r1_o8", SpectralMultiplier::bspline_window(1.0, 8)?),
        ("bspline_r0.5_o8", SpectralMultiplier::bspline_window(0.5, 8)?),
        ("bspline_r2_o6", SpectralMultiplier::bspline_window(2.0, 6)?),
        (
            "bspline_r1_o8_x_cos0.4",
            SpectralMultiplier::bspline_window(1.0, 8)?
                .product(&SpectralMultiplier::cosine_pair(0.4)),
        ),
        ("bspline_r1.5_o10_s0.7", SpectralMultiplier::bspline_window(1.5, 10)?.scale(0.7)),
    ])
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let tol = g.tol(1e-6)?;
    let broken = g.settings.switch("break_normalization", opts.break_normalization)?;
    let abel_factor = if broken { 2.0 } else { 1.0 };
    let out = Artifacts::create(&g.out_dir("transform"))?;

    let mut config = BTreeMap::new();
    config.insert("tol".into(), json!(tol));
    config.insert("break_normalization".into(), json!(broken));
    out.manifest("transform", &config)?;

    let mut rows = Vec::new();
    let mut kernels = Vec::new();
    let mut worst_diagram: f64 = 0.0;
    let mut worst_round: f64 = 0.0;
    let mut worst_isometry: f64 = 0.0;
    for (name, h) in suite()? {
        let (k, _) = spherical_inverse(&h, &InverseOptions::band_standard(&h))?;
        let abel = abel_transform(&k, 1500)?;
        let mut max_diagram: f64 = 0.0;
        let mut max_round: f64 = 0.0;
        for i in 0..=40 {
            let s = 10.0 * i as f64 / 40.0;
            let fwd = spherical_forward_real(&k, s)?;
            let round = (fwd - h.eval_real(s)).abs();
            let diagram = (abel_factor * abel.fourier_real(s) - fwd).abs();
            max_round = max_round.max(round);
            max_diagram = max_diagram.max(diagram);
            rows.push(vec![name.to_string(), fmt(s), fmt(diagram), fmt(round)]);
        }
        // Spectral mass by trapezoid out to s = 60; the suite decays at
        // least like s^-6, so the truncated tail is far below tolerance.
        let n = 6000;
        let ds = 60.0 / n as f64;
        let spectral: f64 = (0..=n)
            .map(|i| {
                let s = i as f64 * ds;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * 2.0 * h.eval_real(s).powi(2) * plancherel_density_arch(s) * ds
            })
            .sum();
        let isometry = (k.l2_norm().powi(2) - spectral).abs() / spectral;
        worst_diagram = worst_diagram.max(max_diagram);
        worst_round = worst_round.max(max_round);
        worst_isometry = worst_isometry.max(isometry);
        kernels.push(json!({
            "name": name,
            "max_diagram": max_diagram,
            "max_round_trip": max_round,
            "isometry": isometry,
        }));
    }
    out.csv("residuals.csv", &["kernel", "s", "diagram_residual", "round_trip_residual"], &rows)?;

    let pass = worst_diagram <= tol && worst_round <= tol && worst_isometry <= 10.0 * tol;
    out.json(
        "summary.json",
        &json!({
            "kernels": kernels,
            "worst": {
                "diagram": worst_diagram,
                "round_trip": worst_round,
                "isometry": worst_isometry,
            },
            "tolerances": { "diagram": tol, "round_trip": tol, "isometry": 10.0 * tol },
            "break_normalization": broken,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "residuals exceed tolerance: diagram {worst_diagram:.3e}, round trip \
             {worst_round:.3e} (tol {tol:.1e}), isometry {worst_isometry:.3e} (tol {:.1e})",
            10.0 * tol
        )));
    }
    Ok(())
}
