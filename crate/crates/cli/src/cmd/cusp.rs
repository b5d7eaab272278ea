//! Push one bump mode through the Hecke-minus-wave operator and save the
//! cuspidal output together with its certificates: vanishing constant term,
//! orthogonality of the two branches, and the vanishing multiplier on the
//! unitary line.

use std::collections::BTreeMap;

use clap::Args;
use serde_json::json;

use cuspwave::modular::{
    aleph_apply, bump_mode, convolve_mode, default_window, eisenstein_line_residual, hecke_apply,
    smoothed_wave_kernel, smoothing_kernel, AlephMultiplier, HeckeParams,
};

use crate::artifacts::Artifacts;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Hecke prime.
    #[arg(long)]
    p: Option<u64>,

    /// Fourier mode index of the input bump.
    #[arg(long)]
    n: Option<u64>,

    /// Strip cutoff R of the input space; the operator needs R > p.
    #[arg(long, short = 'R')]
    cutoff: Option<f64>,

    /// Log-grid resolution: the step is ln(p)/m.
    #[arg(long)]
    grid_m: Option<usize>,

    /// Sample count across the bump profile.
    #[arg(long)]
    profile: Option<usize>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let p = g.settings.u64("p", opts.p, 2)?;
    let n = g.settings.u64("n", opts.n, 1)?;
    let cutoff = g.settings.f64("cutoff", opts.cutoff, 9.0)?;
    let grid_m = g.settings.usize("grid_m", opts.grid_m, 16)?;
    let profile = g.settings.usize("profile", opts.profile, 25)?;
    let tol = g.tol(1e-10)?;
    let hp = HeckeParams::new(p)?;
    if cutoff <= p as f64 {
        return Err(Failure::Usage(format!(
            "the constant-term argument needs R > p, got R = {cutoff} with p = {p}"
        )));
    }
    let out = Artifacts::create(&g.out_dir("cusp"))?;

    let mut config = BTreeMap::new();
    config.insert("p".into(), json!(p));
    config.insert("n".into(), json!(n));
    config.insert("cutoff".into(), json!(cutoff));
    config.insert("grid_m".into(), json!(grid_m));
    config.insert("profile".into(), json!(profile));
    config.insert("tol".into(), json!(tol));
    out.manifest("cusp", &config)?;

    let w = default_window();
    let grid = hp.log_step(grid_m);
    let f = bump_mode(n, cutoff, grid, profile)?;
    let image = aleph_apply(&f, p, &w)?;

    // The two branches for the orthogonality certificate.
    let (k_smooth, _) = smoothing_kernel(&w)?;
    let (k_wave, _) = smoothed_wave_kernel((p as f64).ln(), &w)?;
    let hecke_branch = hecke_apply(&convolve_mode(&f, &k_smooth)?, &hp)?;
    let wave_branch = convolve_mode(&f, &k_wave)?;

    let norm = image.norm()?;
    let constant_term = image.constant_term(cutoff * 1.3);
    let orthogonality = hecke_branch.inner_product(&wave_branch)?;
    let am = AlephMultiplier::new(p)?;
    let s_grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    let line_residual = eisenstein_line_residual(|s, th| am.eval_real(s, th), p, &s_grid);

    out.write("cusp.json", &(image.to_json() + "\n"))?;
    let pass = line_residual <= tol && constant_term.abs() <= tol && norm > 0.0;
    out.json(
        "summary.json",
        &json!({
            "p": p,
            "n": n,
            "cutoff": cutoff,
            "norm": norm,
            "constant_term": constant_term,
            "orthogonality": orthogonality,
            "line_residual": line_residual,
            "input_norm": f.norm()?,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "cuspidality certificates failed: norm {norm:.3e}, constant term \
             {constant_term:.3e}, line residual {line_residual:.3e} (tol {tol:.1e})"
        )));
    }
    Ok(())
}
