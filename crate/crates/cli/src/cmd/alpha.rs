//! Ball-mass ratios M(T)/T and the extrapolated leading counting constant,
//! optionally with a finite-place tree density factored in (which must not
//! change the constant).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::Args;
use serde_json::json;

use cuspwave::weyl::alpha_constant;

use crate::artifacts::{fmt, Artifacts};
use crate::settings::parse_f64_list;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Ball-mass caps T, comma-separated and increasing.
    #[arg(long)]
    caps: Option<String>,

    /// Include the tree-place density at this prime.
    #[arg(long)]
    prime: Option<u64>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let raw_caps = g.settings.string("caps", opts.caps.as_deref(), "200,400")?;
    let prime = g.settings.opt_u64("prime", opts.prime)?;
    let tol = g.tol(0.01)?;
    let caps = parse_f64_list(&raw_caps, "caps")?;

    let out = Artifacts::create(&g.out_dir("alpha"))?;
    let mut config = BTreeMap::new();
    config.insert("caps".into(), json!(caps));
    config.insert("prime".into(), json!(prime));
    config.insert("tol".into(), json!(tol));
    out.manifest("alpha", &config)?;

    let report = alpha_constant(prime, &caps)?;
    let rows: Vec<Vec<String>> =
        report.ratios.iter().map(|&(t, ratio)| vec![fmt(t), fmt(ratio)]).collect();
    out.csv("alpha.csv", &["T", "ratio"], &rows)?;

    let reference = 1.0 / (4.0 * PI);
    let rel_err = (report.alpha - reference).abs() / reference;
    let pass = rel_err <= tol;
    out.json(
        "summary.json",
        &json!({
            "caps": caps,
            "prime": prime,
            "alpha": report.alpha,
            "reference": reference,
            "rel_err": rel_err,
            "remainder_coeff": report.remainder_coeff,
            "tree_mass": report.tree_mass,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "alpha {:.8} is {rel_err:.3e} away from 1/(4 pi) (tol {tol})",
            report.alpha
        )));
    }
    Ok(())
}
