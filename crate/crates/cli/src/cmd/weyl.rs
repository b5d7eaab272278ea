//! Sharp and smoothed eigenvalue counts against the leading-term prediction
//! alpha vol T, either on a spectrum read from CSV or on a synthetic list
//! drawn from the limiting point process.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cuspwave::weyl::{build_hchoice, sample_weyl_list, weyl_count, EigenvalueList};

use crate::artifacts::{fmt, Artifacts};
use crate::settings::parse_f64_list;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Eigenvalue CSV (single column, header "lambda" or "s"); synthetic when absent.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Volume normalizing the prediction (and sizing the synthetic list).
    #[arg(long)]
    volume: Option<f64>,

    /// Top of the synthetic spectrum.
    #[arg(long)]
    lambda_max: Option<f64>,

    /// Count caps T, comma-separated.
    #[arg(long)]
    caps: Option<String>,

    /// Plateau width of the smoothing multiplier.
    #[arg(long)]
    eps: Option<f64>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let input = opts
        .input
        .clone()
        .or_else(|| g.settings.get("input").map(PathBuf::from));
    let volume = g.settings.f64("volume", opts.volume, 314.2)?;
    let lambda_max = g.settings.f64("lambda_max", opts.lambda_max, 4000.0)?;
    let raw_caps = g.settings.string("caps", opts.caps.as_deref(), "3600,3800,4000")?;
    let eps = g.settings.f64("eps", opts.eps, 0.2)?;
    let seed = g.seed(20260814)?;
    let tol = g.tol(0.02)?;
    let caps = parse_f64_list(&raw_caps, "caps")?;

    let list = match &input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            EigenvalueList::from_csv(&text)?
        }
        None => sample_weyl_list(volume, lambda_max, seed)?,
    };

    let out = Artifacts::create(&g.out_dir("weyl"))?;
    let mut config = BTreeMap::new();
    config.insert("input".into(), json!(input.as_ref().map(|p| p.display().to_string())));
    config.insert("volume".into(), json!(volume));
    config.insert("lambda_max".into(), json!(lambda_max));
    config.insert("caps".into(), json!(caps));
    config.insert("eps".into(), json!(eps));
    config.insert("seed".into(), json!(seed));
    config.insert("tol".into(), json!(tol));
    out.manifest("weyl", &config)?;

    let hc = build_hchoice(eps, 2, 1)?;
    let rows = weyl_count(&list, volume, &caps, &hc)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.cap),
                r.count.to_string(),
                fmt(r.prediction),
                fmt(r.ratio),
                fmt(r.smoothed),
                fmt(r.smoothed_ratio),
            ]
        })
        .collect();
    out.csv(
        "weyl.csv",
        &["T", "count", "prediction", "ratio", "smoothed", "smoothed_ratio"],
        &csv_rows,
    )?;

    let worst_dev =
        rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0f64, f64::max);
    let pass = worst_dev <= tol;
    out.json(
        "summary.json",
        &json!({
            "source": list.source(),
            "eigenvalues": list.len(),
            "volume": volume,
            "eps": eps,
            "caps": caps,
            "worst_ratio_deviation": worst_dev,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "sharp count drifted {worst_dev:.4} from the prediction (tol {tol})"
        )));
    }
    Ok(())
}
