//! Build the point-mass distribution annihilated by each configured cyclic
//! subgroup, then document the certificates: exact pushforward vanishing and
//! Fourier nonnegativity on a random character sweep.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use cuspwave::pointmass::{
    fourier_eval, lemma2_build, pushforward_cyclic, spectral_norm, AmbientGroup,
    FiniteGroupAction, Point, SubgroupSpec,
};

use crate::artifacts::Artifacts;
use crate::settings::parse_generator_list;
use crate::{Failure, Globals};

#[derive(Args)]
pub struct Opts {
    /// Cyclic subgroup generators in the integer lattice, e.g. "1,0;0,1".
    #[arg(long)]
    generators: Option<String>,

    /// Finite symmetry group averaged over: "sign" or "trivial".
    #[arg(long)]
    action: Option<String>,

    /// Random characters in the positivity sweep.
    #[arg(long)]
    chars: Option<u64>,
}

pub fn run(g: &Globals, opts: &Opts) -> Result<(), Failure> {
    let raw_gens = g.settings.string("generators", opts.generators.as_deref(), "1,0;0,1")?;
    let action_name = g.settings.string("action", opts.action.as_deref(), "sign")?;
    let chars = g.settings.u64("chars", opts.chars, 200)?;
    let seed = g.seed(7)?;
    let tol = g.tol(1e-12)?;
    let gens = parse_generator_list(&raw_gens)?;
    let dim = gens[0].len();
    let ambient = AmbientGroup::new(0, dim)?;
    let action = match action_name.as_str() {
        "sign" => FiniteGroupAction::sign_group(ambient),
        "trivial" => FiniteGroupAction::trivial(ambient),
        other => {
            return Err(Failure::Usage(format!(
                "action must be \"sign\" or \"trivial\", got {other:?}"
            )))
        }
    };
    let subgroups: Vec<SubgroupSpec> = gens
        .iter()
        .map(|v| SubgroupSpec::cyclic(Point::new(vec![], v.clone())))
        .collect::<cuspwave::Result<_>>()?;

    let out = Artifacts::create(&g.out_dir("lemma2"))?;
    let mut config = BTreeMap::new();
    config.insert("generators".into(), json!(raw_gens));
    config.insert("action".into(), json!(action_name));
    config.insert("chars".into(), json!(chars));
    config.insert("seed".into(), json!(seed));
    config.insert("tol".into(), json!(tol));
    out.manifest("lemma2", &config)?;

    let f = lemma2_build(ambient, &subgroups, &action)?;
    let pushforward_zero = subgroups
        .iter()
        .map(|sg| Ok(pushforward_cyclic(&f, &sg.generators()[0])?.is_zero()))
        .collect::<Result<Vec<bool>, Failure>>()?
        .into_iter()
        .all(|z| z);

    let scale = fourier_eval(&f, &[], &vec![0.0; dim]).re.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_dip: f64 = 0.0;
    let mut worst_imag: f64 = 0.0;
    for _ in 0..chars {
        let phi: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let v = fourier_eval(&f, &[], &phi);
        worst_dip = worst_dip.min(v.re / scale);
        worst_imag = worst_imag.max(v.im.abs() / scale);
    }

    out.write("distribution.json", &(f.to_json() + "\n"))?;
    let pass = pushforward_zero && worst_dip >= -tol && worst_imag <= tol;
    out.json(
        "summary.json",
        &json!({
            "generators": raw_gens,
            "action": action_name,
            "atoms": f.len(),
            "spectral_norm": spectral_norm(&f, 0.0),
            "pushforward_zero": pushforward_zero,
            "worst_fourier_dip": worst_dip,
            "worst_fourier_imag": worst_imag,
            "chars": chars,
            "seed": seed,
            "tol": tol,
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(Failure::Breach(format!(
            "distribution certificates failed: pushforward_zero = {pushforward_zero}, \
             fourier dip {worst_dip:.3e}, imaginary part {worst_imag:.3e} (tol {tol:.1e})"
        )));
    }
    Ok(())
}
