//! End-to-end acceptance gate. Each criterion runs sequentially, prints one
//! [PASS]/[FAIL] line with its measured figures and elapsed time, and the
//! whole test fails if any criterion fails or exceeds its runtime budget.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines
//! on a passing build.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cuspwave::modular::{
    aleph_apply, bump_mode, convolve_mode, default_window, eisenstein_line_residual,
    hecke_apply, smoothed_wave_kernel, smoothing_kernel, unitary_symbol_max, AlephMultiplier,
    HeckeParams,
};
use cuspwave::pointmass::{
    fourier_eval, lemma2_build, pn_apply, pushforward_cyclic, small_value_table, spectral_norm,
    AmbientGroup, FiniteGroupAction, Point, SubgroupSpec,
};
use cuspwave::special::{plancherel_density_arch, HyperbolicPoint};
use cuspwave::transform::{
    abel_transform, growth_certificate, kesten_moment, spherical_forward_real, spherical_inverse,
    InverseOptions, RadialKernel, SpectralMultiplier,
};
use cuspwave::wave::{time_reversal_residual, wave_propagate, WaveOptions};
use cuspwave::weyl::{alpha_constant, build_hchoice, sample_weyl_list, scale_family, weyl_count};
use cuspwave::whittaker::{
    casselman_shalika_weights, constant_term_unfold, siegel_nonvanishing_scan, whittaker_eval,
    WhittakerFunction, WhittakerSeries,
};

struct Criterion {
    name: &'static str,
    budget: f64,
    run: fn() -> String,
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { name: "1 transform layer", budget: 60.0, run: c01_transform_layer },
        Criterion { name: "2 paley-wiener", budget: 120.0, run: c02_paley_wiener },
        Criterion { name: "3 wave propagation", budget: 120.0, run: c03_wave_propagation },
        Criterion { name: "4 cuspidal operator", budget: 180.0, run: c04_cuspidal_operator },
        Criterion { name: "5 distribution algebra", budget: 60.0, run: c05_distribution_algebra },
        Criterion { name: "6 small-value measure", budget: 120.0, run: c06_small_value_measure },
        Criterion { name: "7 plancherel asymptotics", budget: 120.0, run: c07_plancherel_asymptotics },
        Criterion { name: "8 plateau factory", budget: 120.0, run: c08_plateau_factory },
        Criterion { name: "9 weyl harness", budget: 120.0, run: c09_weyl_harness },
        Criterion { name: "10 whittaker unfolding", budget: 60.0, run: c10_whittaker_unfolding },
    ];
    let mut failures = Vec::new();
    for c in &criteria {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run));
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) if dt <= c.budget => {
                println!("[PASS] {:<26} ({dt:6.1}s)  {detail}", c.name);
            }
            Ok(detail) => {
                println!(
                    "[FAIL] {:<26} ({dt:6.1}s)  over budget {}s; {detail}",
                    c.name, c.budget
                );
                failures.push(c.name);
            }
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                println!("[FAIL] {:<26} ({dt:6.1}s)  {msg}", c.name);
                failures.push(c.name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

// ---------------------------------------------------------------------------
// 1. Transform layer: commuting diagram, Plancherel isometry, round trip.

fn c01_transform_layer() -> String {
    let suite: Vec<SpectralMultiplier> = vec![
        SpectralMultiplier::bspline_window(1.0, 8).unwrap(),
        SpectralMultiplier::bspline_window(0.5, 8).unwrap(),
        SpectralMultiplier::bspline_window(2.0, 6).unwrap(),
        SpectralMultiplier::bspline_window(1.0, 8)
            .unwrap()
            .product(&SpectralMultiplier::cosine_pair(0.4)),
        SpectralMultiplier::bspline_window(1.5, 10).unwrap().scale(0.7),
    ];
    let mut worst_diagram: f64 = 0.0;
    let mut worst_round: f64 = 0.0;
    let mut worst_isometry: f64 = 0.0;
    for h in &suite {
        let (k, _) = spherical_inverse(h, &InverseOptions::band_standard(h)).unwrap();
        let abel = abel_transform(&k, 1500).unwrap();
        for i in 0..=40 {
            let s = 10.0 * i as f64 / 40.0;
            let fwd = spherical_forward_real(&k, s).unwrap();
            worst_round = worst_round.max((fwd - h.eval_real(s)).abs());
            worst_diagram = worst_diagram.max((abel.fourier_real(s) - fwd).abs());
        }
        // Geometric L2 mass against the spectral side (quadrature on [0, 60]
        // catches everything: the suite multipliers decay at least like s^-6).
        let n = 6000;
        let ds = 60.0 / n as f64;
        let spectral: f64 = (0..=n)
            .map(|i| {
                let s = i as f64 * ds;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * 2.0 * h.eval_real(s).powi(2) * plancherel_density_arch(s) * ds
            })
            .sum();
        let geometric = k.l2_norm().powi(2);
        worst_isometry = worst_isometry.max((geometric - spectral).abs() / spectral);
    }
    assert!(worst_diagram <= 1e-6, "diagram residual {worst_diagram:.3e}");
    assert!(worst_isometry <= 1e-5, "isometry residual {worst_isometry:.3e}");
    assert!(worst_round <= 1e-6, "round trip residual {worst_round:.3e}");
    format!(
        "diagram {worst_diagram:.1e} (tol 1e-6), isometry {worst_isometry:.1e} (tol 1e-5), \
         round trip {worst_round:.1e} (tol 1e-6), 5 kernels, |s| <= 10"
    )
}

// ---------------------------------------------------------------------------
// 2. Paley-Wiener: band limit controls support, and support controls growth.

fn c02_paley_wiener() -> String {
    let mut worst_leak: f64 = 0.0;
    for &big_r in &[0.5f64, 1.0, 2.0] {
        let h = SpectralMultiplier::bspline_window(big_r, 8).unwrap();
        let (k, _) = spherical_inverse(&h, &InverseOptions::band_standard(&h)).unwrap();
        let leak = k.mass_beyond(big_r) / k.mass_beyond(0.0);
        worst_leak = worst_leak.max(leak);
        assert!(leak <= 1e-6, "R = {big_r}: relative mass {leak:.3e} beyond the band");
    }

    // Converse: compactly supported kernels obey the exponential growth bound
    // on a 4 x 5 complex grid.
    let mut samples = Vec::new();
    for &sigma in &[0.5f64, 1.7, 3.0, 5.5] {
        for &tau in &[0.3f64, 0.8, 1.4, 2.2, 3.0] {
            samples.push(Complex64::new(sigma, tau));
        }
    }
    let mut worst_margin: f64 = 0.0;
    for &big_r in &[0.5f64, 1.0, 2.0] {
        let k = RadialKernel::from_fn(
            |r| {
                let t = r / big_r;
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - t * t).powi(4)
                }
            },
            big_r,
            1200,
        )
        .unwrap();
        let (_, rows) = growth_certificate(&k, &samples).unwrap();
        for (s, value, bound) in rows {
            assert!(
                value <= bound * (1.0 + 1e-9),
                "growth bound violated at s = {s}: {value:.3e} vs {bound:.3e}"
            );
            worst_margin = worst_margin.max(value / bound);
        }
    }
    format!(
        "max relative mass beyond R {worst_leak:.1e} (tol 1e-6), growth-bound ratio \
         {worst_margin:.3} <= 1 on 20 complex samples, R in {{0.5, 1, 2}}"
    )
}

// ---------------------------------------------------------------------------
// 3. Wave propagation: FD oracle vs spectral synthesis, causal support,
//    time reversal.

fn c03_wave_propagation() -> String {
    let w = default_window();
    let t = std::f64::consts::LN_2;
    let (spectral, _) = smoothed_wave_kernel(t, &w).unwrap();
    let (base, _) = smoothing_kernel(&w).unwrap();
    let opts = WaveOptions { richardson: true, ..WaveOptions::default() };
    let (fd, report) = wave_propagate(&base, t, &opts).unwrap();

    let sup = spectral.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..=800 {
        let r = (t + base.support_radius() + 0.1) * i as f64 / 800.0;
        worst = worst.max((spectral.eval(r) - fd.eval(r)).abs());
    }
    assert!(worst <= 2e-3 * sup, "fd mismatch {worst:.3e} vs sup {sup:.3e}");

    // Finite propagation speed: everything beyond support + t + 2 dr is
    // quadrature dust.
    let cone = base.support_radius() + t + 2.0 * opts.dr;
    let leak = fd.mass_beyond(cone) / fd.mass_beyond(0.0);
    assert!(leak <= 1e-6, "support leak {leak:.3e} beyond r = {cone:.3}");

    let err = report.richardson_error.unwrap();
    let reversal = time_reversal_residual(&base, t, &opts).unwrap();
    assert!(
        reversal <= 2.0 * err,
        "time reversal {reversal:.3e} above twice the error estimate {err:.3e}"
    );
    format!(
        "fd vs spectral {:.1e} of sup (tol 2e-3), cone leak {leak:.1e} (tol 1e-6), \
         reversal {reversal:.1e} <= 2 x {err:.1e}",
        worst / sup
    )
}

// ---------------------------------------------------------------------------
// 4. Cuspidal operator on the cusp strip.

fn c04_cuspidal_operator() -> String {
    // Regression floors for the output norms, frozen from a verified run.
    let norm_floor = |p: u64, n: u64| match (p, n) {
        (2, 1) => NORM_FLOOR_P2_N1,
        (2, 2) => NORM_FLOOR_P2_N2,
        (3, 1) => NORM_FLOOR_P3_N1,
        (3, 2) => NORM_FLOOR_P3_N2,
        _ => unreachable!(),
    };
    let w = default_window();
    let (k_smooth, _) = smoothing_kernel(&w).unwrap();
    let s_grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    let mut details = Vec::new();
    for &p in &[2u64, 3] {
        let hp = HeckeParams::new(p).unwrap();
        let grid = hp.log_step(16);
        let (k_wave, _) = smoothed_wave_kernel((p as f64).ln(), &w).unwrap();
        for &n in &[1u64, 2] {
            let big_r = 4.0 * p as f64;
            let f = bump_mode(n, big_r, grid, 25).unwrap();

            // Hecke bookkeeping is exact: mode n -> (pn, floor/p, v/sqrt p),
            // plus (n/p, p floor, v sqrt p) when p | n.
            let sqrt_p = (p as f64).sqrt();
            let img = hecke_apply(&f, &hp).unwrap();
            let m = f.mode(n).unwrap();
            let up = img.mode(n * p).unwrap();
            assert_eq!(up.floor(), m.floor() / p as f64);
            assert!(m.values().iter().zip(up.values()).all(|(a, b)| *b == a / sqrt_p));
            if n % p == 0 {
                let down = img.mode(n / p).unwrap();
                assert_eq!(down.floor(), m.floor() * p as f64);
                assert!(m.values().iter().zip(down.values()).all(|(a, b)| *b == a * sqrt_p));
                assert_eq!(img.modes().len(), 2);
            } else {
                assert_eq!(img.modes().len(), 1);
            }

            // The two branches live on disjoint mode sets: exactly orthogonal.
            let hecke_branch = hecke_apply(&convolve_mode(&f, &k_smooth).unwrap(), &hp).unwrap();
            let wave_branch = convolve_mode(&f, &k_wave).unwrap();
            assert_eq!(hecke_branch.inner_product(&wave_branch).unwrap(), 0.0);
            let out = hecke_branch.sub(&wave_branch).unwrap();
            assert_eq!(out.constant_term(big_r * 1.3), 0.0);
            let norm = out.norm().unwrap();
            assert!(
                norm >= norm_floor(p, n),
                "output norm regression: p={p} n={n}: {norm:.6e} < {:.6e}",
                norm_floor(p, n)
            );
            details.push(format!("p{p}n{n} norm {norm:.3e}"));
        }
        let am = AlephMultiplier::new(p).unwrap();
        let line = eisenstein_line_residual(|s, th| am.eval_real(s, th), p, &s_grid);
        assert!(line <= 1e-10, "eisenstein line residual {line:.3e} at p = {p}");
        let spec_max = unitary_symbol_max(|t| t, p, 400);
        assert!(spec_max <= 4.0 * sqrt_f(p), "symbol max {spec_max:.6} above 4 sqrt {p}");
        details.push(format!("p{p} line {line:.1e} symbol {spec_max:.3} <= {:.3}", 4.0 * sqrt_f(p)));
    }
    // The packaged operator agrees with the branch difference.
    let f = bump_mode(1, 8.0, HeckeParams::new(2).unwrap().log_step(16), 25).unwrap();
    let via = aleph_apply(&f, 2, &w).unwrap();
    let (k_wave2, _) = smoothed_wave_kernel(2f64.ln(), &w).unwrap();
    let hb = hecke_apply(&convolve_mode(&f, &k_smooth).unwrap(), &HeckeParams::new(2).unwrap())
        .unwrap();
    let manual = hb.sub(&convolve_mode(&f, &k_wave2).unwrap()).unwrap();
    let diff = via.sub(&manual).unwrap();
    assert!(diff.norm().unwrap() <= 1e-14 * via.norm().unwrap());
    details.join(", ")
}

// Regression floors at roughly half the measured output norms, so a silent
// sign error or normalization slip that kills the cuspidal part trips the
// gate while ordinary cross-platform jitter does not.
const NORM_FLOOR_P2_N1: f64 = 2.0e-7;
const NORM_FLOOR_P2_N2: f64 = 1.0e-9;
const NORM_FLOOR_P3_N1: f64 = 1.7e-9;
const NORM_FLOOR_P3_N2: f64 = 9.0e-12;

fn sqrt_f(p: u64) -> f64 {
    (p as f64).sqrt()
}

// ---------------------------------------------------------------------------
// 5. Distribution algebra: randomized annihilator configurations and the
//    flattening polynomials.

fn c05_distribution_algebra() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_fourier: f64 = 0.0;
    for cfg in 0..10 {
        let mixed = cfg % 2 == 1;
        let ambient = if mixed {
            AmbientGroup::new(1, 1).unwrap()
        } else {
            AmbientGroup::new(0, 2).unwrap()
        };
        let n_sub = 1 + (cfg / 2) % 2;
        let mut subgroups = Vec::new();
        for _ in 0..n_sub {
            let g = if mixed {
                Point::new(vec![rng.gen_range(0.4..1.7)], vec![rng.gen_range(-2..=2)])
            } else {
                loop {
                    let a = rng.gen_range(-3i64..=3);
                    let b = rng.gen_range(-3i64..=3);
                    if a != 0 || b != 0 {
                        break Point::new(vec![], vec![a, b]);
                    }
                }
            };
            subgroups.push(SubgroupSpec::cyclic(g).unwrap());
        }
        let action = if cfg % 3 == 0 {
            FiniteGroupAction::trivial(ambient)
        } else {
            FiniteGroupAction::sign_group(ambient)
        };
        let f = lemma2_build(ambient, &subgroups, &action).unwrap();
        assert!(!f.is_zero());
        for sg in &subgroups {
            assert!(pushforward_cyclic(&f, &sg.generators()[0]).unwrap().is_zero());
        }
        // Fourier nonnegativity at 100 random characters per configuration.
        let scale = fourier_eval(&f, &vec![0.0; ambient.real_rank], &vec![0.0; ambient.int_rank])
            .re
            .max(1.0);
        for _ in 0..100 {
            let xi: Vec<f64> = (0..ambient.real_rank).map(|_| rng.gen_range(-8.0..8.0)).collect();
            let phi: Vec<f64> =
                (0..ambient.int_rank).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let v = fourier_eval(&f, &xi, &phi);
            assert!(v.re >= -1e-12 * scale, "config {cfg}: fourier dipped to {:.3e}", v.re);
            assert!(v.im.abs() <= 1e-12 * scale);
            worst_fourier = worst_fourier.min(v.re / scale);
        }
    }

    // Flattening polynomials on the standard two-generator lattice config.
    let ambient = AmbientGroup::new(0, 2).unwrap();
    let subgroups = [
        SubgroupSpec::cyclic(Point::new(vec![], vec![1, 0])).unwrap(),
        SubgroupSpec::cyclic(Point::new(vec![], vec![0, 1])).unwrap(),
    ];
    let f = lemma2_build(ambient, &subgroups, &FiniteGroupAction::sign_group(ambient)).unwrap();
    let k = spectral_norm(&f, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut converged: f64 = 1.0;
    for &n in &[1u32, 2, 4, 8, 16, 32] {
        let g = pn_apply(&f, k, n).unwrap();
        for _ in 0..200 {
            let phi = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
            let fv = fourier_eval(&f, &[], &phi);
            let gv = fourier_eval(&g, &[], &phi);
            // P_n composed with the symbol: value and range.
            let direct = 1.0 - (1.0 - (fv.norm() / k).powi(2)).powi(n as i32);
            assert!(gv.im.abs() <= 1e-9);
            assert!((gv.re - direct).abs() <= 1e-8, "P_{n} drifted {:.2e}", (gv.re - direct).abs());
            assert!(gv.re >= -1e-9 && gv.re <= 1.0 + 1e-9, "range breach {:.3e}", gv.re);
            if n == 32 && fv.norm() >= k / 3.0 {
                converged = converged.min(gv.re);
            }
        }
    }
    let floor = 1.0 - (1.0f64 - 1.0 / 9.0).powi(32) - 1e-9;
    assert!(converged >= floor, "P_32 reached only {converged:.6} on |f^| >= K/3");
    format!(
        "10 configs pass; worst fourier dip {worst_fourier:.1e} (tol -1e-12), \
         P_32 >= {converged:.4} on the large-symbol set (floor {floor:.4})"
    )
}

// ---------------------------------------------------------------------------
// 6. Small-value measure vs the arcsine law.

fn c06_small_value_measure() -> String {
    let freqs = [Point::new(vec![1.0], vec![]), Point::new(vec![-1.0], vec![])];
    let coeffs = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
    let epsilons = [0.25, 0.5, 1.0, 1.5];
    let rows = small_value_table(&freqs, &coeffs, &epsilons, 4000.0 * PI, 1_000_000, 17).unwrap();
    let mut worst_sigmas: f64 = 0.0;
    for row in &rows {
        let oracle = 2.0 / PI * (row.epsilon / 2.0).asin();
        let dev = (row.fraction - oracle).abs() / row.stderr;
        worst_sigmas = worst_sigmas.max(dev);
        assert!(
            dev <= 3.0,
            "eps = {}: fraction {:.6} vs arcsine {oracle:.6} is {dev:.2} sigma",
            row.epsilon,
            row.fraction
        );
    }
    for pair in rows.windows(2) {
        assert!(pair[1].fraction >= pair[0].fraction, "table not monotone in eps");
    }
    format!(
        "arcsine match at 1e6 samples, worst {worst_sigmas:.2} sigma (tol 3), \
         table monotone over eps {epsilons:?}"
    )
}

// ---------------------------------------------------------------------------
// 7. Plancherel asymptotics: alpha, place-independence, tree moments.

fn c07_plancherel_asymptotics() -> String {
    let alpha_true = 1.0 / (4.0 * PI);
    let arch = alpha_constant(None, &[200.0, 400.0]).unwrap();
    let raw = arch.ratios.last().unwrap().1;
    let raw_err = (raw - alpha_true).abs() / alpha_true;
    assert!(raw_err <= 0.01, "alpha at T=400 off by {:.3}%", raw_err * 100.0);

    let with_tree = alpha_constant(Some(2), &[200.0, 400.0]).unwrap();
    let independence = (with_tree.alpha - arch.alpha).abs();
    assert!(independence <= 1e-10, "place-dependence {independence:.3e}");
    assert!((with_tree.tree_mass.unwrap() - 1.0).abs() <= 1e-10);

    // Tree density moments = closed-walk counts on the (p+1)-regular tree.
    let mut worst_moment: f64 = 0.0;
    for &p in &[2u64, 3] {
        for k in 0..=4u32 {
            let want = tree_walks(p, 2 * k);
            let got = kesten_moment(p, 2 * k);
            worst_moment = worst_moment.max((got - want).abs());
            assert!(
                (got - want).abs() <= 1e-8 * want.max(1.0),
                "moment 2k={} at p={p}: {got} vs {want}",
                2 * k
            );
        }
    }
    format!(
        "alpha(T=400) err {:.3}% (tol 1%), extrapolated err {:.1e}, place-independence \
         {independence:.1e} (tol 1e-10), tree moments off by {worst_moment:.1e} (tol 1e-8)",
        raw_err * 100.0,
        (arch.alpha - alpha_true).abs() / alpha_true
    )
}

/// Closed walks of length `len` from the root of the (p+1)-regular tree.
fn tree_walks(p: u64, len: u32) -> f64 {
    let l = len as usize;
    let mut dist = vec![0.0f64; l + 2];
    dist[0] = 1.0;
    for _ in 0..l {
        let mut next = vec![0.0f64; l + 2];
        for d in 0..=l {
            if dist[d] == 0.0 {
                continue;
            }
            let out = if d == 0 { (p + 1) as f64 } else { p as f64 };
            next[d + 1] += dist[d] * out;
            if d > 0 {
                next[d - 1] += dist[d];
            }
        }
        dist = next;
    }
    dist[0]
}

// ---------------------------------------------------------------------------
// 8. Plateau test-function factory.

fn c08_plateau_factory() -> String {
    let mut details = Vec::new();
    let mut keep = None;
    for &eps in &[0.2f64, 0.1, 0.05] {
        let hc = build_hchoice(eps, 2, 1).unwrap();
        let rep = hc.report();
        assert!(rep.evenness_residual <= 1e-14);
        assert!(rep.range_excess <= 1e-8);
        assert!(rep.plateau_min >= 1.0 - eps);
        assert!(rep.decay_sup < eps);
        assert!(hc.band_limit().is_finite() && hc.band_limit() > 0.0);
        for &(t, off) in &rep.ball_mass_offsets {
            assert!(off.abs() <= 3.0 * eps, "ball-mass offset {off:.3e} at t = {t}");
        }
        details.push(format!(
            "eps {eps}: plateau {:.4}, decay {:.2e}, band {:.0}",
            rep.plateau_min, rep.decay_sup, hc.band_limit()
        ));
        if eps == 0.2 {
            keep = Some(hc);
        }
    }
    // Support scaling of the rescaled family, checked on the kernel side.
    let hc = keep.unwrap();
    let t = 0.5;
    let h_t = scale_family(&hc, t).unwrap();
    let band_t = t * hc.band_limit();
    let opts = InverseOptions {
        r_max: 1.15 * band_t,
        n: 3001,
        tail_tol: 1e-5,
        spot_check: false,
    };
    let (k, _) = spherical_inverse(&h_t, &opts).unwrap();
    // Sup-norm support check; a sinh-weighted mass would amplify the
    // quadrature noise floor by e^band and certify nothing at this radius.
    let peak = k.eval(0.0).abs();
    assert!(peak > 0.0);
    let beyond = k
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i as f64 * k.step() > band_t * 1.001)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    assert!(beyond <= 1e-3 * peak, "scaled kernel leaks {:.3e} of peak beyond t x band", beyond / peak);
    details.push(format!("scale t=0.5 leak {:.1e} of peak", beyond / peak));
    details.join("; ")
}

// ---------------------------------------------------------------------------
// 9. Weyl-count harness on a synthetic spectrum.

fn c09_weyl_harness() -> String {
    let volume = 314.2;
    let lambda_max = 4000.0;
    let list = sample_weyl_list(volume, lambda_max, 20260814).unwrap();
    assert!(list.len() > 90_000, "only {} synthetic eigenvalues", list.len());
    let hc = build_hchoice(0.2, 2, 1).unwrap();
    let caps = [3600.0, 3800.0, 4000.0];
    let rows = weyl_count(&list, volume, &caps, &hc).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    for row in &rows {
        assert!(
            (0.98..=1.02).contains(&row.ratio),
            "N({})/prediction = {:.4}",
            row.cap,
            row.ratio
        );
        worst_ratio = worst_ratio.max((row.ratio - 1.0).abs());
        // Smoothed count tracks the sharp prediction with an O(eps) constant.
        let c_eps = (row.smoothed - row.prediction).abs()
            / (hc.epsilon() * row.prediction + row.prediction.sqrt());
        worst_const = worst_const.max(c_eps);
        assert!(
            c_eps <= 4.0,
            "smoothed count at T={}: measured constant {c_eps:.2}",
            row.cap
        );
    }
    format!(
        "{} eigenvalues, sharp ratio within {:.3}% (band 2%), measured smoothing \
         constant {worst_const:.2} (cap 4) at top-decile caps",
        list.len(),
        worst_ratio * 100.0
    )
}

// ---------------------------------------------------------------------------
// 10. Whittaker series: unfolding and Siegel nonvanishing.

fn c10_whittaker_unfolding() -> String {
    let w = WhittakerFunction::new(2.0).unwrap();
    let weights = casselman_shalika_weights(2, 1.1, 8).unwrap();
    let fs = WhittakerSeries::new(w, 2, weights).unwrap();
    let y = 0.5;
    let m1 = constant_term_unfold(&fs, y, 1).unwrap();
    let axis = whittaker_eval(&w, HyperbolicPoint::new(0.0, y).unwrap()).unwrap();
    let unfold_err = (m1 - axis).norm() / axis.norm();
    assert!(unfold_err <= 1e-8, "unfolding error {unfold_err:.3e}");
    let m3 = constant_term_unfold(&fs, y, 3).unwrap().norm();
    assert!(m3 <= 1e-10, "non-power mode kept mass {m3:.3e}");

    let rows = siegel_nonvanishing_scan(&fs, &[1.0, 2.0, 3.0]).unwrap();
    for row in &rows {
        assert!(row.max_abs > 0.0 && row.certified_positive, "scan at T = {}", row.t);
    }
    format!(
        "unfolding err {unfold_err:.1e} (tol 1e-8), stray mode {m3:.1e} (tol 1e-10), \
         Siegel maxima certified positive at T = 1, 2, 3 (max {:.2e} at T=3)",
        rows[2].max_abs
    )
}
