//! Shared 1-D quadrature: Gauss-Legendre panel rules, a globally adaptive
//! Gauss-Kronrod (G7/K15) integrator, and composite Simpson for sampled data.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed 16-point Gauss-Legendre rule, cached; the workhorse for panel
/// integration of analytic integrands (exact through degree 31).
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Integrate f over [a, b] with `panels` equal panels of 16-point GL each.
pub fn panel_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gl16();
    let m = panels.max(1);
    let h = (b - a) / m as f64;
    let mut total = 0.0;
    for j in 0..m {
        let mid = a + (j as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Complex-valued variant of [`panel_integrate`].
pub fn panel_integrate_complex<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
) -> Complex64 {
    let (nodes, weights) = gl16();
    let m = panels.max(1);
    let h = (b - a) / m as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let mid = a + (j as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(weights) {
            acc += f(mid + half * x) * *w;
        }
        total += acc * half;
    }
    total
}

// Kronrod 15 / Gauss 7 pair (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let (fl, fr) = (f(mid - dx), f(mid + dx));
        let fv = fl + fr;
        kronrod += fv * WGK[j];
        resabs += (fl.norm() + fr.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += fv * WG[j / 2];
        }
    }
    let err = ((kronrod - gauss) * half).norm();
    (kronrod * half, err, resabs * half.abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
    resabs: f64,
}

/// Globally adaptive Gauss-Kronrod integration of a complex integrand.
/// Splits the worst segment until the summed error estimate drops below
/// `tol` (absolute) or the segment budget is exhausted.
pub fn adaptive<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_segments: usize,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (v, e, ra) = gk15(&mut f, a, b);
    let mut segs = vec![Segment { a, b, value: v, err: e, resabs: ra }];
    loop {
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        // Roundoff floor: below 50*eps*∫|f| the error estimate is noise.
        let floor = 50.0 * f64::EPSILON * segs.iter().map(|s| s.resabs).sum::<f64>();
        if total_err <= tol.max(floor) {
            break;
        }
        if segs.len() >= max_segments {
            return Err(Error::QuadratureNonconvergence(format!(
                "error {total_err:.3e} > tol {tol:.3e} after {} segments on [{a}, {b}]",
                segs.len()
            )));
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let seg = segs.swap_remove(worst);
        let m = 0.5 * (seg.a + seg.b);
        if m == seg.a || m == seg.b {
            // Interval at floating-point resolution; accept its estimate.
            segs.push(Segment { err: 0.0, ..seg });
            continue;
        }
        let (v1, e1, r1) = gk15(&mut f, seg.a, m);
        let (v2, e2, r2) = gk15(&mut f, m, seg.b);
        segs.push(Segment { a: seg.a, b: m, value: v1, err: e1, resabs: r1 });
        segs.push(Segment { a: m, b: seg.b, value: v2, err: e2, resabs: r2 });
    }
    Ok(segs.iter().map(|s| s.value).sum())
}

/// Real-valued wrapper over [`adaptive`].
pub fn adaptive_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_segments: usize,
) -> Result<f64> {
    adaptive(|x| Complex64::new(f(x), 0.0), a, b, tol, max_segments).map(|v| v.re)
}

/// Composite Simpson on uniformly sampled values with spacing `h`.
/// Odd panel counts are finished with a 3/8 rule; two points fall back to
/// the trapezoid.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let panels = n - 1;
    let (simpson_end, mut total) = if panels % 2 == 0 {
        (n - 1, 0.0)
    } else if n >= 4 {
        // 3/8 rule on the last three panels.
        let tail = 3.0 * h / 8.0
            * (values[n - 4] + 3.0 * values[n - 3] + 3.0 * values[n - 2] + values[n - 1]);
        (n - 4, tail)
    } else {
        // Three points, one leftover panel: Simpson + trapezoid.
        return h / 3.0 * (values[0] + 4.0 * values[1] + values[2]);
    };
    let mut i = 0;
    while i + 2 <= simpson_end {
        total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        i += 2;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        // degree-9 monomial: exact value of int_{-1}^{1} x^8 = 2/9
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((got - 2.0 / 9.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(9)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn adaptive_matches_closed_forms() {
        // int_0^1 exp(x) dx = e - 1
        let v = adaptive_real(|x| x.exp(), 0.0, 1.0, 1e-13, 100).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_oscillatory() {
        // int_0^{2pi} cos(40 x)^2 dx = pi
        let v = adaptive_real(|x| (40.0 * x).cos().powi(2), 0.0, 2.0 * std::f64::consts::PI, 1e-11, 4000)
            .unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        // A needle the budget cannot resolve.
        let r = adaptive_real(|x| 1.0 / (1e-300 + x * x), -1.0, 1.0, 1e-14, 8);
        assert!(r.is_err());
    }

    #[test]
    fn simpson_on_smooth_samples() {
        let h = 0.01;
        let vals: Vec<f64> = (0..=100).map(|i| (i as f64 * h).sin()).collect();
        let exact = 1.0 - 1.0f64.cos();
        assert!((simpson_uniform(&vals, h) - exact).abs() < 1e-9);
        // odd panel count path
        let vals2: Vec<f64> = (0..=101).map(|i| (i as f64 * h).sin()).collect();
        let exact2 = 1.0 - 1.01f64.cos();
        assert!((simpson_uniform(&vals2, h) - exact2).abs() < 1e-9);
    }

    #[test]
    fn panel_rule_handles_moderate_phase() {
        // Phase ~ 40 over the range; 16 panels keep it well under 3 rad each.
        let v = panel_integrate(|x| (40.0 * x).cos(), 0.0, 1.0, 16);
        assert!((v - 40.0f64.sin() / 40.0).abs() < 1e-13);
    }
}
