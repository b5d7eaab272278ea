//! Archimedean Whittaker functions and Poincaré-type series built from them.
//!
//! The base object is W(x + iy) = √y · K_{is}(2πy) · e^{2πix}, the spherical
//! Whittaker function with unit character frequency.  Finite-place data enters
//! only through a scalar weight sequence c_k attached to the dilations
//! z ↦ p^k z, so the series f(z) = Σ_k c_k W(p^k z) can be evaluated, unfolded
//! one Fourier mode at a time, and scanned for nonvanishing high in the cusp —
//! all with explicit tail certificates from the K-Bessel decay.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{bessel_k_imag, HyperbolicPoint};

/// K-Bessel argument beyond which e^{-x} underflows and the value is 0 to f64.
const BESSEL_UNDERFLOW: f64 = 710.0;

/// Spherical Whittaker function with real spectral parameter `s` and character
/// frequency fixed to 1 (other frequencies are rescalings in y).
#[derive(Clone, Copy, Debug)]
pub struct WhittakerFunction {
    s: f64,
}

impl WhittakerFunction {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("spectral parameter {s} is not finite")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Laplace eigenvalue 1/4 + s².
    pub fn eigenvalue(&self) -> f64 {
        0.25 + self.s * self.s
    }
}

/// W(x+iy) = √y · K_{is}(2πy) · e^{2πix}.
pub fn whittaker_eval(w: &WhittakerFunction, z: HyperbolicPoint) -> Result<Complex64> {
    let y = z.y();
    let arg = 2.0 * PI * y;
    let radial = if arg >= BESSEL_UNDERFLOW {
        0.0
    } else {
        y.sqrt() * bessel_k_imag(w.s, arg)?
    };
    Ok(Complex64::cis(2.0 * PI * z.x()) * radial)
}

/// Decay certificate for the radial part: |√y · K_{is}(2πy)| ≤ e^{-2πy}/2 for
/// every real s and y > 0, from |K_{is}| ≤ K_0 and K_0(u) ≤ √(π/2u) e^{-u}.
pub fn whittaker_envelope(y: f64) -> f64 {
    0.5 * (-2.0 * PI * y).exp()
}

/// Weight sequence c_k = p^{-k/2} · sin((k+1)θ)/sin θ for k = 0..=k_max.
///
/// Requires θ ∈ [0, π]; at the endpoints the sine quotient degenerates and the
/// limit value (k+1)·(±1)^k is used instead of the 0/0 expression.
pub fn casselman_shalika_weights(p: u64, theta: f64, k_max: usize) -> Result<Vec<Complex64>> {
    if !crate::modular::is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if !(theta >= 0.0 && theta <= PI) {
        return Err(Error::Domain(format!(
            "weight angle {theta} outside [0, {PI}]"
        )));
    }
    let half = 1.0 / (p as f64).sqrt();
    let weights = (0..=k_max)
        .map(|k| {
            let quot = if theta == 0.0 {
                (k + 1) as f64
            } else if theta == PI {
                (k + 1) as f64 * if k % 2 == 0 { 1.0 } else { -1.0 }
            } else {
                (((k + 1) as f64) * theta).sin() / theta.sin()
            };
            Complex64::new(half.powi(k as i32) * quot, 0.0)
        })
        .collect();
    Ok(weights)
}

/// Truncated series f(z) = Σ_{k ≤ K} c_k W(p^k z) with a growth envelope
/// |c_k| ≤ C·ρ^k recorded at construction; the envelope is what certifies the
/// discarded tail, so it is also assumed to govern the weights beyond K.
#[derive(Clone, Debug)]
pub struct WhittakerSeries {
    base: WhittakerFunction,
    p: u64,
    weights: Vec<Complex64>,
    growth_coeff: f64,
    growth_ratio: f64,
    tail_tol: f64,
}

/// A series value together with the certified bound on the discarded tail.
#[derive(Clone, Copy, Debug)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

impl WhittakerSeries {
    /// Weights are indexed by k starting at 0; the truncation order is
    /// `weights.len() - 1`.  The fitted growth ratio must stay within the
    /// budget ρ ≤ √p, otherwise the K-Bessel decay cannot absorb the weights.
    pub fn new(base: WhittakerFunction, p: u64, weights: Vec<Complex64>) -> Result<Self> {
        if !crate::modular::is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if weights.is_empty() {
            return Err(Error::DegenerateInput("empty weight sequence".into()));
        }
        if weights.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("non-finite weight".into()));
        }
        let mut ratio: f64 = (p as f64).sqrt().recip();
        for (k, c) in weights.iter().enumerate().skip(1) {
            ratio = ratio.max(c.norm().powf(1.0 / k as f64));
        }
        if ratio > (p as f64).sqrt() {
            return Err(Error::Precondition(format!(
                "weight growth ratio {ratio:.6} exceeds the budget sqrt({p})"
            )));
        }
        let coeff = weights
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() / ratio.powi(k as i32))
            .fold(0.0f64, f64::max);
        Ok(Self {
            base,
            p,
            weights,
            growth_coeff: coeff,
            growth_ratio: ratio,
            tail_tol: 1e-8,
        })
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn base(&self) -> &WhittakerFunction {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn truncation(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Bound on Σ_{k > K} |c_k| · |W(p^k z)| at height y, using the growth
    /// envelope and |W(p^k z)| ≤ e^{-2π p^k y}/2.  The terms shrink at least by
    /// q = ρ·e^{-2π p^{K+1} (p-1) y} each step; refuses to certify once q ≥ 1/2.
    pub fn tail_bound(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("height {y} must be positive")));
        }
        let k1 = self.weights.len() as i32;
        let pf = self.p as f64;
        let lead_arg = 2.0 * PI * pf.powi(k1) * y;
        let q = self.growth_ratio * (-lead_arg * (pf - 1.0)).exp();
        if !(q < 0.5) {
            return Err(Error::TailNotCertifiable(format!(
                "term ratio {q:.3} at height {y:.3e} (truncation {})",
                k1 - 1
            )));
        }
        let head = 0.5 * self.growth_coeff * self.growth_ratio.powi(k1) * (-lead_arg).exp();
        Ok(head / (1.0 - q))
    }

    /// Radial factors c_k · √(p^k y) · K_{is}(2π p^k y), certified at height y.
    fn radial_parts(&self, y: f64) -> Result<(Vec<Complex64>, f64)> {
        let tail = self.tail_bound(y)?;
        if tail > self.tail_tol {
            return Err(Error::TailNotCertifiable(format!(
                "tail bound {tail:.3e} at height {y:.3e} exceeds tolerance {:.1e}",
                self.tail_tol
            )));
        }
        let pf = self.p as f64;
        let mut parts = Vec::with_capacity(self.weights.len());
        for (k, c) in self.weights.iter().enumerate() {
            let sy = pf.powi(k as i32) * y;
            let arg = 2.0 * PI * sy;
            if arg >= BESSEL_UNDERFLOW {
                parts.push(Complex64::new(0.0, 0.0));
            } else {
                parts.push(c * (sy.sqrt() * bessel_k_imag(self.base.s, arg)?));
            }
        }
        Ok((parts, tail))
    }
}

/// Σ_{k ≤ K} c_k W(p^k z), with the tail certificate attached.
pub fn series_eval(fs: &WhittakerSeries, z: HyperbolicPoint) -> Result<SeriesValue> {
    let (parts, tail_bound) = fs.radial_parts(z.y())?;
    let pf = fs.p as f64;
    let mut value = Complex64::new(0.0, 0.0);
    for (k, part) in parts.iter().enumerate() {
        value += part * Complex64::cis(2.0 * PI * pf.powi(k as i32) * z.x());
    }
    Ok(SeriesValue { value, tail_bound })
}

/// e^{2πimx}-Fourier coefficient of x ↦ f(x + iy) over one period.
///
/// The truncated series is a trigonometric polynomial with frequencies
/// {p^k : k ≤ K}, so an equispaced trapezoid rule with more than p^K + m nodes
/// integrates it exactly (no aliased frequency survives).  The coefficient is
/// c_k √(p^k y) K_{is}(2π p^k y) when m = p^k and 0 for every other m.
pub fn constant_term_unfold(fs: &WhittakerSeries, y: f64, m: u64) -> Result<Complex64> {
    let top = (fs.p as f64).powi(fs.truncation() as i32);
    let nodes = top + m as f64 + 1.0;
    if nodes > 2e6 {
        return Err(Error::Precondition(format!(
            "unfolding grid of {nodes:.0} nodes is too large (truncation {}, mode {m})",
            fs.truncation()
        )));
    }
    let n = nodes as usize;
    let (parts, _) = fs.radial_parts(y)?;
    let pf = fs.p as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let x = j as f64 / n as f64;
        let mut f = Complex64::new(0.0, 0.0);
        for (k, part) in parts.iter().enumerate() {
            f += part * Complex64::cis(2.0 * PI * pf.powi(k as i32) * x);
        }
        acc += f * Complex64::cis(-2.0 * PI * m as f64 * x);
    }
    Ok(acc / n as f64)
}

/// One height band of a Siegel-region scan.
#[derive(Clone, Copy, Debug)]
pub struct SiegelRow {
    pub t: f64,
    /// max |f| over the sampled band {T ≤ y ≤ T + 1.5, 0 ≤ x < 1}.
    pub max_abs: f64,
    pub argmax: (f64, f64),
    /// Largest discarded-tail bound over the band (attained at y = T).
    pub tail_bound: f64,
    /// True when the leading term provably dominates somewhere in the band:
    /// s is past the K-Bessel oscillation (2πT > |s|, so K_{is}(2πy) > 0) and
    /// |c_0| W(iy) exceeds every later term plus the tail at some grid height.
    pub certified_positive: bool,
}

/// Scan |series_eval| over a grid of the region {y > T, x ∈ [0, 1]} for each T.
pub fn siegel_nonvanishing_scan(fs: &WhittakerSeries, t_list: &[f64]) -> Result<Vec<SiegelRow>> {
    const SPAN: f64 = 1.5;
    const NY: usize = 16;
    const NX: usize = 24;
    let pf = fs.p as f64;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("scan height {t} must be positive")));
        }
        let mut max_abs = 0.0f64;
        let mut argmax = (0.0, t);
        let mut tail_max = 0.0f64;
        let mut lead_margin = f64::NEG_INFINITY;
        for i in 0..NY {
            let y = t + SPAN * i as f64 / (NY - 1) as f64;
            let (parts, tail) = fs.radial_parts(y)?;
            tail_max = tail_max.max(tail);
            let rest: f64 = parts.iter().skip(1).map(|c| c.norm()).sum();
            lead_margin = lead_margin.max(parts[0].norm() - rest - tail);
            for j in 0..NX {
                let x = j as f64 / NX as f64;
                let mut f = Complex64::new(0.0, 0.0);
                for (k, part) in parts.iter().enumerate() {
                    f += part * Complex64::cis(2.0 * PI * pf.powi(k as i32) * x);
                }
                let a = f.norm();
                if a > max_abs {
                    max_abs = a;
                    argmax = (x, y);
                }
            }
        }
        rows.push(SiegelRow {
            t,
            max_abs,
            argmax,
            tail_bound: tail_max,
            certified_positive: 2.0 * PI * t > fs.base.s.abs() && lead_margin > 0.0,
        });
    }
    Ok(rows)
}
