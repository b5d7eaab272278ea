//! The modular-surface engine: mode functions on the cusp (the spaces
//! V_{n,R} of h(y) cos(2 pi n x) with h supported in y > R), the Hecke
//! operator T_p, smoothed wave-propagation convolution, the cuspidal-image
//! operator
//!
//!   aleph = T_p - U_{log p}   (both branches smoothed by one window),
//!
//! the Eisenstein-line annihilation check, and the Weierstrass polynomial
//! multiplier q(.)^2 that flattens the symbol away from zero.
//!
//! Profiles live on logarithmic y-grids with step log(p)/M, so the Hecke
//! rescalings y -> py and y -> y/p are exact floor changes -- no
//! interpolation enters the mode bookkeeping.

use crate::error::{Error, Result};
use crate::quad;
use crate::transform::{
    spherical_inverse, InverseOptions, InverseReport, RadialKernel, SpectralMultiplier,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---------------------------------------------------------------------------
// Mode functions

/// One Fourier mode: profile values on the log-grid y_j = floor e^{j grid}.
/// The profile is zero below the floor and beyond the last node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mode {
    n: u64,
    floor: f64,
    grid: f64,
    values: Vec<f64>,
}

impl Mode {
    pub fn new(n: u64, floor: f64, grid: f64, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mode index must be nonzero (mean-zero functions)".into()));
        }
        Self::build(n, floor, grid, values)
    }

    fn build(n: u64, floor: f64, grid: f64, values: Vec<f64>) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) || !(grid > 0.0 && grid.is_finite()) {
            return Err(Error::Domain(format!(
                "mode needs floor > 0 and grid step > 0, got {floor}, {grid}"
            )));
        }
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel("mode profile needs >= 2 finite samples".into()));
        }
        Ok(Self { n, floor, grid, values })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn grid(&self) -> f64 {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn top(&self) -> f64 {
        self.floor * ((self.values.len() - 1) as f64 * self.grid).exp()
    }

    /// Profile value at height y (cubic in log y, zero outside the grid).
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let t = (y / self.floor).ln() / self.grid;
        let nn = self.values.len();
        if !(0.0..=(nn - 1) as f64).contains(&t) {
            return 0.0;
        }
        let i = (t as usize).min(nn - 2);
        let t = t - i as f64;
        let v = &self.values;
        let vm = if i == 0 { 2.0 * v[0] - v[1] } else { v[i - 1] };
        let v2 = if i + 2 < nn { v[i + 2] } else { 2.0 * v[nn - 1] - v[nn - 2] };
        0.5 * (2.0 * v[i]
            + (v[i + 1] - vm) * t
            + (2.0 * vm - 5.0 * v[i] + 4.0 * v[i + 1] - v2) * t * t
            + (3.0 * v[i] - vm - 3.0 * v[i + 1] + v2) * t * t * t)
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// Petersson profile pairing int h g dy/y^2 over the common grid range.
    fn pair(&self, other: &Self) -> Result<f64> {
        let shift = aligned_shift(self, other)?;
        // self node j aligns with other node j - shift.
        let lo = shift.max(0);
        let hi = ((other.values.len() as i64 + shift) - 1).min(self.values.len() as i64 - 1);
        if hi - lo < 1 {
            return Ok(0.0);
        }
        let prod: Vec<f64> = (lo..=hi)
            .map(|j| {
                let y = self.floor * (j as f64 * self.grid).exp();
                self.values[j as usize] * other.values[(j - shift) as usize] / y
            })
            .collect();
        Ok(quad::simpson_uniform(&prod, self.grid))
    }
}

/// Integer node offset between two modes on commensurate grids
/// (other.floor = self.floor * e^{shift * grid}).
fn aligned_shift(a: &Mode, b: &Mode) -> Result<i64> {
    if (a.grid - b.grid).abs() > 1e-12 * a.grid {
        return Err(Error::AmbiguousGrouping(format!(
            "profiles on different log steps {} vs {}",
            a.grid, b.grid
        )));
    }
    let raw = (b.floor / a.floor).ln() / a.grid;
    let shift = raw.round();
    if (raw - shift).abs() > 1e-9 {
        return Err(Error::AmbiguousGrouping(format!(
            "floors {} and {} are not an integer number of grid steps apart",
            a.floor, b.floor
        )));
    }
    Ok(shift as i64)
}

fn merge_modes(a: &Mode, b: &Mode) -> Result<Mode> {
    let shift = aligned_shift(a, b)?;
    let (first, second, shift) = if shift >= 0 { (a, b, shift) } else { (b, a, -shift) };
    let len = first.values.len().max(second.values.len() + shift as usize);
    let mut values = vec![0.0; len];
    values[..first.values.len()].copy_from_slice(&first.values);
    for (j, v) in second.values.iter().enumerate() {
        values[j + shift as usize] += v;
    }
    Mode::build(first.n, first.floor, first.grid, values)
}

/// Drop ~zero leading/trailing samples so the floor reflects the actual
/// support; returns None when the whole profile is negligible.
fn trim_mode(m: Mode) -> Option<Mode> {
    let cut = 1e-13 * m.max_abs();
    let first = m.values.iter().position(|v| v.abs() > cut)?;
    let last = m.values.iter().rposition(|v| v.abs() > cut)?;
    if last <= first {
        return None;
    }
    let floor = m.floor * (first as f64 * m.grid).exp();
    Some(Mode { n: m.n, floor, grid: m.grid, values: m.values[first..=last].to_vec() })
}

/// Even mean-zero function on the cusp: sum over modes of
/// h_n(y) cos(2 pi n x). All profiles share one log step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeFunction {
    modes: Vec<Mode>,
    parity: String,
}

impl ModeFunction {
    pub fn new(mut modes: Vec<Mode>) -> Result<Self> {
        modes.retain(|m| m.max_abs() > 0.0);
        modes.sort_by_key(|m| m.n);
        for w in modes.windows(2) {
            if w[0].n == w[1].n {
                return Err(Error::AmbiguousGrouping(format!("duplicate mode {}", w[0].n)));
            }
            if (w[0].grid - w[1].grid).abs() > 1e-12 * w[0].grid {
                return Err(Error::Precondition("all modes must share one log step".into()));
            }
        }
        if modes.iter().any(|m| m.n == 0) {
            return Err(Error::Domain("mode 0 is excluded (mean-zero invariant)".into()));
        }
        Ok(Self { modes, parity: "even".into() })
    }

    pub fn zero() -> Self {
        Self { modes: Vec::new(), parity: "even".into() }
    }

    /// Negative control: injects an n = 0 profile, deliberately breaking the
    /// mean-zero invariant so cuspidality checks have something to catch.
    pub fn with_injected_constant(mut self, floor: f64, grid: f64, values: Vec<f64>) -> Self {
        let mode = Mode::build(0, floor, grid, values).expect("constant-term profile");
        self.modes.insert(0, mode);
        self
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, n: u64) -> Option<&Mode> {
        self.modes.iter().find(|m| m.n == n)
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Smallest profile floor (the R of V_{n,R}); None when zero.
    pub fn support_floor(&self) -> Option<f64> {
        self.modes.iter().map(|m| m.floor).min_by(f64::total_cmp)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.eval(y) * (2.0 * PI * m.n as f64 * x).cos())
            .sum()
    }

    /// n = 0 Fourier coefficient at height y: identically zero for any valid
    /// ModeFunction; nonzero only for deliberately corrupted expansions.
    pub fn constant_term(&self, y: f64) -> f64 {
        self.modes.iter().filter(|m| m.n == 0).map(|m| m.eval(y)).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                n: m.n,
                floor: m.floor,
                grid: m.grid,
                values: m.values.iter().map(|v| c * v).collect(),
            })
            .collect();
        Self { modes, parity: self.parity.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out: Vec<Mode> = Vec::new();
        let mut i = 0;
        let mut j = 0;
        while i < self.modes.len() || j < other.modes.len() {
            match (self.modes.get(i), other.modes.get(j)) {
                (Some(a), Some(b)) if a.n == b.n => {
                    out.push(merge_modes(a, b)?);
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.n < b.n => {
                    out.push(a.clone());
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    out.push(b.clone());
                    j += 1;
                }
                (Some(a), None) => {
                    out.push(a.clone());
                    i += 1;
                }
                (None, Some(b)) => {
                    out.push(b.clone());
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        ModeFunction::new(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Petersson inner product over the strip, int_0^1 int f g dx dy/y^2;
    /// cosine orthogonality reduces it to (1/2) sum_n int h_n g_n dy/y^2.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.modes {
            if let Some(b) = other.modes.iter().find(|b| b.n == a.n) {
                total += 0.5 * a.pair(b)?;
            }
        }
        Ok(total)
    }

    pub fn norm(&self) -> Result<f64> {
        Ok(self.inner_product(self)?.max(0.0).sqrt())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "modes": self.modes.iter().map(|m| serde_json::json!({
                "n": m.n, "floor": m.floor, "grid": m.grid, "values": m.values,
            })).collect::<Vec<_>>(),
            "parity": self.parity,
        }))
        .expect("mode function serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ModeFunction =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.parity != "even" {
            return Err(Error::Parse(format!("unsupported parity {:?}", raw.parity)));
        }
        for m in &raw.modes {
            Mode::new(m.n, m.floor, m.grid, m.values.clone())?;
        }
        ModeFunction::new(raw.modes)
    }
}

/// Canonical single-mode element of V_{n,R}: a C^3 bump across the whole
/// grid, h(y_j) = (1 - t^2)^4 with t = 2j/(len-1) - 1.
pub fn bump_mode(n: u64, floor: f64, grid: f64, len: usize) -> Result<ModeFunction> {
    if len < 5 {
        return Err(Error::DegenerateInput(format!("bump profile needs >= 5 nodes, got {len}")));
    }
    let half = (len - 1) as f64 / 2.0;
    let values = (0..len)
        .map(|j| {
            let t = (j as f64 - half) / half;
            (1.0 - t * t).max(0.0).powi(4)
        })
        .collect();
    ModeFunction::new(vec![Mode::new(n, floor, grid, values)?])
}

// ---------------------------------------------------------------------------
// Hecke operator

#[derive(Clone, Copy, Debug)]
pub struct HeckeParams {
    p: u64,
}

impl HeckeParams {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("Hecke index must be prime, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Log step commensurate with p: log(p) / m.
    pub fn log_step(&self, m: usize) -> f64 {
        (self.p as f64).ln() / m as f64
    }
}

fn check_commensurate(grid: f64, p: u64) -> Result<()> {
    let steps = (p as f64).ln() / grid;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "log step {grid} is not commensurate with p = {p} (log p / step = {steps})"
        )));
    }
    Ok(())
}

/// T_p f(z) = (1/sqrt p)(f(pz) + sum_{k mod p} f((z+k)/p)). On modes: n
/// contributes (pn, floor/p, values/sqrt p), and when p | n also
/// (n/p, p floor, sqrt p values). Exact bookkeeping, no interpolation.
pub fn hecke_apply(f: &ModeFunction, hp: &HeckeParams) -> Result<ModeFunction> {
    let p = hp.p;
    let sqrt_p = (p as f64).sqrt();
    let mut out: Vec<Mode> = Vec::new();
    let mut push = |m: Mode| -> Result<()> {
        if let Some(existing) = out.iter_mut().find(|e| e.n == m.n) {
            *existing = merge_modes(existing, &m)?;
        } else {
            out.push(m);
        }
        Ok(())
    };
    for m in f.modes() {
        check_commensurate(m.grid, p)?;
        push(Mode {
            n: m.n * p,
            floor: m.floor / p as f64,
            grid: m.grid,
            values: m.values.iter().map(|v| v / sqrt_p).collect(),
        })?;
        if m.n % p == 0 {
            push(Mode {
                n: m.n / p,
                floor: m.floor * p as f64,
                grid: m.grid,
                values: m.values.iter().map(|v| v * sqrt_p).collect(),
            })?;
        }
    }
    ModeFunction::new(out)
}

/// T_p is injective on single-mode functions: the mode-pn component of the
/// image is h(py)/sqrt p, which determines h. Verifies by reconstructing.
pub fn hecke_injectivity_check(f: &ModeFunction, hp: &HeckeParams) -> Result<bool> {
    if f.is_zero() {
        return Ok(true);
    }
    if f.modes().len() != 1 {
        return Err(Error::Precondition("injectivity check expects a single-mode input".into()));
    }
    let m = &f.modes()[0];
    let image = hecke_apply(f, hp)?;
    let img = match image.mode(m.n * hp.p) {
        Some(img) => img,
        None => return Ok(false),
    };
    let sqrt_p = (hp.p as f64).sqrt();
    if img.values.len() != m.values.len() {
        return Ok(false);
    }
    if (img.floor * hp.p as f64 - m.floor).abs() > 1e-12 * m.floor {
        return Ok(false);
    }
    let scale = m.max_abs().max(1e-300);
    Ok(m.values
        .iter()
        .zip(&img.values)
        .all(|(orig, im)| (im * sqrt_p - orig).abs() <= 1e-14 * scale))
}

// ---------------------------------------------------------------------------
// Smoothed kernels

/// Kernel of convolution by the window alone (the auxiliary smoothing k1').
pub fn smoothing_kernel(window: &SpectralMultiplier) -> Result<(RadialKernel, InverseReport)> {
    spherical_inverse(window, &InverseOptions::band_standard(window))
}

/// Kernel of the smoothed propagator pair,
/// k1(r) = int_R  window(s) 2cos(ts) Xi_s(r) rho(s) ds:
/// support radius t + band(window) by Paley-Wiener.
pub fn smoothed_wave_kernel(
    t: f64,
    window: &SpectralMultiplier,
) -> Result<(RadialKernel, InverseReport)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("wave time must be positive, got {t}")));
    }
    if window.decay_order() < 6.0 {
        return Err(Error::Precondition(format!(
            "smoothing window must have decay order >= 6, got {}",
            window.decay_order()
        )));
    }
    let h = SpectralMultiplier::cosine_pair(t).product(window);
    spherical_inverse(&h, &InverseOptions::band_standard(&h))
}

/// Default smoothing window: sinc^8 with band 1/2.
pub fn default_window() -> SpectralMultiplier {
    SpectralMultiplier::bspline_window(0.5, 8).expect("stock window parameters")
}

// ---------------------------------------------------------------------------
// Point-pair convolution on modes

fn mode_kernel(k: &RadialKernel, kmax: f64, n: u64, y: f64, yp: f64) -> f64 {
    let t = k.support_radius();
    let x2 = 2.0 * y * yp * (t.cosh() - 1.0) - (y - yp) * (y - yp);
    if x2 <= 0.0 {
        return 0.0;
    }
    let x_top = x2.sqrt();
    let two_pi_n = 2.0 * PI * n as f64;
    let dy2 = (y - yp) * (y - yp);
    let inv = 1.0 / (2.0 * y * yp);
    let tol = 1e-11 * (1.0 + kmax * x_top);
    2.0 * quad::adaptive_real(
        |x| {
            let q = (x * x + dy2) * inv;
            let d = (1.0 + q + (q * (2.0 + q)).sqrt()).ln();
            k.eval(d) * (two_pi_n * x).cos()
        },
        0.0,
        x_top,
        tol,
        60_000,
    )
    .unwrap_or(f64::NAN)
}

/// Point-pair convolution f * k on the cusp: each mode maps through the
/// kernel K_n(y,y') = int_R k(d(iy, x+iy')) cos(2 pi n x) dx with measure
/// dy'/y'^2. Requires floor > e^{support radius} so the strip computation
/// equals the quotient computation.
pub fn convolve_mode(f: &ModeFunction, k: &RadialKernel) -> Result<ModeFunction> {
    let t = k.support_radius();
    if let Some(floor) = f.support_floor() {
        if floor <= t.exp() {
            return Err(Error::Precondition(format!(
                "convolution needs support floor > e^(kernel radius) = {:.4}, got {floor}",
                t.exp()
            )));
        }
    } else {
        return Ok(ModeFunction::zero());
    }
    let kmax = k.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut out = Vec::new();
    for m in f.modes() {
        let ext = (t / m.grid - 1e-12).ceil() as usize;
        let len = m.values.len() + 2 * ext;
        let floor = m.floor * (-(ext as f64) * m.grid).exp();
        let hmax = m.max_abs();
        let tol =
            1e-10 * (1.0 + hmax) * (1.0 + kmax) * (1.0 + 4.0 * PI * (0.5 * t).sinh().powi(2));
        let values: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|i| {
                let y = floor * (i as f64 * m.grid).exp();
                let lo = (m.floor.max(y * (-t).exp())).ln();
                let hi = (m.top().min(y * t.exp())).ln();
                if hi <= lo {
                    return Ok(0.0);
                }
                quad::adaptive_real(
                    |l| {
                        let yp = l.exp();
                        mode_kernel(k, kmax, m.n, y, yp) * m.eval(yp) / yp
                    },
                    lo,
                    hi,
                    tol,
                    20_000,
                )
            })
            .collect::<Result<_>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureNonconvergence(
                "mode kernel integral failed to converge".into(),
            ));
        }
        if let Some(trimmed) = trim_mode(Mode { n: m.n, floor, grid: m.grid, values }) {
            out.push(trimmed);
        }
    }
    ModeFunction::new(out)
}

/// Direct two-dimensional quadrature of (f * k)(x0 + i y0) over the plane,
/// used as the convolution oracle.
pub fn convolve_oracle(f: &ModeFunction, k: &RadialKernel, x0: f64, y0: f64) -> Result<f64> {
    let t = k.support_radius();
    let lo = (y0 * (-t).exp()).ln();
    let hi = (y0 * t.exp()).ln();
    quad::adaptive_real(
        |l| {
            let yp = l.exp();
            let x2 = 2.0 * y0 * yp * (t.cosh() - 1.0) - (y0 - yp) * (y0 - yp);
            if x2 <= 0.0 {
                return 0.0;
            }
            let xt = x2.sqrt();
            quad::adaptive_real(
                |x| {
                    let q = ((x - x0) * (x - x0) + (y0 - yp) * (y0 - yp)) / (2.0 * y0 * yp);
                    let d = (1.0 + q + (q * (2.0 + q)).sqrt()).ln();
                    k.eval(d) * f.eval(x, yp)
                },
                x0 - xt,
                x0 + xt,
                1e-11,
                60_000,
            )
            .unwrap_or(f64::NAN)
                / yp
        },
        lo,
        hi,
        1e-9,
        20_000,
    )
}

// ---------------------------------------------------------------------------
// The cuspidal-image operator

/// aleph f = T_p (f * k1') - f * k1, both branches smoothed by `window`.
/// The Hecke branch lands on modes {pn, n/p}, the wave branch stays on mode
/// n; the two are orthogonal because the mode sets are disjoint (verified).
pub fn aleph_apply(
    f: &ModeFunction,
    p: u64,
    window: &SpectralMultiplier,
) -> Result<ModeFunction> {
    let hp = HeckeParams::new(p)?;
    if f.is_zero() {
        return Ok(ModeFunction::zero());
    }
    let floor = f.support_floor().unwrap();
    let need = p as f64 * window.band_limit().exp();
    if floor <= need {
        return Err(Error::Precondition(format!(
            "aleph needs support floor > p e^(band) = {need:.4}, got {floor}"
        )));
    }
    let (k_smooth, _) = smoothing_kernel(window)?;
    let (k_wave, _) = smoothed_wave_kernel((p as f64).ln(), window)?;
    let hecke_branch = hecke_apply(&convolve_mode(f, &k_smooth)?, &hp)?;
    let wave_branch = convolve_mode(f, &k_wave)?;
    for hm in hecke_branch.modes() {
        if wave_branch.mode(hm.n()).is_some() {
            return Err(Error::AmbiguousGrouping(format!(
                "hecke and wave branches collide on mode {}",
                hm.n()
            )));
        }
    }
    hecke_branch.sub(&wave_branch)
}

// ---------------------------------------------------------------------------
// Symbols on the unitary spectrum

/// Symbol of aleph at spectral parameters (s, theta):
/// 2 cos(theta) - 2 cos(s log p). Vanishes on theta = +- s log p (mod 2 pi).
#[derive(Clone, Copy, Debug)]
pub struct AlephMultiplier {
    p: u64,
    lnp: f64,
}

impl AlephMultiplier {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("aleph index must be prime, got {p}")));
        }
        Ok(Self { p, lnp: (p as f64).ln() })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn eval(&self, s: Complex64, theta: Complex64) -> Complex64 {
        theta.cos() * 2.0 - (s * self.lnp).cos() * 2.0
    }

    pub fn eval_real(&self, s: f64, theta: f64) -> f64 {
        2.0 * theta.cos() - 2.0 * (s * self.lnp).cos()
    }
}

/// max |symbol(s, +- s log p mod 2pi)| over the grid: the residual of the
/// Eisenstein-line annihilation property.
pub fn eisenstein_line_residual<F: Fn(f64, f64) -> f64>(
    symbol: F,
    p: u64,
    s_grid: &[f64],
) -> f64 {
    let lnp = (p as f64).ln();
    let two_pi = 2.0 * PI;
    s_grid
        .iter()
        .flat_map(|&s| {
            let th = (s * lnp).rem_euclid(two_pi);
            [symbol(s, th).abs(), symbol(s, (-s * lnp).rem_euclid(two_pi)).abs()]
        })
        .fold(0.0, f64::max)
}

/// Largest symbol eigenvalue magnitude: both Satake coordinates run over the
/// unitary region [-2,2] (tempered) extended to |2cos| <= sqrt p + 1/sqrt p
/// (complementary, |Im s| <= 1/2 at the infinite place).
pub fn unitary_symbol_max<F: Fn(f64) -> f64>(f_of_t: F, p: u64, n: usize) -> f64 {
    let cap = (p as f64).sqrt() + 1.0 / (p as f64).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let a = -cap + 2.0 * cap * i as f64 / n as f64;
        for j in 0..=n {
            let b = -cap + 2.0 * cap * j as f64 / n as f64;
            worst = worst.max(f_of_t(b - a).abs());
        }
    }
    worst
}

/// Weierstrass flattening polynomial: q(t) = 1 - T_m(zeta(t^2)) / T_m(zeta(0))
/// with zeta affine from [eps^2, (4 sqrt p)^2] onto [-1, 1]. q(0) = 0 exactly
/// (same-float-path cancellation), and q(t)^2 is within `deviation` of 1 on
/// eps <= |t| <= 4 sqrt p. Evaluation runs the Chebyshev recurrence -- no
/// monomial coefficients, so degree ~100 stays stable.
#[derive(Clone, Copy, Debug)]
pub struct WeierstrassMultiplier {
    p: u64,
    lnp: f64,
    m: usize,
    lo2: f64,
    hi2: f64,
    c: f64,
}

fn chebyshev(m: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    let mut cur = x;
    if m == 0 {
        return 1.0;
    }
    for _ in 1..m {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    cur
}

impl WeierstrassMultiplier {
    fn zeta(&self, x: f64) -> f64 {
        (2.0 * x - (self.hi2 + self.lo2)) / (self.hi2 - self.lo2)
    }

    pub fn q(&self, t: f64) -> f64 {
        1.0 - chebyshev(self.m, self.zeta(t * t)) / self.c
    }

    /// The multiplier value q(t)^2 at symbol value t.
    pub fn eval_symbol(&self, t: f64) -> f64 {
        let q = self.q(t);
        q * q
    }

    pub fn eval_real(&self, s: f64, theta: f64) -> f64 {
        self.eval_symbol(2.0 * theta.cos() - 2.0 * (s * self.lnp).cos())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Polynomial degree in the symbol variable.
    pub fn degree(&self) -> usize {
        2 * self.m
    }

    /// Guaranteed sup |q^2 - 1| on the annulus eps <= |t| <= 4 sqrt p.
    pub fn deviation(&self) -> f64 {
        let d = 1.0 / self.c.abs();
        2.0 * d + d * d
    }
}

/// Build the flattening multiplier for prime p with hole radius eps,
/// escalating the degree until the guaranteed deviation meets `target`.
pub fn weierstrass_multiplier(
    p: u64,
    eps: f64,
    target: f64,
    max_degree: usize,
) -> Result<WeierstrassMultiplier> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("weierstrass multiplier needs prime p, got {p}")));
    }
    let cap = 4.0 * (p as f64).sqrt();
    if !(eps > 0.0 && eps < cap) {
        return Err(Error::Domain(format!("need 0 < eps < 4 sqrt p = {cap}, got {eps}")));
    }
    if !(target > 0.0) {
        return Err(Error::Domain(format!("deviation target must be positive, got {target}")));
    }
    let lo2 = eps * eps;
    let hi2 = cap * cap;
    let zeta0 = -(hi2 + lo2) / (hi2 - lo2);
    for m in 1..=(max_degree / 2) {
        let c = chebyshev(m, zeta0);
        let w = WeierstrassMultiplier { p, lnp: (p as f64).ln(), m, lo2, hi2, c };
        if w.deviation() <= target {
            return Ok(w);
        }
    }
    Err(Error::InfeasibleDegree { target, max_degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2_16: f64 = std::f64::consts::LN_2 / 16.0;

    #[test]
    fn hecke_bookkeeping_single_step() {
        let hp = HeckeParams::new(2).unwrap();
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let g = hecke_apply(&f, &hp).unwrap();
        assert_eq!(g.modes().len(), 1);
        let m = g.mode(2).unwrap();
        assert_eq!(m.floor(), 4.0);
        let s = 2.0f64.sqrt();
        for (a, b) in f.mode(1).unwrap().values().iter().zip(m.values()) {
            assert_eq!(a / s, *b);
        }

        // p | n: two branches.
        let f2 = bump_mode(2, 8.0, LN2_16, 25).unwrap();
        let g2 = hecke_apply(&f2, &hp).unwrap();
        let ns: Vec<u64> = g2.modes().iter().map(|m| m.n()).collect();
        assert_eq!(ns, vec![1, 4]);
        assert_eq!(g2.mode(4).unwrap().floor(), 4.0);
        assert_eq!(g2.mode(1).unwrap().floor(), 16.0);
    }

    #[test]
    fn hecke_twice_matches_hand_expansion() {
        let hp = HeckeParams::new(2).unwrap();
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let g = hecke_apply(&hecke_apply(&f, &hp).unwrap(), &hp).unwrap();
        let ns: Vec<u64> = g.modes().iter().map(|m| m.n()).collect();
        assert_eq!(ns, vec![1, 4]);
        assert_eq!(g.mode(4).unwrap().floor(), 2.0);
        assert_eq!(g.mode(1).unwrap().floor(), 8.0);
        for (a, b) in f.mode(1).unwrap().values().iter().zip(g.mode(4).unwrap().values()) {
            assert!((a / 2.0 - b).abs() < 1e-16);
        }
        for (a, b) in f.mode(1).unwrap().values().iter().zip(g.mode(1).unwrap().values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hecke_rejects_incommensurate_grid() {
        let hp = HeckeParams::new(3).unwrap();
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        assert!(matches!(hecke_apply(&f, &hp).unwrap_err(), Error::Precondition(_)));
        assert!(HeckeParams::new(6).is_err());
    }

    #[test]
    fn hecke_injectivity() {
        let hp = HeckeParams::new(2).unwrap();
        let f = bump_mode(3, 8.0, LN2_16, 25).unwrap();
        assert!(hecke_injectivity_check(&f, &hp).unwrap());
        assert!(hecke_injectivity_check(&ModeFunction::zero(), &hp).unwrap());
    }

    #[test]
    fn mode_merge_needs_aligned_floors() {
        let a = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let b = bump_mode(1, 8.3, LN2_16, 25).unwrap();
        assert!(matches!(a.add(&b).unwrap_err(), Error::AmbiguousGrouping(_)));
        let c = bump_mode(1, 16.0, LN2_16, 25).unwrap();
        let sum = a.add(&c).unwrap();
        assert_eq!(sum.modes().len(), 1);
        assert_eq!(sum.mode(1).unwrap().floor(), 8.0);
    }

    #[test]
    fn inner_product_and_norm() {
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let g = bump_mode(2, 8.0, LN2_16, 25).unwrap();
        assert_eq!(f.inner_product(&g).unwrap(), 0.0);
        let n = f.norm().unwrap();
        assert!(n > 0.0);
        // Same profile, different mode: same norm (mode index only tags the
        // cosine).
        assert!((g.norm().unwrap() - n).abs() < 1e-15);
        // Scaling.
        assert!((f.scale(3.0).norm().unwrap() - 3.0 * n).abs() < 1e-12);
    }

    #[test]
    fn constant_term_and_corruption() {
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        assert_eq!(f.constant_term(9.0), 0.0);
        let bad = f.clone().with_injected_constant(8.0, LN2_16, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(bad.constant_term(8.0 * (1.5 * LN2_16).exp()).abs() > 0.5);
    }

    #[test]
    fn json_round_trip() {
        let f = bump_mode(2, 8.0, LN2_16, 25).unwrap();
        let s = f.to_json();
        let g = ModeFunction::from_json(&s).unwrap();
        assert_eq!(g.modes().len(), 1);
        assert_eq!(g.mode(2).unwrap().floor(), 8.0);
        assert_eq!(g.mode(2).unwrap().values(), f.mode(2).unwrap().values());
        assert!(ModeFunction::from_json("{\"modes\": [], \"parity\": \"odd\"}").is_err());
    }

    #[test]
    fn smoothed_kernel_support_and_guards() {
        let w = default_window();
        let t = std::f64::consts::LN_2;
        let (k, _) = smoothed_wave_kernel(t, &w).unwrap();
        assert!((k.support_radius() - (t + 0.5)).abs() < 1e-12);
        let sup = k.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(k.mass_beyond(t + 0.5) <= 1e-6 * sup);
        // Window with too little decay is rejected.
        let thin = SpectralMultiplier::bspline_window(0.5, 4).unwrap();
        assert!(matches!(
            smoothed_wave_kernel(t, &thin).unwrap_err(),
            Error::Precondition(_)
        ));
    }

    #[test]
    fn smoothed_kernel_matches_fd_oracle() {
        let w = default_window();
        let t = std::f64::consts::LN_2;
        let (spectral, _) = smoothed_wave_kernel(t, &w).unwrap();
        let (base, _) = smoothing_kernel(&w).unwrap();
        let opts = crate::wave::WaveOptions::default();
        let (fd, _) = crate::wave::wave_propagate(&base, t, &opts).unwrap();
        let sup = spectral.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..=600 {
            let r = (t + 0.5) * i as f64 / 600.0;
            worst = worst.max((spectral.eval(r) - fd.eval(r)).abs());
        }
        assert!(worst <= 2e-3 * sup, "fd mismatch {worst} vs sup {sup}");
    }

    #[test]
    fn convolution_preserves_modes_and_floors() {
        let w = default_window();
        let (k, _) = smoothing_kernel(&w).unwrap();
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let g = convolve_mode(&f, &k).unwrap();
        assert_eq!(g.modes().len(), 1);
        let gm = g.mode(1).unwrap();
        // Output floor respects R e^{-support}.
        assert!(gm.floor() >= 8.0 * (-k.support_radius()).exp() * (1.0 - 1e-9));
        assert!(gm.floor() < 8.0);
        // Too-low floor violates the strip precondition.
        let low = bump_mode(1, 1.2, LN2_16, 25).unwrap();
        assert!(matches!(convolve_mode(&low, &k).unwrap_err(), Error::Precondition(_)));
    }

    #[test]
    fn convolution_matches_2d_oracle() {
        let w = default_window();
        let (k, _) = smoothing_kernel(&w).unwrap();
        let f = bump_mode(1, 8.0, LN2_16, 25).unwrap();
        let g = convolve_mode(&f, &k).unwrap();
        for &(x0, frac) in &[(0.0, 0.5), (0.3, 0.35)] {
            let m = f.mode(1).unwrap();
            let y0 = m.floor() * (frac * (m.values().len() - 1) as f64 * m.grid()).exp();
            let direct = convolve_oracle(&f, &k, x0, y0).unwrap();
            let fast = g.eval(x0, y0);
            assert!(
                (direct - fast).abs() <= 1e-5 * direct.abs().max(1e-3),
                "({x0},{y0}): {fast} vs {direct}"
            );
        }
    }

    #[test]
    fn aleph_output_is_cuspidal_and_orthogonal() {
        let w = default_window();
        let p = 2u64;
        let f = bump_mode(1, 4.0 * p as f64, LN2_16, 25).unwrap();
        let out = aleph_apply(&f, p, &w).unwrap();
        let ns: Vec<u64> = out.modes().iter().map(|m| m.n()).collect();
        assert_eq!(ns, vec![1, 2]);
        assert_eq!(out.constant_term(9.0), 0.0);
        assert!(out.norm().unwrap() > 0.0);

        // Branches are orthogonal: disjoint mode supports.
        let (ks, _) = smoothing_kernel(&w).unwrap();
        let (kw, _) = smoothed_wave_kernel((p as f64).ln(), &w).unwrap();
        let hb = hecke_apply(&convolve_mode(&f, &ks).unwrap(), &HeckeParams::new(p).unwrap())
            .unwrap();
        let wb = convolve_mode(&f, &kw).unwrap();
        assert_eq!(hb.inner_product(&wb).unwrap(), 0.0);

        // Floor below p e^{band}: rejected.
        let low = bump_mode(1, 2.2, LN2_16, 25).unwrap();
        assert!(matches!(aleph_apply(&low, p, &w).unwrap_err(), Error::Precondition(_)));
        assert!(aleph_apply(&ModeFunction::zero(), p, &w).unwrap().is_zero());
    }

    #[test]
    fn eisenstein_line_annihilation() {
        let a = AlephMultiplier::new(2).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -20.0 + 40.0 * i as f64 / 400.0).collect();
        let res = eisenstein_line_residual(|s, th| a.eval_real(s, th), 2, &grid);
        assert!(res <= 1e-12, "aleph line residual {res}");
        // Non-cuspidal control: pure Hecke symbol 2 cos(theta).
        let hecke_res = eisenstein_line_residual(|_, th| 2.0 * th.cos(), 2, &grid);
        assert!((hecke_res - 2.0).abs() < 1e-2, "hecke control {hecke_res}");
        // Zero multiplier.
        assert_eq!(eisenstein_line_residual(|_, _| 0.0, 2, &grid), 0.0);
    }

    #[test]
    fn unitary_spectrum_bound() {
        for p in [2u64, 3] {
            let max = unitary_symbol_max(|t| t, p, 160);
            let cap = 4.0 * (p as f64).sqrt();
            assert!(max <= cap + 1e-12, "p={p}: {max} > {cap}");
            // The bound is attained at twice the one-place cap.
            let sharp = 2.0 * ((p as f64).sqrt() + 1.0 / (p as f64).sqrt());
            assert!((max - sharp).abs() < 1e-9);
        }
    }

    #[test]
    fn weierstrass_flattens_the_annulus() {
        let w = weierstrass_multiplier(2, 1.0, 0.05, 64).unwrap();
        assert_eq!(w.eval_symbol(0.0), 0.0);
        let cap = 4.0 * 2.0f64.sqrt();
        let mut worst: f64 = 0.0;
        let mut box_max: f64 = 0.0;
        for i in 0..=10_000 {
            let t = cap * i as f64 / 10_000.0;
            let v = w.eval_symbol(t);
            box_max = box_max.max(v);
            if t >= 1.0 {
                worst = worst.max((v - 1.0).abs());
            }
            assert!(v >= 0.0);
        }
        assert!(worst <= 0.05, "annulus deviation {worst}");
        assert!(worst <= w.deviation());
        assert!(box_max <= 1.0 + w.deviation());

        // Composed with the aleph symbol it still kills the Eisenstein line.
        let grid: Vec<f64> = (0..=200).map(|i| -20.0 + 40.0 * i as f64 / 200.0).collect();
        let res = eisenstein_line_residual(|s, th| w.eval_real(s, th), 2, &grid);
        assert!(res <= 1e-10, "composed line residual {res}");

        assert!(matches!(
            weierstrass_multiplier(2, 1.0, 1e-12, 8).unwrap_err(),
            Error::InfeasibleDegree { .. }
        ));
    }
}
