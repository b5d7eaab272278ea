//! Test functions for the spectral counting argument: the plateau function
//! h = |psi|^2 with psi a Fejer-smoothed ball indicator (band-limited, 0 <=
//! h <= 1, h >= 1-eps on the unit ball, polynomial decay outside), its
//! scaling family h(t .), the Plancherel ball-mass constant
//!
//!   alpha = lim M(T)/T^{d/2},  M(T) = mu_Planch{ |s|^2 <= T },
//!
//! and the Weyl-count harness comparing sharp and smoothed eigenvalue counts
//! against alpha vol T^{d/2}. Rank one only: d = 2, r = 1.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::plancherel_density_arch;
use crate::transform::{kesten_moment, SpectralMultiplier};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::sync::Arc;

const S_GRID_MAX: f64 = 120.0;

// ---------------------------------------------------------------------------
// Fejer-kernel CDF machinery

/// Tabulated CDF of the normalized kernel sinc(t)^order on [0, t_max]:
/// G(0) = 0, G(inf) = 1/2. The kernel is nonnegative and band-limited
/// (transform supported in [-order, order]), with tail integral
/// ~ t^{1-order}.
struct SincCdf {
    step: f64,
    values: Vec<f64>,
    half: f64,
}

impl SincCdf {
    fn new(order: u32) -> Self {
        let step = 0.02;
        let t_max = 4000.0;
        let n = (t_max / step) as usize + 1;
        let kernel = |t: f64| {
            if t.abs() < 1e-6 {
                1.0 - order as f64 * t * t / 6.0
            } else {
                (t.sin() / t).powi(order as i32)
            }
        };
        let f: Vec<f64> = (0..n + 1).map(|i| kernel(i as f64 * step)).collect();
        // Third-order closed step keeps the cumulative error ~ h^3 V(f'').
        let mut values = vec![0.0; n];
        for i in 0..n - 1 {
            values[i + 1] = values[i] + step / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
        }
        let avg = {
            // mean of sin^order over a period
            let mut c = 1.0;
            for i in 0..order / 2 {
                c = c * (order - i) as f64 / (i + 1) as f64;
            }
            c / 2f64.powi(order as i32)
        };
        let tail = avg * t_max.powi(1 - order as i32) / (order - 1) as f64;
        let total = 2.0 * (values[n - 1] + tail);
        for v in &mut values {
            *v /= total;
        }
        let half = values[n - 1];
        Self { step, values, half }
    }

    fn t_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    fn positive(&self, t: f64) -> f64 {
        let x = t / self.step;
        let n = self.values.len();
        if x >= (n - 1) as f64 {
            return self.half;
        }
        let i = (x as usize).min(n - 2);
        let u = x - i as f64;
        let v = &self.values;
        let vm = if i == 0 { -v[1] } else { v[i - 1] };
        let vp = if i + 2 < n { v[i + 2] } else { v[n - 1] };
        0.5 * (2.0 * v[i]
            + (v[i + 1] - vm) * u
            + (2.0 * vm - 5.0 * v[i] + 4.0 * v[i + 1] - vp) * u * u
            + (3.0 * v[i] - vm - 3.0 * v[i + 1] + vp) * u * u * u)
    }

    fn signed(&self, x: f64) -> f64 {
        if x < 0.0 {
            -self.positive(-x)
        } else {
            self.positive(x)
        }
    }

    /// Smallest t with tau(t) <= target.
    fn tail_inverse(&self, target: f64) -> f64 {
        let n = self.values.len();
        let mut i = 0;
        while i < n && self.half - self.values[i] > target {
            i += 1;
        }
        i as f64 * self.step
    }
}

// ---------------------------------------------------------------------------
// The plateau test function

/// Construction report: every defining inequality of the test function,
/// measured on the verification grids.
#[derive(Clone, Debug)]
pub struct HChoiceReport {
    pub epsilon: f64,
    pub kernel_order: u32,
    pub smoothing_scale: f64,
    pub band_limit: f64,
    /// max |h(s) - h(-s)| over the grid (evenness).
    pub evenness_residual: f64,
    /// max of (h - 1, -h) over the grid; h stays in [0, 1] up to this.
    pub range_excess: f64,
    /// min of h on |s| <= sqrt(1 - eps); must be >= 1 - eps.
    pub plateau_min: f64,
    /// sup of (1+|s|)^{d+1} h over 1 <= |s| <= 120; must be < eps.
    pub decay_sup: f64,
    /// (t, t^d * integral of h(t s) against the Plancherel density - alpha)
    /// for a few scales; the offset is O(eps) with no pinned constant.
    pub ball_mass_offsets: Vec<(f64, f64)>,
}

/// h = |psi|^2 where psi smooths the indicator of [-beta, beta] by a
/// sinc^order kernel at scale w; beta sits midway between sqrt(1-eps) and 1.
#[derive(Clone)]
pub struct HChoiceFunction {
    epsilon: f64,
    psi: SpectralMultiplier,
    h: SpectralMultiplier,
    report: HChoiceReport,
    /// |s| beyond which h < 1e-14 numerically.
    effective_support: f64,
}

impl HChoiceFunction {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn psi(&self) -> &SpectralMultiplier {
        &self.psi
    }

    pub fn h(&self) -> &SpectralMultiplier {
        &self.h
    }

    pub fn band_limit(&self) -> f64 {
        self.h.band_limit()
    }

    pub fn report(&self) -> &HChoiceReport {
        &self.report
    }

    pub fn effective_support(&self) -> f64 {
        self.effective_support
    }
}

/// Build the plateau function for the given epsilon. Only the rank-one case
/// (d, r) = (2, 1) is implemented; the kernel order starts at the smallest
/// value whose decay beats (1+|s|)^{d+1} and escalates if any verification
/// inequality fails.
pub fn build_hchoice(epsilon: f64, d: u32, r: u32) -> Result<HChoiceFunction> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    if d != 2 || r != 1 {
        return Err(Error::Domain(format!(
            "only the rank-one case (d, r) = (2, 1) is implemented, got ({d}, {r})"
        )));
    }
    let mut failures = Vec::new();
    for order in [4u32, 6, 8] {
        match try_build(epsilon, order) {
            Ok(hc) => return Ok(hc),
            Err(e) => failures.push(format!("order {order}: {e}")),
        }
    }
    Err(Error::ConstructionInfeasible(format!(
        "no kernel order satisfied the plateau/decay inequalities at epsilon = {epsilon}: {}",
        failures.join("; ")
    )))
}

fn try_build(epsilon: f64, order: u32) -> Result<HChoiceFunction> {
    let cdf = Arc::new(SincCdf::new(order));
    let root = (1.0 - epsilon).sqrt();
    let beta = 0.5 * (root + 1.0);
    let gap = 1.0 - beta;
    // Two constraints on the kernel tail at distance gap: the plateau needs
    // (1 - tau)^2 >= 1 - eps, the decay bound at s = 1 needs 8 tau^2 < eps.
    let tau_target = (0.4 * (1.0 - root)).min((0.6 * epsilon / 8.0).sqrt());
    let w = cdf.tail_inverse(tau_target) / gap;
    if !(w.is_finite() && w > 0.0) || w * (S_GRID_MAX + beta) > cdf.t_max() * 50.0 {
        return Err(Error::ConstructionInfeasible(format!(
            "smoothing scale {w} out of tabulated range"
        )));
    }

    let psi_fn = {
        let cdf = cdf.clone();
        move |s: Complex64| {
            // Tabulated on the real axis; spectral parameters are real here.
            let s = s.re;
            Complex64::new(cdf.signed(w * (s + beta)) - cdf.signed(w * (s - beta)), 0.0)
        }
    };
    // psi tail ~ tau(w(s - beta)) ~ (w s)^{1-order}.
    let psi_decay = (order - 1) as f64;
    let mut psi_amp = 0.0f64;
    for i in 0..=2000 {
        let s = S_GRID_MAX * i as f64 / 2000.0;
        let v = (cdf.signed(w * (s + beta)) - cdf.signed(w * (s - beta))).abs();
        psi_amp = psi_amp.max(v * (1.0 + s).powf(psi_decay));
    }
    let psi = SpectralMultiplier::new(psi_fn, order as f64 * w, psi_decay, psi_amp);
    let h = psi.product(&psi);

    // ---- verification grids ----
    let heval = |s: f64| h.eval_real(s);
    let mut evenness_residual = 0.0f64;
    let mut range_excess = 0.0f64;
    for i in 0..=4000 {
        let s = S_GRID_MAX * i as f64 / 4000.0;
        let v = heval(s);
        evenness_residual = evenness_residual.max((v - heval(-s)).abs());
        range_excess = range_excess.max(v - 1.0).max(-v);
    }
    if range_excess > 1e-8 {
        return Err(Error::ConstructionInfeasible(format!("h leaves [0,1] by {range_excess}")));
    }
    let mut plateau_min = f64::INFINITY;
    for i in 0..=1000 {
        let s = root * i as f64 / 1000.0;
        plateau_min = plateau_min.min(heval(s));
    }
    if plateau_min < 1.0 - epsilon {
        return Err(Error::ConstructionInfeasible(format!(
            "plateau minimum {plateau_min} below {}",
            1.0 - epsilon
        )));
    }
    let mut decay_sup = 0.0f64;
    for i in 0..=4000 {
        let s = 1.0 + (S_GRID_MAX - 1.0) * i as f64 / 4000.0;
        decay_sup = decay_sup.max((1.0 + s).powi(3) * heval(s).abs());
    }
    if decay_sup >= epsilon {
        return Err(Error::ConstructionInfeasible(format!(
            "decay sup {decay_sup} >= epsilon {epsilon}"
        )));
    }

    let effective_support = beta + cdf.tail_inverse(1e-7) / w;
    let alpha = alpha_reference();
    let mut ball_mass_offsets = Vec::new();
    for t in [1.0, 0.5, 0.25, 0.125] {
        let cut = effective_support / t;
        let mass = 2.0
            * quad::adaptive_real(
                |s| heval(t * s) * plancherel_density_arch(s),
                0.0,
                cut,
                1e-10 * (1.0 + cut * cut),
                40_000,
            )?;
        ball_mass_offsets.push((t, t * t * mass - alpha));
    }
    if ball_mass_offsets.iter().any(|(_, off)| off.abs() > 3.0 * epsilon) {
        return Err(Error::ConstructionInfeasible(
            "ball-mass offset exceeded the O(epsilon) window".into(),
        ));
    }

    let report = HChoiceReport {
        epsilon,
        kernel_order: order,
        smoothing_scale: w,
        band_limit: h.band_limit(),
        evenness_residual,
        range_excess,
        plateau_min,
        decay_sup,
        ball_mass_offsets,
    };
    Ok(HChoiceFunction { epsilon, psi, h, report, effective_support })
}

/// The scaled multiplier s -> h(t s): band limit contracts to t R, the
/// plateau dilates to |s| <= sqrt(1-eps)/t.
pub fn scale_family(hc: &HChoiceFunction, t: f64) -> Result<SpectralMultiplier> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("scale must lie in (0, 1], got {t}")));
    }
    let base = hc.h.clone();
    let decay = base.decay_order();
    let amplitude = base.amplitude() / t.powf(decay);
    Ok(SpectralMultiplier::new(
        move |s| base.eval(s * t),
        t * hc.h.band_limit(),
        decay,
        amplitude,
    ))
}

// ---------------------------------------------------------------------------
// Plancherel ball mass and alpha

/// M(T) = mu_Planch{ s in R : s^2 <= T } (archimedean factor).
pub fn ball_mass(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("ball-mass cap must be nonnegative, got {t}")));
    }
    let top = t.sqrt();
    Ok(2.0 * quad::adaptive_real(plancherel_density_arch, 0.0, top, 1e-13 * (1.0 + t), 40_000)?)
}

fn alpha_reference() -> f64 {
    // Difference quotient of M over [200, 400] cancels the O(1) remainder,
    // leaving an exponentially small error.
    let m1 = ball_mass(200.0).expect("plancherel mass");
    let m2 = ball_mass(400.0).expect("plancherel mass");
    (m2 - m1) / 200.0
}

#[derive(Clone, Debug)]
pub struct AlphaReport {
    /// (T, M(T)/T^{d/2}) along the grid.
    pub ratios: Vec<(f64, f64)>,
    /// Extrapolated limit (difference quotient of the two largest T).
    pub alpha: f64,
    /// Total mass of the tree-place density, when a prime is supplied.
    pub tree_mass: Option<f64>,
    /// Fitted coefficient of the O(1/T) remainder in M(T)/T.
    pub remainder_coeff: f64,
}

/// Estimate alpha = lim M(T)/T^{d/2} over the given cap grid. Supplying a
/// prime multiplies in the total mass of the tree spectral density (which
/// is 1, so the estimate is unchanged: the constant does not depend on the
/// place set).
pub fn alpha_constant(p: Option<u64>, t_grid: &[f64]) -> Result<AlphaReport> {
    if t_grid.is_empty() {
        return Err(Error::Domain("alpha estimation needs a nonempty cap grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::Domain("cap grid must be positive and increasing".into()));
    }
    let tree_mass = match p {
        Some(p) => {
            if !crate::modular::is_prime(p) {
                return Err(Error::Domain(format!("tree factor needs a prime, got {p}")));
            }
            Some(kesten_moment(p, 0))
        }
        None => None,
    };
    let masses: Vec<f64> = t_grid.iter().map(|&t| ball_mass(t)).collect::<Result<_>>()?;
    let ratios: Vec<(f64, f64)> =
        t_grid.iter().zip(&masses).map(|(&t, &m)| (t, m / t)).collect();
    let n = t_grid.len();
    let alpha_arch = if n >= 2 {
        (masses[n - 1] - masses[n - 2]) / (t_grid[n - 1] - t_grid[n - 2])
    } else {
        ratios[0].1
    };
    let remainder_coeff = {
        let (t, r) = ratios[n - 1];
        (alpha_arch - r) * t
    };
    Ok(AlphaReport {
        ratios,
        alpha: alpha_arch * tree_mass.unwrap_or(1.0),
        tree_mass,
        remainder_coeff,
    })
}

// ---------------------------------------------------------------------------
// Eigenvalue lists and Weyl counts

/// Sorted multiset of Laplace eigenvalues (lambda = 1/4 + s^2 for tempered
/// parameters).
#[derive(Clone, Debug)]
pub struct EigenvalueList {
    lambdas: Vec<f64>,
    source: String,
}

impl EigenvalueList {
    pub fn from_lambdas(mut lambdas: Vec<f64>, source: &str) -> Result<Self> {
        if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Domain("eigenvalues must be finite and nonnegative".into()));
        }
        lambdas.sort_by(f64::total_cmp);
        Ok(Self { lambdas, source: source.into() })
    }

    pub fn from_parameters(params: &[f64], source: &str) -> Result<Self> {
        if params.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("spectral parameters must be finite".into()));
        }
        Self::from_lambdas(params.iter().map(|s| 0.25 + s * s).collect(), source)
    }

    /// One value per line; the header line declares "lambda" or "s".
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty eigenvalue file".into()))?;
        let is_lambda = match header {
            "lambda" => true,
            "s" => false,
            other => {
                return Err(Error::Parse(format!(
                    "header must declare lambda or s, got {other:?}"
                )))
            }
        };
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {line:?} on line {}", i + 2)))?;
            values.push(v);
        }
        if is_lambda {
            Self::from_lambdas(values, "csv:lambda")
        } else {
            Self::from_parameters(&values, "csv:s")
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// N(T) = #{lambda <= T}.
    pub fn count_below(&self, t: f64) -> usize {
        self.lambdas.partition_point(|&l| l <= t)
    }

    /// Tempered parameters s = sqrt(lambda - 1/4), clamped to 0 inside the
    /// complementary range.
    pub fn parameters(&self) -> Vec<f64> {
        self.lambdas.iter().map(|&l| (l - 0.25).max(0.0).sqrt()).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WeylRow {
    pub cap: f64,
    pub count: usize,
    pub prediction: f64,
    pub ratio: f64,
    /// Smoothed count sum_nu h(t s_nu) at t = cap^{-1/2}.
    pub smoothed: f64,
    pub smoothed_ratio: f64,
}

/// Sharp and smoothed Weyl counts against the prediction alpha vol T^{d/2}.
pub fn weyl_count(
    list: &EigenvalueList,
    volume: f64,
    t_grid: &[f64],
    hc: &HChoiceFunction,
) -> Result<Vec<WeylRow>> {
    if list.is_empty() {
        return Err(Error::DegenerateInput("empty eigenvalue list".into()));
    }
    if !(volume > 0.0) {
        return Err(Error::Domain(format!("volume must be positive, got {volume}")));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("cap grid must be positive".into()));
    }
    let alpha = alpha_reference();
    let params = list.parameters();
    Ok(t_grid
        .iter()
        .map(|&cap| {
            let count = list.count_below(cap);
            let prediction = alpha * volume * cap;
            let t = cap.powf(-0.5);
            let smoothed: f64 = params.iter().map(|&s| hc.h.eval_real(t * s)).sum();
            WeylRow {
                cap,
                count,
                prediction,
                ratio: count as f64 / prediction,
                smoothed,
                smoothed_ratio: smoothed / prediction,
            }
        })
        .collect())
}

/// Synthetic eigenvalue list: a Poisson draw from the Weyl-consistent
/// density vol * dmu_Planch, up to the given eigenvalue cap. Ground truth
/// for the counting harness.
pub fn sample_weyl_list(volume: f64, lambda_max: f64, seed: u64) -> Result<EigenvalueList> {
    if !(volume > 0.0) || !(lambda_max > 0.25) {
        return Err(Error::Domain(
            "synthetic list needs volume > 0 and eigenvalue cap > 1/4".into(),
        ));
    }
    let s_max = (lambda_max - 0.25).sqrt();
    let n = 4096;
    let ds = s_max / n as f64;
    // Cumulative of vol * 2 rho(s) ds on [0, s_max].
    let mut cdf = vec![0.0; n + 1];
    for i in 0..n {
        let a = plancherel_density_arch(i as f64 * ds);
        let b = plancherel_density_arch((i + 1) as f64 * ds);
        cdf[i + 1] = cdf[i] + volume * (a + b) * ds;
    }
    let total = cdf[n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(total)
        .map_err(|e| Error::Domain(format!("bad Poisson intensity: {e}")))?
        .sample(&mut rng) as usize;
    let mut lambdas = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.gen_range(0.0..total);
        let i = cdf.partition_point(|&c| c <= target).min(n) - 1;
        let frac = (target - cdf[i]) / (cdf[i + 1] - cdf[i]).max(1e-300);
        let s = (i as f64 + frac) * ds;
        lambdas.push(0.25 + s * s);
    }
    EigenvalueList::from_lambdas(lambdas, &format!("synthetic(seed={seed})"))
}
