//! Exact point-mass distribution algebra on A = R^a x Z^b: convolution,
//! involution, cyclic pushforwards, and the subgroup-annihilating
//! construction
//!
//!   f_A = (*)_j (delta_{a_j} - delta_0),   f_B = f_A * involution(f_A),
//!   f   = sum_{w in W} f_B^w,
//!
//! which is W-invariant, has nonnegative Fourier transform on unitary
//! characters, and pushes forward to zero along every input subgroup.
//! On top of that: the spectral norm K, the flattening polynomials
//! P_n(x) = 1 - (1 - x^2/K^2)^n applied in the convolution algebra, lattice
//! cancellation residuals for sampled profiles, and the Monte Carlo
//! small-value measure of almost-periodic trigonometric sums.
//!
//! Integer coordinates are exact; real coordinates are floats identified
//! within a merge tolerance (default 1e-9).

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::f64::consts::PI;

pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_ATOM_CAP: usize = 1_000_000;

/// A = R^a x Z^b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmbientGroup {
    pub real_rank: usize,
    pub int_rank: usize,
}

impl AmbientGroup {
    pub fn new(real_rank: usize, int_rank: usize) -> Result<Self> {
        if real_rank + int_rank == 0 {
            return Err(Error::Domain("ambient group needs real_rank + int_rank >= 1".into()));
        }
        Ok(Self { real_rank, int_rank })
    }
}

/// A point of R^a x Z^b.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub real: Vec<f64>,
    pub int: Vec<i64>,
}

impl Point {
    pub fn new(real: Vec<f64>, int: Vec<i64>) -> Self {
        Self { real, int }
    }

    pub fn zero(g: AmbientGroup) -> Self {
        Self { real: vec![0.0; g.real_rank], int: vec![0; g.int_rank] }
    }

    fn fits(&self, g: AmbientGroup) -> bool {
        self.real.len() == g.real_rank && self.int.len() == g.int_rank
    }

    fn is_zero(&self) -> bool {
        self.real.iter().all(|&x| x == 0.0) && self.int.iter().all(|&m| m == 0)
    }

    fn add(&self, other: &Self) -> Self {
        Self {
            real: self.real.iter().zip(&other.real).map(|(a, b)| a + b).collect(),
            int: self.int.iter().zip(&other.int).map(|(a, b)| a + b).collect(),
        }
    }

    fn neg(&self) -> Self {
        Self {
            real: self.real.iter().map(|&x| -x).collect(),
            int: self.int.iter().map(|&m| -m).collect(),
        }
    }

    fn mul_add(&self, k: i64, step: &Self) -> Self {
        Self {
            real: self.real.iter().zip(&step.real).map(|(a, b)| a + k as f64 * b).collect(),
            int: self.int.iter().zip(&step.int).map(|(a, b)| a + k * b).collect(),
        }
    }

    fn norm(&self) -> f64 {
        let r: f64 = self.real.iter().map(|x| x * x).sum();
        let m: f64 = self.int.iter().map(|&m| (m * m) as f64).sum();
        (r + m).sqrt()
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        self.int == other.int
            && self.real.iter().zip(&other.real).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn cmp_canonical(&self, other: &Self) -> Ordering {
        self.int.cmp(&other.int).then_with(|| {
            for (a, b) in self.real.iter().zip(&other.real) {
                match a.total_cmp(b) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

#[derive(Clone, Debug)]
struct Atom {
    point: Point,
    weight: Complex64,
}

/// Finite complex linear combination of point masses on R^a x Z^b, kept in
/// canonical order with tolerance-merged coincident atoms.
#[derive(Clone, Debug)]
pub struct PointMassDistribution {
    ambient: AmbientGroup,
    atoms: Vec<Atom>,
    merge_tolerance: f64,
}

impl PointMassDistribution {
    pub fn zero(ambient: AmbientGroup) -> Self {
        Self { ambient, atoms: Vec::new(), merge_tolerance: DEFAULT_MERGE_TOLERANCE }
    }

    pub fn delta(ambient: AmbientGroup, point: Point) -> Result<Self> {
        Self::from_atoms(ambient, vec![(point, Complex64::new(1.0, 0.0))])
    }

    pub fn from_atoms(
        ambient: AmbientGroup,
        atoms: Vec<(Point, Complex64)>,
    ) -> Result<Self> {
        for (p, w) in &atoms {
            if !p.fits(ambient) {
                return Err(Error::Domain(format!(
                    "point has ranks ({}, {}), ambient is ({}, {})",
                    p.real.len(),
                    p.int.len(),
                    ambient.real_rank,
                    ambient.int_rank
                )));
            }
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Domain("atom weights must be finite".into()));
            }
        }
        let mut out = Self {
            ambient,
            atoms: atoms.into_iter().map(|(point, weight)| Atom { point, weight }).collect(),
            merge_tolerance: DEFAULT_MERGE_TOLERANCE,
        };
        out.normalize();
        Ok(out)
    }

    pub fn ambient(&self) -> AmbientGroup {
        self.ambient
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tolerance
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, Complex64)> {
        self.atoms.iter().map(|a| (&a.point, a.weight))
    }

    pub fn weight_at(&self, p: &Point) -> Complex64 {
        self.atoms
            .iter()
            .find(|a| a.point.close(p, self.merge_tolerance))
            .map_or(Complex64::default(), |a| a.weight)
    }

    fn max_weight(&self) -> f64 {
        self.atoms.iter().fold(0.0f64, |m, a| m.max(a.weight.norm()))
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.norm()).sum()
    }

    /// Sort canonically, merge atoms within tolerance, drop zero weights.
    fn normalize(&mut self) {
        let tol = self.merge_tolerance;
        self.atoms.sort_by(|x, y| x.point.cmp_canonical(&y.point));
        let mut out: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        'next: for atom in self.atoms.drain(..) {
            // Representatives that can still match sit in a contiguous tail:
            // same integer part, first real coordinate within tolerance.
            for prev in out.iter_mut().rev() {
                if prev.point.int != atom.point.int {
                    break;
                }
                if let (Some(a), Some(b)) = (prev.point.real.first(), atom.point.real.first()) {
                    if b - a > tol {
                        break;
                    }
                }
                if prev.point.close(&atom.point, tol) {
                    prev.weight += atom.weight;
                    continue 'next;
                }
            }
            out.push(atom);
        }
        let cut = 1e-14 * out.iter().fold(0.0f64, |m, a| m.max(a.weight.norm()));
        out.retain(|a| a.weight.norm() > cut);
        self.atoms = out;
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.weight *= c;
        }
        out.normalize();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::Domain("cannot add distributions on different groups".into()));
        }
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pushforward under a group element (linear map), weights unchanged.
    pub fn apply(&self, w: &GroupElement) -> Result<Self> {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.point = w.apply(&a.point)?;
        }
        out.normalize();
        Ok(out)
    }

    /// Atom-set equality within the merge tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let scale = self.max_weight().max(other.max_weight()).max(1e-300);
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.point.close(&b.point, self.merge_tolerance)
                    && (a.weight - b.weight).norm() <= 1e-12 * scale
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "ambient": { "a": self.ambient.real_rank, "b": self.ambient.int_rank },
            "atoms": self.atoms.iter().map(|a| serde_json::json!({
                "point": { "real": a.point.real, "int": a.point.int },
                "weight": [a.weight.re, a.weight.im],
            })).collect::<Vec<_>>(),
        }))
        .expect("distribution serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let a = v["ambient"]["a"].as_u64().ok_or_else(|| Error::Parse("missing ambient.a".into()))?;
        let b = v["ambient"]["b"].as_u64().ok_or_else(|| Error::Parse("missing ambient.b".into()))?;
        let ambient = AmbientGroup::new(a as usize, b as usize)?;
        let raw = v["atoms"].as_array().ok_or_else(|| Error::Parse("missing atoms".into()))?;
        let mut atoms = Vec::with_capacity(raw.len());
        for entry in raw {
            let real = entry["point"]["real"]
                .as_array()
                .ok_or_else(|| Error::Parse("atom missing point.real".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::Parse("bad real coordinate".into())))
                .collect::<Result<Vec<_>>>()?;
            let int = entry["point"]["int"]
                .as_array()
                .ok_or_else(|| Error::Parse("atom missing point.int".into()))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| Error::Parse("bad integer coordinate".into())))
                .collect::<Result<Vec<_>>>()?;
            let w = entry["weight"]
                .as_array()
                .filter(|w| w.len() == 2)
                .ok_or_else(|| Error::Parse("atom weight must be [re, im]".into()))?;
            let re = w[0].as_f64().ok_or_else(|| Error::Parse("bad weight".into()))?;
            let im = w[1].as_f64().ok_or_else(|| Error::Parse("bad weight".into()))?;
            atoms.push((Point::new(real, int), Complex64::new(re, im)));
        }
        Self::from_atoms(ambient, atoms)
    }
}

/// f * g: pairwise point sums with multiplied weights.
pub fn convolve(f: &PointMassDistribution, g: &PointMassDistribution) -> Result<PointMassDistribution> {
    convolve_capped(f, g, DEFAULT_ATOM_CAP)
}

pub fn convolve_capped(
    f: &PointMassDistribution,
    g: &PointMassDistribution,
    cap: usize,
) -> Result<PointMassDistribution> {
    if f.ambient != g.ambient {
        return Err(Error::Domain("cannot convolve distributions on different groups".into()));
    }
    let pairs = f.atoms.len() * g.atoms.len();
    if pairs > cap {
        return Err(Error::AtomOverflow(pairs, cap));
    }
    let mut atoms = Vec::with_capacity(pairs);
    for a in &f.atoms {
        for b in &g.atoms {
            atoms.push(Atom { point: a.point.add(&b.point), weight: a.weight * b.weight });
        }
    }
    let mut out = PointMassDistribution {
        ambient: f.ambient,
        atoms,
        merge_tolerance: f.merge_tolerance.max(g.merge_tolerance),
    };
    out.normalize();
    Ok(out)
}

/// f-check: x -> -x with conjugated weights, so fourier(f * involution(f))
/// = |fourier(f)|^2 on unitary characters.
pub fn involution(f: &PointMassDistribution) -> PointMassDistribution {
    let mut out = f.clone();
    for a in &mut out.atoms {
        a.point = a.point.neg();
        a.weight = a.weight.conj();
    }
    out.normalize();
    out
}

/// Character value sum_atoms w exp(i<xi, x_real> + i<phi, x_int>).
pub fn fourier_eval(f: &PointMassDistribution, xi: &[f64], phi: &[f64]) -> Complex64 {
    f.atoms
        .iter()
        .map(|a| {
            let mut phase = 0.0;
            for (x, v) in a.point.real.iter().zip(xi) {
                phase += x * v;
            }
            for (m, v) in a.point.int.iter().zip(phi) {
                phase += *m as f64 * v;
            }
            a.weight * Complex64::new(0.0, phase).exp()
        })
        .sum()
}

/// Character with a nontempered imaginary part: xi + i eta on the real
/// factor, phi + i eta' on the torus.
pub fn fourier_eval_strip(
    f: &PointMassDistribution,
    xi: &[f64],
    eta_real: &[f64],
    phi: &[f64],
    eta_int: &[f64],
) -> Complex64 {
    f.atoms
        .iter()
        .map(|a| {
            let mut phase = 0.0;
            let mut damp = 0.0;
            for (j, x) in a.point.real.iter().enumerate() {
                phase += x * xi[j];
                damp += x * eta_real[j];
            }
            for (j, m) in a.point.int.iter().enumerate() {
                phase += *m as f64 * phi[j];
                damp += *m as f64 * eta_int[j];
            }
            a.weight * Complex64::new(-damp, phase).exp()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Subgroups, group actions, and the annihilating construction

/// Finitely generated subgroup, given by its generators.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    generators: Vec<Point>,
}

impl SubgroupSpec {
    pub fn cyclic(generator: Point) -> Result<Self> {
        Self::new(vec![generator])
    }

    pub fn new(generators: Vec<Point>) -> Result<Self> {
        if generators.is_empty() || generators.iter().any(|g| g.is_zero()) {
            return Err(Error::Domain("subgroup generators must be nonzero".into()));
        }
        Ok(Self { generators })
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }
}

/// Block linear map on R^a x Z^b: an a x a real block and a b x b integer
/// block (row major), so the lattice part is preserved by construction.
#[derive(Clone, Debug)]
pub struct GroupElement {
    real_rank: usize,
    int_rank: usize,
    real_block: Vec<f64>,
    int_block: Vec<i64>,
}

impl GroupElement {
    pub fn new(
        ambient: AmbientGroup,
        real_block: Vec<f64>,
        int_block: Vec<i64>,
    ) -> Result<Self> {
        let (a, b) = (ambient.real_rank, ambient.int_rank);
        if real_block.len() != a * a || int_block.len() != b * b {
            return Err(Error::Domain(format!(
                "group element blocks must be {a}x{a} and {b}x{b}"
            )));
        }
        Ok(Self { real_rank: a, int_rank: b, real_block, int_block })
    }

    pub fn identity(ambient: AmbientGroup) -> Self {
        let (a, b) = (ambient.real_rank, ambient.int_rank);
        let mut real_block = vec![0.0; a * a];
        let mut int_block = vec![0i64; b * b];
        for i in 0..a {
            real_block[i * a + i] = 1.0;
        }
        for i in 0..b {
            int_block[i * b + i] = 1;
        }
        Self { real_rank: a, int_rank: b, real_block, int_block }
    }

    pub fn negation(ambient: AmbientGroup) -> Self {
        let mut e = Self::identity(ambient);
        for x in &mut e.real_block {
            *x = -*x;
        }
        for m in &mut e.int_block {
            *m = -*m;
        }
        e
    }

    fn apply(&self, p: &Point) -> Result<Point> {
        if p.real.len() != self.real_rank || p.int.len() != self.int_rank {
            return Err(Error::Domain("group element rank mismatch".into()));
        }
        let a = self.real_rank;
        let b = self.int_rank;
        let real = (0..a)
            .map(|i| (0..a).map(|j| self.real_block[i * a + j] * p.real[j]).sum())
            .collect();
        let int = (0..b)
            .map(|i| (0..b).map(|j| self.int_block[i * b + j] * p.int[j]).sum())
            .collect();
        Ok(Point { real, int })
    }

    fn compose(&self, other: &Self) -> Self {
        let a = self.real_rank;
        let b = self.int_rank;
        let mut real_block = vec![0.0; a * a];
        for i in 0..a {
            for j in 0..a {
                real_block[i * a + j] =
                    (0..a).map(|k| self.real_block[i * a + k] * other.real_block[k * a + j]).sum();
            }
        }
        let mut int_block = vec![0i64; b * b];
        for i in 0..b {
            for j in 0..b {
                int_block[i * b + j] =
                    (0..b).map(|k| self.int_block[i * b + k] * other.int_block[k * b + j]).sum();
            }
        }
        Self { real_rank: a, int_rank: b, real_block, int_block }
    }

    fn matches(&self, other: &Self) -> bool {
        self.int_block == other.int_block
            && self
                .real_block
                .iter()
                .zip(&other.real_block)
                .all(|(x, y)| (x - y).abs() <= 1e-12)
    }
}

/// Finite group of block linear maps; closure and identity are verified,
/// not assumed.
#[derive(Clone, Debug)]
pub struct FiniteGroupAction {
    elements: Vec<GroupElement>,
}

impl FiniteGroupAction {
    pub fn new(elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Domain("group action needs at least the identity".into()));
        }
        let a = elements[0].real_rank;
        let b = elements[0].int_rank;
        if elements.iter().any(|e| e.real_rank != a || e.int_rank != b) {
            return Err(Error::Domain("group elements on mismatched ranks".into()));
        }
        let id = GroupElement {
            real_rank: a,
            int_rank: b,
            real_block: GroupElement::identity(AmbientGroup { real_rank: a, int_rank: b })
                .real_block,
            int_block: GroupElement::identity(AmbientGroup { real_rank: a, int_rank: b })
                .int_block,
        };
        if !elements.iter().any(|e| e.matches(&id)) {
            return Err(Error::Precondition("group action does not list the identity".into()));
        }
        for x in &elements {
            for y in &elements {
                let z = x.compose(y);
                if !elements.iter().any(|e| e.matches(&z)) {
                    return Err(Error::Precondition(
                        "group action is not closed under composition".into(),
                    ));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn trivial(ambient: AmbientGroup) -> Self {
        Self { elements: vec![GroupElement::identity(ambient)] }
    }

    pub fn sign_group(ambient: AmbientGroup) -> Self {
        Self {
            elements: vec![GroupElement::identity(ambient), GroupElement::negation(ambient)],
        }
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }
}

/// The annihilating distribution: nonzero, W-invariant, nonnegative Fourier
/// transform, zero pushforward along every input subgroup. All three
/// properties are asserted before returning.
pub fn lemma2_build(
    ambient: AmbientGroup,
    subgroups: &[SubgroupSpec],
    action: &FiniteGroupAction,
) -> Result<PointMassDistribution> {
    if subgroups.is_empty() {
        return Err(Error::Domain("need at least one subgroup".into()));
    }
    let delta0 = PointMassDistribution::delta(ambient, Point::zero(ambient))?;
    let mut f_a = delta0.clone();
    for sg in subgroups {
        for g in sg.generators() {
            if !g.fits(ambient) {
                return Err(Error::Domain("subgroup generator rank mismatch".into()));
            }
            let step = PointMassDistribution::delta(ambient, g.clone())?.sub(&delta0)?;
            f_a = convolve(&f_a, &step)?;
        }
    }
    let f_b = convolve(&f_a, &involution(&f_a))?;
    let mut f = PointMassDistribution::zero(ambient);
    for w in action.elements() {
        f = f.add(&f_b.apply(w)?)?;
    }
    if f.is_zero() {
        return Err(Error::DegenerateInput(
            "symmetrized distribution cancelled to zero".into(),
        ));
    }
    for w in action.elements() {
        if !f.apply(w)?.approx_eq(&f) {
            return Err(Error::DegenerateInput("output is not invariant under the action".into()));
        }
    }
    for sg in subgroups {
        for g in sg.generators() {
            if !pushforward_cyclic(&f, g)?.is_zero() {
                return Err(Error::DegenerateInput(format!(
                    "pushforward along {g:?} did not vanish"
                )));
            }
        }
    }
    Ok(f)
}

/// Pushforward along the quotient by the cyclic subgroup generated by g:
/// groups atoms under x ~ x + k g and sums weights per class, reducing each
/// class to a canonical representative.
pub fn pushforward_cyclic(
    f: &PointMassDistribution,
    generator: &Point,
) -> Result<PointMassDistribution> {
    if !generator.fits(f.ambient) {
        return Err(Error::Domain("generator rank mismatch".into()));
    }
    if generator.is_zero() {
        return Err(Error::Domain("cyclic pushforward needs a nonzero generator".into()));
    }
    let tol = f.merge_tolerance;
    // Canonical multiplier: pin k by the first nonzero integer coordinate
    // (exact), else by the largest real coordinate.
    let int_pivot = generator.int.iter().position(|&m| m != 0);
    let real_pivot = (0..generator.real.len())
        .max_by(|&i, &j| generator.real[i].abs().total_cmp(&generator.real[j].abs()));
    let reduce = |p: &Point| -> (Point, i64) {
        let k = match int_pivot {
            Some(i) => p.int[i].div_euclid(generator.int[i]),
            None => {
                let i = real_pivot.expect("nonzero generator");
                (p.real[i] / generator.real[i]).round() as i64
            }
        };
        (p.mul_add(-k, generator), k)
    };
    let mut reduced: Vec<Atom> = f
        .atoms
        .iter()
        .map(|a| {
            let (point, _) = reduce(&a.point);
            Atom { point, weight: a.weight }
        })
        .collect();
    reduced.sort_by(|x, y| x.point.cmp_canonical(&y.point));
    // Group into classes keyed by the first member; refusing a merge while
    // sitting within tolerance of the previous class is the ambiguous case.
    let mut classes: Vec<(Point, Point, Complex64)> = Vec::new(); // (key, last member, sum)
    for atom in reduced {
        match classes.last_mut() {
            Some((key, last, sum)) if key.close(&atom.point, tol) => {
                *last = atom.point;
                *sum += atom.weight;
            }
            _ => {
                if let Some((_, last, _)) = classes.last() {
                    if last.close(&atom.point, tol) {
                        return Err(Error::AmbiguousGrouping(format!(
                            "quotient classes collide within tolerance near {:?}",
                            atom.point
                        )));
                    }
                }
                classes.push((atom.point.clone(), atom.point, atom.weight));
            }
        }
    }
    PointMassDistribution::from_atoms(
        f.ambient,
        classes.into_iter().map(|(key, _, sum)| (key, sum)).collect(),
    )
}

// ---------------------------------------------------------------------------
// Spectral norm and the flattening polynomials

/// K = 1.05 x (grid-refined max of |fourier|) over the tempered torus plus
/// a nontempered strip of half-width `strip_bound` in every dual coordinate.
/// The real-factor search box spans a full quasi-period 2 pi / gap, where
/// gap is the smallest nonzero coordinate magnitude.
pub fn spectral_norm(f: &PointMassDistribution, strip_bound: f64) -> f64 {
    spectral_norm_scaled(f, strip_bound, 1)
}

pub(crate) fn spectral_norm_scaled(
    f: &PointMassDistribution,
    strip_bound: f64,
    density: usize,
) -> f64 {
    if f.atoms.is_empty() {
        return 0.0;
    }
    let a = f.ambient.real_rank;
    let b = f.ambient.int_rank;
    // (lo, hi, points) per search dimension; tempered first, then strip.
    let mut dims: Vec<(f64, f64, usize)> = Vec::new();
    for j in 0..a {
        let mut gap = f64::INFINITY;
        let mut top = 0.0f64;
        for atom in &f.atoms {
            let x = atom.point.real[j].abs();
            top = top.max(x);
            if x > 1e-12 {
                gap = gap.min(x);
            }
        }
        let box_r = if gap.is_finite() { 2.0 * PI / gap } else { PI };
        let n = (((10.0 * box_r * top).ceil() as usize).max(33) * density).min(4001) | 1;
        dims.push((-box_r, box_r, n));
    }
    for j in 0..b {
        let top = f.atoms.iter().map(|at| at.point.int[j].abs()).max().unwrap_or(0) as f64;
        let n = (((20.0 * PI * top).ceil() as usize).max(33) * density).min(4001) | 1;
        dims.push((0.0, 2.0 * PI, n));
    }
    if strip_bound > 0.0 {
        for _ in 0..a + b {
            dims.push((-strip_bound, strip_bound, 9 * density));
        }
    }
    let eval = |coords: &[f64]| -> f64 {
        let (xi, rest) = coords.split_at(a);
        let (phi, strip) = rest.split_at(b);
        let zeros = vec![0.0; a + b];
        let (eta_r, eta_i) = if strip.is_empty() {
            (&zeros[..a], &zeros[a..])
        } else {
            (&strip[..a], &strip[a..])
        };
        fourier_eval_strip(f, xi, eta_r, phi, eta_i).norm()
    };
    let mut best = grid_max(&dims, &eval);
    // Local refinement: shrink each dimension to ~3 coarse cells around the
    // incumbent and re-grid.
    for _ in 0..6 {
        let shrunk: Vec<(f64, f64, usize)> = dims
            .iter()
            .zip(&best.0)
            .map(|(&(lo, hi, n), &c)| {
                let h = (hi - lo) / (n.max(2) - 1) as f64;
                ((c - 1.5 * h).max(lo), (c + 1.5 * h).min(hi), 9)
            })
            .collect();
        let refined = grid_max(&shrunk, &eval);
        if refined.1 > best.1 {
            best = refined;
        }
        dims = shrunk;
    }
    1.05 * best.1
}

fn grid_max(dims: &[(f64, f64, usize)], eval: &dyn Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let total: usize = dims.iter().map(|d| d.2).product();
    let coords_of = |mut idx: usize| -> Vec<f64> {
        dims.iter()
            .map(|&(lo, hi, n)| {
                let i = idx % n;
                idx /= n;
                if n == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    };
    (0..total)
        .map(|idx| {
            let c = coords_of(idx);
            let v = eval(&c);
            (c, v)
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty grid")
}

/// P_n(x) = 1 - (1 - x^2/K^2)^n evaluated in the convolution algebra:
/// expanding the binomial gives f_n = sum_{j=1}^n (-1)^{j+1} C(n,j) K^{-2j}
/// f^{*2j}, but the alternating terms reach C(n, n/2) before cancelling, so
/// the power is accumulated in the nested form delta_0 - (delta_0 -
/// f*f/K^2)^{*n} instead (same atoms, merged early, no blow-up). The
/// identity fourier(f_n) = P_n(fourier(f)) is verified on sampled
/// characters before returning.
pub fn pn_apply(f: &PointMassDistribution, k_norm: f64, n: u32) -> Result<PointMassDistribution> {
    if n < 1 {
        return Err(Error::Domain("flattening order must be >= 1".into()));
    }
    if !(k_norm > 0.0) {
        return Err(Error::Domain(format!("spectral norm must be positive, got {k_norm}")));
    }
    let delta0 = PointMassDistribution::delta(f.ambient, Point::zero(f.ambient))?;
    let base = delta0.sub(&convolve(f, f)?.scale(Complex64::new(1.0 / (k_norm * k_norm), 0.0)))?;
    let mut power = delta0.clone();
    for _ in 0..n {
        power = convolve(&power, &base)?;
    }
    let out = delta0.sub(&power)?;
    // Spot verification on seeded tempered characters.
    let mut rng = ChaCha8Rng::seed_from_u64(0x506e);
    let scale = out.total_mass().max(1.0);
    for _ in 0..200 {
        let xi: Vec<f64> = (0..f.ambient.real_rank).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let phi: Vec<f64> =
            (0..f.ambient.int_rank).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let direct = fourier_eval(&out, &xi, &phi);
        let x = fourier_eval(f, &xi, &phi);
        let symbol = 1.0 - (1.0 - x * x / (k_norm * k_norm)).powu(n);
        if (direct - symbol).norm() > 1e-9 * scale {
            return Err(Error::StabilityViolation((direct - symbol).norm()));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lattice cancellation residual for sampled profiles

/// max over test points a of |sum_k profile(a + k gamma)|; the sum is finite
/// because the profile vanishes beyond `support_radius`.
pub fn satake_condition_residual<F>(
    profile: F,
    support_radius: f64,
    generator: &Point,
    test_points: &[Point],
) -> Result<f64>
where
    F: Fn(&Point) -> Complex64,
{
    if generator.is_zero() {
        return Err(Error::Domain("lattice generator must be nonzero".into()));
    }
    if !(support_radius > 0.0 && support_radius.is_finite()) {
        return Err(Error::Domain("profile support radius must be positive".into()));
    }
    let step = generator.norm();
    let mut worst = 0.0f64;
    for a in test_points {
        let reach = ((support_radius + a.norm()) / step).ceil() as i64 + 1;
        let total: Complex64 = (-reach..=reach).map(|k| profile(&a.mul_add(k, generator))).sum();
        worst = worst.max(total.norm());
    }
    Ok(worst)
}

/// Atoms mollified in the real coordinates: each atom becomes a C^infty
/// bump of the given width (sup-normalized), integer coordinates stay exact.
/// Default width keeps the bumps of distinct atoms disjoint.
pub struct SmoothedProfile {
    atoms: Vec<(Point, Complex64)>,
    width: f64,
    reach: f64,
}

impl SmoothedProfile {
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn support_radius(&self) -> f64 {
        self.reach
    }

    pub fn eval(&self, p: &Point) -> Complex64 {
        let mut total = Complex64::default();
        'atom: for (q, w) in &self.atoms {
            if q.int != p.int {
                continue;
            }
            let mut bump = 1.0;
            for (x, y) in p.real.iter().zip(&q.real) {
                let t = (x - y) / self.width;
                if t.abs() >= 1.0 {
                    continue 'atom;
                }
                bump *= (1.0 - 1.0 / (1.0 - t * t)).exp();
            }
            total += w * bump;
        }
        total
    }
}

pub fn smoothed_profile(
    f: &PointMassDistribution,
    width: Option<f64>,
) -> Result<SmoothedProfile> {
    if f.ambient.real_rank == 0 {
        return Err(Error::Domain("smoothing needs at least one real coordinate".into()));
    }
    if f.is_zero() {
        return Err(Error::DegenerateInput("cannot smooth the zero distribution".into()));
    }
    let width = match width {
        Some(w) if w > 0.0 => w,
        Some(w) => return Err(Error::Domain(format!("smoothing width must be positive, got {w}"))),
        None => {
            // Half the smallest real separation between atoms in the same
            // integer class keeps the supports disjoint.
            let mut gap = f64::INFINITY;
            for (i, a) in f.atoms.iter().enumerate() {
                for b in &f.atoms[i + 1..] {
                    if a.point.int == b.point.int {
                        let d = a
                            .point
                            .real
                            .iter()
                            .zip(&b.point.real)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0f64, f64::max);
                        gap = gap.min(d);
                    }
                }
            }
            if gap.is_finite() {
                0.5 * gap
            } else {
                1.0
            }
        }
    };
    let reach = f
        .atoms
        .iter()
        .map(|a| a.point.norm())
        .fold(0.0f64, f64::max)
        + width * (f.ambient.real_rank as f64).sqrt();
    Ok(SmoothedProfile {
        atoms: f.atoms.iter().map(|a| (a.point.clone(), a.weight)).collect(),
        width,
        reach,
    })
}

// ---------------------------------------------------------------------------
// Small-value measure

#[derive(Clone, Copy, Debug)]
pub struct SmallValueRow {
    pub epsilon: f64,
    pub ball_radius: f64,
    pub fraction: f64,
    pub stderr: f64,
}

/// Monte Carlo measure of {|F| <= eps} for the almost-periodic sum
/// F(x, theta) = sum_i a_i exp(i<lambda_i, x> + i<m_i, theta>) with x uniform
/// in the ball of radius T and theta uniform on the torus. One sample stream
/// serves every epsilon, so the table is monotone by containment, and the
/// stream is chunk-seeded: results are independent of worker count.
pub fn small_value_table(
    frequencies: &[Point],
    coefficients: &[Complex64],
    epsilons: &[f64],
    ball_radius: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<SmallValueRow>> {
    if frequencies.is_empty() || frequencies.len() != coefficients.len() {
        return Err(Error::Domain("need one coefficient per frequency".into()));
    }
    if coefficients.iter().any(|c| c.norm() == 0.0) {
        return Err(Error::Domain("coefficients must be nonzero".into()));
    }
    let d = frequencies[0].real.len();
    let e = frequencies[0].int.len();
    if frequencies.iter().any(|f| f.real.len() != d || f.int.len() != e) {
        return Err(Error::Domain("frequencies on mismatched ranks".into()));
    }
    for (i, f) in frequencies.iter().enumerate() {
        for g in &frequencies[i + 1..] {
            if f.close(g, 1e-12) {
                return Err(Error::DegenerateInput("frequencies must be distinct".into()));
            }
        }
    }
    if d > 0 && !(ball_radius > 0.0) {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    if epsilons.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Domain("thresholds must be nonnegative".into()));
    }
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (c + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut counts = vec![0u64; epsilons.len()];
            let mut x = vec![0.0; d];
            let mut theta = vec![0.0; e];
            for _ in lo..hi {
                sample_ball(&mut rng, ball_radius, &mut x);
                for t in theta.iter_mut() {
                    *t = rng.gen_range(0.0..2.0 * PI);
                }
                let value: Complex64 = frequencies
                    .iter()
                    .zip(coefficients)
                    .map(|(f, a)| {
                        let mut phase = 0.0;
                        for (l, v) in f.real.iter().zip(&x) {
                            phase += l * v;
                        }
                        for (m, v) in f.int.iter().zip(&theta) {
                            phase += *m as f64 * v;
                        }
                        a * Complex64::new(0.0, phase).exp()
                    })
                    .sum();
                let mag = value.norm();
                for (count, &eps) in counts.iter_mut().zip(epsilons) {
                    if mag <= eps {
                        *count += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; epsilons.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(epsilons
        .iter()
        .zip(counts)
        .map(|(&eps, hits)| {
            let p = hits as f64 / samples as f64;
            SmallValueRow {
                epsilon: eps,
                ball_radius,
                fraction: p,
                stderr: (p * (1.0 - p) / samples as f64).sqrt(),
            }
        })
        .collect())
}

pub fn small_value_measure(
    frequencies: &[Point],
    coefficients: &[Complex64],
    epsilon: f64,
    ball_radius: f64,
    samples: u64,
    seed: u64,
) -> Result<SmallValueRow> {
    Ok(small_value_table(frequencies, coefficients, &[epsilon], ball_radius, samples, seed)?
        .remove(0))
}

fn sample_ball<R: Rng>(rng: &mut R, radius: f64, out: &mut [f64]) {
    match out.len() {
        0 => {}
        1 => out[0] = rng.gen_range(-radius..radius),
        d => {
            let mut norm2 = 0.0;
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
                norm2 += *x * *x;
            }
            let r = radius * rng.gen::<f64>().powf(1.0 / d as f64) / norm2.sqrt().max(1e-300);
            for x in out.iter_mut() {
                *x *= r;
            }
        }
    }
}
