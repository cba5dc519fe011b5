//! Classical distributions, the Rényi family and its conditional and smooth
//! variants, min-entropy splitting, and assorted tail bounds.
//!
//! All logarithms are base 2. `-log 0` is represented by `f64::INFINITY`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{input_err, Error, Result};

/// Largest number of entries a joint distribution may hold.
pub const MAX_ENTRIES: usize = 1 << 20;

const NORM_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Distribution
// ---------------------------------------------------------------------------

/// Finite, possibly sub-normalized probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mass: Vec<f64>,
    alphabet: Option<Vec<String>>,
}

impl Distribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return input_err("empty distribution");
        }
        if mass.len() > MAX_ENTRIES {
            return Err(Error::Capacity(format!("{} entries", mass.len())));
        }
        for &m in &mass {
            if !(m >= 0.0) || !m.is_finite() {
                return input_err(format!("invalid mass {m}"));
            }
        }
        let t: f64 = mass.iter().sum();
        if t > 1.0 + 1e-12 {
            return input_err(format!("total mass {t} exceeds 1"));
        }
        Ok(Self { mass, alphabet: None })
    }

    pub(crate) fn from_unchecked(mass: Vec<f64>) -> Self {
        Self { mass, alphabet: None }
    }

    pub fn with_alphabet(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.mass.len() {
            return input_err("alphabet length differs from mass length");
        }
        self.alphabet = Some(labels);
        Ok(self)
    }

    pub fn uniform(k: usize) -> Self {
        Self::from_unchecked(vec![1.0 / k as f64; k])
    }

    pub fn point(k: usize, i: usize) -> Self {
        let mut m = vec![0.0; k];
        m[i] = 1.0;
        Self::from_unchecked(m)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn alphabet(&self) -> Option<&[String]> {
        self.alphabet.as_deref()
    }

    /// Index of a symbol in the alphabet.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.alphabet {
            Some(a) => a.iter().position(|s| s == label),
            None => label.parse().ok().filter(|&i: &usize| i < self.mass.len()),
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORM_TOL
    }

    pub fn max(&self) -> f64 {
        self.mass.iter().cloned().fold(0.0, f64::max)
    }

    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|&&m| m > 0.0).count()
    }

    pub fn normalize(&self) -> Result<Self> {
        let t = self.total();
        if t <= 0.0 {
            return input_err("cannot normalize zero mass");
        }
        Ok(Self { mass: self.mass.iter().map(|m| m / t).collect(), alphabet: self.alphabet.clone() })
    }

    /// Total variation distance (half the L1 distance).
    pub fn distance(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return input_err("length mismatch");
        }
        Ok(0.5 * self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    alphabet: Vec<String>,
    mass: Vec<f64>,
    normalized: bool,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let alphabet = match &self.alphabet {
            Some(a) => a.clone(),
            None => (0..self.mass.len()).map(|i| i.to_string()).collect(),
        };
        DistributionRepr { alphabet, mass: self.mass.clone(), normalized: self.is_normalized() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DistributionRepr::deserialize(d)?;
        let dist = Distribution::new(r.mass).map_err(serde::de::Error::custom)?;
        if r.normalized && !dist.is_normalized() {
            return Err(serde::de::Error::custom("flagged normalized but total mass differs from 1"));
        }
        dist.with_alphabet(r.alphabet).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Joint distributions
// ---------------------------------------------------------------------------

/// Dense joint distribution over a product alphabet, row-major with the
/// last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    dims: Vec<usize>,
    mass: Vec<f64>,
}

impl JointDistribution {
    pub fn new(dims: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if dims.is_empty() || size == 0 {
            return input_err("empty alphabet");
        }
        if size > MAX_ENTRIES {
            return Err(Error::Capacity(format!("{size} joint entries")));
        }
        if mass.len() != size {
            return input_err(format!("mass has {} entries, dims need {size}", mass.len()));
        }
        Distribution::new(mass.clone())?;
        Ok(Self { dims, mass })
    }

    pub(crate) fn from_unchecked(dims: Vec<usize>, mass: Vec<f64>) -> Self {
        Self { dims, mass }
    }

    /// Joint over X x Y from a closure.
    pub fn from_fn(dims: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let size: usize = dims.iter().product();
        let mass = (0..size).map(|i| f(&crate::qstate::split_index(i, &dims))).collect();
        Self::new(dims, mass)
    }

    /// X x Y joint with Y trivial.
    pub fn from_single(p: &Distribution) -> Self {
        Self { dims: vec![p.len(), 1], mass: p.mass().to_vec() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.mass[crate::qstate::join_index(idx, &self.dims)]
    }

    pub fn flatten(&self) -> Distribution {
        Distribution::from_unchecked(self.mass.clone())
    }

    /// Marginal over the listed axes, in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointDistribution> {
        for &a in axes {
            if a >= self.dims.len() {
                return input_err(format!("axis {a} out of range"));
            }
        }
        let nd: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let size: usize = nd.iter().product();
        let mut out = vec![0.0; size.max(1)];
        for (i, &m) in self.mass.iter().enumerate() {
            let d = crate::qstate::split_index(i, &self.dims);
            let k: Vec<usize> = axes.iter().map(|&a| d[a]).collect();
            out[crate::qstate::join_index(&k, &nd)] += m;
        }
        let dims = if nd.is_empty() { vec![1] } else { nd };
        Ok(Self { dims, mass: out })
    }

    /// Regroups the axes into a two-dimensional X x Y joint.
    pub fn group(&self, x_axes: &[usize], y_axes: &[usize]) -> Result<JointDistribution> {
        let mut all = x_axes.to_vec();
        all.extend_from_slice(y_axes);
        let m = self.marginal(&all)?;
        let dx: usize = x_axes.iter().map(|&a| self.dims[a]).product();
        let dy: usize = y_axes.iter().map(|&a| self.dims[a]).product();
        Ok(Self { dims: vec![dx, dy.max(1)], mass: m.mass })
    }

    fn require_2d(&self) -> Result<(usize, usize)> {
        if self.dims.len() != 2 {
            return input_err("expected a two-dimensional X x Y joint");
        }
        Ok((self.dims[0], self.dims[1]))
    }

    /// P_Y for a two-dimensional joint.
    pub fn y_marginal(&self) -> Result<Vec<f64>> {
        let (dx, dy) = self.require_2d()?;
        let mut py = vec![0.0; dy];
        for x in 0..dx {
            for (y, v) in py.iter_mut().enumerate() {
                *v += self.mass[x * dy + y];
            }
        }
        Ok(py)
    }

    pub fn x_marginal(&self) -> Result<Vec<f64>> {
        let (dx, dy) = self.require_2d()?;
        Ok((0..dx).map(|x| self.mass[x * dy..(x + 1) * dy].iter().sum()).collect())
    }

    /// P_{X|Y=y}; zero marginal is an error.
    pub fn conditional(&self, y: usize) -> Result<Distribution> {
        let (dx, dy) = self.require_2d()?;
        if y >= dy {
            return input_err(format!("outcome {y} out of range"));
        }
        let col: Vec<f64> = (0..dx).map(|x| self.mass[x * dy + y]).collect();
        let py: f64 = col.iter().sum();
        if py <= 0.0 {
            return Err(Error::Precondition(format!("P_Y({y}) = 0")));
        }
        Ok(Distribution::from_unchecked(col.iter().map(|v| v / py).collect()))
    }
}

// ---------------------------------------------------------------------------
// Rényi entropies
// ---------------------------------------------------------------------------

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        return input_err(format!("alpha = {alpha}"));
    }
    Ok(())
}

/// Rényi entropy of an arbitrary non-negative vector (no normalization check).
fn renyi_raw(p: &[f64], alpha: f64) -> f64 {
    if alpha == 0.0 {
        let s = p.iter().filter(|&&v| v > 0.0).count();
        return (s as f64).log2();
    }
    if alpha == 1.0 {
        return -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>();
    }
    if alpha.is_infinite() {
        let m = p.iter().cloned().fold(0.0, f64::max);
        return -m.log2();
    }
    let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(alpha)).sum();
    s.log2() / (1.0 - alpha)
}

pub fn renyi_entropy(p: &Distribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !p.is_normalized() {
        return input_err(format!("distribution has total mass {}", p.total()));
    }
    Ok(renyi_raw(p.mass(), alpha))
}

pub fn shannon_entropy(p: &Distribution) -> f64 {
    renyi_raw(p.mass(), 1.0)
}

pub fn min_entropy(p: &Distribution) -> f64 {
    -p.max().log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CondMode {
    WorstCase,
    Average,
}

/// Conditional Rényi entropy of a two-dimensional joint over X x Y.
///
/// Worst-case mode evaluates `(1/(1-a)) log max_y sum_x P(x|y)^a` (so a
/// minimum over y for a > 1 and a maximum for a < 1); at a = 1 it is the
/// Shannon conditional entropy. Average mode is defined for 1 < a <= inf.
pub fn conditional_renyi(p: &JointDistribution, alpha: f64, mode: CondMode) -> Result<f64> {
    check_alpha(alpha)?;
    let (dx, dy) = p.require_2d()?;
    let py = p.y_marginal()?;
    let total: f64 = py.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return input_err(format!("joint has total mass {total}"));
    }
    let col = |y: usize| -> Vec<f64> { (0..dx).map(|x| p.mass[x * dy + y] / py[y]).collect() };
    let ys: Vec<usize> = (0..dy).filter(|&y| py[y] > 0.0).collect();
    match mode {
        CondMode::WorstCase => {
            if alpha == 1.0 {
                return Ok(ys.iter().map(|&y| py[y] * renyi_raw(&col(y), 1.0)).sum());
            }
            let per_y = ys.iter().map(|&y| renyi_raw(&col(y), alpha));
            if alpha > 1.0 {
                Ok(per_y.fold(f64::INFINITY, f64::min))
            } else {
                Ok(per_y.fold(f64::NEG_INFINITY, f64::max))
            }
        }
        CondMode::Average => {
            if alpha <= 1.0 {
                return input_err("average conditional entropy needs alpha > 1");
            }
            let s: f64 = if alpha.is_infinite() {
                ys.iter().map(|&y| py[y] * col(y).iter().cloned().fold(0.0, f64::max)).sum()
            } else {
                ys.iter()
                    .map(|&y| {
                        let pi: f64 = col(y).iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum();
                        py[y] * pi.powf(1.0 / (alpha - 1.0))
                    })
                    .sum()
            };
            Ok(-s.log2())
        }
    }
}

/// Probability mass of the y with `H_a(X|Y=y) < avg - kappa`, where `avg`
/// is the average conditional entropy. The companion bound is `2^-kappa`.
pub fn average_lemma_mass(p: &JointDistribution, alpha: f64, kappa: f64) -> Result<(f64, f64)> {
    let avg = conditional_renyi(p, alpha, CondMode::Average)?;
    let py = p.y_marginal()?;
    let mut bad = 0.0;
    for (y, &w) in py.iter().enumerate() {
        if w > 0.0 {
            let h = renyi_raw(p.conditional(y)?.mass(), alpha);
            if h < avg - kappa {
                bad += w;
            }
        }
    }
    Ok((bad, 2f64.powf(-kappa)))
}

// ---------------------------------------------------------------------------
// Smooth entropies
// ---------------------------------------------------------------------------

/// Event witnessing a smoothing: per-entry retained mass plus the removed total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingEvent {
    pub retained_mass: Vec<f64>,
    pub epsilon: f64,
}

impl SmoothingEvent {
    pub fn probability(&self) -> f64 {
        self.retained_mass.iter().sum()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return input_err(format!("epsilon = {eps} outside [0,1)"));
    }
    Ok(())
}

/// Smooth conditional min-entropy by water-filling: every P(x,y) is capped at
/// `c * P_Y(y)` for the smallest ceiling `c` whose removed mass is at most ε.
/// P_Y is the marginal of the input, so sub-normalized inputs are accepted.
pub fn smooth_min_entropy(p: &JointDistribution, eps: f64) -> Result<(f64, SmoothingEvent)> {
    check_eps(eps)?;
    let (dx, dy) = p.require_2d()?;
    let py = p.y_marginal()?;
    let mut atoms: Vec<(usize, f64)> = (0..dx * dy)
        .filter(|&i| p.mass[i] > 0.0)
        .map(|i| (i, p.mass[i] / py[i % dy]))
        .collect();
    // descending ratio, lowest index first on ties
    atoms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let total = p.total();
    if atoms.is_empty() || eps >= total {
        return Ok((f64::INFINITY, SmoothingEvent { retained_mass: vec![0.0; dx * dy], epsilon: total }));
    }
    let ceiling = if eps == 0.0 {
        atoms[0].1
    } else {
        let mut s = 0.0;
        let mut w = 0.0;
        let mut c = 0.0;
        for k in 0..atoms.len() {
            let i = atoms[k].0;
            s += p.mass[i];
            w += py[i % dy];
            c = (s - eps) / w;
            let next = if k + 1 < atoms.len() { atoms[k + 1].1 } else { 0.0 };
            if c >= next {
                break;
            }
        }
        c
    };
    if ceiling <= 0.0 {
        return Ok((f64::INFINITY, SmoothingEvent { retained_mass: vec![0.0; dx * dy], epsilon: total }));
    }
    let retained: Vec<f64> = (0..dx * dy).map(|i| p.mass[i].min(ceiling * py[i % dy])).collect();
    let removed = total - retained.iter().sum::<f64>();
    Ok((-ceiling.log2(), SmoothingEvent { retained_mass: retained, epsilon: removed }))
}

/// Smooth conditional max-entropy: the smallest k such that removing, for
/// every y, all but the k largest atoms costs at most ε in total.
pub fn smooth_max_entropy(p: &JointDistribution, eps: f64) -> Result<(f64, SmoothingEvent)> {
    check_eps(eps)?;
    let (dx, dy) = p.require_2d()?;
    // per y, support indices sorted by descending mass, lowest index first on ties
    let cols: Vec<Vec<usize>> = (0..dy)
        .map(|y| {
            let mut xs: Vec<usize> = (0..dx).filter(|&x| p.mass[x * dy + y] > 0.0).collect();
            xs.sort_by(|&a, &b| p.mass[b * dy + y].partial_cmp(&p.mass[a * dy + y]).unwrap().then(a.cmp(&b)));
            xs
        })
        .collect();
    let kmax = cols.iter().map(|c| c.len()).max().unwrap_or(0);
    let cost = |k: usize| -> f64 {
        cols.iter()
            .enumerate()
            .map(|(y, xs)| xs.iter().skip(k).map(|&x| p.mass[x * dy + y]).sum::<f64>())
            .sum()
    };
    let mut k = kmax;
    while k > 0 && cost(k - 1) <= eps {
        k -= 1;
    }
    let mut retained = vec![0.0; dx * dy];
    for (y, xs) in cols.iter().enumerate() {
        for &x in xs.iter().take(k) {
            retained[x * dy + y] = p.mass[x * dy + y];
        }
    }
    let removed = p.total() - retained.iter().sum::<f64>();
    let value = if k == 0 { f64::NEG_INFINITY } else { (k as f64).log2() };
    Ok((value, SmoothingEvent { retained_mass: retained, epsilon: removed }))
}

/// `H^{ε+ε'}_∞(X|Y) - (H^ε_∞(XY) - H_0(Y) - log(1/ε'))`; positive by the chain rule.
pub fn chain_rule_slack(p: &JointDistribution, eps: f64, eps_prime: f64) -> Result<f64> {
    if eps_prime <= 0.0 {
        return input_err("epsilon' must be positive");
    }
    let (lhs, _) = smooth_min_entropy(p, eps + eps_prime)?;
    let joint = JointDistribution::from_single(&p.flatten());
    let (hxy, _) = smooth_min_entropy(&joint, eps)?;
    let h0y = renyi_raw(&p.y_marginal()?, 0.0);
    Ok(lhs - (hxy - h0y - (1.0 / eps_prime).log2()))
}

/// Outcome of converting a smoothing event into per-y ordinary min-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinaryEvent {
    /// Retained mass of E' per (x, y).
    pub retained_mass: Vec<f64>,
    pub probability: f64,
    /// H_∞(X | E', Y=y) for every y kept by E'.
    pub per_y_min_entropy: Vec<Option<f64>>,
}

/// Keeps the part of `event` on those y with `P_{E|Y}(y) >= 1/2`.
pub fn smooth_to_ordinary(p: &JointDistribution, event: &SmoothingEvent) -> Result<OrdinaryEvent> {
    let (dx, dy) = p.require_2d()?;
    if event.retained_mass.len() != dx * dy {
        return input_err("event shape differs from the joint");
    }
    let py = p.y_marginal()?;
    let mut retained = vec![0.0; dx * dy];
    let mut per_y = vec![None; dy];
    for y in 0..dy {
        if py[y] <= 0.0 {
            continue;
        }
        let ey: f64 = (0..dx).map(|x| event.retained_mass[x * dy + y]).sum();
        if ey / py[y] >= 0.5 && ey > 0.0 {
            let mut mx: f64 = 0.0;
            for x in 0..dx {
                retained[x * dy + y] = event.retained_mass[x * dy + y];
                mx = mx.max(retained[x * dy + y]);
            }
            per_y[y] = Some(-(mx / ey).log2());
        }
    }
    let probability = retained.iter().sum();
    Ok(OrdinaryEvent { retained_mass: retained, probability, per_y_min_entropy: per_y })
}

// ---------------------------------------------------------------------------
// Min-entropy splitting
// ---------------------------------------------------------------------------

/// Result of splitting a pair (X0, X1) with the pointer C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub alpha: f64,
    /// C = 1 exactly for the x1 flagged here.
    pub heavy_x1: Vec<bool>,
    /// P_{X_{1-C} C}(x0, 1), indexed by x0.
    pub joint_c1: Vec<f64>,
    /// P_{X_{1-C} C}(x1, 0), indexed by x1.
    pub joint_c0: Vec<f64>,
    /// Pr[C = 0], Pr[C = 1].
    pub pointer: [f64; 2],
    /// H_∞(X_{1-C} C) achieved by the construction.
    pub achieved: f64,
    /// Whether every entry of P_{X_{1-C} C} is at most 2^{-alpha/2}.
    pub holds: bool,
}

/// Constructs C with `C = 1` iff `P_{X1}(x1) >= 2^{-alpha/2}` on a joint over
/// X0 x X1 (possibly sub-normalized) and reports `H_∞(X_{1-C} C)`.
pub fn split_min_entropy(p: &JointDistribution, alpha: f64) -> Result<Splitting> {
    let (d0, d1) = p.require_2d()?;
    let hmax = -p.flatten().max().log2();
    if hmax < alpha - 1e-12 {
        return Err(Error::Precondition(format!("H_inf(X0X1) = {hmax} < alpha = {alpha}")));
    }
    Ok(split_unchecked(&p.mass, d0, d1, alpha))
}

pub(crate) fn split_unchecked(mass: &[f64], d0: usize, d1: usize, alpha: f64) -> Splitting {
    let thresh = 2f64.powf(-alpha / 2.0);
    let px1: Vec<f64> = (0..d1).map(|x1| (0..d0).map(|x0| mass[x0 * d1 + x1]).sum()).collect();
    let heavy: Vec<bool> = px1.iter().map(|&v| v >= thresh).collect();
    let joint_c1: Vec<f64> =
        (0..d0).map(|x0| (0..d1).filter(|&x1| heavy[x1]).map(|x1| mass[x0 * d1 + x1]).sum()).collect();
    let joint_c0: Vec<f64> = (0..d1).map(|x1| if heavy[x1] { 0.0 } else { px1[x1] }).collect();
    let mx = joint_c1.iter().chain(&joint_c0).cloned().fold(0.0, f64::max);
    let pointer = [joint_c0.iter().sum(), joint_c1.iter().sum()];
    Splitting { alpha, heavy_x1: heavy, joint_c1, joint_c0, pointer, achieved: -mx.log2(), holds: mx <= thresh }
}

// ---------------------------------------------------------------------------
// Scalar utilities
// ---------------------------------------------------------------------------

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return input_err(format!("p = {p} outside [0,1]"));
    }
    Ok(h2(p))
}

pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// The p in [0, 1/2] with h(p) = h, by bisection.
pub fn inverse_binary_entropy(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return input_err(format!("h = {h} outside [0,1]"));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HammingBall {
    pub exact: u128,
    /// 2^{n h(k/n)}, valid as an upper bound for k <= n/2.
    pub bound: f64,
}

/// Number of n-bit strings within Hamming distance k of a fixed string.
pub fn hamming_ball_size(n: u32, k: u32) -> Result<HammingBall> {
    if k > n || n > 127 {
        return input_err(format!("ball ({n},{k}) out of range"));
    }
    let mut exact: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=k {
        exact += binom;
        binom = binom * (n - i) as u128 / (i + 1) as u128;
    }
    let bound = if 2 * k <= n { 2f64.powf(n as f64 * h2(k as f64 / n as f64)) } else { 2f64.powi(n as i32) };
    Ok(HammingBall { exact, bound })
}

/// Azuma tail exp(-λ²n / (2c²)).
pub fn azuma_tail(c: f64, n: usize, lambda: f64) -> Result<f64> {
    if c <= 0.0 || lambda < 0.0 {
        return input_err("need c > 0 and lambda >= 0");
    }
    Ok((-lambda * lambda * n as f64 / (2.0 * c * c)).exp())
}

/// Empirical Pr[sum R_i >= λn] for a fair ±1 walk, with standard error.
pub fn azuma_fair_walk_tail<R: Rng + ?Sized>(n: usize, lambda: f64, trials: usize, rng: &mut R) -> (f64, f64) {
    let mut hits = 0usize;
    let target = lambda * n as f64;
    for _ in 0..trials {
        let mut s: i64 = 0;
        let mut left = n;
        while left > 0 {
            let take = left.min(64);
            let w: u64 = rng.gen();
            let ones = (w & if take == 64 { u64::MAX } else { (1u64 << take) - 1 }).count_ones() as i64;
            s += 2 * ones - take as i64;
            left -= take;
        }
        if s as f64 >= target {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Both sides of Fano's inequality for the guess map `guess[y]`.
pub fn fano_bound(p: &JointDistribution, guess: &[usize]) -> Result<(f64, f64)> {
    let (dx, dy) = p.require_2d()?;
    if guess.len() != dy || guess.iter().any(|&g| g >= dx) {
        return input_err("guess must map every y into X");
    }
    let h = conditional_renyi(p, 1.0, CondMode::WorstCase)?;
    let pe: f64 = 1.0 - (0..dy).map(|y| p.mass[guess[y] * dy + y]).sum::<f64>();
    let pe = pe.clamp(0.0, 1.0);
    let bound = h2(pe) + if dx > 1 { pe * ((dx - 1) as f64).log2() } else { 0.0 };
    Ok((h, bound))
}

/// Random normalized vector with exponential weights (flat Dirichlet).
pub fn random_distribution<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Distribution {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let t: f64 = w.iter().sum();
    Distribution::from_unchecked(w.into_iter().map(|v| v / t).collect())
}

pub fn random_joint<R: Rng + ?Sized>(dx: usize, dy: usize, rng: &mut R) -> JointDistribution {
    JointDistribution::from_unchecked(vec![dx, dy], random_distribution(dx * dy, rng).into_mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn renyi_examples() {
        let u = Distribution::uniform(8);
        for a in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            assert!(close(renyi_entropy(&u, a).unwrap(), 3.0));
            assert!(close(renyi_entropy(&Distribution::point(5, 2), a).unwrap(), 0.0));
        }
        let p = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(close(renyi_entropy(&p, f64::INFINITY).unwrap(), 1.0));
        assert!(close(renyi_entropy(&p, 2.0).unwrap(), -(3.0f64 / 8.0).log2()));
        assert!(close(renyi_entropy(&p, 1.0).unwrap(), 1.5));
        assert!(close(renyi_entropy(&p, 0.0).unwrap(), 3f64.log2()));
        assert!(renyi_entropy(&p, -1.0).is_err());
    }

    #[test]
    fn conditional_examples() {
        let px = [0.5, 0.3, 0.2];
        let py = [0.6, 0.4];
        let ind = JointDistribution::from_fn(vec![3, 2], |i| px[i[0]] * py[i[1]]).unwrap();
        let d = Distribution::new(px.to_vec()).unwrap();
        for a in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert!(close(
                conditional_renyi(&ind, a, CondMode::WorstCase).unwrap(),
                renyi_entropy(&d, a).unwrap()
            ));
        }
        let same = JointDistribution::from_fn(vec![3, 3], |i| if i[0] == i[1] { px[i[0]] } else { 0.0 }).unwrap();
        for a in [0.0, 1.0, 2.0, f64::INFINITY] {
            assert!(close(conditional_renyi(&same, a, CondMode::WorstCase).unwrap(), 0.0));
        }
        assert!(close(conditional_renyi(&same, 2.0, CondMode::Average).unwrap(), 0.0));
        assert!(conditional_renyi(&same, 1.0, CondMode::Average).is_err());
    }

    #[test]
    fn conditioning_on_zero_is_error() {
        let j = JointDistribution::new(vec![2, 2], vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        assert!(j.conditional(1).is_err());
    }

    #[test]
    fn smooth_min_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = random_joint(4, 4, &mut rng);
        let (h, ev) = smooth_min_entropy(&j, 0.0).unwrap();
        assert_eq!(h, conditional_renyi(&j, f64::INFINITY, CondMode::WorstCase).unwrap());
        assert_eq!(ev.epsilon, 0.0);
        let pt = JointDistribution::from_single(&Distribution::point(4, 0));
        let (h, ev) = smooth_min_entropy(&pt, 0.5).unwrap();
        assert!(close(h, 1.0));
        assert!(close(ev.epsilon, 0.5));
    }

    #[test]
    fn smooth_max_examples() {
        let u = JointDistribution::from_single(&Distribution::uniform(4));
        assert!(close(smooth_max_entropy(&u, 0.0).unwrap().0, 2.0));
        assert!(close(smooth_max_entropy(&u, 0.3).unwrap().0, 3f64.log2()));
        assert!(close(smooth_max_entropy(&u, 0.24).unwrap().0, 2.0));
        assert!(close(smooth_max_entropy(&u, 0.25).unwrap().0, 3f64.log2()));
    }

    #[test]
    fn chain_rule_examples() {
        let u = JointDistribution::from_fn(vec![4, 4], |_| 1.0 / 16.0).unwrap();
        let s = chain_rule_slack(&u, 0.01, 0.01).unwrap();
        assert!(s > (1.0f64 / 0.01).log2() - 0.1);
        let d = JointDistribution::from_fn(vec![4, 4], |i| if i[0] == i[1] { 0.25 } else { 0.0 }).unwrap();
        assert!(chain_rule_slack(&d, 0.01, 0.01).unwrap() > 0.0);
        let c = JointDistribution::from_single(&Distribution::uniform(8));
        assert!(chain_rule_slack(&c, 0.05, 0.05).unwrap() > 0.0);
    }

    #[test]
    fn splitting_examples() {
        let u = JointDistribution::from_fn(vec![8, 8], |_| 1.0 / 64.0).unwrap();
        let s = split_min_entropy(&u, 6.0).unwrap();
        assert!(s.holds && s.achieved >= 3.0);
        let c = JointDistribution::from_fn(vec![16, 2], |i| if i[1] == 0 { 1.0 / 16.0 } else { 0.0 }).unwrap();
        let s = split_min_entropy(&c, 4.0).unwrap();
        assert!(s.heavy_x1[0]);
        assert!(close(s.pointer[1], 1.0));
        assert!(close(s.achieved, 4.0));
        assert!(split_min_entropy(&c, 5.0).is_err());
    }

    #[test]
    fn binary_entropy_examples() {
        assert!(close(binary_entropy(0.5).unwrap(), 1.0));
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((inverse_binary_entropy(0.5).unwrap() - 0.1100).abs() < 5e-4);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_ball_size(9, 0).unwrap().exact, 1);
        assert_eq!(hamming_ball_size(9, 9).unwrap().exact, 512);
        let b = hamming_ball_size(10, 2).unwrap();
        assert_eq!(b.exact, 56);
        assert!((b.bound - 149.01).abs() < 0.01);
    }

    #[test]
    fn azuma_examples() {
        assert!(close(azuma_tail(1.0, 100, 0.0).unwrap(), 1.0));
        assert!(close(azuma_tail(1.0, 100, 0.5).unwrap(), (-12.5f64).exp()));
    }

    #[test]
    fn fano_examples() {
        let perfect = JointDistribution::from_fn(vec![2, 2], |i| if i[0] == i[1] { 0.5 } else { 0.0 }).unwrap();
        let (h, b) = fano_bound(&perfect, &[0, 1]).unwrap();
        assert!(close(h, 0.0) && close(b, 0.0));
        let ind = JointDistribution::from_fn(vec![2, 2], |_| 0.25).unwrap();
        let (h, b) = fano_bound(&ind, &[0, 0]).unwrap();
        assert!(close(h, 1.0) && close(b, 1.0));
    }

    #[test]
    fn distribution_json_round_trip() {
        let d = Distribution::new(vec![0.25, 0.75]).unwrap().with_alphabet(vec!["a".into(), "b".into()]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"normalized\":true"));
        let e: Distribution = serde_json::from_str(&s).unwrap();
        assert_eq!(d, e);
        assert_eq!(e.index_of("b"), Some(1));
    }
}
