//! Sender-security of randomized string OT in terms of non-degenerate linear
//! functions, the pointer construction, the 1-of-n condition, and the OT from
//! universal-OT reduction harness.
//!
//! Distributions over `S0 x S1 x W` are stored flat with index
//! `(s0 * 2^l + s1) * |W| + w`; strings are read as integers with bit 0 the
//! most significant.

use std::fmt::Debug;

use nalgebra::{Matrix4, Vector4};
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::cqstate::{self, CqState, FamilyAveraging};
use crate::entropy::{self, CondMode, JointDistribution};
use crate::hashing::{self, HashFamily, Ndlf};
use crate::{input_err, Error, Result};

pub const MAX_ELL: usize = 8;
pub const MAX_W: usize = 64;

/// Number type usable for exact (rational) and floating-point evaluation.
pub trait Prob: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive {}
impl<T: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive> Prob for T {}

pub type Rational = Ratio<i64>;

fn two<T: Prob>() -> T {
    T::one() + T::one()
}

fn half<T: Prob>() -> T {
    T::one() / two()
}

fn tol<T: Prob>() -> T {
    T::from_f64(1e-9).unwrap_or_else(T::zero)
}

fn check_capacity(ell: usize, w_card: usize) -> Result<()> {
    if ell == 0 || w_card == 0 {
        return input_err("ell and |W| must be positive");
    }
    if ell > MAX_ELL || w_card > MAX_W {
        return Err(Error::Capacity(format!("ell = {ell}, |W| = {w_card} (limits {MAX_ELL}, {MAX_W})")));
    }
    Ok(())
}

/// In-place Walsh-Hadamard transform over the last `bits` index bits.
fn wht<T: Prob>(v: &mut [T]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let a = v[j].clone();
                let b = v[j + h].clone();
                v[j] = a.clone() + b.clone();
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

// ---------------------------------------------------------------------------
// Output distributions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtOutputDistribution<T = f64> {
    ell: usize,
    w_card: usize,
    mass: Vec<T>,
}

impl<T: Prob> OtOutputDistribution<T> {
    pub fn new(ell: usize, w_card: usize, mass: Vec<T>) -> Result<Self> {
        check_capacity(ell, w_card)?;
        let l = 1usize << ell;
        if mass.len() != l * l * w_card {
            return input_err(format!("expected {} entries, got {}", l * l * w_card, mass.len()));
        }
        if mass.iter().any(|v| *v < T::zero()) {
            return input_err("negative probability");
        }
        let total = mass.iter().cloned().fold(T::zero(), |a, b| a + b);
        if (total - T::one()).abs() > tol() {
            return input_err("distribution is not normalized");
        }
        Ok(Self { ell, w_card, mass })
    }

    pub fn from_fn(ell: usize, w_card: usize, f: impl Fn(usize, usize, usize) -> T) -> Result<Self> {
        check_capacity(ell, w_card)?;
        let l = 1usize << ell;
        let mut mass = Vec::with_capacity(l * l * w_card);
        for s0 in 0..l {
            for s1 in 0..l {
                for w in 0..w_card {
                    mass.push(f(s0, s1, w));
                }
            }
        }
        Self::new(ell, w_card, mass)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn strings(&self) -> usize {
        1 << self.ell
    }

    pub fn w_card(&self) -> usize {
        self.w_card
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    #[inline]
    pub fn get(&self, s0: usize, s1: usize, w: usize) -> T {
        self.mass[(s0 * self.strings() + s1) * self.w_card + w].clone()
    }

    pub fn p_w(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.w_card];
        for (i, v) in self.mass.iter().enumerate() {
            out[i % self.w_card] = out[i % self.w_card].clone() + v.clone();
        }
        out
    }

    /// Distance of `(beta(S0, S1), W)` from uniform times `P_W` for an
    /// arbitrary table `beta[s0 * 2^l + s1]`.
    pub fn beta_distance(&self, beta: &[u8]) -> Result<T> {
        let l = self.strings();
        if beta.len() != l * l {
            return input_err("beta table has the wrong size");
        }
        let mut d = vec![T::zero(); self.w_card];
        for (cell, &b) in beta.iter().enumerate() {
            for (w, dw) in d.iter_mut().enumerate() {
                let v = self.mass[cell * self.w_card + w].clone();
                *dw = if b == 0 { dw.clone() + v } else { dw.clone() - v };
            }
        }
        Ok(half::<T>() * d.into_iter().fold(T::zero(), |a, b| a + b.abs()))
    }

    /// Distance for every pair (a0, a1), including degenerate ones, indexed
    /// by `a0 * 2^l + a1`.
    pub fn linear_distances(&self) -> Vec<T> {
        let l = self.strings();
        let mut acc = vec![T::zero(); l * l];
        let mut col = vec![T::zero(); l * l];
        for w in 0..self.w_card {
            for (cell, c) in col.iter_mut().enumerate() {
                *c = self.mass[cell * self.w_card + w].clone();
            }
            wht(&mut col);
            for (a, c) in acc.iter_mut().zip(&col) {
                *a = a.clone() + c.abs();
            }
        }
        acc.into_iter().map(|v| half::<T>() * v).collect()
    }

    pub fn to_f64(&self) -> OtOutputDistribution<f64>
    where
        T: ToPrimitive,
    {
        OtOutputDistribution {
            ell: self.ell,
            w_card: self.w_card,
            mass: self.mass.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }
}

impl OtOutputDistribution<f64> {
    /// From a joint with dimensions `[2^l, 2^l, |W|]`.
    pub fn from_joint(joint: &JointDistribution) -> Result<Self> {
        let d = joint.dims();
        if d.len() != 3 || d[0] != d[1] || !d[0].is_power_of_two() || d[0] < 2 {
            return input_err("expected dimensions [2^l, 2^l, |W|]");
        }
        Self::new(d[0].trailing_zeros() as usize, d[2], joint.mass().to_vec())
    }

    pub fn to_joint(&self) -> JointDistribution {
        let l = self.strings();
        JointDistribution::from_unchecked(vec![l, l, self.w_card], self.mass.clone())
    }
}

/// `δ(P_{(B0 xor B1) W}, unif · P_W)` for bit OT.
pub fn xor_uniformity<T: Prob>(dist: &OtOutputDistribution<T>) -> Result<T> {
    if dist.ell != 1 {
        return input_err("xor_uniformity needs l = 1");
    }
    dist.beta_distance(&Ndlf::xor().table())
}

/// Largest distance over all NDLFs and the first NDLF attaining it.
pub fn ndlf_security_distance<T: Prob>(dist: &OtOutputDistribution<T>) -> Result<(T, Ndlf)> {
    let l = dist.strings();
    let all = dist.linear_distances();
    let mut best: Option<(T, Ndlf)> = None;
    for a0 in 1..l {
        for a1 in 1..l {
            let v = all[a0 * l + a1].clone();
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                best = Some((v, Ndlf::new(dist.ell, a0 as u32, a1 as u32)?));
            }
        }
    }
    best.ok_or_else(|| Error::Input("no NDLF".into()))
}

// ---------------------------------------------------------------------------
// Pointer extensions
// ---------------------------------------------------------------------------

/// Joint over `S0 x S1 x D x W`, index `((s0 * 2^l + s1) * 2 + d) * |W| + w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerExtension<T = f64> {
    ell: usize,
    w_card: usize,
    mass: Vec<T>,
    pub epsilon: T,
    /// Total absolute correction applied to the unrepaired extension.
    pub correction: T,
}

impl<T: Prob> PointerExtension<T> {
    /// Arbitrary extension; `epsilon` is computed.
    pub fn new(ell: usize, w_card: usize, mass: Vec<T>) -> Result<Self> {
        check_capacity(ell, w_card)?;
        let l = 1usize << ell;
        if mass.len() != l * l * 2 * w_card {
            return input_err("extension has the wrong size");
        }
        if mass.iter().any(|v| *v < T::zero()) {
            return input_err("negative probability");
        }
        let mut ext = Self { ell, w_card, mass, epsilon: T::zero(), correction: T::zero() };
        ext.epsilon = ext.sender_security_distance();
        Ok(ext)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn w_card(&self) -> usize {
        self.w_card
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    #[inline]
    pub fn get(&self, s0: usize, s1: usize, d: usize, w: usize) -> T {
        let l = 1usize << self.ell;
        self.mass[((s0 * l + s1) * 2 + d) * self.w_card + w].clone()
    }

    pub fn marginal(&self) -> OtOutputDistribution<T> {
        let l = 1usize << self.ell;
        let mut mass = Vec::with_capacity(l * l * self.w_card);
        for s0 in 0..l {
            for s1 in 0..l {
                for w in 0..self.w_card {
                    mass.push(self.get(s0, s1, 0, w) + self.get(s0, s1, 1, w));
                }
            }
        }
        OtOutputDistribution { ell: self.ell, w_card: self.w_card, mass }
    }

    /// `δ(P_{S_{1-D} S_D D W}, unif · P_{S_D D W})`.
    pub fn sender_security_distance(&self) -> T {
        let l = 1usize << self.ell;
        let lt = T::from_usize(l).unwrap_or_else(T::one);
        let mut total = T::zero();
        for w in 0..self.w_card {
            for d in 0..2 {
                for seen in 0..l {
                    let cell = |other: usize| if d == 0 { self.get(seen, other, 0, w) } else { self.get(other, seen, 1, w) };
                    let avg = (0..l).fold(T::zero(), |a, o| a + cell(o)) / lt.clone();
                    for other in 0..l {
                        total = total + (cell(other) - avg.clone()).abs();
                    }
                }
            }
        }
        half::<T>() * total
    }
}

/// Builds D column by column: per w, `t` minimizes `p[0][t]`; the D = 0 branch
/// is `p[s0][t]` and the D = 1 branch `p[0][s1] - p[0][t]`. A residual is
/// added to the D = 0 branch, and when that would go negative the branch is
/// emptied and the whole cell is assigned to D = 1.
pub fn construct_pointer<T: Prob>(dist: &OtOutputDistribution<T>) -> Result<PointerExtension<T>> {
    let (ell, wc) = (dist.ell, dist.w_card);
    check_capacity(ell, wc)?;
    let l = 1usize << ell;
    let mut mass = vec![T::zero(); l * l * 2 * wc];
    let mut correction = T::zero();
    for w in 0..wc {
        let mut t = 0;
        for s1 in 1..l {
            if dist.get(0, s1, w) < dist.get(0, t, w) {
                t = s1;
            }
        }
        let p0t = dist.get(0, t, w);
        for s0 in 0..l {
            for s1 in 0..l {
                let p = dist.get(s0, s1, w);
                let d0 = dist.get(s0, t, w);
                let d1 = dist.get(0, s1, w) - p0t.clone();
                let r = p.clone() - d0.clone() - d1.clone();
                correction = correction + r.abs();
                let (e0, e1) = if d0.clone() + r.clone() >= T::zero() { (d0 + r, d1) } else { (T::zero(), p) };
                let base = (s0 * l + s1) * 2;
                mass[base * wc + w] = e0;
                mass[(base + 1) * wc + w] = e1;
            }
        }
    }
    let mut ext = PointerExtension::new(ell, wc, mass)?;
    ext.correction = correction;
    Ok(ext)
}

/// Smallest achievable sender-security distance over all extensions of a
/// bit-OT distribution with `|W| <= 8`, by vertex enumeration.
pub fn minimal_pointer_epsilon(dist: &OtOutputDistribution<f64>) -> Result<f64> {
    if dist.ell != 1 || dist.w_card > 8 {
        return Err(Error::Capacity("minimal extension search needs l = 1 and |W| <= 8".into()));
    }
    let mut total = 0.0;
    for w in 0..dist.w_card {
        let p = [dist.get(0, 0, w), dist.get(0, 1, w), dist.get(1, 0, w), dist.get(1, 1, w)];
        total += minimal_cell_epsilon(&p);
    }
    Ok(total)
}

fn minimal_cell_epsilon(p: &[f64; 4]) -> f64 {
    // Variables are the D = 0 cells x00, x01, x10, x11.
    let obj = |x: &[f64; 4]| {
        0.5 * ((x[0] - x[1]).abs()
            + (x[2] - x[3]).abs()
            + ((p[0] - x[0]) - (p[2] - x[2])).abs()
            + ((p[1] - x[1]) - (p[3] - x[3])).abs())
    };
    let mut planes: Vec<([f64; 4], f64)> = Vec::with_capacity(12);
    for i in 0..4 {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        planes.push((e, 0.0));
        planes.push((e, p[i]));
    }
    planes.push(([1.0, -1.0, 0.0, 0.0], 0.0));
    planes.push(([0.0, 0.0, 1.0, -1.0], 0.0));
    planes.push(([1.0, 0.0, -1.0, 0.0], p[0] - p[2]));
    planes.push(([0.0, 1.0, 0.0, -1.0], p[1] - p[3]));
    let scale = p.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut best = f64::INFINITY;
    let k = planes.len();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                for d in c + 1..k {
                    let idx = [a, b, c, d];
                    let m = Matrix4::from_fn(|r, col| planes[idx[r]].0[col]);
                    let rhs = Vector4::from_fn(|r, _| planes[idx[r]].1);
                    if m.determinant().abs() < 1e-12 {
                        continue;
                    }
                    let Some(sol) = m.lu().solve(&rhs) else { continue };
                    let x = [sol[0], sol[1], sol[2], sol[3]];
                    if x.iter().zip(p).all(|(&xi, &pi)| xi >= -1e-12 * scale && xi <= pi + 1e-12 * scale) {
                        best = best.min(obj(&x));
                    }
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Random fixtures
// ---------------------------------------------------------------------------

pub fn random_ot_distribution<R: Rng + ?Sized>(ell: usize, w_card: usize, rng: &mut R) -> Result<OtOutputDistribution<f64>> {
    check_capacity(ell, w_card)?;
    let l = 1usize << ell;
    let raw: Vec<f64> = (0..l * l * w_card).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    OtOutputDistribution::new(ell, w_card, raw.into_iter().map(|v| v / s).collect())
}

/// Random rational distribution with integer weights below `max_weight`.
/// With `additive` set, every column has the form `f(s0) + g(s1)`, which
/// makes every NDLF exactly uniform.
pub fn random_rational<R: Rng + ?Sized>(
    ell: usize,
    w_card: usize,
    max_weight: i64,
    additive: bool,
    rng: &mut R,
) -> Result<OtOutputDistribution<Rational>> {
    check_capacity(ell, w_card)?;
    let l = 1usize << ell;
    let mut raw = vec![0i64; l * l * w_card];
    for w in 0..w_card {
        let f: Vec<i64> = (0..l).map(|_| rng.gen_range(0..max_weight)).collect();
        let g: Vec<i64> = (0..l).map(|_| rng.gen_range(0..max_weight)).collect();
        for s0 in 0..l {
            for s1 in 0..l {
                raw[(s0 * l + s1) * w_card + w] = if additive { f[s0] + g[s1] } else { rng.gen_range(0..max_weight) };
            }
        }
    }
    let mut total: i64 = raw.iter().sum();
    if total == 0 {
        raw.iter_mut().for_each(|v| *v = 1);
        total = raw.len() as i64;
    }
    OtOutputDistribution::new(ell, w_card, raw.into_iter().map(|v| Rational::new(v, total)).collect())
}

// ---------------------------------------------------------------------------
// 1-of-n
// ---------------------------------------------------------------------------

/// Joint over `S_0 x ... x S_{n-1} x W`; the strings form a mixed-radix index
/// with `S_0` most significant, followed by w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneOfN {
    pub n: usize,
    pub ell: usize,
    pub w_card: usize,
    pub mass: Vec<f64>,
}

impl OneOfN {
    pub fn new(n: usize, ell: usize, w_card: usize, mass: Vec<f64>) -> Result<Self> {
        if !(2..=4).contains(&n) || ell == 0 || ell > 2 || w_card == 0 || w_card > MAX_W {
            return Err(Error::Capacity(format!("n = {n}, l = {ell}, |W| = {w_card} (limits n <= 4, l <= 2)")));
        }
        let expect = (1usize << (ell * n)) * w_card;
        if mass.len() != expect {
            return input_err(format!("expected {expect} entries"));
        }
        if mass.iter().any(|&v| v < 0.0) || (mass.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return input_err("not a probability distribution");
        }
        Ok(Self { n, ell, w_card, mass })
    }

    /// Builds the joint from a map `strings -> [(w, probability)]` evaluated
    /// on every tuple of strings.
    pub fn from_fn(n: usize, ell: usize, w_card: usize, f: impl Fn(&[usize]) -> Vec<(usize, f64)>) -> Result<Self> {
        if n > 4 || ell > 2 {
            return Err(Error::Capacity("n <= 4 and l <= 2".into()));
        }
        let l = 1usize << ell;
        let mut mass = vec![0.0; l.pow(n as u32) * w_card];
        let mut s = vec![0usize; n];
        for idx in 0..l.pow(n as u32) {
            let mut r = idx;
            for k in (0..n).rev() {
                s[k] = r % l;
                r /= l;
            }
            for (w, p) in f(&s) {
                if w >= w_card {
                    return input_err("w out of range");
                }
                mass[idx * w_card + w] += p;
            }
        }
        Self::new(n, ell, w_card, mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneOfNReport {
    pub max_distance: f64,
    pub worst_pair: (usize, usize),
    pub worst_beta: Ndlf,
    pub threshold: f64,
    pub pass: bool,
}

/// Largest `δ(P_{β(S_i,S_j) W S_rest}, unif · P_{W S_rest})` over pairs and
/// NDLFs, compared with `eps / (2^{2l} n (n-1))`.
pub fn one_of_n_condition(dist: &OneOfN, eps: f64) -> Result<OneOfNReport> {
    let (n, ell, wc) = (dist.n, dist.ell, dist.w_card);
    let l = 1usize << ell;
    let total = l.pow(n as u32);
    let ndlfs = hashing::enumerate_ndlf(ell)?;
    let digit = |idx: usize, k: usize| (idx / l.pow((n - 1 - k) as u32)) % l;
    let mut best = (f64::NEG_INFINITY, (0, 1), ndlfs[0]);
    for i in 0..n {
        for j in i + 1..n {
            for beta in &ndlfs {
                // Signed mass per (rest, w), where rest is the index with
                // digits i and j cleared.
                let mut acc = std::collections::HashMap::<(usize, usize), f64>::new();
                for idx in 0..total {
                    let (si, sj) = (digit(idx, i), digit(idx, j));
                    let rest = idx - si * l.pow((n - 1 - i) as u32) - sj * l.pow((n - 1 - j) as u32);
                    let sign = if beta.eval(si as u32, sj as u32) == 0 { 1.0 } else { -1.0 };
                    for w in 0..wc {
                        let v = dist.mass[idx * wc + w];
                        if v != 0.0 {
                            *acc.entry((rest, w)).or_insert(0.0) += sign * v;
                        }
                    }
                }
                let d = 0.5 * acc.values().map(|v| v.abs()).sum::<f64>();
                if d > best.0 + 1e-15 {
                    best = (d, (i, j), *beta);
                }
            }
        }
    }
    let threshold = eps / ((1u64 << (2 * ell)) as f64 * (n * (n - 1)) as f64);
    Ok(OneOfNReport { max_distance: best.0, worst_pair: best.1, worst_beta: best.2, threshold, pass: best.0 <= threshold })
}

// ---------------------------------------------------------------------------
// OT from universal OT
// ---------------------------------------------------------------------------

/// Receiver channel `P_{Y|X}` on `X = {0,1}^n x {0,1}^n`, with `x = x0 || x1`
/// (index `x0 * 2^n + x1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UotChannel {
    pub n: usize,
    pub y_card: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    /// The honest choice bit when the channel returns `x_c`.
    pub choice: Option<u8>,
    pub label: String,
}

const MAX_UOT_N: usize = 8;
const MAX_UOT_CELLS: usize = 1 << 24;

impl UotChannel {
    pub fn from_fn(n: usize, y_card: usize, label: &str, f: impl Fn(usize, usize) -> Vec<(usize, f64)>) -> Result<Self> {
        if n == 0 || n > MAX_UOT_N {
            return Err(Error::Capacity(format!("n = {n} (limit {MAX_UOT_N})")));
        }
        if y_card.saturating_mul(1 << (2 * n)) > MAX_UOT_CELLS {
            return Err(Error::Capacity(format!("|Y| 2^(2n) = {y_card} * 2^{}", 2 * n)));
        }
        let mask = (1usize << n) - 1;
        let mut rows = Vec::with_capacity(1 << (2 * n));
        for x in 0..1usize << (2 * n) {
            let row = f(x >> n, x & mask);
            let s: f64 = row.iter().map(|e| e.1).sum();
            if row.iter().any(|&(y, p)| y >= y_card || p < 0.0) || (s - 1.0).abs() > 1e-9 {
                return input_err(format!("row {x} is not a distribution over Y"));
            }
            rows.push(row);
        }
        Ok(Self { n, y_card, rows, choice: None, label: label.into() })
    }

    /// `Y = X_c`.
    pub fn honest(n: usize, c: u8) -> Result<Self> {
        let mut ch = Self::from_fn(n, 1 << n, "honest", |x0, x1| vec![(if c == 0 { x0 } else { x1 }, 1.0)])?;
        ch.choice = Some(c & 1);
        Ok(ch)
    }

    /// `Y = X0 xor X1`.
    pub fn xor_halves(n: usize) -> Result<Self> {
        Self::from_fn(n, 1 << n, "xor", |x0, x1| vec![(x0 ^ x1, 1.0)])
    }

    /// Each of the 2n bits is revealed independently with probability
    /// `reveal`; `Y` is the base-3 word with 2 marking an erased bit.
    pub fn erasure(n: usize, reveal: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reveal) {
            return input_err("reveal probability outside [0, 1]");
        }
        if n > 4 {
            return Err(Error::Capacity("erasure channel supports n <= 4".into()));
        }
        let m = 2 * n;
        Self::from_fn(n, 3usize.pow(m as u32), "erasure", |x0, x1| {
            let x = (x0 << n) | x1;
            (0..1usize << m)
                .filter_map(|pattern| {
                    let mut y = 0;
                    let mut p = 1.0;
                    for k in 0..m {
                        let shown = (pattern >> (m - 1 - k)) & 1 == 1;
                        let bit = (x >> (m - 1 - k)) & 1;
                        y = 3 * y + if shown { bit } else { 2 };
                        p *= if shown { reveal } else { 1.0 - reveal };
                    }
                    (p > 0.0).then_some((y, p))
                })
                .collect()
        })
    }

    /// Reveals the first `k0` bits of x0 and the last `k1` bits of x1.
    pub fn reveal_halves(n: usize, k0: usize, k1: usize) -> Result<Self> {
        if k0 > n || k1 > n {
            return input_err("cannot reveal more than n bits of a half");
        }
        Self::from_fn(n, 1 << (k0 + k1), "reveal_halves", |x0, x1| {
            vec![(((x0 >> (n - k0)) << k1) | (x1 & ((1 << k1) - 1)), 1.0)]
        })
    }

    /// Joint `P_{XY}` for uniform X, restricted to outcomes of positive
    /// probability (columns relabelled in increasing order of y).
    fn dense_columns(&self) -> (Vec<usize>, Vec<Vec<f64>>) {
        let nx = 1usize << (2 * self.n);
        let mut col_of = vec![usize::MAX; self.y_card];
        let mut ys = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let px = 1.0 / nx as f64;
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                if p == 0.0 {
                    continue;
                }
                if col_of[y] == usize::MAX {
                    col_of[y] = cols.len();
                    ys.push(y);
                    cols.push(vec![0.0; nx]);
                }
                cols[col_of[y]][x] += p * px;
            }
        }
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by_key(|&i| ys[i]);
        (order.iter().map(|&i| ys[i]).collect(), order.into_iter().map(|i| std::mem::take(&mut cols[i])).collect())
    }

    /// `P_{X Y}` as a joint over `X x Y'` where Y' lists the outcomes that
    /// occur.
    pub fn joint(&self) -> Result<JointDistribution> {
        let (_, cols) = self.dense_columns();
        let nx = 1usize << (2 * self.n);
        let ny = cols.len();
        if nx * ny > 1 << 20 {
            return Err(Error::Capacity(format!("joint with {nx} x {ny} entries")));
        }
        JointDistribution::from_fn(vec![nx, ny], |i| cols[i[1]][i[0]])
    }
}

/// Entropies and security figures of the hashed output for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UotMeasurement {
    pub h2_worst: f64,
    pub h2_average: f64,
    pub hmin_worst: f64,
    /// NDLF distance averaged over independent affine hash pairs; it is the
    /// same for every NDLF.
    pub ndlf_distance: f64,
    /// `sum_y P(y) 2^{-(H_2(X|Y=y) + 1)/2}`.
    pub lhl_bound: f64,
    /// `Pr[Y = X_c]` for an honest channel.
    pub correctness: Option<f64>,
}

/// Exact evaluation for uniform X, with the hash average computed through
/// the Walsh-Hadamard transform of each column of `P_{XY}`.
pub fn evaluate_uot(channel: &UotChannel) -> Result<UotMeasurement> {
    let (_, cols) = channel.dense_columns();
    let nx = 1usize << (2 * channel.n);
    let mut dist = 0.0;
    let mut lhl = 0.0;
    let (mut h2_worst, mut hmin_worst) = (f64::INFINITY, f64::INFINITY);
    let mut h2_avg_sum = 0.0;
    for col in &cols {
        let py: f64 = col.iter().sum();
        if py <= 0.0 {
            continue;
        }
        let coll: f64 = col.iter().map(|v| (v / py) * (v / py)).sum();
        let h2 = -coll.log2();
        let mx = col.iter().cloned().fold(0.0, f64::max) / py;
        h2_worst = h2_worst.min(h2);
        hmin_worst = hmin_worst.min(-mx.log2());
        h2_avg_sum += py * coll;
        lhl += py * 2f64.powf(-0.5 * (h2 + 1.0));
        let mut v = col.clone();
        wht(&mut v);
        dist += 0.5 * v.iter().map(|c| c.abs()).sum::<f64>() / nx as f64;
    }
    let correctness = channel.choice.map(|c| {
        let mask = (1usize << channel.n) - 1;
        channel
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let want = if c == 0 { x >> channel.n } else { x & mask };
                row.iter().filter(|e| e.0 == want).map(|e| e.1).sum::<f64>()
            })
            .sum::<f64>()
            / nx as f64
    });
    Ok(UotMeasurement {
        h2_worst,
        h2_average: -h2_avg_sum.log2(),
        hmin_worst,
        ndlf_distance: dist,
        lhl_bound: lhl,
        correctness,
    })
}

/// The same NDLF distance, by enumerating every pair of affine members.
pub fn uot_distance_enumerated(channel: &UotChannel, ell: usize, beta: &Ndlf) -> Result<f64> {
    if beta.ell != ell {
        return input_err("beta and l disagree");
    }
    let n = channel.n;
    let fam = HashFamily::affine(n, ell);
    let size = fam.size().filter(|&s| s * s <= 1 << 22).ok_or_else(|| Error::Capacity("too many hash pairs".into()))?;
    let (_, cols) = channel.dense_columns();
    let tables: Vec<Vec<u64>> = (0..size).map(|i| hashing::FunctionFamily::table(&fam, i)).collect();
    let mask = (1usize << n) - 1;
    let mut total = 0.0;
    for t0 in &tables {
        for t1 in &tables {
            for col in &cols {
                let mut s = 0.0;
                for (x, &v) in col.iter().enumerate() {
                    if v != 0.0 {
                        let b = beta.eval(t0[x >> n] as u32, t1[x & mask] as u32);
                        s += if b == 0 { v } else { -v };
                    }
                }
                total += 0.5 * s.abs();
            }
        }
    }
    Ok(total / (size * size) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UotRecord {
    pub n: usize,
    pub ell: usize,
    pub kappa: usize,
    pub r: f64,
    pub channel: String,
    pub measurement: UotMeasurement,
    /// `2^{-kappa} / 2^{2l+1}`.
    pub target: f64,
    /// Sender-security parameter implied by the NDLF distance.
    pub implied_epsilon: f64,
    pub within_lhl: bool,
    pub within_target: bool,
}

/// Runs the reduction against a channel promising `H_2(X|Y) >= r`, with
/// `n >= r >= 4l + 2 kappa + 1`.
pub fn reduce_ot_from_uot(n: usize, ell: usize, kappa: usize, r: f64, channel: &UotChannel) -> Result<UotRecord> {
    if channel.n != n {
        return input_err("channel and n disagree");
    }
    let m = evaluate_uot(channel)?;
    if m.h2_worst < r - 1e-9 {
        return Err(Error::Precondition(format!("promise violated: H_2(X|Y) = {} < r = {r}", m.h2_worst)));
    }
    let need = (4 * ell + 2 * kappa + 1) as f64;
    if r < need || r > n as f64 {
        return Err(Error::Precondition(format!("need n >= r >= 4l + 2kappa + 1 = {need}, got r = {r}, n = {n}")));
    }
    if let Ok(j) = channel.joint() {
        let h2 = entropy::conditional_renyi(&j, 2.0, CondMode::WorstCase)?;
        debug_assert!((h2 - m.h2_worst).abs() < 1e-9);
    }
    let target = 2f64.powi(-(kappa as i32)) / 2f64.powi(2 * ell as i32 + 1);
    Ok(UotRecord {
        n,
        ell,
        kappa,
        r,
        channel: channel.label.clone(),
        implied_epsilon: m.ndlf_distance * 2f64.powi(2 * ell as i32 + 1),
        within_lhl: m.ndlf_distance <= m.lhl_bound + 1e-12,
        within_target: m.ndlf_distance <= target + 1e-12,
        target,
        measurement: m,
    })
}

/// One inequality of the splitting argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    /// The side that must be at least `rhs` (for entropies) or at most
    /// `rhs` (for distances), stored so that `slack = rhs - lhs` or
    /// `lhs - rhs` is non-negative when the link holds.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Link {
    pub(crate) fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: lhs - rhs }
    }
    pub(crate) fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: rhs - lhs }
    }
    pub fn holds(&self) -> bool {
        self.slack >= -1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingRecord {
    pub n: usize,
    pub ell: usize,
    pub kappa: usize,
    pub r: f64,
    pub channel: String,
    pub epsilon: f64,
    /// `Pr[D = 0 | Y = y]` for each occurring y.
    pub pointer_given_y: Vec<f64>,
    pub pointer_deterministic: bool,
    pub links: Vec<Link>,
    /// First link without slack.
    pub failing_link: Option<String>,
    pub meets_threshold: bool,
    pub hash_samples: usize,
    pub seed: u64,
}

/// The splitting argument, checked link by link: `H_∞(X0X1|Y) >= r`, the
/// split pointer D, `H_∞^ε(X_{1-D} | D S_D Y)` against the chain-rule
/// prediction, and the exact hashing distance of `S_{1-D}` against the
/// privacy-amplification bound and `2^{-kappa}`. The seen string is hashed
/// with `samples` seeded affine pairs; the unseen one is averaged over the
/// whole family.
pub fn splitting_reduction(
    n: usize,
    ell: usize,
    kappa: usize,
    r: f64,
    channel: &UotChannel,
    samples: usize,
    seed: u64,
) -> Result<SplittingRecord> {
    if channel.n != n {
        return input_err("channel and n disagree");
    }
    if ell > n || samples == 0 {
        return input_err("need l <= n and at least one hash sample");
    }
    let (_, cols) = channel.dense_columns();
    let nn = 1usize << n;
    let hmin = cols
        .iter()
        .filter(|c| c.iter().sum::<f64>() > 0.0)
        .map(|c| -(c.iter().cloned().fold(0.0, f64::max) / c.iter().sum::<f64>()).log2())
        .fold(f64::INFINITY, f64::min);
    if hmin < r - 1e-9 {
        return Err(Error::Precondition(format!("promise violated: H_inf(X0X1|Y) = {hmin} < r = {r}")));
    }
    let eps = 2f64.powi(-(kappa as i32) - 1);
    let mut links = vec![Link::at_least("promise: H_inf(X0X1|Y) >= r", hmin, r)];

    // Split each conditional distribution.
    let mut heavy = Vec::with_capacity(cols.len());
    let mut pointer = Vec::with_capacity(cols.len());
    let mut split_min = f64::INFINITY;
    for col in &cols {
        let py: f64 = col.iter().sum();
        let cond: Vec<f64> = col.iter().map(|v| v / py).collect();
        let sp = entropy::split_unchecked(&cond, nn, nn, r);
        split_min = split_min.min(sp.achieved);
        pointer.push(sp.pointer[0]);
        heavy.push(sp.heavy_x1);
    }
    links.push(Link::at_least("split: H_inf(X_{1-D} D | Y) >= r/2", split_min, r / 2.0));

    let fam = HashFamily::affine(n, ell);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = 1usize << ell;
    let u_card = cols.len() * 2 * l;
    let (mut worst_h, mut worst_b) = (f64::INFINITY, 0.0f64);
    let mut pa_worst: Option<(f64, f64)> = None;
    for _ in 0..samples {
        let g0 = fam.sample(&mut rng).compiled();
        let g1 = fam.sample(&mut rng).compiled();
        let mut joint = vec![0.0; nn * u_card];
        for (yi, col) in cols.iter().enumerate() {
            for (x, &v) in col.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let (x0, x1) = (x >> n, x & (nn - 1));
                let (unseen, d, s) =
                    if heavy[yi][x1] { (x0, 1, g1.eval(x1 as u64) as usize) } else { (x1, 0, g0.eval(x0 as u64) as usize) };
                joint[unseen * u_card + (yi * 2 + d) * l + s] += v;
            }
        }
        let j = JointDistribution::from_unchecked(vec![nn, u_card], joint);
        let rho = CqState::from_classical_joint(&j)?;
        let (bound, h) = cqstate::pa_bound(&rho, ell, eps)?;
        let (d, _, _) = cqstate::pa_exact_distance(&rho, &fam, FamilyAveraging::auto(&fam, 256, seed ^ 0x5eed))?;
        worst_h = worst_h.min(h);
        worst_b = worst_b.max(bound);
        if pa_worst.map_or(true, |(d0, b0)| d - bound > d0 - b0) {
            pa_worst = Some((d, bound));
        }
    }
    let (pa_d, pa_b) = pa_worst.unwrap_or((0.0, 0.0));
    let predicted = r / 2.0 - 1.0 - ell as f64 - kappa as f64 - 1.0;
    links.push(Link::at_least("chain rule: H_inf^eps(X_{1-D} | D S_D Y) >= r/2 - l - kappa - 2", worst_h, predicted));
    links.push(Link::at_most("privacy amplification: distance <= bound", pa_d, pa_b));
    links.push(Link::at_most("target: bound <= 2^-kappa", worst_b, 2f64.powi(-(kappa as i32))));
    let failing_link = links.iter().find(|k| !k.holds()).map(|k| k.name.clone());
    Ok(SplittingRecord {
        n,
        ell,
        kappa,
        r,
        channel: channel.label.clone(),
        epsilon: eps,
        pointer_deterministic: pointer.iter().all(|&p| p == 0.0 || p == 1.0),
        pointer_given_y: pointer,
        links,
        failing_link,
        meets_threshold: r >= (4 * ell + 4 * kappa + 4) as f64,
        hash_samples: samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(v: &[i64]) -> Vec<Rational> {
        let s: i64 = v.iter().sum();
        v.iter().map(|&x| Rational::new(x, s)).collect()
    }

    #[test]
    fn worked_example_is_xor_uniform() {
        // W = B_C for a random C.
        let d = OtOutputDistribution::from_fn(1, 2, |b0, b1, w| {
            0.25 * (0.5 * (b0 == w) as u8 as f64 + 0.5 * (b1 == w) as u8 as f64)
        })
        .unwrap();
        assert!(xor_uniformity(&d).unwrap().abs() < 1e-15);
        let ext = construct_pointer(&d).unwrap();
        assert!(ext.epsilon.abs() < 1e-15);
    }

    #[test]
    fn equal_bits_give_half() {
        let d = OtOutputDistribution::from_fn(1, 1, |b0, b1, _| if b0 == b1 { 0.5 } else { 0.0 }).unwrap();
        assert!((xor_uniformity(&d).unwrap() - 0.5).abs() < 1e-15);
        let u = OtOutputDistribution::from_fn(1, 1, |_, _, _| 0.25).unwrap();
        assert_eq!(xor_uniformity(&u).unwrap(), 0.0);
        assert!(xor_uniformity(&OtOutputDistribution::from_fn(2, 1, |_, _, _| 1.0 / 16.0).unwrap()).is_err());
    }

    #[test]
    fn figure_extension_is_reproduced() {
        // a <= b and a + d = b + c with a, b, c, d = 1, 3, 2, 4 over 10.
        let d = OtOutputDistribution::new(1, 1, rat(&[1, 3, 2, 4])).unwrap();
        let ext = construct_pointer(&d).unwrap();
        assert_eq!(ext.epsilon, Rational::from_integer(0));
        let t = |v: i64| Rational::new(v, 10);
        let d0 = [ext.get(0, 0, 0, 0), ext.get(0, 1, 0, 0), ext.get(1, 0, 0, 0), ext.get(1, 1, 0, 0)];
        let d1 = [ext.get(0, 0, 1, 0), ext.get(0, 1, 1, 0), ext.get(1, 0, 1, 0), ext.get(1, 1, 1, 0)];
        assert_eq!(d0, [t(1), t(1), t(2), t(2)]);
        assert_eq!(d1, [t(0), t(2), t(0), t(2)]);
        assert_eq!(ext.marginal(), d);
    }

    #[test]
    fn ndlf_examples() {
        // W = S0 xor S1 bitwise.
        let d = OtOutputDistribution::from_fn(2, 4, |s0, s1, w| if w == s0 ^ s1 { 1.0 / 16.0 } else { 0.0 }).unwrap();
        let (v, b) = ndlf_security_distance(&d).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(b.a0, b.a1);
        // First bit of S0 and second bit of S1.
        let leak = OtOutputDistribution::from_fn(2, 4, |s0, s1, w| if w == ((s0 >> 1) << 1 | (s1 & 1)) { 1.0 / 16.0 } else { 0.0 })
            .unwrap();
        let (v, b) = ndlf_security_distance(&leak).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!((b.a0, b.a1), (2, 1));
        // Ideal: W = (C, S_C).
        let ideal = OtOutputDistribution::from_fn(2, 8, |s0, s1, w| {
            let (c, s) = (w / 4, w % 4);
            0.5 / 16.0 * if (c == 0 && s == s0) || (c == 1 && s == s1) { 1.0 } else { 0.0 }
        })
        .unwrap();
        assert!(ndlf_security_distance(&ideal).unwrap().0 < 1e-15);
    }

    #[test]
    fn wht_matches_direct_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_ot_distribution(2, 3, &mut rng).unwrap();
        let lin = d.linear_distances();
        for beta in hashing::enumerate_ndlf(2).unwrap() {
            let direct = d.beta_distance(&beta.table()).unwrap();
            assert!((direct - lin[(beta.a0 * 4 + beta.a1) as usize]).abs() < 1e-14);
        }
    }

    #[test]
    fn additive_l2_fixture_is_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = random_rational(2, 3, 20, true, &mut rng).unwrap();
            assert_eq!(ndlf_security_distance(&d).unwrap().0, Rational::from_integer(0));
            let ext = construct_pointer(&d).unwrap();
            assert_eq!(ext.epsilon, Rational::from_integer(0));
            assert_eq!(ext.marginal(), d);
        }
    }

    #[test]
    fn minimal_oracle_is_below_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let d = random_ot_distribution(1, 3, &mut rng).unwrap();
            let m = minimal_pointer_epsilon(&d).unwrap();
            let ext = construct_pointer(&d).unwrap();
            let x = xor_uniformity(&d).unwrap();
            assert!(m <= ext.epsilon + 1e-12);
            // Any extension is at least as far as the XOR.
            assert!(m >= x - 1e-12, "{m} < {x}");
        }
    }

    #[test]
    fn one_of_n_examples() {
        // Ideal 1-of-3 bit OT: W = (C, S_C).
        let ideal = OneOfN::from_fn(3, 1, 6, |s| (0..3).map(|c| (2 * c + s[c], 1.0 / 3.0 / 8.0)).collect()).unwrap();
        let rep = one_of_n_condition(&ideal, 1e-6).unwrap();
        assert!(rep.max_distance < 1e-15 && rep.pass);
        // W = S0 xor S1 xor S2.
        let x = OneOfN::from_fn(3, 1, 2, |s| vec![(s[0] ^ s[1] ^ s[2], 1.0 / 8.0)]).unwrap();
        let rep = one_of_n_condition(&x, 0.1).unwrap();
        assert!((rep.max_distance - 0.5).abs() < 1e-15 && !rep.pass);
        // W = S1 is an ideal view, so every pair passes.
        let s1 = OneOfN::from_fn(3, 1, 2, |s| vec![(s[1], 1.0 / 8.0)]).unwrap();
        assert!(one_of_n_condition(&s1, 1e-9).unwrap().pass);
        // W = S0 xor S1 fails at the pair (0, 1) only.
        let p01 = OneOfN::from_fn(3, 1, 2, |s| vec![(s[0] ^ s[1], 1.0 / 8.0)]).unwrap();
        let rep = one_of_n_condition(&p01, 0.1).unwrap();
        assert_eq!(rep.worst_pair, (0, 1));
        assert!((rep.max_distance - 0.5).abs() < 1e-15);
        assert!(OneOfN::from_fn(5, 1, 1, |_| vec![(0, 1.0 / 32.0)]).is_err());
    }

    #[test]
    fn honest_uot_record() {
        let ch = UotChannel::honest(6, 1).unwrap();
        let rec = reduce_ot_from_uot(6, 1, 0, 5.0, &ch).unwrap();
        assert_eq!(rec.measurement.correctness, Some(1.0));
        assert!((rec.measurement.h2_worst - 6.0).abs() < 1e-12);
        // Only the constant members of the unseen hash leak.
        assert!((rec.measurement.ndlf_distance - 2f64.powi(-7)).abs() < 1e-15);
        assert!(rec.within_lhl && rec.within_target);
    }

    #[test]
    fn transform_matches_enumeration() {
        for ch in [UotChannel::xor_halves(3).unwrap(), UotChannel::erasure(3, 0.5).unwrap(), UotChannel::honest(3, 0).unwrap()] {
            let m = evaluate_uot(&ch).unwrap();
            let e = uot_distance_enumerated(&ch, 1, &Ndlf::xor()).unwrap();
            assert!((m.ndlf_distance - e).abs() < 1e-12, "{} vs {e}", m.ndlf_distance);
        }
        let ch = UotChannel::xor_halves(2).unwrap();
        let m = evaluate_uot(&ch).unwrap();
        for beta in hashing::enumerate_ndlf(2).unwrap() {
            assert!((uot_distance_enumerated(&ch, 2, &beta).unwrap() - m.ndlf_distance).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_adversary_and_erasure() {
        let ch = UotChannel::xor_halves(6).unwrap();
        let rec = reduce_ot_from_uot(6, 1, 0, 6.0, &ch).unwrap();
        assert!((rec.measurement.h2_worst - 6.0).abs() < 1e-12);
        assert!(rec.within_lhl && rec.within_target);
        let er = UotChannel::erasure(3, 0.5).unwrap();
        let m = evaluate_uot(&er).unwrap();
        assert_eq!(m.h2_worst, 0.0);
        assert!(m.h2_average > 0.0 && m.ndlf_distance > 0.0);
        let err = reduce_ot_from_uot(3, 1, 0, 3.0, &er).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref s) if s.contains("H_2")));
        assert!(reduce_ot_from_uot(6, 2, 0, 6.0, &ch).is_err());
    }

    #[test]
    fn splitting_links() {
        let ch = UotChannel::xor_halves(6).unwrap();
        let rec = splitting_reduction(6, 1, 0, 6.0, &ch, 2, 1).unwrap();
        assert!(rec.links[..2].iter().all(|k| k.holds()));
        assert!(rec.links.iter().find(|k| k.name.starts_with("privacy")).unwrap().holds());
        assert!(!rec.meets_threshold);
        // Independent halves with full entropy: every x1 is heavy.
        let ind = UotChannel::reveal_halves(4, 0, 0).unwrap();
        let rec = splitting_reduction(4, 1, 0, 8.0, &ind, 1, 2).unwrap();
        assert!(rec.pointer_deterministic);
        assert!(rec.links[1].holds());
        let low = splitting_reduction(4, 1, 1, 8.0, &UotChannel::reveal_halves(4, 1, 1).unwrap(), 1, 3);
        assert!(matches!(low, Err(Error::Precondition(_))));
        let diag = splitting_reduction(4, 1, 2, 6.0, &UotChannel::reveal_halves(4, 1, 1).unwrap(), 1, 3).unwrap();
        assert!(diag.failing_link.is_some());
    }

    proptest! {
        #[test]
        fn pointer_marginal_and_guarantee(seed in any::<u64>(), ell in 1usize..=2, wc in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_ot_distribution(ell, wc, &mut rng).unwrap();
            let ext = construct_pointer(&d).unwrap();
            let back = ext.marginal();
            for (a, b) in back.mass().iter().zip(d.mass()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            let nu = ndlf_security_distance(&d).unwrap().0;
            prop_assert!(ext.epsilon <= 2f64.powi(2 * ell as i32 + 1) * nu + 1e-12);
            prop_assert!(ext.epsilon <= ext.correction + 1e-12);
        }

        #[test]
        fn xor_iff_rational(seed in any::<u64>(), additive in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_rational(1, 3, 12, additive, &mut rng).unwrap();
            let x = xor_uniformity(&d).unwrap();
            let ext = construct_pointer(&d).unwrap();
            prop_assert_eq!(x == Rational::from_integer(0), ext.epsilon == Rational::from_integer(0));
            prop_assert_eq!(ext.marginal(), d);
        }
    }
}
