//! GF(2) bit-strings, two-universal hash families, and non-degenerate linear
//! functions.
//!
//! Bit `i` of a string is its `i`-th symbol; when a string is viewed as an
//! integer, bit 0 is the most significant one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{input_err, Error, Result};

/// Largest family enumerated member by member.
pub const MAX_ENUMERATED: u128 = 1 << 20;

// ---------------------------------------------------------------------------
// Bits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v & 1 == 1 {
                b.set(i, true);
            }
        }
        b
    }

    /// String of `len` bits whose integer value is `idx`.
    pub fn from_index(idx: u64, len: usize) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len.min(64) {
            if (idx >> (len - 1 - i)) & 1 == 1 {
                b.set(i, true);
            }
        }
        b
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut b = Self { len, words: (0..len.div_ceil(64)).map(|_| rng.gen()).collect() };
        b.mask_tail();
        b
    }

    fn mask_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Integer value, first bit most significant. Requires len <= 64.
    pub fn to_index(&self) -> u64 {
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len);
        Bits { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect() }
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// GF(2) inner product.
    pub fn dot(&self, other: &Bits) -> bool {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1
    }

    pub fn hamming_distance(&self, other: &Bits) -> usize {
        self.xor(other).weight()
    }

    pub fn select(&self, idx: &[usize]) -> Bits {
        let mut b = Bits::zeros(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            b.set(k, self.get(i));
        }
        b
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut b = Bits::zeros(self.len + other.len);
        for i in 0..self.len {
            b.set(i, self.get(i));
        }
        for i in 0..other.len {
            b.set(self.len + i, other.get(i));
        }
        b
    }

    /// Bytes with the first bit as the most significant bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Bits> {
        if bytes.len() != len.div_ceil(8) {
            return input_err("byte length does not match bit length");
        }
        let mut b = Bits::zeros(len);
        for i in 0..len {
            b.set(i, bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        }
        Ok(b)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Bits> {
        let bytes = hex::decode(s).map_err(|e| Error::Input(e.to_string()))?;
        Self::from_bytes(&bytes, len)
    }
}

impl std::fmt::Display for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

/// `x|_I` followed by zeros up to length n. `indices` are 0-based.
pub fn pad_substring(x: &Bits, indices: &[usize]) -> Result<Bits> {
    let mut out = Bits::zeros(x.len());
    let mut seen = vec![false; x.len()];
    for (k, &i) in indices.iter().enumerate() {
        if i >= x.len() || seen[i] {
            return input_err(format!("index {i} invalid or repeated"));
        }
        seen[i] = true;
        out.set(k, x.get(i));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hash functions and families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HashKind {
    /// Uniform l x n matrix; two-universal.
    Linear,
    /// Matrix plus offset; strongly two-universal.
    Affine,
}

/// One member: `x -> M x (+ b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFunction {
    n: usize,
    rows: Vec<Bits>,
    offset: Option<Bits>,
}

impl HashFunction {
    pub fn new(n: usize, rows: Vec<Bits>, offset: Option<Bits>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != n) {
            return input_err("row length differs from domain size");
        }
        if let Some(o) = &offset {
            if o.len() != rows.len() {
                return input_err("offset length differs from range size");
            }
        }
        Ok(Self { n, rows, offset })
    }

    /// The l x n identity block, keeping the first l bits.
    pub fn prefix(n: usize, ell: usize) -> Self {
        let rows = (0..ell)
            .map(|i| {
                let mut r = Bits::zeros(n);
                r.set(i, true);
                r
            })
            .collect();
        Self { n, rows, offset: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Bits] {
        &self.rows
    }

    pub fn offset(&self) -> Option<&Bits> {
        self.offset.as_ref()
    }

    pub fn eval(&self, x: &Bits) -> Result<Bits> {
        if x.len() != self.n {
            return input_err(format!("input has {} bits, expected {}", x.len(), self.n));
        }
        let mut out = Bits::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            out.set(i, r.dot(x));
        }
        if let Some(o) = &self.offset {
            out.xor_assign(o);
        }
        Ok(out)
    }

    /// Evaluation on integer-coded strings (n <= 64, l <= 64).
    pub fn eval_index(&self, x: u64) -> u64 {
        let mut out = 0u64;
        for r in &self.rows {
            out = (out << 1) | ((r.to_index() & x).count_ones() as u64 & 1);
        }
        if let Some(o) = &self.offset {
            out ^= o.to_index();
        }
        out
    }

    /// Packed form for repeated integer evaluation.
    pub fn compiled(&self) -> CompiledHash {
        CompiledHash {
            rows: self.rows.iter().map(|r| r.to_index()).collect(),
            offset: self.offset.as_ref().map_or(0, |o| o.to_index()),
        }
    }
}

/// Integer-coded hash function for hot loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledHash {
    rows: Vec<u64>,
    offset: u64,
}

impl CompiledHash {
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let mut out = 0u64;
        for &r in &self.rows {
            out = (out << 1) | ((r & x).count_ones() as u64 & 1);
        }
        out ^ self.offset
    }
}

#[derive(Serialize, Deserialize)]
struct HashFunctionRepr {
    n: usize,
    ell: usize,
    rows: Vec<String>,
    offset: Option<String>,
}

impl Serialize for HashFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HashFunctionRepr {
            n: self.n,
            ell: self.rows.len(),
            rows: self.rows.iter().map(|r| r.to_hex()).collect(),
            offset: self.offset.as_ref().map(|o| o.to_hex()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HashFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = HashFunctionRepr::deserialize(d)?;
        if r.rows.len() != r.ell {
            return Err(serde::de::Error::custom("row count differs from ell"));
        }
        let rows = r
            .rows
            .iter()
            .map(|h| Bits::from_hex(h, r.n))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        let offset =
            r.offset.map(|h| Bits::from_hex(&h, r.ell)).transpose().map_err(serde::de::Error::custom)?;
        HashFunction::new(r.n, rows, offset).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFamily {
    pub n: usize,
    pub ell: usize,
    pub kind: HashKind,
}

impl HashFamily {
    pub fn new(n: usize, ell: usize, kind: HashKind) -> Result<Self> {
        if n == 0 || ell == 0 {
            return input_err("domain and range must be non-empty");
        }
        Ok(Self { n, ell, kind })
    }

    pub fn linear(n: usize, ell: usize) -> Self {
        Self { n, ell, kind: HashKind::Linear }
    }

    pub fn affine(n: usize, ell: usize) -> Self {
        Self { n, ell, kind: HashKind::Affine }
    }

    /// log2 of the family size.
    pub fn log_size(&self) -> usize {
        self.n * self.ell + if self.kind == HashKind::Affine { self.ell } else { 0 }
    }

    pub fn size(&self) -> Option<u128> {
        let l = self.log_size();
        (l < 128).then(|| 1u128 << l)
    }

    pub fn is_enumerable(&self) -> bool {
        self.size().is_some_and(|s| s <= MAX_ENUMERATED)
    }

    /// Member with the given index: row bits first (row 0 most significant),
    /// then the offset.
    pub fn member(&self, index: u128) -> HashFunction {
        let mut rows = Vec::with_capacity(self.ell);
        let mut bit = self.log_size();
        let mut take = |len: usize| {
            let mut b = Bits::zeros(len);
            for i in 0..len {
                bit -= 1;
                b.set(i, (index >> bit) & 1 == 1);
            }
            b
        };
        for _ in 0..self.ell {
            rows.push(take(self.n));
        }
        let offset = (self.kind == HashKind::Affine).then(|| take(self.ell));
        HashFunction { n: self.n, rows, offset }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HashFunction {
        let rows = (0..self.ell).map(|_| Bits::random(self.n, rng)).collect();
        let offset = (self.kind == HashKind::Affine).then(|| Bits::random(self.ell, rng));
        HashFunction { n: self.n, rows, offset }
    }

    /// Every member in index order.
    pub fn iter(&self) -> Result<impl Iterator<Item = HashFunction> + Clone + '_> {
        if !self.is_enumerable() {
            return Err(Error::Capacity(format!("family of 2^{} members", self.log_size())));
        }
        Ok((0..self.size().unwrap()).map(move |i| self.member(i)))
    }
}

/// Family interface used by the universality checks.
pub trait FunctionFamily {
    fn input_bits(&self) -> usize;
    fn output_bits(&self) -> usize;
    fn size(&self) -> u128;
    /// Values `f(x)` for every integer-coded input x.
    fn table(&self, member: u128) -> Vec<u64>;
}

impl FunctionFamily for HashFamily {
    fn input_bits(&self) -> usize {
        self.n
    }
    fn output_bits(&self) -> usize {
        self.ell
    }
    fn size(&self) -> u128 {
        HashFamily::size(self).unwrap_or(u128::MAX)
    }
    fn table(&self, member: u128) -> Vec<u64> {
        let f = self.member(member).compiled();
        (0..1u64 << self.n).map(|x| f.eval(x)).collect()
    }
}

/// Largest collision probability `max_{x != y} Pr_F[F(x) = F(y)]`, by full enumeration.
pub fn max_collision_probability<F: FunctionFamily>(family: &F) -> Result<f64> {
    let size = family.size();
    if size > MAX_ENUMERATED || family.input_bits() > 8 {
        return Err(Error::Capacity("family too large for exhaustive check".into()));
    }
    let d = 1usize << family.input_bits();
    let mut coll = vec![0u64; d * d];
    for m in 0..size {
        let t = family.table(m);
        for x in 0..d {
            for y in x + 1..d {
                if t[x] == t[y] {
                    coll[x * d + y] += 1;
                }
            }
        }
    }
    let mut mx = 0u64;
    for x in 0..d {
        for y in x + 1..d {
            mx = mx.max(coll[x * d + y]);
        }
    }
    Ok(mx as f64 / size as f64)
}

/// Largest deviation of `Pr_F[(F(x), F(y)) = (a, b)]` from `2^{-2l}` over all
/// x != y and all (a, b), by full enumeration.
pub fn strong_universality_deviation<F: FunctionFamily>(family: &F) -> Result<f64> {
    let size = family.size();
    if size > MAX_ENUMERATED || family.input_bits() > 8 || family.output_bits() > 4 {
        return Err(Error::Capacity("family too large for exhaustive check".into()));
    }
    let d = 1usize << family.input_bits();
    let r = 1usize << family.output_bits();
    let mut hist = vec![0u32; d * d * r * r];
    for m in 0..size {
        let t = family.table(m);
        for x in 0..d {
            for y in x + 1..d {
                hist[((x * d + y) * r + t[x] as usize) * r + t[y] as usize] += 1;
            }
        }
    }
    let target = 1.0 / (r * r) as f64;
    let mut dev: f64 = 0.0;
    for x in 0..d {
        for y in x + 1..d {
            for ab in 0..r * r {
                dev = dev.max((hist[(x * d + y) * r * r + ab] as f64 / size as f64 - target).abs());
            }
        }
    }
    Ok(dev)
}

/// Single-row histograms of the linear or affine family, i.e. the number of
/// members (row, offset-bit) with `(r.x + b, r.y + b) = (a, c)`, indexed
/// `[x][y][2a + c]`.
fn single_row_histograms(n: usize, affine: bool) -> Vec<[u64; 4]> {
    let d = 1usize << n;
    let mut h = vec![[0u64; 4]; d * d];
    for r in 0..d as u64 {
        for b in 0..=(affine as u64) {
            for x in 0..d as u64 {
                let fx = ((r & x).count_ones() as u64 & 1) ^ b;
                for y in 0..d as u64 {
                    let fy = ((r & y).count_ones() as u64 & 1) ^ b;
                    h[x as usize * d + y as usize][(2 * fx + fy) as usize] += 1;
                }
            }
        }
    }
    h
}

/// Exact collision probability and strong-universality deviation of a linear
/// or affine family. The l rows (and offset bits) of a member are independent
/// uniform choices and each output bit depends on one of them only, so every
/// joint count over the full family is the product of single-row counts; the
/// figures are therefore exact over all 2^{nl(+l)} members.
pub fn universality_profile(family: &HashFamily) -> Result<(f64, f64)> {
    if family.n > 10 || family.ell > 8 {
        return Err(Error::Capacity("family too large for exhaustive check".into()));
    }
    let n = family.n;
    let d = 1usize << n;
    let affine = family.kind == HashKind::Affine;
    let h = single_row_histograms(n, affine);
    let row_size = (d as f64) * if affine { 2.0 } else { 1.0 };
    let ell = family.ell as i32;
    let mut max_coll: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    let target = 2f64.powi(-2 * ell);
    for x in 0..d {
        for y in 0..d {
            if x == y {
                continue;
            }
            let c = &h[x * d + y];
            let p: Vec<f64> = c.iter().map(|&v| v as f64 / row_size).collect();
            max_coll = max_coll.max((p[0] + p[3]).powi(ell));
            // the product over rows of single-row probabilities
            let mut extreme: Vec<f64> = vec![1.0];
            for _ in 0..ell {
                extreme = extreme.iter().flat_map(|e| p.iter().map(move |q| e * q)).collect();
                extreme.sort_by(|a, b| a.partial_cmp(b).unwrap());
                extreme.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
            }
            for e in extreme {
                max_dev = max_dev.max((e - target).abs());
            }
        }
    }
    Ok((max_coll, max_dev))
}

// ---------------------------------------------------------------------------
// Non-degenerate linear functions
// ---------------------------------------------------------------------------

/// `beta(s0, s1) = <a0, s0> xor <a1, s1>` with a0, a1 nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ndlf {
    pub ell: usize,
    pub a0: u32,
    pub a1: u32,
}

impl Ndlf {
    pub fn new(ell: usize, a0: u32, a1: u32) -> Result<Self> {
        if ell == 0 || ell > 16 {
            return Err(Error::Capacity(format!("ell = {ell}")));
        }
        let lim = 1u32 << ell;
        if a0 == 0 || a1 == 0 || a0 >= lim || a1 >= lim {
            return input_err("a0 and a1 must be nonzero l-bit vectors");
        }
        Ok(Self { ell, a0, a1 })
    }

    /// The XOR of two bits.
    pub fn xor() -> Self {
        Self { ell: 1, a0: 1, a1: 1 }
    }

    #[inline]
    pub fn eval(&self, s0: u32, s1: u32) -> u8 {
        (((self.a0 & s0).count_ones() + (self.a1 & s1).count_ones()) & 1) as u8
    }

    pub fn table(&self) -> Vec<u8> {
        let l = 1u32 << self.ell;
        (0..l).flat_map(|s0| (0..l).map(move |s1| self.eval(s0, s1))).collect()
    }
}

/// All (2^l - 1)^2 non-degenerate linear functions.
pub fn enumerate_ndlf(ell: usize) -> Result<Vec<Ndlf>> {
    if ell == 0 {
        return input_err("ell must be positive");
    }
    if ell > 16 {
        return Err(Error::Capacity(format!("ell = {ell}")));
    }
    let l = 1u32 << ell;
    Ok((1..l).flat_map(|a0| (1..l).map(move |a1| Ndlf { ell, a0, a1 })).collect())
}

/// Whether a table `beta[s0 * 2^l + s1]` is balanced in each argument for
/// every fixing of the other.
pub fn is_two_balanced(ell: usize, table: &[u8]) -> Result<bool> {
    let l = 1usize << ell;
    if table.len() != l * l || table.iter().any(|&b| b > 1) {
        return input_err("table must hold 2^{2l} bits");
    }
    for s0 in 0..l {
        let ones: usize = (0..l).map(|s1| table[s0 * l + s1] as usize).sum();
        if 2 * ones != l {
            return Ok(false);
        }
    }
    for s1 in 0..l {
        let ones: usize = (0..l).map(|s0| table[s0 * l + s1] as usize).sum();
        if 2 * ones != l {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The family `h(x0, x1) = beta(f0(x0), f1(x1))`; inputs are `x0 || x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedFamily {
    pub ell: usize,
    pub beta: Vec<u8>,
    pub f0: HashFamily,
    pub f1: HashFamily,
}

pub fn compose_balanced(ell: usize, beta: &[u8], f0: &HashFamily, f1: &HashFamily) -> Result<ComposedFamily> {
    if f0.kind != HashKind::Affine || f1.kind != HashKind::Affine {
        return input_err("both families must be strongly two-universal (affine)");
    }
    if f0.ell != ell || f1.ell != ell {
        return input_err("family output length differs from beta's");
    }
    if !is_two_balanced(ell, beta)? {
        return input_err("beta is not 2-balanced");
    }
    Ok(ComposedFamily { ell, beta: beta.to_vec(), f0: *f0, f1: *f1 })
}

impl ComposedFamily {
    pub fn eval(&self, g0: &HashFunction, g1: &HashFunction, x0: &Bits, x1: &Bits) -> Result<u8> {
        let s0 = g0.eval(x0)?.to_index() as usize;
        let s1 = g1.eval(x1)?.to_index() as usize;
        Ok(self.beta[(s0 << self.ell) + s1])
    }
}

impl FunctionFamily for ComposedFamily {
    fn input_bits(&self) -> usize {
        self.f0.n + self.f1.n
    }
    fn output_bits(&self) -> usize {
        1
    }
    fn size(&self) -> u128 {
        FunctionFamily::size(&self.f0).saturating_mul(FunctionFamily::size(&self.f1))
    }
    fn table(&self, member: u128) -> Vec<u64> {
        let s1 = FunctionFamily::size(&self.f1);
        let t0 = self.f0.table(member / s1);
        let t1 = self.f1.table(member % s1);
        let n1 = self.f1.n;
        (0..1u64 << self.input_bits())
            .map(|x| {
                let a = t0[(x >> n1) as usize] as usize;
                let b = t1[(x & ((1 << n1) - 1)) as usize] as usize;
                self.beta[(a << self.ell) + b] as u64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        let zero = HashFunction::new(4, vec![Bits::zeros(4); 2], None).unwrap();
        assert_eq!(zero.eval(&Bits::from_bits(&[1, 1, 0, 1])).unwrap(), Bits::zeros(2));
        let id = HashFunction::prefix(4, 4);
        let x = Bits::from_bits(&[1, 0, 1, 1]);
        assert_eq!(id.eval(&x).unwrap(), x);
        let m = HashFunction::new(4, vec![Bits::from_bits(&[1, 1, 0, 0]), Bits::from_bits(&[1, 0, 1, 0])], None).unwrap();
        let y = m.eval(&Bits::from_bits(&[1, 0, 1, 0])).unwrap();
        assert_eq!(y.to_bits(), vec![1, 0]);
        assert_eq!(m.eval_index(0b1010), 0b10);
        assert!(m.eval(&Bits::zeros(3)).is_err());
    }

    #[test]
    fn pad_examples() {
        let x = Bits::from_bits(&[1, 1, 0, 1]);
        assert_eq!(pad_substring(&x, &[0, 1, 2, 3]).unwrap(), x);
        assert_eq!(pad_substring(&x, &[]).unwrap(), Bits::zeros(4));
        assert_eq!(pad_substring(&x, &[0, 2]).unwrap().to_bits(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn ndlf_counts() {
        assert_eq!(enumerate_ndlf(1).unwrap(), vec![Ndlf::xor()]);
        assert_eq!(enumerate_ndlf(2).unwrap().len(), 9);
        assert_eq!(enumerate_ndlf(3).unwrap().len(), 49);
        assert!(enumerate_ndlf(17).is_err());
    }

    #[test]
    fn balance_examples() {
        for b in enumerate_ndlf(3).unwrap() {
            assert!(is_two_balanced(3, &b.table()).unwrap());
        }
        assert!(!is_two_balanced(1, &[0, 0, 0, 0]).unwrap());
        let and: Vec<u8> = (0..16).map(|i| ((i >> 2) & (i & 3) & 1) as u8).collect();
        assert!(!is_two_balanced(2, &and).unwrap());
    }

    #[test]
    fn compose_rejections() {
        let a = HashFamily::affine(2, 1);
        assert!(compose_balanced(1, &[0, 1, 1, 0], &HashFamily::linear(2, 1), &a).is_err());
        assert!(compose_balanced(1, &[0, 0, 0, 0], &a, &a).is_err());
        assert!(compose_balanced(1, &[0, 1, 1, 0], &a, &a).is_ok());
    }

    #[test]
    fn composed_xor_strongly_universal() {
        let a = HashFamily::affine(2, 1);
        let c = compose_balanced(1, &Ndlf::xor().table(), &a, &a).unwrap();
        assert!(strong_universality_deviation(&c).unwrap() < 1e-12);
    }

    #[test]
    fn factorized_profile_matches_brute_force() {
        for (n, l) in [(3, 1), (3, 2), (4, 2)] {
            for fam in [HashFamily::linear(n, l), HashFamily::affine(n, l)] {
                let (c, d) = universality_profile(&fam).unwrap();
                assert!((c - max_collision_probability(&fam).unwrap()).abs() < 1e-12);
                if fam.kind == HashKind::Affine {
                    assert!((d - strong_universality_deviation(&fam).unwrap()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn member_indexing_round_trip() {
        let fam = HashFamily::affine(3, 2);
        let all: Vec<_> = fam.iter().unwrap().collect();
        assert_eq!(all.len(), 256);
        let mut seen = std::collections::HashSet::new();
        for f in &all {
            assert!(seen.insert(serde_json::to_string(f).unwrap()));
        }
    }

    #[test]
    fn hex_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = HashFamily::affine(13, 3).sample(&mut rng);
        let s = serde_json::to_string(&f).unwrap();
        let g: HashFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn bits_index_convention() {
        let b = Bits::from_index(0b100, 3);
        assert_eq!(b.to_bits(), vec![1, 0, 0]);
        assert_eq!(b.to_index(), 4);
    }
}
