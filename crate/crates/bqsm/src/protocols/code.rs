//! Binary linear codes with syndrome decoding by coset-leader tables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hashing::Bits;
use crate::{input_err, Error, Result};

/// Longest code with a full coset table.
pub const MAX_CODE_LEN: usize = 24;

const NO_LEADER: u32 = u32::MAX;

/// A code of length `len` given by its parity checks. Words are integers
/// with position 0 as the most significant of `len` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCode {
    label: String,
    len: usize,
    checks: Vec<u32>,
    #[serde(skip)]
    leaders: Vec<u32>,
    radius: usize,
}

impl LinearCode {
    pub fn new(label: impl Into<String>, len: usize, checks: Vec<u32>) -> Result<Self> {
        if len == 0 || len > MAX_CODE_LEN {
            return Err(Error::Capacity(format!("code length {len} (limit {MAX_CODE_LEN})")));
        }
        if checks.len() > 20 {
            return Err(Error::Capacity(format!("{} parity checks (limit 20)", checks.len())));
        }
        if checks.iter().any(|&c| c >> len != 0) {
            return input_err("parity check wider than the code");
        }
        let mut code = Self { label: label.into(), len, checks, leaders: Vec::new(), radius: 0 };
        code.build_table();
        Ok(code)
    }

    /// `x_0 + x_i = 0` for every i.
    pub fn repetition(len: usize) -> Result<Self> {
        if len < 2 {
            return input_err("repetition code needs length >= 2");
        }
        let top = 1u32 << (len - 1);
        Self::new(format!("rep{len}"), len, (1..len).map(|i| top | (1 << (len - 1 - i))).collect())
    }

    /// The [7,4] Hamming code: column j of the check matrix is j + 1 in binary.
    pub fn hamming74() -> Self {
        let checks = (0..3)
            .map(|row| (0..7).filter(|&j| ((j + 1) >> (2 - row)) & 1 == 1).fold(0u32, |acc, j| acc | (1 << (6 - j))))
            .collect();
        Self::new("hamming74", 7, checks).expect("fixed code")
    }

    /// Uniformly random check matrix with `s` rows.
    pub fn random<R: Rng + ?Sized>(len: usize, s: usize, rng: &mut R) -> Result<Self> {
        if len == 0 || len > MAX_CODE_LEN {
            return Err(Error::Capacity(format!("code length {len}")));
        }
        let mask = if len == 32 { u32::MAX } else { (1u32 << len) - 1 };
        Self::new(format!("random{len}x{s}"), len, (0..s).map(|_| rng.gen::<u32>() & mask).collect())
    }

    /// No checks: nothing is sent and nothing is corrected.
    pub fn trivial(len: usize) -> Result<Self> {
        Self::new(format!("none{len}"), len, Vec::new())
    }

    /// Resolves `rep<k>`, `hamming74` or `none<k>`.
    pub fn by_name(name: &str) -> Result<Self> {
        if name == "hamming74" {
            return Ok(Self::hamming74());
        }
        if let Some(k) = name.strip_prefix("rep") {
            return Self::repetition(k.parse().map_err(|_| Error::Input(format!("bad code {name}")))?);
        }
        if let Some(k) = name.strip_prefix("none") {
            return Self::trivial(k.parse().map_err(|_| Error::Input(format!("bad code {name}")))?);
        }
        input_err(format!("unknown code {name}"))
    }

    fn build_table(&mut self) {
        let s = self.checks.len();
        let mut leaders = vec![NO_LEADER; 1 << s];
        let mut filled = 0usize;
        let mut min_distance = None;
        'outer: for w in 0..=self.len {
            for e in words_of_weight(self.len, w) {
                let syn = self.syndrome(e) as usize;
                if leaders[syn] == NO_LEADER {
                    leaders[syn] = e;
                    filled += 1;
                } else if syn == 0 && min_distance.is_none() {
                    min_distance = Some(w);
                }
                if filled == leaders.len() && min_distance.is_some() {
                    break 'outer;
                }
            }
        }
        self.radius = match min_distance {
            Some(d) => (d - 1) / 2,
            None => self.len,
        };
        if s == 0 {
            self.radius = 0;
        }
        self.leaders = leaders;
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn syndrome_len(&self) -> usize {
        self.checks.len()
    }

    /// Every error pattern of weight at most this is corrected.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn syndrome(&self, word: u32) -> u32 {
        self.checks.iter().fold(0, |acc, &c| (acc << 1) | ((c & word).count_ones() & 1))
    }

    /// Nearest word to `received` with the given syndrome.
    pub fn decode(&self, received: u32, syndrome: u32) -> u32 {
        let leader = self.leaders[(self.syndrome(received) ^ syndrome) as usize];
        if leader == NO_LEADER {
            received
        } else {
            received ^ leader
        }
    }

    /// Probability that a block whose first `active` positions flip
    /// independently with probability `phi` (the rest never flip) is decoded
    /// wrongly.
    pub fn block_failure(&self, phi: f64, active: usize) -> f64 {
        let active = active.min(self.len);
        let outside = if active == self.len { 0 } else { (1u32 << (self.len - active)) - 1 };
        let ok: f64 = self
            .leaders
            .iter()
            .filter(|&&l| l != NO_LEADER && l & outside == 0)
            .map(|&l| {
                let w = l.count_ones() as i32;
                phi.powi(w) * (1.0 - phi).powi(active as i32 - w)
            })
            .sum();
        (1.0 - ok).max(0.0)
    }

    /// Failure probability for a string of `total` bits cut into blocks.
    pub fn failure_probability(&self, phi: f64, total: usize) -> f64 {
        let full = total / self.len;
        let rest = total % self.len;
        let mut ok = (1.0 - self.block_failure(phi, self.len)).powi(full as i32);
        if rest > 0 {
            ok *= 1.0 - self.block_failure(phi, rest);
        }
        1.0 - ok
    }

    fn blocks(&self, x: &Bits) -> Vec<u32> {
        (0..x.len().div_ceil(self.len))
            .map(|b| {
                (0..self.len).fold(0u32, |acc, j| {
                    let i = b * self.len + j;
                    (acc << 1) | (i < x.len() && x.get(i)) as u32
                })
            })
            .collect()
    }

    /// Concatenated block syndromes; the last block is padded with zeros.
    pub fn syndrome_bits(&self, x: &Bits) -> Bits {
        let s = self.syndrome_len();
        let blocks = self.blocks(x);
        let mut out = Bits::zeros(blocks.len() * s);
        for (b, &w) in blocks.iter().enumerate() {
            let syn = self.syndrome(w);
            for j in 0..s {
                out.set(b * s + j, (syn >> (s - 1 - j)) & 1 == 1);
            }
        }
        out
    }

    pub fn decode_bits(&self, received: &Bits, syndrome: &Bits) -> Result<Bits> {
        let s = self.syndrome_len();
        let blocks = self.blocks(received);
        if syndrome.len() != blocks.len() * s {
            return input_err("syndrome length does not match the received string");
        }
        let mut out = Bits::zeros(received.len());
        for (b, &w) in blocks.iter().enumerate() {
            let syn = (0..s).fold(0u32, |acc, j| (acc << 1) | syndrome.get(b * s + j) as u32);
            let d = self.decode(w, syn);
            for j in 0..self.len {
                let i = b * self.len + j;
                if i < received.len() {
                    out.set(i, (d >> (self.len - 1 - j)) & 1 == 1);
                }
            }
        }
        Ok(out)
    }
}

/// All `len`-bit words of weight `w` in increasing order (Gosper's hack).
fn words_of_weight(len: usize, w: usize) -> impl Iterator<Item = u32> {
    let limit = 1u64 << len;
    let first = if w == 0 { 0u64 } else { (1u64 << w) - 1 };
    let mut cur = Some(first);
    std::iter::from_fn(move || {
        let v = cur?;
        if v >= limit {
            return None;
        }
        cur = if v == 0 {
            None
        } else {
            let c = v & v.wrapping_neg();
            let r = v + c;
            Some((((r ^ v) >> 2) / c) | r)
        };
        Some(v as u32)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gosper_counts() {
        assert_eq!(words_of_weight(6, 2).count(), 15);
        assert_eq!(words_of_weight(6, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(words_of_weight(3, 3).collect::<Vec<_>>(), vec![7]);
    }

    #[test]
    fn radii() {
        assert_eq!(LinearCode::hamming74().radius(), 1);
        assert_eq!(LinearCode::repetition(5).unwrap().radius(), 2);
        assert_eq!(LinearCode::repetition(4).unwrap().radius(), 1);
        assert_eq!(LinearCode::trivial(4).unwrap().radius(), 0);
    }

    #[test]
    fn corrects_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for code in [LinearCode::hamming74(), LinearCode::repetition(5).unwrap(), LinearCode::random(12, 8, &mut rng).unwrap()] {
            let t = code.radius();
            for _ in 0..200 {
                let x = rng.gen::<u32>() & ((1 << code.len()) - 1);
                for w in 0..=t {
                    for e in words_of_weight(code.len(), w).take(40) {
                        assert_eq!(code.decode(x ^ e, code.syndrome(x)), x);
                    }
                }
            }
        }
    }

    #[test]
    fn hamming_failure_closed_form() {
        let p: f64 = 0.05;
        let exact = 1.0 - (1.0 - p).powi(7) - 7.0 * p * (1.0 - p).powi(6);
        assert!((LinearCode::hamming74().block_failure(p, 7) - exact).abs() < 1e-12);
        let rep = LinearCode::repetition(3).unwrap();
        assert!((rep.block_failure(p, 3) - (3.0 * p * p * (1.0 - p) + p.powi(3))).abs() < 1e-12);
        assert!(rep.block_failure(p, 1).abs() < 1e-12);
    }

    #[test]
    fn block_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let code = LinearCode::hamming74();
        let x = Bits::random(30, &mut rng);
        let syn = code.syndrome_bits(&x);
        assert_eq!(syn.len(), 5 * 3);
        let mut y = x.clone();
        y.set(3, !y.get(3));
        y.set(29, !y.get(29));
        assert_eq!(code.decode_bits(&y, &syn).unwrap(), x);
    }
}
