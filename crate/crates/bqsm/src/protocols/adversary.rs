//! Memory-bounded adversaries. An adversary receives every qubit, applies a
//! circuit of local gates, measures all but `q` qubits in the computational
//! basis, and keeps the rest as its quantum memory when the bound applies.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::qstate::{bell_basis, trace_norm_hermitian, Basis, CMat};
use crate::{input_err, Error, Result};

/// Largest register the exact adversarial paths handle.
pub const MAX_EXACT_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub matrix: CMat,
}

impl Gate {
    pub fn new(qubits: Vec<usize>, matrix: CMat) -> Result<Self> {
        let d = 1usize << qubits.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return input_err(format!("gate on {} qubits needs a {d}x{d} matrix", qubits.len()));
        }
        if (matrix.adjoint() * &matrix - CMat::identity(d, d)).norm() > 1e-9 {
            return input_err("gate is not unitary");
        }
        Ok(Self { qubits, matrix })
    }
}

/// Circuit plus the list of qubits kept in memory. Measured qubits are the
/// others in increasing order; their outcome is the classical record `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    n: usize,
    gates: Vec<Gate>,
    kept: Vec<usize>,
    measured: Vec<usize>,
}

impl Instrument {
    pub fn new(n: usize, gates: Vec<Gate>, kept: Vec<usize>) -> Result<Self> {
        if n == 0 || n > MAX_EXACT_N {
            return Err(Error::Capacity(format!("adversarial run with n = {n} (limit {MAX_EXACT_N})")));
        }
        for g in &gates {
            let mut seen = g.qubits.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != g.qubits.len() || seen.iter().any(|&q| q >= n) {
                return input_err("gate acts on invalid or repeated qubits");
            }
        }
        let mut k = kept.clone();
        k.sort_unstable();
        k.dedup();
        if k.len() != kept.len() || k.iter().any(|&q| q >= n) {
            return input_err("kept qubits invalid or repeated");
        }
        let measured = (0..n).filter(|q| !kept.contains(q)).collect();
        Ok(Self { n, gates, kept, measured })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn memory_qubits(&self) -> usize {
        self.kept.len()
    }

    pub fn outcomes(&self) -> usize {
        1 << self.measured.len()
    }

    pub fn memory_dim(&self) -> usize {
        1 << self.kept.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Applies the circuit to qubits `offset..offset + n` of a larger register.
    pub(crate) fn run_circuit(&self, v: &mut [C64], total: usize, offset: usize) {
        for g in &self.gates {
            let qs: Vec<usize> = g.qubits.iter().map(|&q| q + offset).collect();
            apply_gate(v, total, &qs, &g.matrix);
        }
    }

    /// `(y, m)` for each basis index of the n-qubit register.
    pub(crate) fn split_index(&self, i: usize) -> (usize, usize) {
        let bit = |q: usize| (i >> (self.n - 1 - q)) & 1;
        let y = self.measured.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
        let m = self.kept.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
        (y, m)
    }

    /// Inverse of `split_index`.
    pub(crate) fn join_index(&self, y: usize, m: usize) -> usize {
        let mut i = 0;
        for (k, &q) in self.measured.iter().enumerate() {
            i |= ((y >> (self.measured.len() - 1 - k)) & 1) << (self.n - 1 - q);
        }
        for (k, &q) in self.kept.iter().enumerate() {
            i |= ((m >> (self.kept.len() - 1 - k)) & 1) << (self.n - 1 - q);
        }
        i
    }

    /// Unnormalized memory vector for every outcome `y` on input `v`.
    pub fn apply(&self, v: &[C64]) -> Vec<Vec<C64>> {
        let mut w = v.to_vec();
        self.run_circuit(&mut w, self.n, 0);
        let mut out = vec![vec![C64::new(0.0, 0.0); self.memory_dim()]; self.outcomes()];
        for (i, a) in w.into_iter().enumerate() {
            let (y, m) = self.split_index(i);
            out[y][m] = a;
        }
        out
    }
}

/// Applies `m` to the listed qubits of an n-qubit vector; qubit 0 is the most
/// significant index bit and `qubits[0]` the most significant gate bit.
pub fn apply_gate(v: &mut [C64], n: usize, qubits: &[usize], m: &CMat) {
    let k = qubits.len();
    let dk = 1usize << k;
    let shifts: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    let mask: usize = shifts.iter().map(|s| 1usize << s).sum();
    let offsets: Vec<usize> = (0..dk)
        .map(|j| shifts.iter().enumerate().filter(|(t, _)| (j >> (k - 1 - t)) & 1 == 1).map(|(_, s)| 1usize << s).sum())
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); dk];
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        for j in 0..dk {
            buf[j] = v[base | offsets[j]];
        }
        for i in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..dk {
                s += m[(i, j)] * buf[j];
            }
            v[base | offsets[i]] = s;
        }
    }
}

/// `|x_1>_{theta_1} ... |x_n>_{theta_n}` with `theta` a bit mask (1 = x basis),
/// both read with position 0 as the most significant bit.
pub fn product_state(x: usize, theta: usize, n: usize) -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![C64::new(1.0, 0.0)];
    for j in 0..n {
        let xb = (x >> (n - 1 - j)) & 1;
        let cross = (theta >> (n - 1 - j)) & 1 == 1;
        let (a0, a1) = match (cross, xb) {
            (false, 0) => (1.0, 0.0),
            (false, _) => (0.0, 1.0),
            (true, 0) => (h, h),
            (true, _) => (h, -h),
        };
        let mut next = Vec::with_capacity(v.len() * 2);
        for &a in &v {
            next.push(a * a0);
            next.push(a * a1);
        }
        v = next;
    }
    v
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `|v><v|` without normalization.
pub(crate) fn outer(v: &[C64]) -> CMat {
    let d = v.len();
    CMat::from_fn(d, d, |i, j| v[i] * v[j].conj())
}

/// `1/2 || aa* - bb* ||_1` for unnormalized vectors. The Gram determinant is
/// taken from the component of `b` orthogonal to `a`, which stays accurate
/// when the vectors nearly coincide.
pub(crate) fn rank_one_distance(a: &[C64], b: &[C64]) -> f64 {
    let na = norm_sqr(a);
    let nb = norm_sqr(b);
    if na == 0.0 || nb == 0.0 {
        return 0.5 * (na + nb);
    }
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let c = ip / na;
    let perp: f64 = a.iter().zip(b).map(|(x, y)| (y - c * x).norm_sqr()).sum();
    0.5 * ((na - nb).powi(2) + 4.0 * na * perp).max(0.0).sqrt()
}

/// Best success probability for telling apart two sub-normalized operators.
pub(crate) fn helstrom(r0: &CMat, r1: &CMat) -> f64 {
    0.5 * (r0.trace().re + r1.trace().re + trace_norm_hermitian(&(r0 - r1)))
}

/// Named adversary strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Keeps the first `q` qubits, measures the others in the + basis.
    StorePrefix { q: usize },
    /// Measures qubit i in basis `bases[i]` (a single entry applies to all).
    MeasureFixedBasis { bases: Vec<String> },
    /// Measures every qubit in the Breitbart basis.
    Breitbart,
    /// Bell measurement on qubit pairs (2k, 2k+1); an odd last qubit is kept.
    BellPairwiseXor,
    /// Arbitrary circuit and memory split.
    #[serde(skip)]
    Custom(Instrument),
}

fn single_basis(label: &str) -> Result<Basis> {
    Ok(match label {
        "+" | "plus" => Basis::plus(),
        "x" | "cross" => Basis::cross(),
        "breitbart" => Basis::breitbart(),
        "breitbart-rot" => Basis::breitbart_rotated(),
        "o" | "circular" => Basis::circular(),
        _ => return input_err(format!("unknown basis {label}")),
    })
}

impl AdversaryStrategy {
    /// The receiver that keeps everything.
    pub fn full_memory(n: usize) -> Self {
        AdversaryStrategy::StorePrefix { q: n }
    }

    pub fn measure_all(label: &str) -> Self {
        AdversaryStrategy::MeasureFixedBasis { bases: vec![label.into()] }
    }

    /// Registry lookup: `store_prefix` (q), `measure_fixed_basis` (basis),
    /// `breitbart`, `bell_pairwise_xor`.
    pub fn from_name(name: &str, q: usize, basis: &str) -> Result<Self> {
        Ok(match name {
            "store_prefix" => AdversaryStrategy::StorePrefix { q },
            "measure_fixed_basis" => {
                AdversaryStrategy::MeasureFixedBasis { bases: basis.split(',').map(str::to_string).collect() }
            }
            "breitbart" => AdversaryStrategy::Breitbart,
            "bell_pairwise_xor" => AdversaryStrategy::BellPairwiseXor,
            _ => return input_err(format!("unknown adversary strategy {name}")),
        })
    }

    pub fn label(&self) -> String {
        match self {
            AdversaryStrategy::StorePrefix { q } => format!("store_prefix(q={q})"),
            AdversaryStrategy::MeasureFixedBasis { bases } => format!("measure_fixed_basis({})", bases.join(",")),
            AdversaryStrategy::Breitbart => "breitbart".into(),
            AdversaryStrategy::BellPairwiseXor => "bell_pairwise_xor".into(),
            AdversaryStrategy::Custom(i) => format!("custom(q={})", i.memory_qubits()),
        }
    }

    pub fn instrument(&self, n: usize) -> Result<Instrument> {
        let per_qubit = |labels: Vec<String>| -> Result<Instrument> {
            if labels.len() != 1 && labels.len() != n {
                return input_err(format!("{} bases given for {n} qubits", labels.len()));
            }
            let gates = (0..n)
                .map(|i| {
                    let b = single_basis(&labels[if labels.len() == 1 { 0 } else { i }])?;
                    Gate::new(vec![i], b.matrix().adjoint())
                })
                .collect::<Result<Vec<_>>>()?;
            Instrument::new(n, gates, vec![])
        };
        match self {
            AdversaryStrategy::StorePrefix { q } => {
                if *q > n {
                    return input_err(format!("q = {q} exceeds n = {n}"));
                }
                Instrument::new(n, vec![], (0..*q).collect())
            }
            AdversaryStrategy::MeasureFixedBasis { bases } => per_qubit(bases.clone()),
            AdversaryStrategy::Breitbart => per_qubit(vec!["breitbart".into()]),
            AdversaryStrategy::BellPairwiseXor => {
                let bell = bell_basis().matrix().adjoint();
                let gates = (0..n / 2).map(|k| Gate::new(vec![2 * k, 2 * k + 1], bell.clone())).collect::<Result<_>>()?;
                let kept = if n % 2 == 1 { vec![n - 1] } else { vec![] };
                Instrument::new(n, gates, kept)
            }
            AdversaryStrategy::Custom(inst) => {
                if inst.n() != n {
                    return input_err(format!("custom instrument acts on {} qubits, not {n}", inst.n()));
                }
                Ok(inst.clone())
            }
        }
    }

    pub fn memory_qubits(&self, n: usize) -> Result<usize> {
        Ok(self.instrument(n)?.memory_qubits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{prepare_bb84, Bb84};

    #[test]
    fn product_state_matches_qstate() {
        let n = 3;
        for x in 0..8 {
            for t in 0..8 {
                let bits: Vec<u8> = (0..n).map(|j| ((x >> (n - 1 - j)) & 1) as u8).collect();
                let th: Vec<Bb84> = (0..n).map(|j| Bb84::from_bit(((t >> (n - 1 - j)) & 1) as u8)).collect();
                let p = prepare_bb84(&bits, &th).unwrap();
                let v = product_state(x, t, n);
                for i in 0..8 {
                    assert!((p.amplitudes()[i] - v[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gate_on_second_qubit() {
        let h = Basis::cross().matrix();
        let mut v = product_state(0, 0, 2);
        apply_gate(&mut v, 2, &[1], &h);
        let w = product_state(0, 1, 2);
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn store_prefix_split() {
        let inst = AdversaryStrategy::StorePrefix { q: 1 }.instrument(3).unwrap();
        let out = inst.apply(&product_state(0b101, 0, 3));
        assert_eq!(out.len(), 4);
        assert!((out[0b01][1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_instrument_on_epr_like_inputs() {
        let inst = AdversaryStrategy::BellPairwiseXor.instrument(2).unwrap();
        // |00>_x has parity 0 in x and lands on Phi+ or Psi+.
        let out = inst.apply(&product_state(0, 0b11, 2));
        let p: Vec<f64> = out.iter().map(|v| norm_sqr(v)).collect();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        assert!(AdversaryStrategy::from_name("nope", 0, "+").is_err());
        assert!(Gate::new(vec![0], CMat::from_element(2, 2, C64::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn rank_one_distance_examples() {
        let a = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let b = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!((rank_one_distance(&a, &b) - 1.0).abs() < 1e-12);
        assert!(rank_one_distance(&a, &a).abs() < 1e-12);
    }
}
