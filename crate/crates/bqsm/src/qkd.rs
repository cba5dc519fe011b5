//! One-way QKD against eavesdroppers with bounded quantum memory: honest
//! execution (preparation, sifting, error correction, privacy amplification),
//! rate formulas, noise thresholds and the overall average entropic
//! uncertainty bound for Haar-random bases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical_ot::Link;
use crate::cqstate::{pa_exact_distance, CqEntry, CqState, FamilyAveraging};
use crate::entropy::{binary_entropy, shannon_entropy, Distribution};
use crate::hashing::{Bits, HashFamily};
use crate::protocols::{AdversaryStrategy, LinearCode, ProtocolTranscript};
use crate::qstate::{haar_unitary, Basis, CMat, DensityOperator, C64};
use crate::uncertainty::average_entropy_bound;
use crate::{input_err, Error, Result};

/// Longest honest run.
pub const MAX_SYMBOLS: usize = 100_000;

/// Longest sifted string for the exact rate check.
pub const MAX_RATE_CHECK_M: usize = 8;

/// Basis alphabet from which both parties pick independently per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alphabet {
    Bb84,
    SixState,
    /// `count` qubit bases drawn once from the Haar measure with `seed`.
    Haar { count: usize, seed: u64 },
}

impl Alphabet {
    pub fn parse(name: &str, count: usize, seed: u64) -> Result<Self> {
        Ok(match name {
            "bb84" => Alphabet::Bb84,
            "six-state" | "six_state" | "sixstate" => Alphabet::SixState,
            "haar" => Alphabet::Haar { count, seed },
            _ => return input_err(format!("unknown alphabet {name}")),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Alphabet::Bb84 => "bb84".into(),
            Alphabet::SixState => "six-state".into(),
            Alphabet::Haar { count, .. } => format!("haar{count}"),
        }
    }

    pub fn bases(&self) -> Result<Vec<Basis>> {
        Ok(match *self {
            Alphabet::Bb84 => vec![Basis::plus(), Basis::cross()],
            Alphabet::SixState => vec![Basis::plus(), Basis::cross(), Basis::circular()],
            Alphabet::Haar { count, seed } => {
                if count == 0 {
                    return input_err("empty basis alphabet");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|i| Ok(Basis::from_unitary(format!("haar{i}"), &haar_unitary(2, &mut rng))?))
                    .collect::<Result<_>>()?
            }
        })
    }

    /// Average entropic uncertainty bound of the alphabet: exact for BB84 and
    /// six-state, a numerical minimum over the Bloch sphere otherwise.
    pub fn h(&self) -> Result<f64> {
        Ok(match self {
            Alphabet::Bb84 => 0.5,
            Alphabet::SixState => 2.0 / 3.0,
            Alphabet::Haar { .. } => average_entropy_bound(&self.bases()?, 4000)?.value,
        })
    }
}

/// `h - h(p)`.
pub fn binary_rate(h: f64, p: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return input_err(format!("p = {p} must lie in [0, 1/2)"));
    }
    Ok(h - binary_entropy(p)?)
}

/// The `p < 1/2` with `h(p) = h`, by bisection.
pub fn noise_threshold(h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 1.0) {
        return input_err(format!("h = {h} must lie in (0, 1]"));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `h_d = (sum_{i=2}^d 1/i) / ln 2`.
pub fn overall_bound(d: usize) -> Result<f64> {
    if d < 2 {
        return input_err("d must be at least 2");
    }
    Ok((2..=d).map(|i| 1.0 / i as f64).sum::<f64>() / std::f64::consts::LN_2)
}

/// Average Shannon entropy of a fixed pure state measured in Haar-random
/// bases: (mean, standard error).
pub fn overall_bound_mc(d: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if d < 2 || samples < 2 {
        return input_err("need d >= 2 and at least two samples");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let u = haar_unitary(d, &mut rng);
        let p: Vec<f64> = (0..d).map(|j| u[(0, j)].norm_sqr()).collect();
        let h = shannon_entropy(&Distribution::from_unchecked(p));
        s += h;
        s2 += h * h;
    }
    let k = samples as f64;
    let mean = s / k;
    Ok((mean, ((s2 / k - mean * mean).max(0.0) / (k - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub alphabet: String,
    pub h: f64,
    pub p: f64,
    pub rate: f64,
}

/// Noise thresholds for BB84, six-state and the large-alphabet qubit bound.
pub fn threshold_table() -> Result<Vec<ThresholdRow>> {
    [("bb84", 0.5), ("six-state", 2.0 / 3.0), ("haar", overall_bound(2)?)]
        .into_iter()
        .map(|(name, h)| {
            let p = noise_threshold(h)?;
            Ok(ThresholdRow { alphabet: name.into(), h, p, rate: binary_rate(h, p)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdConfig {
    pub alphabet: Alphabet,
    /// Channel bit-flip probability.
    pub p: f64,
    /// Error-correcting code, by name (`rep<k>`, `hamming74`, `none<k>`).
    pub code: String,
    /// Eavesdropper memory in qubits, independent of the key length.
    pub q: usize,
    pub symbols: usize,
    /// Bits subtracted from the key length for the target security level.
    pub margin: usize,
    pub seed: u64,
}

impl QkdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.p) {
            return input_err(format!("p = {} must lie in [0, 1/2)", self.p));
        }
        if self.symbols == 0 || self.symbols > MAX_SYMBOLS {
            return Err(Error::Capacity(format!("{} symbols (limit {MAX_SYMBOLS})", self.symbols)));
        }
        LinearCode::by_name(&self.code)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkdRun {
    pub alice_sifted: Bits,
    pub bob_sifted: Bits,
    pub syndrome: Bits,
    pub alice_key: Bits,
    pub bob_key: Bits,
    pub summary: QkdSummary,
    pub transcript: ProtocolTranscript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdSummary {
    pub sifted: usize,
    pub h: f64,
    /// Syndrome bits per sifted symbol.
    pub e: f64,
    pub binary_entropy_of_p: f64,
    /// `floor(M (h - e) - q) - margin`; no key is extracted when not positive.
    pub key_length: i64,
    pub extracted: bool,
    pub decode_failed: bool,
    pub keys_equal: bool,
    /// Probability that the decoder fails on this many sifted symbols.
    pub design_failure: f64,
}

/// Packs bits LSB-first into words.
fn pack(bits: &[bool]) -> Vec<u64> {
    let mut w = vec![0u64; bits.len().div_ceil(64) + 1];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            w[i / 64] |= 1 << (i % 64);
        }
    }
    w
}

/// Hankel-matrix hash `out_i = xor_j s_{i+j} x_j` with `s` of length
/// `len(x) + ell - 1`; a two-universal family with a short description.
fn hankel_hash(s: &[bool], x: &[bool], ell: usize) -> Vec<bool> {
    let m = x.len();
    let sw = pack(s);
    let xw = pack(x);
    let words = m.div_ceil(64);
    (0..ell)
        .map(|i| {
            let mut acc = 0u32;
            for k in 0..words {
                let pos = i + 64 * k;
                let (q, r) = (pos / 64, pos % 64);
                let lo = sw.get(q).copied().unwrap_or(0) >> r;
                let hi = if r == 0 { 0 } else { sw.get(q + 1).copied().unwrap_or(0) << (64 - r) };
                acc ^= ((lo | hi) & xw[k]).count_ones();
            }
            acc & 1 == 1
        })
        .collect()
}

fn to_bits(v: &[bool]) -> Bits {
    let mut b = Bits::zeros(v.len());
    for (i, &x) in v.iter().enumerate() {
        b.set(i, x);
    }
    b
}

/// Honest execution: preparation, sifting, one-way error correction with
/// the configured code, and privacy amplification to the rate-formula length.
pub fn run_qkd(config: &QkdConfig) -> Result<QkdRun> {
    config.validate()?;
    let code = LinearCode::by_name(&config.code)?;
    let h = config.alphabet.h()?;
    let k = config.alphabet.bases()?.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = ProtocolTranscript::new("qkd", config.seed, "honest".into(), config.symbols);
    t.input("config", config);
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for _ in 0..config.symbols {
        let x: bool = rng.gen();
        let (ba, bb) = (rng.gen_range(0..k), rng.gen_range(0..k));
        if ba == bb {
            alice.push(x);
            bob.push(x ^ rng.gen_bool(config.p));
        }
    }
    let m = alice.len();
    t.send("A", "sifted_positions", m);
    let alice_sifted = to_bits(&alice);
    let bob_sifted = to_bits(&bob);
    let syndrome = code.syndrome_bits(&alice_sifted);
    t.send("A", "syndrome", syndrome.to_hex());
    let corrected = code.decode_bits(&bob_sifted, &syndrome)?;
    let decode_failed = corrected != alice_sifted;
    let e = if m == 0 { 0.0 } else { syndrome.len() as f64 / m as f64 };
    let key_length = (m as f64 * h - syndrome.len() as f64 - config.q as f64).floor() as i64 - config.margin as i64;
    let extracted = key_length > 0;
    let (alice_key, bob_key) = if extracted {
        let ell = key_length as usize;
        let s: Vec<bool> = (0..m + ell - 1).map(|_| rng.gen()).collect();
        t.send("A", "hash_seed", to_bits(&s).to_hex());
        let bob_c: Vec<bool> = (0..m).map(|i| corrected.get(i)).collect();
        (to_bits(&hankel_hash(&s, &alice, ell)), to_bits(&hankel_hash(&s, &bob_c, ell)))
    } else {
        (Bits::zeros(0), Bits::zeros(0))
    };
    let summary = QkdSummary {
        sifted: m,
        h,
        e,
        binary_entropy_of_p: binary_entropy(config.p)?,
        key_length,
        extracted,
        decode_failed,
        keys_equal: alice_key == bob_key,
        design_failure: code.failure_probability(config.p, m),
    };
    t.output("summary", &summary);
    Ok(QkdRun { alice_sifted, bob_sifted, syndrome, alice_key, bob_key, summary, transcript: t })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheckConfig {
    pub alphabet: Alphabet,
    /// Sifted length.
    pub m: usize,
    pub code: String,
    pub margin: usize,
    /// Target distance of the final key from uniform.
    pub epsilon: f64,
    /// Basis strings used for the privacy-amplification assembly.
    pub basis_samples: usize,
    pub hash_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheckReport {
    pub alphabet: String,
    pub eavesdropper: String,
    pub m: usize,
    pub q: usize,
    pub h: f64,
    pub syndrome_bits: usize,
    pub key_length: i64,
    pub measured: f64,
    pub stderr: f64,
    pub bound: f64,
    pub epsilon: f64,
    pub meets_level: bool,
    pub links: Vec<Link>,
}

impl RateCheckReport {
    pub fn holds(&self) -> bool {
        self.links.iter().all(Link::holds)
    }
}

fn product_in_bases(x: usize, thetas: &[usize], bases: &[Basis]) -> Vec<C64> {
    let n = thetas.len();
    let mut v = vec![C64::new(1.0, 0.0)];
    for (j, &th) in thetas.iter().enumerate() {
        let e = &bases[th].vectors()[(x >> (n - 1 - j)) & 1];
        let mut next = Vec::with_capacity(v.len() * 2);
        for &a in &v {
            next.push(a * e[0]);
            next.push(a * e[1]);
        }
        v = next;
    }
    v
}

fn thetas_of(index: usize, k: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    let mut i = index;
    for j in (0..m).rev() {
        out[j] = i % k;
        i /= k;
    }
    out
}

/// Assembles the eavesdropper's state over Alice's sifted string and checks
/// the key extracted at the rate-formula length against the privacy
/// amplification bound. `None` is an eavesdropper that does not interact.
pub fn rate_bound_check(config: &RateCheckConfig, eavesdropper: Option<&AdversaryStrategy>) -> Result<RateCheckReport> {
    let m = config.m;
    if m == 0 || m > MAX_RATE_CHECK_M {
        return Err(Error::Capacity(format!("sifted length {m} (limit {MAX_RATE_CHECK_M})")));
    }
    let bases = config.alphabet.bases()?;
    let k = bases.len();
    let h = config.alphabet.h()?;
    let code = LinearCode::by_name(&config.code)?;
    let inst = eavesdropper.map(|s| s.instrument(m)).transpose()?;
    let q = inst.as_ref().map_or(0, |i| i.memory_qubits());
    let dim = 1usize << m;
    let syn: Vec<u64> = (0..dim).map(|x| code.syndrome_bits(&Bits::from_index(x as u64, m)).to_index()).collect();
    let s_len = code.syndrome_bits(&Bits::zeros(m)).len();
    let key_length = (m as f64 * h - s_len as f64 - q as f64).floor() as i64 - config.margin as i64;
    // Outcome probabilities given (theta, x), for the uncertainty link and the assembly.
    let outcomes = |thetas: &[usize], x: usize| -> Vec<Vec<C64>> {
        match &inst {
            Some(i) => i.apply(&product_in_bases(x, thetas, &bases)),
            None => vec![vec![C64::new(1.0, 0.0)]],
        }
    };
    let total_thetas = k.checked_pow(m as u32).unwrap_or(usize::MAX);
    let mut links = Vec::new();
    if total_thetas <= 4096 {
        let mut hs = 0.0;
        for ti in 0..total_thetas {
            let th = thetas_of(ti, k, m);
            let outs: Vec<Vec<Vec<C64>>> = (0..dim).map(|x| outcomes(&th, x)).collect();
            for y in 0..outs[0].len() {
                let pxy: Vec<f64> = outs.iter().map(|o| o[y].iter().map(|a| a.norm_sqr()).sum::<f64>() / dim as f64).collect();
                let py: f64 = pxy.iter().sum();
                if py > 1e-15 {
                    let cond = Distribution::from_unchecked(pxy.iter().map(|p| p / py).collect());
                    hs += py * shannon_entropy(&cond) / total_thetas as f64;
                }
            }
        }
        links.push(Link::at_least("uncertainty_shannon", hs, m as f64 * h));
    }
    if key_length <= 0 {
        return Ok(RateCheckReport {
            alphabet: config.alphabet.label(),
            eavesdropper: eavesdropper.map_or("none".into(), |s| s.label()),
            m,
            q,
            h,
            syndrome_bits: s_len,
            key_length,
            measured: 0.0,
            stderr: 0.0,
            bound: 0.0,
            epsilon: config.epsilon,
            meets_level: true,
            links,
        });
    }
    let ell = key_length as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sampled: Vec<usize> = if total_thetas <= config.basis_samples.max(1) {
        (0..total_thetas).collect()
    } else {
        (0..config.basis_samples.max(1)).map(|_| rng.gen_range(0..total_thetas)).collect()
    };
    let ny = inst.as_ref().map_or(1, |i| i.outcomes());
    let nsyn = 1usize << s_len;
    let mut entries = Vec::new();
    for (si, &ti) in sampled.iter().enumerate() {
        let th = thetas_of(ti, k, m);
        for x in 0..dim {
            for (y, w) in outcomes(&th, x).iter().enumerate() {
                let p: f64 = w.iter().map(|a| a.norm_sqr()).sum();
                if p <= 0.0 {
                    continue;
                }
                let d = w.len();
                let rho = DensityOperator::from_unchecked(CMat::from_fn(d, d, |i, j| w[i] * w[j].conj() / p));
                let u = (si * ny + y) * nsyn + syn[x] as usize;
                entries.push(CqEntry { x, u, p: p / (dim * sampled.len()) as f64, rho });
            }
        }
    }
    let total: f64 = entries.iter().map(|e| e.p).sum();
    entries.iter_mut().for_each(|e| e.p /= total);
    let cq = CqState::new(dim, sampled.len() * ny * nsyn, q, entries)?;
    let family = HashFamily::linear(m, ell);
    let averaging = if family.size().is_some_and(|s| s <= 256) {
        FamilyAveraging::Exhaustive
    } else {
        FamilyAveraging::Sampled { count: config.hash_samples.max(2), seed: config.seed }
    };
    let (measured, stderr, _) = pa_exact_distance(&cq, &family, averaging)?;
    let mut pu = vec![0.0; cq.u_card()];
    let mut mx = vec![0.0f64; cq.u_card()];
    for e in cq.entries() {
        pu[e.u] += e.p;
        mx[e.u] = mx[e.u].max(e.p);
    }
    let bound: f64 = pu
        .iter()
        .zip(&mx)
        .filter(|(p, _)| **p > 0.0)
        .map(|(&p, &mxu)| p * (0.5 * 2f64.powf(-0.5 * (-(mxu / p).log2() - q as f64 - ell as f64))).min(1.0))
        .sum();
    links.push(Link::at_most("privacy_amplification", measured, bound));
    Ok(RateCheckReport {
        alphabet: config.alphabet.label(),
        eavesdropper: eavesdropper.map_or("none".into(), |s| s.label()),
        m,
        q,
        h,
        syndrome_bits: s_len,
        key_length,
        measured,
        stderr,
        bound,
        epsilon: config.epsilon,
        meets_level: measured <= config.epsilon,
        links,
    })
}
