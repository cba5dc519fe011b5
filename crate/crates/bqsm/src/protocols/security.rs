//! Exact security experiments on small instances: purification equivalence,
//! sender security against memory-bounded receivers, binding, receiver
//! security against arbitrary senders, and two standalone attacks.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::{apply_gate, helstrom, norm_sqr, outer, product_state, rank_one_distance, AdversaryStrategy, Instrument};
use super::runs::{memory_outcomes, pad_index};
use crate::classical_ot::Link;
use crate::cqstate::{pa_exact_distance, CqEntry, CqState, FamilyAveraging};
use crate::entropy::{hamming_ball_size, shannon_entropy, split_unchecked, Distribution};
use crate::hashing::{HashFamily, HashFunction};
use crate::qstate::{trace_norm_hermitian, Basis, CMat, DensityOperator, C64};
use crate::uncertainty::event_from_distributions;
use crate::{input_err, Error, Result};

pub use crate::classical_ot::Link as ChainLink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityProtocol {
    Rabin,
    Ot12,
    Commitment,
}

fn ones(n: usize) -> usize {
    (1usize << n) - 1
}

fn bit_at(x: usize, i: usize, n: usize) -> usize {
    (x >> (n - 1 - i)) & 1
}

fn positions(theta: usize, n: usize, v: usize) -> Vec<usize> {
    (0..n).filter(|&i| bit_at(theta, i, n) == v).collect()
}

/// Index of `x|_idx` as an |idx|-bit integer.
fn sub_index(x: usize, idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| (acc << 1) | bit_at(x, i, n))
}

fn hadamard() -> CMat {
    Basis::cross().matrix().adjoint()
}

// ---------------------------------------------------------------------------
// Purification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationReport {
    pub protocol: SecurityProtocol,
    pub strategy: String,
    pub n: usize,
    pub bases_checked: usize,
    /// Trace distance between the joint states of (basis string, sender
    /// string, adversary outcome, adversary memory) in the two pictures.
    pub distance: f64,
}

/// Largest n for the purified comparison (2n qubits are tracked).
pub const MAX_PURIFIED_N: usize = 8;

/// Compares the adversary's state when the sender transmits BB84 states with
/// the state when the sender transmits halves of EPR pairs and measures its
/// halves afterwards.
pub fn purification_check(
    strategy: &AdversaryStrategy,
    protocol: SecurityProtocol,
    n: usize,
    seed: u64,
) -> Result<PurificationReport> {
    if n == 0 || n > MAX_PURIFIED_N {
        return Err(Error::Capacity(format!("purification check with n = {n} (limit {MAX_PURIFIED_N})")));
    }
    let inst = strategy.instrument(n)?;
    let thetas: Vec<(usize, f64)> = match protocol {
        SecurityProtocol::Rabin => vec![(0, 0.5), (ones(n), 0.5)],
        _ if n <= 6 => (0..1usize << n).map(|t| (t, 1.0 / (1u64 << n) as f64)).collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32).map(|_| (rng.gen_range(0..1usize << n), 1.0 / 32.0)).collect()
        }
    };
    let total = 2 * n;
    let dim = 1usize << n;
    let mut epr = vec![C64::new(0.0, 0.0); 1 << total];
    let amp = (dim as f64).sqrt().recip();
    for s in 0..dim {
        epr[(s << n) | s] = C64::new(amp, 0.0);
    }
    inst.run_circuit(&mut epr, total, n);
    let h = hadamard();
    let mut distance = 0.0;
    for &(theta, w) in &thetas {
        let mut e = epr.clone();
        for i in (0..n).filter(|&i| bit_at(theta, i, n) == 1) {
            apply_gate(&mut e, total, &[i], &h);
        }
        let sw = w.sqrt();
        let sd = (w / dim as f64).sqrt();
        for x in 0..dim {
            let direct = inst.apply(&product_state(x, theta, n));
            let mut purified = vec![vec![C64::new(0.0, 0.0); inst.memory_dim()]; inst.outcomes()];
            for j in 0..dim {
                let (y, m) = inst.split_index(j);
                purified[y][m] = e[(x << n) | j] * sw;
            }
            for (d, p) in direct.iter().zip(&purified) {
                let d: Vec<C64> = d.iter().map(|a| a * sd).collect();
                distance += rank_one_distance(&d, p);
            }
        }
    }
    Ok(PurificationReport { protocol, strategy: strategy.label(), n, bases_checked: thetas.len(), distance })
}

// ---------------------------------------------------------------------------
// Sender security
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenderSecurityReport {
    pub protocol: SecurityProtocol,
    pub strategy: String,
    pub n: usize,
    pub ell: usize,
    pub q: usize,
    /// Distance of the output string from uniform given everything the
    /// receiver holds (conditioned on the event E for Rabin OT).
    pub measured: f64,
    pub stderr: f64,
    pub hash_members: usize,
    pub bound: f64,
    /// `Pr[E]` for Rabin OT, `Pr[D = 0], Pr[D = 1]` for 1-2 OT.
    pub event_probability: Option<f64>,
    pub pointer: Option<[f64; 2]>,
    pub links: Vec<Link>,
}

impl SenderSecurityReport {
    pub fn holds(&self) -> bool {
        self.links.iter().all(Link::holds)
    }

    pub fn failing_link(&self) -> Option<&str> {
        self.links.iter().find(|l| !l.holds()).map(|l| l.name.as_str())
    }
}

/// Largest n for the exact sender-security assembly.
pub const MAX_SENDER_N: usize = 10;

fn family_averaging(family: &HashFamily, seed: u64) -> FamilyAveraging {
    if family.size().is_some_and(|s| s <= 256) {
        FamilyAveraging::Exhaustive
    } else {
        FamilyAveraging::Sampled { count: 64, seed }
    }
}

/// `sum_u P(u) min(1, 1/2 2^{-1/2 (H_inf(X | U = u) - q - ell)})` over the
/// classical part of a cq-state.
fn per_u_pa_bound(rho: &CqState, q: usize, ell: usize) -> f64 {
    let mut pu = vec![0.0; rho.u_card()];
    let mut mx = vec![0.0f64; rho.u_card()];
    for e in rho.entries() {
        pu[e.u] += e.p;
        mx[e.u] = mx[e.u].max(e.p);
    }
    pu.iter()
        .zip(&mx)
        .filter(|(p, _)| **p > 0.0)
        .map(|(&p, &m)| {
            let h = -(m / p).log2();
            p * (0.5 * 2f64.powf(-0.5 * (h - q as f64 - ell as f64))).min(1.0)
        })
        .sum()
}

fn memory_state(w: &[C64]) -> DensityOperator {
    let nrm = norm_sqr(w);
    DensityOperator::from_unchecked(outer(w).unscale(nrm))
}

/// Distance of the sender's output from uniform given the receiver's
/// classical record and quantum memory, next to the bound assembled link by
/// link from the security argument. `lambda` sets the entropy rate of the
/// uncertainty event (Rabin OT only).
pub fn sender_security_distance(
    strategy: &AdversaryStrategy,
    protocol: SecurityProtocol,
    n: usize,
    ell: usize,
    lambda: f64,
    seed: u64,
) -> Result<SenderSecurityReport> {
    if ell == 0 || ell > n {
        return input_err(format!("ell = {ell} must lie in 1..=n"));
    }
    match protocol {
        SecurityProtocol::Rabin => rabin_sender_security(strategy, n, ell, lambda, seed),
        SecurityProtocol::Ot12 => ot12_sender_security(strategy, n, ell, seed),
        SecurityProtocol::Commitment => input_err("sender security applies to the OT protocols"),
    }
}

fn rabin_sender_security(
    strategy: &AdversaryStrategy,
    n: usize,
    ell: usize,
    lambda: f64,
    seed: u64,
) -> Result<SenderSecurityReport> {
    if n == 0 || n > MAX_SENDER_N {
        return Err(Error::Capacity(format!("sender security with n = {n} (limit {MAX_SENDER_N})")));
    }
    let inst = strategy.instrument(n)?;
    let q = inst.memory_qubits();
    let dim = 1usize << n;
    let ny = inst.outcomes();
    let scale = 1.0 / dim as f64;
    let outs: Vec<Vec<Vec<Vec<C64>>>> =
        [0, ones(n)].iter().map(|&th| (0..dim).map(|x| inst.apply(&product_state(x, th, n))).collect()).collect();
    // P(x, y | r)
    let pxy = |r: usize, x: usize, y: usize| scale * norm_sqr(&outs[r][x][y]);
    let py: Vec<[f64; 2]> =
        (0..ny).map(|y| [0, 1].map(|r| (0..dim).map(|x| pxy(r, x, y)).sum::<f64>())).collect();
    let signalling = py.iter().map(|p| (p[0] - p[1]).abs()).fold(0.0, f64::max);
    let mut links = vec![Link::at_most("outcome_independent_of_basis", signalling, 0.0)];
    let mut pe = 0.0;
    let mut min_h = f64::INFINITY;
    let mut kappa = 0.0;
    let mut floor_sum: f64 = 1.0;
    let mut kept: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for y in 0..ny {
        let p = 0.5 * (py[y][0] + py[y][1]);
        if p <= 1e-15 {
            continue;
        }
        let q_r = |r: usize| Distribution::from_unchecked((0..dim).map(|x| pxy(r, x, y) / py[y][r]).collect());
        let ev = event_from_distributions(n, &q_r(0), &q_r(1), lambda, None)?;
        kappa = ev.kappa;
        floor_sum = floor_sum.min(ev.probability_sum - ev.probability_bound);
        pe += p * ev.probability;
        for (r, br) in [(0, &ev.plus), (1, &ev.cross)] {
            if let Some(h) = br.min_entropy {
                min_h = min_h.min(h);
            }
            if br.probability > 0.0 {
                kept.push((r, y, br.small_set.clone()));
            }
        }
    }
    links.push(Link::at_least("event_sum_per_outcome", floor_sum, 0.0));
    links.push(Link::at_least("event_probability", pe, 0.5 * (1.0 - 2f64.powf(-kappa * n as f64))));
    if pe <= 0.0 {
        return Err(Error::Precondition("event has probability zero".into()));
    }
    links.push(Link::at_least("event_min_entropy", if min_h.is_finite() { min_h } else { f64::INFINITY }, lambda * n as f64));
    let mut entries = Vec::new();
    for (r, y, set) in kept {
        for x in set {
            let w = &outs[r][x][y];
            let p = 0.5 * scale * norm_sqr(w) / pe;
            if p > 0.0 {
                entries.push(CqEntry { x, u: r * ny + y, p, rho: memory_state(w) });
            }
        }
    }
    renormalize(&mut entries);
    let cq = CqState::new(dim, 2 * ny, q, entries)?;
    let family = HashFamily::linear(n, ell);
    let (measured, stderr, members) = pa_exact_distance(&cq, &family, family_averaging(&family, seed))?;
    let bound = per_u_pa_bound(&cq, q, ell);
    links.push(Link::at_most("privacy_amplification", measured, bound));
    Ok(SenderSecurityReport {
        protocol: SecurityProtocol::Rabin,
        strategy: strategy.label(),
        n,
        ell,
        q,
        measured,
        stderr,
        hash_members: members,
        bound,
        event_probability: Some(pe),
        pointer: None,
        links,
    })
}

/// The receiver's view of the Rabin OT string before any event conditioning:
/// X uniform, `U = (r, y)` and the memory left by `strategy`.
pub fn rabin_cq_state(strategy: &AdversaryStrategy, n: usize) -> Result<CqState> {
    if n == 0 || n > MAX_SENDER_N {
        return Err(Error::Capacity(format!("cq-state with n = {n} (limit {MAX_SENDER_N})")));
    }
    let inst = strategy.instrument(n)?;
    let dim = 1usize << n;
    let ny = inst.outcomes();
    let mut entries = Vec::new();
    for (r, th) in [0, ones(n)].into_iter().enumerate() {
        for x in 0..dim {
            for (y, w) in inst.apply(&product_state(x, th, n)).iter().enumerate() {
                let p = 0.5 * norm_sqr(w) / dim as f64;
                if p > 0.0 {
                    entries.push(CqEntry { x, u: r * ny + y, p, rho: memory_state(w) });
                }
            }
        }
    }
    renormalize(&mut entries);
    CqState::new(dim, 2 * ny, inst.memory_qubits(), entries)
}

/// Removes floating drift so the weights sum to one exactly enough for
/// `CqState::new`.
fn renormalize(entries: &mut [CqEntry]) {
    let total: f64 = entries.iter().map(|e| e.p).sum();
    for e in entries.iter_mut() {
        e.p /= total;
    }
}

/// Largest n for the 1-2 OT sender-security assembly.
pub const MAX_OT12_SENDER_N: usize = 6;

fn ot12_sender_security(strategy: &AdversaryStrategy, n: usize, ell: usize, seed: u64) -> Result<SenderSecurityReport> {
    if n == 0 || n > MAX_OT12_SENDER_N {
        return Err(Error::Capacity(format!("1-2 OT sender security with n = {n} (limit {MAX_OT12_SENDER_N})")));
    }
    let inst = strategy.instrument(n)?;
    let q = inst.memory_qubits();
    let dim = 1usize << n;
    let family = HashFamily::linear(n, ell);
    let f_d: Vec<HashFunction> = if family.size().is_some_and(|s| s <= 16) {
        family.iter()?.collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        (0..8).map(|_| family.sample(&mut rng)).collect()
    };
    let f_c: Vec<_> = f_d.iter().map(HashFunction::compiled).collect();
    let pf = 1.0 / f_d.len() as f64;
    let p_theta = 1.0 / dim as f64;
    let mut u_index: HashMap<(usize, usize, usize, usize, u64), usize> = HashMap::new();
    let mut entries = Vec::new();
    let mut worst_split = f64::INFINITY;
    let mut chain_rhs = 0.0;
    let mut shannon = 0.0;
    let mut pointer = [0.0; 2];
    for theta in 0..dim {
        let parts = [positions(theta, n, 0), positions(theta, n, 1)];
        let outs: Vec<Vec<Vec<C64>>> = (0..dim).map(|x| inst.apply(&product_state(x, theta, n))).collect();
        for y in 0..inst.outcomes() {
            let pxy: Vec<f64> = (0..dim).map(|x| p_theta * norm_sqr(&outs[x][y]) / dim as f64).collect();
            let pty: f64 = pxy.iter().sum();
            if pty <= 1e-15 {
                continue;
            }
            let cond: Vec<f64> = pxy.iter().map(|p| p / pty).collect();
            shannon += pty * shannon_entropy(&Distribution::from_unchecked(cond.clone()));
            let (d0, d1) = (1usize << parts[0].len(), 1usize << parts[1].len());
            let mut mass = vec![0.0; d0 * d1];
            for (x, &p) in cond.iter().enumerate() {
                mass[sub_index(x, &parts[0], n) * d1 + sub_index(x, &parts[1], n)] += p;
            }
            let alpha = -mass.iter().cloned().fold(0.0, f64::max).log2();
            let split = split_unchecked(&mass, d0, d1, alpha);
            worst_split = worst_split.min(split.achieved - alpha / 2.0);
            chain_rhs += pty * 2f64.powf(-split.achieved);
            pointer[0] += pty * split.pointer[0];
            pointer[1] += pty * split.pointer[1];
            for x in 0..dim {
                if pxy[x] <= 0.0 {
                    continue;
                }
                let d = split.heavy_x1[sub_index(x, &parts[1], n)] as usize;
                let other = pad_index(x, &parts[1 - d], n) as usize;
                let known = pad_index(x, &parts[d], n);
                let rho = memory_state(&outs[x][y]);
                for (fi, fc) in f_c.iter().enumerate() {
                    let key = (theta, y, d, fi, fc.eval(known));
                    let next = u_index.len();
                    let u = *u_index.entry(key).or_insert(next);
                    entries.push(CqEntry { x: other, u, p: pxy[x] * pf, rho: rho.clone() });
                }
            }
        }
    }
    renormalize(&mut entries);
    let mut guess: HashMap<usize, HashMap<usize, f64>> = HashMap::new();
    for e in &entries {
        *guess.entry(e.u).or_default().entry(e.x).or_default() += e.p;
    }
    let chain_lhs: f64 = guess.values().map(|m| m.values().cloned().fold(0.0, f64::max)).sum();
    let cq = CqState::new(dim, u_index.len().max(1), q, entries)?;
    let (measured, stderr, members) = pa_exact_distance(&cq, &family, family_averaging(&family, seed))?;
    let bound = per_u_pa_bound(&cq, q, ell);
    let links = vec![
        Link::at_least("uncertainty_shannon", shannon, n as f64 / 2.0),
        Link::at_least("splitting", worst_split, 0.0),
        Link::at_most("chain_rule", chain_lhs, 2f64.powi(ell as i32 + 1) * chain_rhs),
        Link::at_most("privacy_amplification", measured, bound),
    ];
    Ok(SenderSecurityReport {
        protocol: SecurityProtocol::Ot12,
        strategy: strategy.label(),
        n,
        ell,
        q,
        measured,
        stderr,
        hash_members: members,
        bound,
        event_probability: None,
        pointer: Some(pointer),
        links,
    })
}

// ---------------------------------------------------------------------------
// Binding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingMode {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingReport {
    pub strategy: String,
    pub n: usize,
    pub q: usize,
    pub mode: BindingMode,
    /// Opening probabilities for b = 0 and b = 1 (weak mode).
    pub p0: f64,
    pub p1: f64,
    pub sum: f64,
    /// Upper bound on `p0 + p1` from the uncertainty event and ball guessing
    /// (weak mode), or on the probability of opening `1 - D` (strong mode).
    pub bound: f64,
    /// Strong mode: `max_t Pr[open t succeeds and D != t]`.
    pub opened_other: Option<f64>,
    pub pointer: Option<[f64; 2]>,
    pub links: Vec<Link>,
}

impl BindingReport {
    pub fn holds(&self) -> bool {
        self.links.iter().all(Link::holds)
    }
}

/// Largest n for the strong-binding assembly.
pub const MAX_STRONG_N: usize = 8;

/// Opening experiment against a committer that follows `strategy` and opens
/// with its natural opening (outcome bits at measured positions, memory
/// measured in the basis being opened).
pub fn binding_experiment(strategy: &AdversaryStrategy, n: usize, mode: BindingMode, lambda: f64) -> Result<BindingReport> {
    let inst = strategy.instrument(n)?;
    match mode {
        BindingMode::Weak => weak_binding(&inst, strategy.label(), n, lambda),
        BindingMode::Strong => strong_binding(&inst, strategy.label(), n),
    }
}

fn ball_log2(n: usize, t: usize) -> f64 {
    (hamming_ball_size(n as u32, t as u32).expect("t <= n").exact as f64).log2()
}

fn weak_binding(inst: &Instrument, label: String, n: usize, lambda: f64) -> Result<BindingReport> {
    let dim = 1usize << n;
    let ny = inst.outcomes();
    let q = inst.memory_qubits();
    let scale = 1.0 / dim as f64;
    let mut p = [0.0; 2];
    // P(x, y | b), stored single precision to bound memory at n = 12.
    let mut table = vec![vec![0f32; dim * ny]; 2];
    for b in 0..2 {
        let th = if b == 1 { ones(n) } else { 0 };
        for x in 0..dim {
            let out = inst.apply(&product_state(x, th, n));
            for (y, w) in out.iter().enumerate() {
                let pw = norm_sqr(w);
                if pw <= 0.0 {
                    continue;
                }
                table[b][x * ny + y] = (scale * pw) as f32;
                for (m, pm) in memory_outcomes(inst, w, b == 1).into_iter().enumerate() {
                    if pm > 0.0 {
                        let d = (inst.join_index(y, m) ^ x).count_ones() as i32;
                        p[b] += scale * pm * 0.5f64.powi(d);
                    }
                }
            }
        }
    }
    let logs: Vec<f64> = (0..=n).map(|t| ball_log2(n, t)).collect();
    let ball_term = |h: f64| {
        (0..=n)
            .map(|t| (2f64.powf(-0.5 * (h - q as f64 - 1.0) + logs[t])).min(1.0) + 0.5f64.powi(t as i32 + 1))
            .fold(f64::INFINITY, f64::min)
    };
    let mut bound = 0.0;
    let mut min_sum_slack = f64::INFINITY;
    for y in 0..ny {
        let py: [f64; 2] = [0, 1].map(|b| (0..dim).map(|x| table[b][x * ny + y] as f64).sum());
        let pyv = 0.5 * (py[0] + py[1]);
        if pyv <= 1e-12 {
            continue;
        }
        let qd = |b: usize| Distribution::from_unchecked((0..dim).map(|x| table[b][x * ny + y] as f64 / py[b]).collect());
        let ev = event_from_distributions(n, &qd(0), &qd(1), lambda, None)?;
        min_sum_slack = min_sum_slack.min(ev.probability_sum - ev.probability_bound);
        let mut by = 0.0;
        for br in [&ev.plus, &ev.cross] {
            let term = br.min_entropy.map_or(1.0, ball_term);
            by += (1.0 - br.probability) + br.probability * term;
        }
        bound += pyv * by;
    }
    let sum = p[0] + p[1];
    let links = vec![Link::at_least("event_sum_per_outcome", min_sum_slack, 0.0), Link::at_most("ball_guessing", sum, bound)];
    Ok(BindingReport {
        strategy: label,
        n,
        q,
        mode: BindingMode::Weak,
        p0: p[0],
        p1: p[1],
        sum,
        bound,
        opened_other: None,
        pointer: None,
        links,
    })
}

fn strong_binding(inst: &Instrument, label: String, n: usize) -> Result<BindingReport> {
    if n > MAX_STRONG_N {
        return Err(Error::Capacity(format!("strong binding with n = {n} (limit {MAX_STRONG_N})")));
    }
    let dim = 1usize << n;
    let q = inst.memory_qubits();
    let w2 = 1.0 / (dim * dim) as f64;
    let mut opened = [0.0; 2];
    let mut pass = [0.0; 2];
    let mut bound = 0.0;
    let mut worst_split = f64::INFINITY;
    let mut pointer = [0.0; 2];
    for theta in 0..dim {
        let parts = [positions(theta, n, 0), positions(theta, n, 1)];
        let masks = parts.clone().map(|p| p.iter().map(|&i| 1usize << (n - 1 - i)).sum::<usize>());
        let outs: Vec<Vec<Vec<C64>>> = (0..dim).map(|x| inst.apply(&product_state(x, theta, n))).collect();
        for y in 0..inst.outcomes() {
            let pxy: Vec<f64> = (0..dim).map(|x| w2 * norm_sqr(&outs[x][y])).collect();
            let pty: f64 = pxy.iter().sum();
            if pty <= 1e-15 {
                continue;
            }
            let (d0, d1) = (1usize << parts[0].len(), 1usize << parts[1].len());
            let mut mass = vec![0.0; d0 * d1];
            for (x, &p) in pxy.iter().enumerate() {
                mass[sub_index(x, &parts[0], n) * d1 + sub_index(x, &parts[1], n)] += p / pty;
            }
            let alpha = -mass.iter().cloned().fold(0.0, f64::max).log2();
            let split = split_unchecked(&mass, d0, d1, alpha);
            worst_split = worst_split.min(split.achieved - alpha / 2.0);
            pointer[0] += pty * split.pointer[0];
            pointer[1] += pty * split.pointer[1];
            bound += pty * 2f64.powf(-0.5 * (split.achieved - 1.0 - q as f64 - 1.0)).min(1.0);
            for x in 0..dim {
                if pxy[x] <= 0.0 {
                    continue;
                }
                let d = split.heavy_x1[sub_index(x, &parts[1], n)] as usize;
                for t in 0..2 {
                    for (m, pm) in memory_outcomes(inst, &outs[x][y], t == 1).into_iter().enumerate() {
                        if pm > 0.0 && (inst.join_index(y, m) ^ x) & masks[t] == 0 {
                            pass[t] += w2 * pm;
                            if d != t {
                                opened[t] += w2 * pm;
                            }
                        }
                    }
                }
            }
        }
    }
    let other = opened[0].max(opened[1]);
    let links = vec![Link::at_least("splitting", worst_split, 0.0), Link::at_most("open_other_bit", other, bound)];
    Ok(BindingReport {
        strategy: label,
        n,
        q,
        mode: BindingMode::Strong,
        p0: pass[0],
        p1: pass[1],
        sum: pass[0] + pass[1],
        bound,
        opened_other: Some(other),
        pointer: Some(pointer),
        links,
    })
}

/// A committer that commits honestly to both values in superposition: a
/// coherent coin picks the basis in which every qubit is measured, and at
/// opening time the coin is measured and that value is opened. Opening `b`
/// then succeeds exactly when the coin shows `b`. `opened_other` reports
/// what the committer would gain by also attempting the other value with its
/// outcome bits. Computed qubit by qubit, so n is unrestricted.
pub fn superposed_committer(n: usize) -> Result<BindingReport> {
    if n == 0 {
        return input_err("n must be positive");
    }
    // pass[b][c]: one position opens b when the coin chose basis c.
    let mut pass = [[0.0; 2]; 2];
    for c in 0..2 {
        let inst = AdversaryStrategy::measure_all(if c == 0 { "+" } else { "x" }).instrument(1)?;
        for (b, row) in pass.iter_mut().enumerate() {
            for x in 0..2 {
                let out = inst.apply(&product_state(x, b, 1));
                for (y, w) in out.iter().enumerate() {
                    let agree = if y == x { 1.0 } else { 0.5 };
                    row[c] += 0.5 * norm_sqr(w) * agree;
                }
            }
        }
    }
    let p: Vec<f64> = (0..2).map(|b| 0.5 * pass[b][b].powi(n as i32)).collect();
    let attempt = 0.5 * pass[0][1].powi(n as i32);
    let sum = p[0] + p[1];
    Ok(BindingReport {
        strategy: "superposed_committer".into(),
        n,
        q: 0,
        mode: BindingMode::Weak,
        p0: p[0],
        p1: p[1],
        sum,
        bound: 1.0,
        opened_other: Some(attempt),
        pointer: None,
        links: vec![Link::at_most("sum_at_most_one", sum, 1.0)],
    })
}

// ---------------------------------------------------------------------------
// Receiver security
// ---------------------------------------------------------------------------

/// What a (possibly dishonest) sender announces after the quantum phase.
#[derive(Debug, Clone, PartialEq)]
pub enum Announcement {
    Rabin { r: u8, f: HashFunction, e: u8 },
    Ot12 { theta: usize, f0: HashFunction, f1: HashFunction },
}

/// One branch of a sender program: a joint state of the sender's register
/// (first `k` qubits) and the `n` transmitted qubits, and the announcement.
/// `None` is a refusal or malformed message.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderBranch {
    pub p: f64,
    pub state: Vec<C64>,
    pub announce: Option<Announcement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenderProgram {
    pub label: String,
    pub protocol: SecurityProtocol,
    pub k: usize,
    pub n: usize,
    pub ell: usize,
    pub branches: Vec<SenderBranch>,
}

/// Largest sender program (`k + n` qubits).
pub const MAX_PROGRAM_QUBITS: usize = 12;

impl SenderProgram {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k + self.n > MAX_PROGRAM_QUBITS {
            return Err(Error::Capacity(format!("sender program on {} qubits", self.k + self.n)));
        }
        let total: f64 = self.branches.iter().map(|b| b.p).sum();
        if (total - 1.0).abs() > 1e-9 || self.branches.iter().any(|b| b.p < 0.0) {
            return input_err("branch probabilities must form a distribution");
        }
        for b in &self.branches {
            if b.state.len() != 1 << (self.k + self.n) || (norm_sqr(&b.state) - 1.0).abs() > 1e-9 {
                return input_err("branch state has the wrong size or norm");
            }
            match (&b.announce, self.protocol) {
                (None, _) => {}
                (Some(Announcement::Rabin { r, e, f }), SecurityProtocol::Rabin) => {
                    if *r > 1 || *e > 1 || f.n() != self.n || f.ell() != 1 {
                        return input_err("malformed Rabin announcement");
                    }
                }
                (Some(Announcement::Ot12 { theta, f0, f1 }), SecurityProtocol::Ot12) => {
                    if *theta >> self.n != 0 || [f0, f1].iter().any(|f| f.n() != self.n || f.ell() != self.ell) {
                        return input_err("malformed 1-2 OT announcement");
                    }
                }
                _ => return input_err("announcement does not match the protocol"),
            }
        }
        Ok(())
    }

    /// The honest sender, enumerated over its random string and bases, with
    /// fresh hash functions per branch drawn from `seed`.
    pub fn honest(protocol: SecurityProtocol, n: usize, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << n;
        let mut branches = Vec::new();
        match protocol {
            SecurityProtocol::Rabin => {
                let family = HashFamily::linear(n, 1);
                for r in 0..2u8 {
                    for x in 0..dim {
                        let f = family.sample(&mut rng);
                        let b: u8 = rng.gen::<bool>() as u8;
                        let e = b ^ f.eval_index(x as u64) as u8;
                        let th = if r == 1 { ones(n) } else { 0 };
                        let p = 0.5 / dim as f64;
                        branches.push(SenderBranch {
                            p,
                            state: product_state(x, th, n),
                            announce: Some(Announcement::Rabin { r, f, e }),
                        });
                    }
                }
            }
            SecurityProtocol::Ot12 => {
                let family = HashFamily::linear(n, ell);
                for theta in 0..dim {
                    for x in 0..dim {
                        let (f0, f1) = (family.sample(&mut rng), family.sample(&mut rng));
                        branches.push(SenderBranch {
                            p: 1.0 / (dim * dim) as f64,
                            state: product_state(x, theta, n),
                            announce: Some(Announcement::Ot12 { theta, f0, f1 }),
                        });
                    }
                }
            }
            SecurityProtocol::Commitment => return input_err("receiver security applies to the OT protocols"),
        }
        let p = Self { label: "honest".into(), protocol, k: 0, n, ell, branches };
        p.validate()?;
        Ok(p)
    }

    /// Sends an arbitrary state and then refuses to announce.
    pub fn garbage(protocol: SecurityProtocol, n: usize, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let nrm = norm_sqr(&state).sqrt();
        state.iter_mut().for_each(|a| *a /= nrm);
        let p = Self {
            label: "garbage".into(),
            protocol,
            k: 0,
            n,
            ell,
            branches: vec![SenderBranch { p: 1.0, state, announce: None }],
        };
        p.validate()?;
        Ok(p)
    }

    /// Keeps the other half of an EPR pair for every transmitted qubit and
    /// announces random values.
    pub fn entangling(protocol: SecurityProtocol, n: usize, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << n;
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        for s in 0..dim {
            state[(s << n) | s] = C64::new((dim as f64).sqrt().recip(), 0.0);
        }
        let branches: Vec<SenderBranch> = (0..4)
            .map(|_| {
                let announce = match protocol {
                    SecurityProtocol::Rabin => {
                        let f = HashFamily::linear(n, 1).sample(&mut rng);
                        Ok(Announcement::Rabin { r: rng.gen::<bool>() as u8, f, e: rng.gen::<bool>() as u8 })
                    }
                    SecurityProtocol::Ot12 => {
                        let fam = HashFamily::linear(n, ell);
                        Ok(Announcement::Ot12 { theta: rng.gen_range(0..dim), f0: fam.sample(&mut rng), f1: fam.sample(&mut rng) })
                    }
                    SecurityProtocol::Commitment => input_err("receiver security applies to the OT protocols"),
                }?;
                Ok(SenderBranch { p: 0.25, state: state.clone(), announce: Some(announce) })
            })
            .collect::<Result<_>>()?;
        let p = Self { label: "entangling".into(), protocol, k: n, n, ell, branches };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub protocol: SecurityProtocol,
    pub program: String,
    pub branches: usize,
    /// Distance between the real and the modified experiment on the
    /// receiver's outputs and the sender's register.
    pub real_vs_modified: f64,
    /// Distance of the choice (A or C) from uniform and independent of the
    /// constructed strings and the sender's register.
    pub independence: f64,
    /// `Pr[Y != B' and A = 1]` (Rabin) or `Pr[Y != S'_C]` (1-2 OT).
    pub mismatch: f64,
}

impl WitnessReport {
    pub fn holds(&self) -> bool {
        self.real_vs_modified <= 1e-9 && self.independence <= 1e-9 && self.mismatch <= 1e-9
    }
}

/// Measures the transmitted qubits qubit-wise in the given bases and returns
/// the sender-register operator for every outcome.
fn sender_operators(state: &[C64], k: usize, n: usize, bases: usize) -> Vec<CMat> {
    let total = k + n;
    let mut v = state.to_vec();
    let h = hadamard();
    for i in (0..n).filter(|&i| bit_at(bases, i, n) == 1) {
        apply_gate(&mut v, total, &[k + i], &h);
    }
    (0..1usize << n)
        .map(|x| {
            let w: Vec<C64> = (0..1usize << k).map(|a| v[(a << n) | x]).collect();
            outer(&w)
        })
        .collect()
}

fn add(map: &mut BTreeMap<Vec<usize>, CMat>, key: Vec<usize>, m: &CMat, w: f64) {
    let d = m.nrows();
    *map.entry(key).or_insert_with(|| CMat::zeros(d, d)) += m.scale(w);
}

fn block_distance(a: &BTreeMap<Vec<usize>, CMat>, b: &BTreeMap<Vec<usize>, CMat>) -> f64 {
    let mut keys: Vec<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|k| match (a.get(*k), b.get(*k)) {
            (Some(x), Some(y)) => 0.5 * trace_norm_hermitian(&(x - y)),
            (Some(x), None) | (None, Some(x)) => 0.5 * trace_norm_hermitian(x),
            (None, None) => 0.0,
        })
        .sum()
}

/// Runs the real experiment (honest receiver measuring at once) and the
/// modified one (receiver with unbounded memory that waits for the
/// announcement and constructs B', resp. S'_0 and S'_1) against the sender
/// program and compares them.
pub fn receiver_security_witness(program: &SenderProgram) -> Result<WitnessReport> {
    program.validate()?;
    let (k, n, ell) = (program.k, program.n, program.ell);
    let rho_k = |state: &[C64]| -> CMat {
        let ops = sender_operators(state, k, n, 0);
        ops.into_iter().fold(CMat::zeros(1 << k, 1 << k), |acc, m| acc + m)
    };
    let mut real_vs_modified = 0.0;
    let mut independence = 0.0;
    let mut mismatch = 0.0;
    for br in &program.branches {
        // Keys: (choice, receiver output) for `real` and `modified`;
        // (choice, constructed strings...) for `full`.
        let mut real = BTreeMap::new();
        let mut modified = BTreeMap::new();
        let mut full = BTreeMap::new();
        let p = br.p;
        match &br.announce {
            None => {
                let rk = rho_k(&br.state);
                let outs = if program.protocol == SecurityProtocol::Rabin { 2 } else { 1usize << ell };
                for a in 0..2 {
                    for y in 0..outs {
                        add(&mut real, vec![a, y], &rk, p * 0.5 / outs as f64);
                        add(&mut modified, vec![a, y], &rk, p * 0.5 / outs as f64);
                    }
                }
                match program.protocol {
                    SecurityProtocol::Rabin => {
                        for a in 0..2 {
                            for bp in 0..2 {
                                add(&mut full, vec![a, bp], &rk, p * 0.25);
                            }
                        }
                    }
                    _ => {
                        for c in 0..2 {
                            for s0 in 0..outs {
                                for s1 in 0..outs {
                                    add(&mut full, vec![c, s0, s1], &rk, p * 0.5 / (outs * outs) as f64);
                                }
                            }
                        }
                    }
                }
            }
            Some(Announcement::Rabin { r, f, e }) => {
                let r = *r as usize;
                let fc = f.compiled();
                let bases = |rr: usize| if rr == 1 { ones(n) } else { 0 };
                for rp in 0..2 {
                    for (x, m) in sender_operators(&br.state, k, n, bases(rp)).iter().enumerate() {
                        let y = (*e as usize) ^ fc.eval(x as u64) as usize;
                        if rp == r {
                            add(&mut real, vec![1, y], m, p * 0.5);
                        } else {
                            add(&mut real, vec![0, 0], m, p * 0.25);
                            add(&mut real, vec![0, 1], m, p * 0.25);
                        }
                    }
                }
                for (x, m) in sender_operators(&br.state, k, n, bases(r)).iter().enumerate() {
                    let bp = (*e as usize) ^ fc.eval(x as u64) as usize;
                    for a in 0..2 {
                        add(&mut full, vec![a, bp], m, p * 0.5);
                    }
                    // Y = B' when A = 1, a fair coin when A = 0.
                    add(&mut modified, vec![1, bp], m, p * 0.5);
                    add(&mut modified, vec![0, 0], m, p * 0.25);
                    add(&mut modified, vec![0, 1], m, p * 0.25);
                }
            }
            Some(Announcement::Ot12 { theta, f0, f1 }) => {
                let parts = [positions(*theta, n, 0), positions(*theta, n, 1)];
                let fc = [f0.compiled(), f1.compiled()];
                let s = |x: usize, b: usize| fc[b].eval(pad_index(x, &parts[b], n)) as usize;
                for c in 0..2 {
                    let bases = if c == 1 { ones(n) } else { 0 };
                    for (x, m) in sender_operators(&br.state, k, n, bases).iter().enumerate() {
                        add(&mut real, vec![c, s(x, c)], m, p * 0.5);
                    }
                }
                for (x, m) in sender_operators(&br.state, k, n, *theta).iter().enumerate() {
                    let (s0, s1) = (s(x, 0), s(x, 1));
                    for c in 0..2 {
                        add(&mut full, vec![c, s0, s1], m, p * 0.5);
                        add(&mut modified, vec![c, [s0, s1][c]], m, p * 0.5);
                    }
                }
            }
        }
        real_vs_modified += block_distance(&real, &modified);
        // Choice independent of everything else.
        let mut product = BTreeMap::new();
        for (key, m) in &full {
            for c in 0..2 {
                let mut k2 = key.clone();
                k2[0] = c;
                add(&mut product, k2, m, 0.5);
            }
        }
        independence += block_distance(&full, &product);
        // The receiver's output agrees with the constructed string.
        for (key, m) in &modified {
            let tr = m.trace().re;
            let agrees = full.iter().any(|(fk, fm)| {
                let constructed = if fk.len() == 2 { fk[1] } else { fk[1 + fk[0]] };
                fk[0] == key[0] && constructed == key[1] && fm.trace().re > 0.0
            });
            if program.protocol == SecurityProtocol::Rabin {
                if key[0] == 1 && !agrees {
                    mismatch += tr;
                }
            } else if !agrees {
                mismatch += tr;
            }
        }
    }
    Ok(WitnessReport {
        protocol: program.protocol,
        program: program.label.clone(),
        branches: program.branches.len(),
        real_vs_modified,
        independence,
        mismatch,
    })
}

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellAttackReport {
    pub n: usize,
    pub memory_qubits: usize,
    /// Probability of outputting the parity of x, averaged over x and r.
    pub success: f64,
    pub per_basis: [f64; 2],
}

/// Bell measurements on pairs of qubits reveal the parity of x in either
/// BB84 basis, so the parity of x is never a safe mask. The decoded parity
/// of a pair for Bell outcome j (in the order Phi+, Psi+, Phi-, Psi-) is
/// `[0, 1, 0, 1][j]` for the + basis and `[0, 0, 1, 1][j]` for the x basis;
/// an odd last qubit is stored and measured once the basis is known.
pub fn bell_attack(n: usize) -> Result<BellAttackReport> {
    let inst = AdversaryStrategy::BellPairwiseXor.instrument(n)?;
    let table = [[0usize, 1, 0, 1], [0, 0, 1, 1]];
    let pairs = n / 2;
    let dim = 1usize << n;
    let mut per_basis = [0.0; 2];
    for r in 0..2 {
        let th = if r == 1 { ones(n) } else { 0 };
        for x in 0..dim {
            let parity = x.count_ones() as usize & 1;
            for (y, w) in inst.apply(&product_state(x, th, n)).iter().enumerate() {
                if norm_sqr(w) <= 0.0 {
                    continue;
                }
                let pair_parity = (0..pairs).fold(0, |acc, k| acc ^ table[r][(y >> (2 * (pairs - 1 - k))) & 3]);
                for (m, pm) in memory_outcomes(&inst, w, r == 1).into_iter().enumerate() {
                    if pair_parity ^ m == parity {
                        per_basis[r] += pm / dim as f64;
                    }
                }
            }
        }
    }
    Ok(BellAttackReport { n, memory_qubits: inst.memory_qubits(), success: 0.5 * (per_basis[0] + per_basis[1]), per_basis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreitbartReport {
    pub b0_success: f64,
    pub b1_success: f64,
    /// Distance of `B0 xor B1` from uniform given the qubit.
    pub xor_distance: f64,
    /// `cos^2(pi/8)`.
    pub target: f64,
}

/// The one-qubit encoding of two bits `(b0, b1)` as |0>, |+>, |->, |1> for
/// 00, 01, 10, 11 hides `b0 xor b1` perfectly, yet measuring in the basis
/// rotated by pi/8 (resp. -pi/8) learns b0 (resp. b1) with probability
/// cos^2(pi/8).
pub fn breitbart_attack() -> Result<BreitbartReport> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let states: [[f64; 2]; 4] = [[1.0, 0.0], [h, h], [h, -h], [0.0, 1.0]];
    let vecs: Vec<Vec<C64>> = states.iter().map(|s| s.iter().map(|&a| C64::new(a, 0.0)).collect()).collect();
    let guess = |strategy: AdversaryStrategy, which: usize| -> Result<f64> {
        let inst = strategy.instrument(1)?;
        let mut joint = [[0.0; 2]; 2];
        for (v, psi) in vecs.iter().enumerate() {
            let bit = if which == 0 { v >> 1 } else { v & 1 };
            for (y, w) in inst.apply(psi).iter().enumerate() {
                joint[y][bit] += 0.25 * norm_sqr(w);
            }
        }
        Ok(joint.iter().map(|row| row[0].max(row[1])).sum())
    };
    let b0_success = guess(AdversaryStrategy::Breitbart, 0)?;
    let b1_success = guess(AdversaryStrategy::MeasureFixedBasis { bases: vec!["breitbart-rot".into()] }, 1)?;
    let mut a = [CMat::zeros(2, 2), CMat::zeros(2, 2)];
    for (v, psi) in vecs.iter().enumerate() {
        a[(v >> 1) ^ (v & 1)] += outer(psi).scale(0.25);
    }
    let xor_distance = 2.0 * helstrom(&a[0], &a[1]) - 1.0;
    let c = (std::f64::consts::PI / 8.0).cos();
    Ok(BreitbartReport { b0_success, b1_success, xor_distance, target: c * c })
}

/// Strategies exercised by the experiment drivers at a given size.
pub fn standard_strategies(n: usize, q_max: usize) -> Vec<AdversaryStrategy> {
    let mut out: Vec<AdversaryStrategy> = (0..=q_max.min(n)).map(|q| AdversaryStrategy::StorePrefix { q }).collect();
    out.push(AdversaryStrategy::measure_all("+"));
    out.push(AdversaryStrategy::measure_all("x"));
    out.push(AdversaryStrategy::MeasureFixedBasis { bases: (0..n).map(|i| if i % 2 == 0 { "+" } else { "x" }.into()).collect() });
    out.push(AdversaryStrategy::Breitbart);
    out.push(AdversaryStrategy::BellPairwiseXor);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purification_exact_for_all_strategies() {
        for n in [2, 3, 4] {
            for s in standard_strategies(n, 2) {
                for proto in [SecurityProtocol::Rabin, SecurityProtocol::Commitment] {
                    let r = purification_check(&s, proto, n, 1).unwrap();
                    assert!(r.distance < 1e-9, "{} {:?} {}", r.strategy, proto, r.distance);
                }
            }
        }
    }

    #[test]
    fn bell_attack_is_perfect() {
        for n in [2, 4, 6] {
            let r = bell_attack(n).unwrap();
            assert_eq!(r.memory_qubits, 0);
            assert!((r.success - 1.0).abs() < 1e-9);
        }
        let odd = bell_attack(3).unwrap();
        assert_eq!(odd.memory_qubits, 1);
        assert!((odd.success - 1.0).abs() < 1e-9);
    }

    #[test]
    fn breitbart_values() {
        let r = breitbart_attack().unwrap();
        assert!((r.b0_success - r.target).abs() < 1e-9);
        assert!((r.b1_success - r.target).abs() < 1e-9);
        assert!(r.xor_distance.abs() < 1e-9);
    }

    #[test]
    fn rabin_sender_security_links() {
        for s in standard_strategies(4, 1) {
            let r = sender_security_distance(&s, SecurityProtocol::Rabin, 4, 1, 0.1, 3).unwrap();
            assert!(r.holds(), "{} {:?}", r.strategy, r.failing_link());
        }
        let full = sender_security_distance(&AdversaryStrategy::full_memory(4), SecurityProtocol::Rabin, 4, 1, 0.1, 3).unwrap();
        assert!((full.measured - 0.5).abs() < 1e-9, "{:?}", full);
        assert!(full.holds());
    }

    #[test]
    fn ot12_sender_security_links() {
        for s in standard_strategies(4, 1) {
            let r = sender_security_distance(&s, SecurityProtocol::Ot12, 4, 1, 0.1, 3).unwrap();
            assert!(r.holds(), "{} {:?} {:?}", r.strategy, r.failing_link(), r.links);
        }
    }

    #[test]
    fn binding_controls() {
        let full = binding_experiment(&AdversaryStrategy::full_memory(4), 4, BindingMode::Weak, 0.1).unwrap();
        assert!((full.sum - 2.0).abs() < 1e-9);
        let plus = binding_experiment(&AdversaryStrategy::measure_all("+"), 4, BindingMode::Weak, 0.1).unwrap();
        assert!((plus.p0 - 1.0).abs() < 1e-9);
        assert!((plus.p1 - 0.75f64.powi(4)).abs() < 1e-9);
        let sup = superposed_committer(4).unwrap();
        assert!((sup.p0 - 0.5).abs() < 1e-12 && (sup.sum - 1.0).abs() < 1e-12);
        assert!((sup.opened_other.unwrap() - 0.5 * 0.75f64.powi(4)).abs() < 1e-12);
        for s in standard_strategies(6, 2) {
            let r = binding_experiment(&s, 6, BindingMode::Weak, 0.1).unwrap();
            assert!(r.holds(), "{} {:?}", r.strategy, r.links);
            let r = binding_experiment(&s, 4, BindingMode::Strong, 0.1);
            if let Ok(r) = r {
                assert!(r.holds(), "{} {:?}", r.strategy, r.links);
            }
        }
    }

    #[test]
    fn witnesses_exact() {
        for proto in [SecurityProtocol::Rabin, SecurityProtocol::Ot12] {
            for prog in [
                SenderProgram::honest(proto, 3, 1, 5).unwrap(),
                SenderProgram::garbage(proto, 3, 1, 5).unwrap(),
                SenderProgram::entangling(proto, 3, 1, 5).unwrap(),
            ] {
                let w = receiver_security_witness(&prog).unwrap();
                assert!(w.holds(), "{:?}", w);
            }
        }
        let mut bad = SenderProgram::garbage(SecurityProtocol::Rabin, 2, 1, 0).unwrap();
        bad.branches[0].p = 0.5;
        assert!(receiver_security_witness(&bad).is_err());
    }
}
