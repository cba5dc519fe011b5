//! Classical-quantum states, quantum conditional min-entropy, and exact
//! privacy-amplification distances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{self, Distribution, JointDistribution};
use crate::hashing::{HashFamily, HashFunction};
use crate::qstate::{
    self, hermitian_eigen, identity, kron, lambda_max, trace_norm_hermitian, CMat, DensityOperator,
};
use crate::{input_err, Error, Result};

/// Largest assembled operator dimension.
pub const MAX_ASSEMBLED_DIM: usize = 1 << 12;

/// One atom `P(x, u) |x><x| (x) |u><u| (x) rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqEntry {
    pub x: usize,
    pub u: usize,
    pub p: f64,
    pub rho: DensityOperator,
}

/// A state classical on X and U and quantum on a register E of `q` qubits.
/// Only atoms with positive probability are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    x_card: usize,
    u_card: usize,
    q: usize,
    entries: Vec<CqEntry>,
}

impl CqState {
    /// Entries sharing (x, u) are merged.
    pub fn new(x_card: usize, u_card: usize, q: usize, entries: Vec<CqEntry>) -> Result<Self> {
        if x_card == 0 || u_card == 0 {
            return input_err("empty classical register");
        }
        let d = 1usize << q;
        let mut merged: Vec<CqEntry> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        let mut total = 0.0;
        for e in entries {
            if e.x >= x_card || e.u >= u_card {
                return input_err(format!("classical value ({}, {}) out of range", e.x, e.u));
            }
            if e.rho.dim() != d {
                return Err(qstate::QError::DimensionMismatch(e.rho.dim(), d).into());
            }
            if !(e.p >= 0.0) {
                return input_err(format!("negative probability {}", e.p));
            }
            total += e.p;
            if e.p == 0.0 {
                continue;
            }
            match slot.get(&(e.x, e.u)) {
                Some(&k) => {
                    let m: &mut CqEntry = &mut merged[k];
                    let p = m.p + e.p;
                    let op = (m.rho.matrix().scale(m.p) + e.rho.matrix().scale(e.p)).unscale(p);
                    m.rho = DensityOperator::from_unchecked(op);
                    m.p = p;
                }
                None => {
                    slot.insert((e.x, e.u), merged.len());
                    merged.push(e);
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return input_err(format!("classical weights sum to {total}"));
        }
        merged.sort_by_key(|e| (e.u, e.x));
        Ok(Self { x_card, u_card, q, entries: merged })
    }

    /// X distributed as `p`, no U, trivial E.
    pub fn from_classical(p: &Distribution) -> Result<Self> {
        let entries = p
            .mass()
            .iter()
            .enumerate()
            .map(|(x, &m)| CqEntry { x, u: 0, p: m, rho: DensityOperator::scalar() })
            .collect();
        Self::new(p.len(), 1, 0, entries)
    }

    /// Classical X and U from a joint `P_{XU}` (dims [x, u]), trivial E.
    pub fn from_classical_joint(p: &JointDistribution) -> Result<Self> {
        let d = p.dims();
        if d.len() != 2 {
            return input_err("expected a two-dimensional joint");
        }
        let mut entries = Vec::new();
        for x in 0..d[0] {
            for u in 0..d[1] {
                entries.push(CqEntry { x, u, p: p.get(&[x, u]), rho: DensityOperator::scalar() });
            }
        }
        Self::new(d[0], d[1], 0, entries)
    }

    /// X uniform over `x_card` values, E holding `states[x]`.
    pub fn uniform_with_states(states: Vec<DensityOperator>, q: usize) -> Result<Self> {
        let k = states.len();
        let entries =
            states.into_iter().enumerate().map(|(x, rho)| CqEntry { x, u: 0, p: 1.0 / k as f64, rho }).collect();
        Self::new(k, 1, q, entries)
    }

    /// Random ccq fixture: every (x, u) gets a random weight and a random
    /// state of the given rank.
    pub fn random<R: Rng + ?Sized>(x_card: usize, u_card: usize, q: usize, rank: usize, rng: &mut R) -> Result<Self> {
        let w = entropy::random_distribution(x_card * u_card, rng);
        let mut entries = Vec::new();
        for x in 0..x_card {
            for u in 0..u_card {
                let rho = if q == 0 { DensityOperator::scalar() } else { qstate::random_density(q, rank, rng)? };
                entries.push(CqEntry { x, u, p: w.mass()[x * u_card + u], rho });
            }
        }
        Self::new(x_card, u_card, q, entries)
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn u_card(&self) -> usize {
        self.u_card
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn e_dim(&self) -> usize {
        1 << self.q
    }

    pub fn entries(&self) -> &[CqEntry] {
        &self.entries
    }

    /// `P_{XU}` with dims [x, u].
    pub fn classical_joint(&self) -> JointDistribution {
        let mut m = vec![0.0; self.x_card * self.u_card];
        for e in &self.entries {
            m[e.x * self.u_card + e.u] += e.p;
        }
        JointDistribution::from_unchecked(vec![self.x_card, self.u_card], m)
    }

    /// Sub-normalized operators `A_{x,u} = P(x,u) rho_{x,u}` grouped by u.
    pub(crate) fn weighted_by_u(&self) -> Vec<Vec<(usize, CMat)>> {
        let mut out = vec![Vec::new(); self.u_card];
        for e in &self.entries {
            out[e.u].push((e.x, e.rho.matrix().scale(e.p)));
        }
        out
    }

    /// `P(u) rho_E^u`.
    pub fn weighted_e_given_u(&self, u: usize) -> CMat {
        let mut s = CMat::zeros(self.e_dim(), self.e_dim());
        for e in self.entries.iter().filter(|e| e.u == u) {
            s += e.rho.matrix().scale(e.p);
        }
        s
    }

    /// Reduced state of E.
    pub fn rho_e(&self) -> DensityOperator {
        let mut s = CMat::zeros(self.e_dim(), self.e_dim());
        for e in &self.entries {
            s += e.rho.matrix().scale(e.p);
        }
        DensityOperator::from_unchecked(s)
    }

    /// Block-diagonal operator on X (x) U (x) E.
    pub fn assemble(&self) -> Result<DensityOperator> {
        let de = self.e_dim();
        let d = self.x_card * self.u_card * de;
        if d > MAX_ASSEMBLED_DIM {
            return Err(Error::Capacity(format!("assembled dimension {d}")));
        }
        let mut m = CMat::zeros(d, d);
        for e in &self.entries {
            let base = (e.x * self.u_card + e.u) * de;
            for i in 0..de {
                for j in 0..de {
                    m[(base + i, base + j)] += e.rho.matrix()[(i, j)] * e.p;
                }
            }
        }
        Ok(DensityOperator::from_unchecked(m))
    }

    /// Drops the quantum register.
    pub fn classical_part(&self) -> CqState {
        let entries = self
            .entries
            .iter()
            .map(|e| CqEntry { x: e.x, u: e.u, p: e.p, rho: DensityOperator::scalar() })
            .collect();
        CqState::new(self.x_card, self.u_card, 0, entries).expect("valid by construction")
    }

    /// Applies a unitary to E in every branch.
    pub fn rotate_e(&self, u: &CMat) -> Result<CqState> {
        let entries = self
            .entries
            .iter()
            .map(|e| Ok(CqEntry { x: e.x, u: e.u, p: e.p, rho: e.rho.evolve(u)? }))
            .collect::<Result<Vec<_>>>()?;
        CqState::new(self.x_card, self.u_card, self.q, entries)
    }

    /// Relabels X by a permutation.
    pub fn relabel_x(&self, perm: &[usize]) -> Result<CqState> {
        if perm.len() != self.x_card {
            return input_err("permutation length differs from |X|");
        }
        let entries = self.entries.iter().map(|e| CqEntry { x: perm[e.x], ..e.clone() }).collect();
        CqState::new(self.x_card, self.u_card, self.q, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct CqRepr {
    p: Distribution,
    ops: Vec<Vec<f64>>,
    q: usize,
    #[serde(default = "one")]
    u_card: usize,
}

fn one() -> usize {
    1
}

impl Serialize for CqState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.e_dim();
        let joint = self.classical_joint();
        let mut ops = vec![vec![0.0; 2 * d * d]; self.x_card * self.u_card];
        for e in &self.entries {
            let v = &mut ops[e.x * self.u_card + e.u];
            for (k, z) in e.rho.matrix().transpose().iter().enumerate() {
                v[2 * k] = z.re;
                v[2 * k + 1] = z.im;
            }
        }
        CqRepr { p: joint.flatten(), ops, q: self.q, u_card: self.u_card }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CqState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CqRepr::deserialize(d)?;
        let de = 1usize << r.q;
        if r.p.len() % r.u_card != 0 || r.ops.len() != r.p.len() {
            return Err(D::Error::custom("ops and p disagree in length"));
        }
        let mut entries = Vec::new();
        for (k, op) in r.ops.iter().enumerate() {
            if op.len() != 2 * de * de {
                return Err(D::Error::custom("operator has the wrong size"));
            }
            let p = r.p.mass()[k];
            if p == 0.0 {
                continue;
            }
            let m = CMat::from_fn(de, de, |i, j| qstate::c(op[2 * (j * de + i)], op[2 * (j * de + i) + 1]));
            let rho = DensityOperator::new(m).map_err(D::Error::custom)?;
            entries.push(CqEntry { x: k / r.u_card, u: k % r.u_card, p, rho });
        }
        CqState::new(r.p.len() / r.u_card, r.u_card, r.q, entries).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Quantum min-entropy
// ---------------------------------------------------------------------------

/// `A^{-1/2}` on the support of a positive semidefinite A, plus the support projector.
fn inv_sqrt_with_support(a: &CMat) -> (CMat, CMat) {
    let (vals, vecs) = hermitian_eigen(a);
    let d = a.nrows();
    let mut inv = CMat::zeros(d, d);
    let mut proj = CMat::zeros(d, d);
    let cut = 1e-12 * vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    for (k, &v) in vals.iter().enumerate() {
        if v > cut {
            let col = vecs.column(k);
            let outer = &col * col.adjoint();
            inv += outer.scale(1.0 / v.sqrt());
            proj += outer;
        }
    }
    (inv, proj)
}

/// `H_min(rho_AB | sigma_B) = -log lambda_max((I (x) sigma^{-1/2}) rho (I (x) sigma^{-1/2}))`.
/// The subsystem B is the last factor of `rho_ab`.
pub fn qmin_entropy_rel(rho_ab: &DensityOperator, sigma_b: &DensityOperator) -> Result<f64> {
    let db = sigma_b.dim();
    let d = rho_ab.dim();
    if d % db != 0 {
        return Err(qstate::QError::DimensionMismatch(d, db).into());
    }
    let da = d / db;
    let (inv, proj) = inv_sqrt_with_support(sigma_b.matrix());
    let outside = kron(&identity(da), &(identity(db) - proj));
    let leak = (&outside * rho_ab.matrix() * &outside).trace().re;
    if leak > 1e-9 {
        return Err(Error::Precondition(format!(
            "sigma_B does not cover the support of rho_B (weight {leak} outside)"
        )));
    }
    let w = kron(&identity(da), &inv);
    let m = &w * rho_ab.matrix() * &w;
    Ok(-lambda_max(&m).log2())
}

/// Sandwich for `H_min(X | U E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QminBounds {
    pub lower: f64,
    pub upper: f64,
    /// True when both bounds are the exact value (binary X).
    pub exact: bool,
}

/// Helstrom guessing probability for two sub-normalized operators.
pub fn helstrom(a0: &CMat, a1: &CMat) -> f64 {
    0.5 * (a0.trace().re + a1.trace().re + trace_norm_hermitian(&(a0 - a1)))
}

/// Pretty-good-measurement success probability for sub-normalized operators.
pub fn pgm_success(ops: &[CMat]) -> f64 {
    if ops.is_empty() {
        return 0.0;
    }
    let d = ops[0].nrows();
    let mut s = CMat::zeros(d, d);
    for a in ops {
        s += a;
    }
    let (inv, _) = inv_sqrt_with_support(&s);
    ops.iter().map(|a| (&inv * a * &inv * a).trace().re).sum()
}

/// `H_min(X | U E)` of a cq-state: lower bound from `sigma = rho_{UE}`,
/// upper bound from the pretty-good measurement (exact for binary X).
pub fn qmin_entropy(rho: &CqState) -> QminBounds {
    let groups = rho.weighted_by_u();
    let mut lam: f64 = 0.0;
    let mut pg = 0.0;
    let binary = rho.x_card <= 2;
    for ops in &groups {
        if ops.is_empty() {
            continue;
        }
        let mut s = CMat::zeros(rho.e_dim(), rho.e_dim());
        for (_, a) in ops {
            s += a;
        }
        let (inv, _) = inv_sqrt_with_support(&s);
        for (_, a) in ops {
            lam = lam.max(lambda_max(&(&inv * a * &inv)));
        }
        let mats: Vec<CMat> = ops.iter().map(|(_, a)| a.clone()).collect();
        let trivial = mats.iter().map(|a| a.trace().re).fold(0.0, f64::max);
        pg += if binary {
            if mats.len() == 1 {
                mats[0].trace().re
            } else {
                helstrom(&mats[0], &mats[1])
            }
        } else {
            pgm_success(&mats).max(trivial)
        };
    }
    let upper = -pg.log2();
    if binary {
        QminBounds { lower: upper, upper, exact: true }
    } else {
        QminBounds { lower: -lam.log2(), upper, exact: false }
    }
}

/// `H_min(rho_{X U E} | sigma_U (x) sigma_E)` for a cq-state, evaluated
/// block-wise, with sigma_E the fully mixed state on the support of rho_E.
pub fn qmin_given_u_and_mixed_e(rho: &CqState, sigma_u: &[f64]) -> Result<f64> {
    let (inv_e, proj) = inv_sqrt_with_support(rho.rho_e().matrix());
    let rank = proj.trace().re.round();
    // sigma_E = proj / rank, so sigma_E^{-1/2} = sqrt(rank) proj
    let _ = inv_e;
    let s = proj.scale(rank.sqrt());
    let mut lam: f64 = 0.0;
    for e in &rho.entries {
        if sigma_u[e.u] <= 0.0 {
            return Err(Error::Precondition("sigma_U misses the support of rho_U".into()));
        }
        let m = &s * e.rho.matrix().scale(e.p / sigma_u[e.u]) * &s;
        lam = lam.max(lambda_max(&m));
    }
    Ok(-lam.log2())
}

/// `H_min(rho_{X U E} | sigma_U)`: X and E together form the A system.
pub fn qmin_given_u(rho: &CqState, sigma_u: &[f64]) -> Result<f64> {
    let mut lam: f64 = 0.0;
    for e in &rho.entries {
        if sigma_u[e.u] <= 0.0 {
            return Err(Error::Precondition("sigma_U misses the support of rho_U".into()));
        }
        lam = lam.max(e.p * lambda_max(e.rho.matrix()) / sigma_u[e.u]);
    }
    Ok(-lam.log2())
}

// ---------------------------------------------------------------------------
// Privacy amplification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyAveraging {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl FamilyAveraging {
    /// Exhaustive when the family is enumerable, sampled otherwise.
    pub fn auto(family: &HashFamily, count: usize, seed: u64) -> Self {
        if family.is_enumerable() {
            FamilyAveraging::Exhaustive
        } else {
            FamilyAveraging::Sampled { count, seed }
        }
    }
}

fn members(family: &HashFamily, averaging: FamilyAveraging) -> Result<Vec<HashFunction>> {
    match averaging {
        FamilyAveraging::Exhaustive => Ok(family.iter()?.collect()),
        FamilyAveraging::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count).map(|_| family.sample(&mut rng)).collect())
        }
    }
}

fn check_domain(rho: &CqState, family: &HashFamily) -> Result<()> {
    if family.n > 63 || rho.x_card != 1usize << family.n {
        return input_err(format!("family domain 2^{} differs from |X| = {}", family.n, rho.x_card));
    }
    Ok(())
}

/// The state `rho_{F(X) F U E}` member by member.
#[derive(Debug, Clone)]
pub struct PaOutput {
    pub members: Vec<HashFunction>,
    /// For each member f, the cq-state of (f(X), U, E).
    pub states: Vec<CqState>,
}

impl PaOutput {
    /// Operator on Z (x) F (x) U (x) E with F uniform over the listed members.
    pub fn assemble(&self) -> Result<DensityOperator> {
        let k = self.members.len();
        let s0 = &self.states[0];
        let (zc, uc, de) = (s0.x_card, s0.u_card, s0.e_dim());
        let d = zc * k * uc * de;
        if d > MAX_ASSEMBLED_DIM {
            return Err(Error::Capacity(format!("assembled dimension {d}")));
        }
        let mut m = CMat::zeros(d, d);
        for (f, st) in self.states.iter().enumerate() {
            for e in &st.entries {
                let base = ((e.x * k + f) * uc + e.u) * de;
                for i in 0..de {
                    for j in 0..de {
                        m[(base + i, base + j)] += e.rho.matrix()[(i, j)] * (e.p / k as f64);
                    }
                }
            }
        }
        Ok(DensityOperator::from_unchecked(m))
    }
}

pub fn pa_output_state(rho: &CqState, family: &HashFamily, averaging: FamilyAveraging) -> Result<PaOutput> {
    check_domain(rho, family)?;
    let fs = members(family, averaging)?;
    let mut states = Vec::with_capacity(fs.len());
    for f in &fs {
        let c = f.compiled();
        let entries = rho
            .entries
            .iter()
            .map(|e| CqEntry { x: c.eval(e.x as u64) as usize, u: e.u, p: e.p, rho: e.rho.clone() })
            .collect();
        states.push(CqState::new(1 << family.ell, rho.u_card, rho.q, entries)?);
    }
    Ok(PaOutput { members: fs, states })
}

/// Distance of `rho_{f(X) U E}` from uniform for a single member.
fn member_distance(groups: &[Vec<(usize, CMat)>], sigmas: &[CMat], f: &crate::hashing::CompiledHash, ell: usize, de: usize) -> f64 {
    let nz = 1usize << ell;
    let scale = 1.0 / nz as f64;
    let mut dist = 0.0;
    if de == 1 {
        let mut acc = vec![0.0; nz];
        for (u, ops) in groups.iter().enumerate() {
            if ops.is_empty() {
                continue;
            }
            acc.iter_mut().for_each(|v| *v = 0.0);
            for (x, a) in ops {
                acc[f.eval(*x as u64) as usize] += a[(0, 0)].re;
            }
            let s = sigmas[u][(0, 0)].re * scale;
            dist += acc.iter().map(|v| (v - s).abs()).sum::<f64>();
        }
        return 0.5 * dist;
    }
    let mut acc = vec![CMat::zeros(de, de); nz];
    for (u, ops) in groups.iter().enumerate() {
        if ops.is_empty() {
            continue;
        }
        for a in acc.iter_mut() {
            a.fill(qstate::c(0.0, 0.0));
        }
        for (x, a) in ops {
            acc[f.eval(*x as u64) as usize] += a;
        }
        let s = sigmas[u].scale(scale);
        for a in &acc {
            dist += trace_norm_hermitian(&(a - &s));
        }
    }
    0.5 * dist
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaReport {
    /// `delta(rho_{F(X) F U E}, unif (x) rho_{F U E})`, averaged over the family.
    pub exact_distance: f64,
    /// Standard error of the average (0 when exhaustive).
    pub stderr: f64,
    pub members: usize,
    pub smooth_min_entropy: f64,
    pub epsilon: f64,
    pub q: usize,
    pub ell: usize,
    /// `1/2 2^{-1/2 (H^eps(X|U) - q - l)} + eps`.
    pub bound: f64,
}

impl PaReport {
    pub fn slack(&self) -> f64 {
        self.bound - self.exact_distance
    }
}

/// The privacy-amplification bound with smooth min-entropy of X given U.
pub fn pa_bound(rho: &CqState, ell: usize, eps: f64) -> Result<(f64, f64)> {
    let (h, _) = entropy::smooth_min_entropy(&rho.classical_joint(), eps)?;
    Ok((0.5 * 2f64.powf(-0.5 * (h - rho.q as f64 - ell as f64)) + eps, h))
}

/// Smallest bound over a fixed grid of smoothing parameters.
pub fn best_pa_bound(rho: &CqState, ell: usize) -> Result<(f64, f64, f64)> {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in 0..=40 {
        let eps = if k == 0 { 0.0 } else { 2f64.powf(-(k as f64) / 2.0) * 0.5 };
        let (b, h) = pa_bound(rho, ell, eps)?;
        if b < best.0 {
            best = (b, h, eps);
        }
    }
    Ok(best)
}

pub fn pa_distance(rho: &CqState, family: &HashFamily, averaging: FamilyAveraging, eps: f64) -> Result<PaReport> {
    check_domain(rho, family)?;
    let (bound, h) = pa_bound(rho, family.ell, eps)?;
    let (d, se, k) = pa_exact_distance(rho, family, averaging)?;
    Ok(PaReport {
        exact_distance: d,
        stderr: se,
        members: k,
        smooth_min_entropy: h,
        epsilon: eps,
        q: rho.q,
        ell: family.ell,
        bound,
    })
}

/// Like [`pa_distance`] with the smoothing parameter chosen to minimise the bound.
pub fn pa_distance_best(rho: &CqState, family: &HashFamily, averaging: FamilyAveraging) -> Result<PaReport> {
    check_domain(rho, family)?;
    let (bound, h, eps) = best_pa_bound(rho, family.ell)?;
    let (d, se, k) = pa_exact_distance(rho, family, averaging)?;
    Ok(PaReport {
        exact_distance: d,
        stderr: se,
        members: k,
        smooth_min_entropy: h,
        epsilon: eps,
        q: rho.q,
        ell: family.ell,
        bound,
    })
}

/// (mean distance, standard error, members evaluated).
pub fn pa_exact_distance(rho: &CqState, family: &HashFamily, averaging: FamilyAveraging) -> Result<(f64, f64, usize)> {
    check_domain(rho, family)?;
    let groups = rho.weighted_by_u();
    let sigmas: Vec<CMat> = (0..rho.u_card).map(|u| rho.weighted_e_given_u(u)).collect();
    let de = rho.e_dim();
    let eval = |f: &HashFunction| member_distance(&groups, &sigmas, &f.compiled(), family.ell, de);
    let (mut s, mut s2, mut k) = (0.0, 0.0, 0usize);
    let mut push = |v: f64| {
        s += v;
        s2 += v * v;
        k += 1;
    };
    match averaging {
        FamilyAveraging::Exhaustive => {
            for f in family.iter()? {
                push(eval(&f));
            }
        }
        FamilyAveraging::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                push(eval(&family.sample(&mut rng)));
            }
        }
    }
    if k == 0 {
        return input_err("no family members evaluated");
    }
    let mean = s / k as f64;
    let se = match averaging {
        FamilyAveraging::Exhaustive => 0.0,
        _ if k > 1 => ((s2 / k as f64 - mean * mean).max(0.0) / (k - 1) as f64).sqrt(),
        _ => 0.0,
    };
    Ok((mean, se, k))
}

/// Classical left-over hash: exact distance of `P_{F(X) F}` from uniform
/// versus `1/2 2^{-1/2 (H_2(X) - l)}`.
pub fn classical_lhl_distance(p: &Distribution, family: &HashFamily, averaging: FamilyAveraging) -> Result<(f64, f64)> {
    let rho = CqState::from_classical(p)?;
    let (d, _, _) = pa_exact_distance(&rho, family, averaging)?;
    let h2 = entropy::renyi_entropy(p, 2.0)?;
    Ok((d, 0.5 * 2f64.powf(-0.5 * (h2 - family.ell as f64))))
}

// ---------------------------------------------------------------------------
// Guessing within a Hamming ball
// ---------------------------------------------------------------------------

/// Measurement of E chosen per value of U, followed by a guess per outcome.
#[derive(Debug, Clone)]
pub struct GuessStrategy {
    pub povms: Vec<Vec<CMat>>,
    pub guesses: Vec<Vec<usize>>,
}

impl GuessStrategy {
    pub fn new(povms: Vec<Vec<CMat>>, guesses: Vec<Vec<usize>>) -> Result<Self> {
        if povms.len() != guesses.len() {
            return input_err("one POVM and one guess table per value of U");
        }
        for (pv, g) in povms.iter().zip(&guesses) {
            if pv.len() != g.len() || pv.is_empty() {
                return input_err("guess table length differs from POVM size");
            }
            let d = pv[0].nrows();
            let mut s = CMat::zeros(d, d);
            for m in pv {
                s += m;
            }
            if (s - identity(d)).norm() > 1e-9 {
                return input_err("POVM elements do not sum to the identity");
            }
        }
        Ok(Self { povms, guesses })
    }

    /// Guesses from U alone (trivial E measurement).
    pub fn classical(guess_per_u: Vec<usize>, e_dim: usize) -> Self {
        Self { povms: vec![vec![identity(e_dim)]; guess_per_u.len()], guesses: guess_per_u.into_iter().map(|g| vec![g]).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGuessReport {
    pub success: f64,
    pub bound: f64,
    pub ball_size: f64,
    pub smooth_min_entropy: f64,
    pub epsilon: f64,
}

/// Probability that the guess lands within Hamming distance `radius` of X
/// (X is an n-bit string with |X| = 2^n) versus the ball-guessing bound.
pub fn guess_within_ball(rho: &CqState, strategy: &GuessStrategy, radius: usize, eps: f64) -> Result<BallGuessReport> {
    let n = rho.x_card.trailing_zeros() as usize;
    if !rho.x_card.is_power_of_two() {
        return input_err("X must range over n-bit strings");
    }
    if strategy.povms.len() != rho.u_card {
        return input_err("strategy must cover every value of U");
    }
    let mut success = 0.0;
    for e in &rho.entries {
        for (m, &g) in strategy.povms[e.u].iter().zip(&strategy.guesses[e.u]) {
            if ((g ^ e.x).count_ones() as usize) <= radius {
                success += e.p * (m * e.rho.matrix()).trace().re;
            }
        }
    }
    let ball = entropy::hamming_ball_size(n as u32, radius.min(n) as u32)?.exact as f64;
    let (h, _) = entropy::smooth_min_entropy(&rho.classical_joint(), eps)?;
    let bound = 2f64.powf(-0.5 * (h - rho.q as f64 - 1.0) + ball.log2()) + 2.0 * eps * ball;
    Ok(BallGuessReport { success, bound, ball_size: ball, smooth_min_entropy: h, epsilon: eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{prepare_bb84, Bb84, PureState};
    use std::f64::consts::PI;

    fn ket(b: u8, t: Bb84) -> DensityOperator {
        prepare_bb84(&[b], &[t]).unwrap().density()
    }

    #[test]
    fn assemble_examples() {
        let p = Distribution::new(vec![0.25, 0.75]).unwrap();
        let a = CqState::from_classical(&p).unwrap().assemble().unwrap();
        assert!((a.matrix()[(1, 1)].re - 0.75).abs() < 1e-15);
        let s = CqState::uniform_with_states(vec![ket(0, Bb84::Plus), ket(1, Bb84::Plus)], 1).unwrap();
        let m = s.assemble().unwrap();
        assert!((m.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((m.matrix()[(3, 3)].re - 0.5).abs() < 1e-15);
        assert!(m.matrix()[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn qmin_rel_examples() {
        let sigma = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let prod = DensityOperator::maximally_mixed(4).tensor(&sigma).unwrap();
        assert!((qmin_entropy_rel(&prod, &sigma).unwrap() - 2.0).abs() < 1e-9);
        let ra = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        let prod = ra.tensor(&sigma).unwrap();
        assert!((qmin_entropy_rel(&prod, &sigma).unwrap() + 0.6f64.log2()).abs() < 1e-9);
        // classical copy: rho = 1/2(|00><00| + |11><11|), sigma_B = rho_B = I/2
        let copy = DensityOperator::diagonal(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        let rb = DensityOperator::maximally_mixed(2);
        assert!(qmin_entropy_rel(&copy, &rb).unwrap().abs() < 1e-9);
        let pure0 = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        assert!(qmin_entropy_rel(&copy, &pure0).is_err());
    }

    #[test]
    fn qmin_examples() {
        let p = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let b = qmin_entropy(&CqState::from_classical(&p).unwrap());
        assert!((b.lower - 1.0).abs() < 1e-9 && (b.upper - 1.0).abs() < 1e-9);
        let orth = CqState::uniform_with_states(vec![ket(0, Bb84::Plus), ket(1, Bb84::Plus)], 1).unwrap();
        assert!(qmin_entropy(&orth).upper.abs() < 1e-9);
        let bb = CqState::uniform_with_states(vec![ket(0, Bb84::Plus), ket(0, Bb84::Cross)], 1).unwrap();
        let v = qmin_entropy(&bb);
        assert!(v.exact);
        let c2 = (PI / 8.0).cos().powi(2);
        assert!((v.upper + c2.log2()).abs() < 1e-9);
    }

    fn gf2_rank(rows: &[u64]) -> u32 {
        let mut rows = rows.to_vec();
        let mut rank = 0;
        for bit in (0..64).rev() {
            if let Some(k) = (rank as usize..rows.len()).find(|&k| (rows[k] >> bit) & 1 == 1) {
                rows.swap(rank as usize, k);
                let pivot = rows[rank as usize];
                for (j, r) in rows.iter_mut().enumerate() {
                    if j != rank as usize && (*r >> bit) & 1 == 1 {
                        *r ^= pivot;
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// For uniform X, a linear map of rank r hits its image uniformly, so its
    /// distance from uniform on l bits is 1 - 2^{r-l}.
    fn uniform_input_oracle(fam: &HashFamily) -> f64 {
        let all: Vec<_> = fam.iter().unwrap().collect();
        let tot: f64 = all
            .iter()
            .map(|f| {
                let rows: Vec<u64> = f.rows().iter().map(|r| r.to_index()).collect();
                1.0 - 2f64.powi(gf2_rank(&rows) as i32 - fam.ell as i32)
            })
            .sum();
        tot / all.len() as f64
    }

    #[test]
    fn pa_examples() {
        let u = CqState::from_classical(&Distribution::uniform(8)).unwrap();
        for fam in [HashFamily::linear(3, 1), HashFamily::linear(3, 3)] {
            let r = pa_distance(&u, &fam, FamilyAveraging::Exhaustive, 0.0).unwrap();
            assert!((r.exact_distance - uniform_input_oracle(&fam)).abs() < 1e-12);
            assert!(r.exact_distance <= r.bound);
        }
        // only the zero map is unbalanced at l = 1
        let r = pa_distance(&u, &HashFamily::linear(3, 1), FamilyAveraging::Exhaustive, 0.0).unwrap();
        assert!((r.exact_distance - 0.5 / 8.0).abs() < 1e-12);
        let c = CqState::from_classical(&Distribution::point(8, 3)).unwrap();
        let out = pa_output_state(&c, &HashFamily::linear(3, 1), FamilyAveraging::Exhaustive).unwrap();
        for st in &out.states {
            assert_eq!(st.entries().len(), 1);
        }
    }

    #[test]
    fn pa_output_matches_hand_assembly() {
        // X uniform on 2 bits, E holds x_0 in the + basis; family: all 1x2 linear maps
        let states: Vec<DensityOperator> = (0..4).map(|x| ket((x >> 1) as u8, Bb84::Plus)).collect();
        let s = CqState::uniform_with_states(states, 1).unwrap();
        let fam = HashFamily::linear(2, 1);
        let out = pa_output_state(&s, &fam, FamilyAveraging::Exhaustive).unwrap();
        let m = out.assemble().unwrap();
        // member f = row 10 (index 2) outputs x_0, so z = e: diagonal entries at (z,f=2,e=z)
        let idx = |z: usize, f: usize, e: usize| (z * 4 + f) * 2 + e;
        assert!((m.matrix()[(idx(0, 2, 0), idx(0, 2, 0))].re - 0.125).abs() < 1e-12);
        assert!(m.matrix()[(idx(0, 2, 1), idx(0, 2, 1))].norm() < 1e-12);
        // member 0 maps everything to z = 0 and leaves E mixed
        assert!((m.matrix()[(idx(0, 0, 1), idx(0, 0, 1))].re - 0.125).abs() < 1e-12);
        let r = pa_distance(&s, &fam, FamilyAveraging::Exhaustive, 0.0).unwrap();
        // members: 00 -> 1/2, 01 -> 0, 10 -> 1/2, 11 -> 0
        assert!((r.exact_distance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn lhl_examples() {
        let fam = HashFamily::linear(4, 1);
        let (d, b) = classical_lhl_distance(&Distribution::uniform(16), &fam, FamilyAveraging::Exhaustive).unwrap();
        assert!((d - uniform_input_oracle(&fam)).abs() < 1e-12 && d <= b);
        let (d, b) = classical_lhl_distance(&Distribution::point(16, 5), &fam, FamilyAveraging::Exhaustive).unwrap();
        // every member is deterministic on a point mass
        assert!((d - 0.5).abs() < 1e-12);
        assert!(d <= b);
    }

    #[test]
    fn ball_guess_examples() {
        let u = CqState::from_classical(&Distribution::uniform(16)).unwrap();
        let s = GuessStrategy::classical(vec![0], 1);
        let r = guess_within_ball(&u, &s, 0, 0.0).unwrap();
        assert!((r.success - 1.0 / 16.0).abs() < 1e-12 && r.success <= r.bound);
        let r = guess_within_ball(&u, &s, 4, 0.0).unwrap();
        assert!((r.success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helstrom_matches_grid_search() {
        let a0 = ket(0, Bb84::Plus).matrix().scale(0.5);
        let a1 = ket(0, Bb84::Cross).matrix().scale(0.5);
        let mut best: f64 = 0.0;
        for i in 0..200 {
            let t = PI * i as f64 / 200.0;
            let v = PureState::from_real(&[t.cos(), t.sin()]).unwrap().density();
            let p = v.matrix();
            let val = (p * &a0).trace().re + ((identity(2) - p) * &a1).trace().re;
            best = best.max(val);
        }
        assert!((helstrom(&a0, &a1) - best).abs() < 1e-3);
    }
}
