//! Uncertainty relations for qubit registers measured in the `+`/`x` bases
//! (and more mutually unbiased bases), the accumulated min-entropy tool for
//! sequences with a per-step Shannon entropy floor, and the sampled form of
//! the per-qubit-basis relation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{self, Distribution, JointDistribution};
use crate::qstate::{self, c, Basis, BasisSet, CVec, DensityOperator, PureState};
use crate::{derive_seed, input_err, Error, Result};

/// Largest register handled by the relation checks.
pub const MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Non-negative exactly when the relation holds.
    pub slack: f64,
    pub witness: serde_json::Value,
}

impl RelationReport {
    fn upper(relation: &str, lhs: f64, rhs: f64, witness: serde_json::Value) -> Self {
        Self { relation: relation.into(), lhs, rhs, slack: rhs - lhs, witness }
    }

    fn lower(relation: &str, lhs: f64, rhs: f64, witness: serde_json::Value) -> Self {
        Self { relation: relation.into(), lhs, rhs, slack: lhs - rhs, witness }
    }

    pub fn holds(&self) -> bool {
        self.slack >= -1e-9
    }
}

fn qubits(rho: &DensityOperator) -> Result<usize> {
    let n = rho.n().ok_or_else(|| Error::Input("state is not a qubit register".into()))?;
    if n == 0 {
        return input_err("empty register");
    }
    if n > MAX_N {
        return Err(Error::Capacity(format!("n = {n} (limit {MAX_N})")));
    }
    Ok(n)
}

/// Outcome distribution for the tensor power `b^{⊗n}`.
pub fn distribution_in(rho: &DensityOperator, b: &Basis) -> Result<Distribution> {
    let n = qubits(rho)?;
    Ok(qstate::measure_per_qubit(rho, &vec![b.clone(); n])?)
}

/// `(Q+, Qx)`.
pub fn q_plus_cross(rho: &DensityOperator) -> Result<(Distribution, Distribution)> {
    Ok((distribution_in(rho, &Basis::plus())?, distribution_in(rho, &Basis::cross())?))
}

fn set_mass(q: &Distribution, set: &[usize]) -> Result<f64> {
    let mut seen = std::collections::HashSet::new();
    let mut s = 0.0;
    for &x in set {
        if x >= q.len() {
            return input_err(format!("string index {x} out of range"));
        }
        if !seen.insert(x) {
            return input_err(format!("string index {x} repeated"));
        }
        s += q.mass()[x];
    }
    Ok(s)
}

/// `Q+(L+) + Qx(Lx) <= 1 + 2^{-n/2} sqrt(|L+| |Lx|)`.
pub fn two_basis_relation(rho: &DensityOperator, lp: &[usize], lx: &[usize]) -> Result<RelationReport> {
    let n = qubits(rho)?;
    let (qp, qx) = q_plus_cross(rho)?;
    let lhs = set_mass(&qp, lp)? + set_mass(&qx, lx)?;
    let rhs = 1.0 + 2f64.powf(-(n as f64) / 2.0) * ((lp.len() * lx.len()) as f64).sqrt();
    Ok(RelationReport::upper("two-basis", lhs, rhs, json!({"n": n, "size_plus": lp.len(), "size_cross": lx.len()})))
}

/// `(|0..0> + H^{⊗n}|0..0>) / sqrt(2 (1 + 2^{-n/2}))`.
pub fn invariant_state(n: usize) -> Result<PureState> {
    if n == 0 || n > MAX_N {
        return Err(Error::Capacity(format!("n = {n}")));
    }
    let d = 1usize << n;
    let u = 2f64.powf(-(n as f64) / 2.0);
    let mut v = vec![u; d];
    v[0] += 1.0;
    Ok(PureState::normalized(CVec::from_iterator(d, v.into_iter().map(|a| c(a, 0.0))))?)
}

/// `|0>^{⊗n/2} ⊗ (H|0>)^{⊗n/2}` with `L+ = {0^{n/2} x}` and `Lx = {x 0^{n/2}}`.
pub fn half_split_fixture(n: usize) -> Result<(PureState, Vec<usize>, Vec<usize>)> {
    if n == 0 || n % 2 != 0 || n > MAX_N {
        return input_err("n must be even and positive");
    }
    let h = n / 2;
    let d = 1usize << n;
    let amp = 2f64.powf(-(h as f64) / 2.0);
    let v: Vec<f64> = (0..d).map(|i| if i >> h == 0 { amp } else { 0.0 }).collect();
    let state = PureState::from_real(&v)?;
    let lp: Vec<usize> = (0..1usize << h).collect();
    let lx: Vec<usize> = (0..1usize << h).map(|x| x << h).collect();
    Ok((state, lp, lx))
}

/// Sum and product forms for the largest probabilities: `q+ + qx <= 1 + c`
/// and `q+ qx <= (1 + c)^2 / 4` with `c = 2^{-n/2}`.
pub fn max_prob_relation(rho: &DensityOperator) -> Result<(RelationReport, RelationReport)> {
    let n = qubits(rho)?;
    let (qp, qx) = q_plus_cross(rho)?;
    let cc = 2f64.powf(-(n as f64) / 2.0);
    let (a, b) = (qp.max(), qx.max());
    let w = json!({"n": n, "q_plus": a, "q_cross": b});
    Ok((
        RelationReport::upper("max-prob-sum", a + b, 1.0 + cc, w.clone()),
        RelationReport::upper("max-prob-product", a * b, 0.25 * (1.0 + cc) * (1.0 + cc), w),
    ))
}

/// `H_∞(Q+) + H_∞(Qx) >= 2 (1 - log(1 + 2^{-n/2}))`.
pub fn min_entropy_sum_relation(rho: &DensityOperator) -> Result<RelationReport> {
    let n = qubits(rho)?;
    let (qp, qx) = q_plus_cross(rho)?;
    let lhs = entropy::min_entropy(&qp) + entropy::min_entropy(&qx);
    let rhs = 2.0 * (1.0 - (1.0 + 2f64.powf(-(n as f64) / 2.0)).log2());
    Ok(RelationReport::lower("min-entropy-sum", lhs, rhs, json!({"n": n})))
}

/// `H(Q+) + H(Qx) >= n`.
pub fn maassen_uffink(rho: &DensityOperator) -> Result<RelationReport> {
    let n = qubits(rho)?;
    let (qp, qx) = q_plus_cross(rho)?;
    let lhs = entropy::shannon_entropy(&qp) + entropy::shannon_entropy(&qx);
    Ok(RelationReport::lower("maassen-uffink", lhs, n as f64, json!({"n": n})))
}

fn check_singles(singles: &[Basis]) -> Result<()> {
    if singles.len() < 2 || singles.iter().any(|b| b.dim() != 2) {
        return input_err("need at least two qubit bases");
    }
    BasisSet::new(singles.to_vec(), true)?;
    Ok(())
}

/// `sum_i Q^i(L^i) <= 1 + M 2^{-n/2} max_{i<j} sqrt(|L^i| |L^j|)` for the
/// tensor powers of the pairwise unbiased qubit bases in `singles`.
pub fn multi_mub_relation(rho: &DensityOperator, singles: &[Basis], sets: &[Vec<usize>]) -> Result<RelationReport> {
    let n = qubits(rho)?;
    check_singles(singles)?;
    if sets.len() != singles.len() {
        return input_err("one set per basis");
    }
    let mut lhs = 0.0;
    for (b, l) in singles.iter().zip(sets) {
        lhs += set_mass(&distribution_in(rho, b)?, l)?;
    }
    let m = singles.len() - 1;
    let mut mx = 0.0f64;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            mx = mx.max(((sets[i].len() * sets[j].len()) as f64).sqrt());
        }
    }
    let rhs = 1.0 + m as f64 * 2f64.powf(-(n as f64) / 2.0) * mx;
    Ok(RelationReport::upper("multi-mub", lhs, rhs, json!({"n": n, "bases": m + 1})))
}

/// `sum_i H_∞(Q^i) >= (M+1) log((M+1) / (1 + M 2^{-n/2}))`, the finite-n form
/// of the min-entropy sum over M+1 unbiased bases.
pub fn multi_mub_min_entropy(rho: &DensityOperator, singles: &[Basis]) -> Result<RelationReport> {
    let n = qubits(rho)?;
    check_singles(singles)?;
    let mut lhs = 0.0;
    for b in singles {
        lhs += entropy::min_entropy(&distribution_in(rho, b)?);
    }
    let k = singles.len() as f64;
    let rhs = k * (k / (1.0 + (k - 1.0) * 2f64.powf(-(n as f64) / 2.0))).log2();
    Ok(RelationReport::lower("multi-mub-min-entropy", lhs, rhs, json!({"n": n, "bases": singles.len()})))
}

// ---------------------------------------------------------------------------
// The event E
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBranch {
    /// Strings kept in the event when R equals this basis.
    pub small_set: Vec<usize>,
    /// `Pr[E | R = r]`.
    pub probability: f64,
    /// `H_∞(X | R = r, E)` when the branch has positive probability.
    pub min_entropy: Option<f64>,
    /// Whether the branch was emptied.
    pub emptied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub n: usize,
    pub lambda: f64,
    pub kappa: f64,
    /// `2^{-(lambda + kappa) n}`.
    pub threshold: f64,
    pub plus: EventBranch,
    pub cross: EventBranch,
    /// `Pr[E | +] + Pr[E | x]` and its required value `1 - 2^{-kappa n}`.
    pub probability_sum: f64,
    pub probability_bound: f64,
    /// `Pr[E]` for uniform R.
    pub probability: f64,
    pub sum_holds: bool,
    pub entropy_holds: bool,
}

/// Builds the small-probability sets `S^r = {x : Q^r(x) <= 2^{-(lambda+kappa)n}}`
/// and the event `X in S^R`, emptying a branch whose mass is below
/// `2^{-kappa n}`. Without an explicit kappa, `kappa = (1/2 - lambda) / 3`.
pub fn event_construction(rho: &DensityOperator, lambda: f64, kappa: Option<f64>) -> Result<EventReport> {
    let n = qubits(rho)?;
    let (qp, qx) = q_plus_cross(rho)?;
    event_from_distributions(n, &qp, &qx, lambda, kappa)
}

/// [`event_construction`] from the two outcome distributions directly.
pub fn event_from_distributions(
    n: usize,
    qp: &Distribution,
    qx: &Distribution,
    lambda: f64,
    kappa: Option<f64>,
) -> Result<EventReport> {
    if qp.len() != 1usize << n || qx.len() != 1usize << n {
        return input_err("distributions must range over n-bit strings");
    }
    if !(lambda > 0.0 && lambda < 0.5) {
        return input_err(format!("lambda = {lambda} must lie in (0, 1/2)"));
    }
    let kappa = kappa.unwrap_or((0.5 - lambda) / 3.0);
    if !(kappa > 0.0 && lambda + 2.0 * kappa < 0.5) {
        return input_err("kappa must be positive with lambda + 2 kappa < 1/2");
    }
    let nf = n as f64;
    let threshold = 2f64.powf(-(lambda + kappa) * nf);
    let floor = 2f64.powf(-kappa * nf);
    let branch = |q: &Distribution| {
        let small: Vec<usize> = (0..q.len()).filter(|&x| q.mass()[x] <= threshold).collect();
        let mass: f64 = small.iter().map(|&x| q.mass()[x]).sum();
        (small, mass)
    };
    let (sp, mp) = branch(qp);
    let (sx, mx) = branch(qx);
    // Empty the lighter branch if it falls below the floor.
    let empty_plus = mp < floor && mp <= mx;
    let empty_cross = mx < floor && !empty_plus;
    let make = |q: &Distribution, set: Vec<usize>, mass: f64, emptied: bool| {
        if emptied || mass <= 0.0 {
            return EventBranch { small_set: if emptied { vec![] } else { set }, probability: 0.0, min_entropy: None, emptied };
        }
        let mx = set.iter().map(|&x| q.mass()[x]).fold(0.0, f64::max);
        EventBranch { small_set: set, probability: mass, min_entropy: Some(-(mx / mass).log2()), emptied }
    };
    let plus = make(qp, sp, mp, empty_plus);
    let cross = make(qx, sx, mx, empty_cross);
    let probability_sum = plus.probability + cross.probability;
    let probability_bound = 1.0 - floor;
    let need = lambda * nf;
    let entropy_holds = [&plus, &cross].iter().all(|b| b.min_entropy.map_or(true, |h| h >= need - 1e-9));
    Ok(EventReport {
        n,
        lambda,
        kappa,
        threshold,
        probability: 0.5 * probability_sum,
        sum_holds: probability_sum >= probability_bound - 1e-9,
        entropy_holds,
        probability_sum,
        probability_bound,
        plus,
        cross,
    })
}

// ---------------------------------------------------------------------------
// Accumulated min-entropy
// ---------------------------------------------------------------------------

/// A sequence Z_1, Z_2, ... described by its conditional distributions.
pub trait SequenceModel {
    fn alphabet(&self) -> usize;
    fn conditional(&self, history: &[usize]) -> Vec<f64>;
}

/// Independent uniform symbols.
#[derive(Debug, Clone, Copy)]
pub struct IidUniform(pub usize);

impl SequenceModel for IidUniform {
    fn alphabet(&self) -> usize {
        self.0
    }
    fn conditional(&self, _: &[usize]) -> Vec<f64> {
        vec![1.0 / self.0 as f64; self.0]
    }
}

/// The previous symbol repeats with probability `1 - a` and every other
/// symbol has probability `a / (k - 1)`, with `a` chosen so that each step has
/// Shannon entropy exactly `h`.
#[derive(Debug, Clone, Copy)]
pub struct FloorHugging {
    k: usize,
    a: f64,
}

impl FloorHugging {
    pub fn new(k: usize, h: f64) -> Result<Self> {
        if k < 2 || !(h > 0.0 && h < (k as f64).log2()) {
            return input_err("need k >= 2 and 0 < h < log k");
        }
        let ent = |a: f64| {
            let mut p = vec![a / (k - 1) as f64; k];
            p[0] = 1.0 - a;
            entropy::shannon_entropy(&Distribution::from_unchecked(p))
        };
        // entropy increases on [0, (k-1)/k]
        let (mut lo, mut hi) = (0.0, (k - 1) as f64 / k as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ent(mid) < h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self { k, a: hi })
    }
}

impl SequenceModel for FloorHugging {
    fn alphabet(&self) -> usize {
        self.k
    }
    fn conditional(&self, history: &[usize]) -> Vec<f64> {
        let heavy = history.last().copied().unwrap_or(0);
        let mut p = vec![self.a / (self.k - 1) as f64; self.k];
        p[heavy] = 1.0 - self.a;
        p
    }
}

/// Always emits symbol 0.
#[derive(Debug, Clone, Copy)]
pub struct Deterministic(pub usize);

impl SequenceModel for Deterministic {
    fn alphabet(&self) -> usize {
        self.0
    }
    fn conditional(&self, _: &[usize]) -> Vec<f64> {
        let mut p = vec![0.0; self.0];
        p[0] = 1.0;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationReport {
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub alphabet: usize,
    pub trials: usize,
    /// Fraction of trials with `P(z^n) >= 2^{-(h - 2 lambda) n}`.
    pub exceedance: f64,
    pub stderr: f64,
    /// `exp(-lambda^2 n / (32 log(|Z| / lambda)^2))`.
    pub epsilon: f64,
    pub holds: bool,
    /// Smallest per-step Shannon entropy met on any realized history.
    pub min_step_entropy: f64,
}

pub fn hmin_epsilon(n: usize, alphabet: usize, lambda: f64) -> f64 {
    let l = (alphabet as f64 / lambda).log2();
    (-(lambda * lambda * n as f64) / (32.0 * l * l)).exp()
}

/// Monte Carlo estimate of `Pr[P(Z^n) >= 2^{-(h - 2 lambda) n}]`. The entropy
/// floor is recomputed from the declared conditional at every step, and a
/// history violating it aborts the run.
pub fn accumulated_min_entropy<M: SequenceModel, R: Rng + ?Sized>(
    model: &M,
    n: usize,
    h: f64,
    lambda: f64,
    trials: usize,
    rng: &mut R,
) -> Result<AccumulationReport> {
    if h <= 0.0 {
        return Err(Error::Precondition(format!("entropy floor h = {h} must be positive")));
    }
    if !(lambda > 0.0 && lambda < 0.5) || n == 0 || trials == 0 {
        return input_err("need 0 < lambda < 1/2, n > 0 and trials > 0");
    }
    let k = model.alphabet();
    let cut = -(h - 2.0 * lambda) * n as f64;
    let mut hits = 0usize;
    let mut min_step = f64::INFINITY;
    let mut history = Vec::with_capacity(n);
    for _ in 0..trials {
        history.clear();
        let mut logp = 0.0;
        for _ in 0..n {
            let p = model.conditional(&history);
            let d = Distribution::new(p.clone())?;
            if p.len() != k {
                return input_err("conditional has the wrong alphabet size");
            }
            let step = entropy::shannon_entropy(&d);
            if step < h - 1e-12 {
                return Err(Error::Precondition(format!(
                    "H(Z_i | history) = {step} < {h} after history {history:?}"
                )));
            }
            min_step = min_step.min(step);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut z = k - 1;
            for (i, &pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    z = i;
                    break;
                }
            }
            logp += p[z].log2();
            history.push(z);
        }
        if logp >= cut {
            hits += 1;
        }
    }
    let t = trials as f64;
    let exceedance = hits as f64 / t;
    let stderr = (exceedance * (1.0 - exceedance) / t).sqrt();
    let epsilon = hmin_epsilon(n, k, lambda);
    Ok(AccumulationReport {
        n,
        h,
        lambda,
        alphabet: k,
        trials,
        exceedance,
        stderr,
        epsilon,
        holds: exceedance <= epsilon + 3.0 * stderr,
        min_step_entropy: min_step,
    })
}

// ---------------------------------------------------------------------------
// Average entropic uncertainty bounds of qubit basis sets
// ---------------------------------------------------------------------------

fn bloch_state(theta: f64, phi: f64) -> CVec {
    CVec::from_vec(vec![c((theta / 2.0).cos(), 0.0), c(phi.cos(), phi.sin()) * (theta / 2.0).sin()])
}

/// Average Shannon entropy of the outcome over the bases, for a qubit pure
/// state at Bloch angles (theta, phi).
pub fn average_entropy(singles: &[Basis], theta: f64, phi: f64) -> f64 {
    let v = bloch_state(theta, phi);
    let mut s = 0.0;
    for b in singles {
        let p: Vec<f64> = b.vectors().iter().map(|e| e.dotc(&v).norm_sqr()).collect();
        s += entropy::shannon_entropy(&Distribution::from_unchecked(p));
    }
    s / singles.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    /// Smallest average entropy found; an upper bound on the true minimum.
    pub value: f64,
    /// Smallest value on the grid alone.
    pub grid_value: f64,
    pub theta: f64,
    pub phi: f64,
}

fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: (f64, f64), step: f64, iters: usize) -> (f64, f64, f64) {
    let mut s: Vec<([f64; 2], f64)> = [[start.0, start.1], [start.0 + step, start.1], [start.0, start.1 + step]]
        .into_iter()
        .map(|p| (p, f(p[0], p[1])))
        .collect();
    for _ in 0..iters {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let cen = [(s[0].0[0] + s[1].0[0]) / 2.0, (s[0].0[1] + s[1].0[1]) / 2.0];
        let pt = |t: f64| [cen[0] + t * (s[2].0[0] - cen[0]), cen[1] + t * (s[2].0[1] - cen[1])];
        let r = pt(-1.0);
        let fr = f(r[0], r[1]);
        if fr < s[0].1 {
            let e = pt(-2.0);
            let fe = f(e[0], e[1]);
            s[2] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < s[1].1 {
            s[2] = (r, fr);
        } else {
            let k = pt(0.5);
            let fk = f(k[0], k[1]);
            if fk < s[2].1 {
                s[2] = (k, fk);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    v.0 = [(v.0[0] + best[0]) / 2.0, (v.0[1] + best[1]) / 2.0];
                    v.1 = f(v.0[0], v.0[1]);
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    (s[0].1, s[0].0[0], s[0].0[1])
}

/// Minimum of the average entropy over the Bloch sphere: a Fibonacci grid of
/// `grid` points followed by Nelder-Mead from the best few grid points.
pub fn average_entropy_bound(singles: &[Basis], grid: usize) -> Result<BoundEstimate> {
    if singles.is_empty() || singles.iter().any(|b| b.dim() != 2) || grid == 0 {
        return input_err("need qubit bases and a non-empty grid");
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<(f64, f64, f64)> = (0..grid)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / grid as f64;
            let (t, p) = (z.clamp(-1.0, 1.0).acos(), (i as f64 * golden) % std::f64::consts::TAU);
            (average_entropy(singles, t, p), t, p)
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let grid_value = pts[0].0;
    let mut best = (grid_value, pts[0].1, pts[0].2);
    for &(_, t, p) in pts.iter().take(8) {
        let r = nelder_mead(|a, b| average_entropy(singles, a, b), (t, p), 0.05, 300);
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(BoundEstimate { value: best.0, grid_value, theta: best.1, phi: best.2 })
}

// ---------------------------------------------------------------------------
// The per-qubit-basis relation, sampled
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondRelationReport {
    pub n: usize,
    pub bases: usize,
    pub h: f64,
    pub lambda: f64,
    /// `exp(-lambda^2 n / (32 log(|B| d / lambda)^2))`.
    pub epsilon: f64,
    /// `(h - 2 lambda) n`.
    pub bound: f64,
    pub trials: usize,
    /// Mean over sampled slices of `P_theta[X : P_theta(X) > 2^{-bound}]`.
    pub bad_mass: f64,
    pub bad_mass_stderr: f64,
    /// Mean Shannon entropy `H(X | Theta = theta)` over the samples.
    pub mean_shannon: f64,
    /// Smallest per-slice smooth min-entropy at `epsilon`.
    pub min_slice_smooth_entropy: f64,
    pub holds: bool,
}

/// Samples `Theta` uniformly from `singles^n`, computes each slice `P_theta`
/// exactly, and estimates the mass of strings exceeding `2^{-(h - 2 lambda) n}`,
/// which bounds the smoothing needed for `H_∞^eps(X|Theta) >= (h - 2 lambda) n`.
pub fn second_relation_sample<R: Rng + ?Sized>(
    rho: &DensityOperator,
    singles: &[Basis],
    h: f64,
    lambda: f64,
    trials: usize,
    rng: &mut R,
) -> Result<SecondRelationReport> {
    let n = qubits(rho)?;
    if singles.is_empty() || singles.iter().any(|b| b.dim() != 2) {
        return input_err("need qubit bases");
    }
    if !(lambda > 0.0 && lambda < 0.5) || trials == 0 {
        return input_err("need 0 < lambda < 1/2 and trials > 0");
    }
    let nb = singles.len();
    let l = (nb as f64 * 2.0 / lambda).log2();
    let epsilon = (-(lambda * lambda * n as f64) / (32.0 * l * l)).exp();
    let bound = (h - 2.0 * lambda) * n as f64;
    let cut = 2f64.powf(-bound);
    let (mut s, mut s2, mut sh) = (0.0, 0.0, 0.0);
    let mut min_smooth = f64::INFINITY;
    for _ in 0..trials {
        let theta: Vec<Basis> = (0..n).map(|_| singles[rng.gen_range(0..nb)].clone()).collect();
        let p = qstate::measure_per_qubit(rho, &theta)?;
        let bad: f64 = p.mass().iter().filter(|&&v| v > cut).sum();
        s += bad;
        s2 += bad * bad;
        sh += entropy::shannon_entropy(&p);
        let (hs, _) = entropy::smooth_min_entropy(&JointDistribution::from_single(&p), epsilon.min(1.0 - 1e-12))?;
        min_smooth = min_smooth.min(hs);
    }
    let t = trials as f64;
    let mean = s / t;
    let stderr = ((s2 / t - mean * mean).max(0.0) / t).sqrt();
    Ok(SecondRelationReport {
        n,
        bases: nb,
        h,
        lambda,
        epsilon,
        bound,
        trials,
        bad_mass: mean,
        bad_mass_stderr: stderr,
        mean_shannon: sh / t,
        min_slice_smooth_entropy: min_smooth,
        holds: mean <= epsilon + 3.0 * stderr,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub trial: usize,
    pub n: usize,
    pub state_seed: u64,
    pub set_seed: u64,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

fn random_set<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    let k = rng.gen_range(1..=(d / 4).max(1));
    rand::seq::index::sample(rng, d, k).into_vec()
}

/// Random state for trial `i`: Haar-random pure on even trials, a random
/// mixed state of random rank on odd ones.
pub fn sweep_state(n: usize, seed: u64, mixed: bool) -> Result<DensityOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if mixed {
        let rank = rng.gen_range(2..=1usize << n);
        Ok(qstate::random_density(n, rank, &mut rng)?)
    } else {
        Ok(PureState::haar(n, &mut rng)?.density())
    }
}

/// Every relation on `trials` random states with `n` cycling through
/// `1..=n_max` and random sets; one row per relation per trial.
pub fn relation_sweep(n_max: usize, trials: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if n_max == 0 || n_max > 8 {
        return Err(Error::Capacity(format!("sweep n_max = {n_max} (limit 8)")));
    }
    let singles = [Basis::plus(), Basis::cross(), Basis::circular()];
    let mut rows = Vec::with_capacity(trials * 7);
    for i in 0..trials {
        let n = 1 + i % n_max;
        let state_seed = derive_seed(seed, 2 * i as u64);
        let set_seed = derive_seed(seed, 2 * i as u64 + 1);
        let rho = sweep_state(n, state_seed, i % 2 == 1)?;
        let mut srng = ChaCha8Rng::seed_from_u64(set_seed);
        let d = 1usize << n;
        let (lp, lx) = (random_set(d, &mut srng), random_set(d, &mut srng));
        let sets: Vec<Vec<usize>> = (0..3).map(|_| random_set(d, &mut srng)).collect();
        let (sum, prod) = max_prob_relation(&rho)?;
        for r in [
            two_basis_relation(&rho, &lp, &lx)?,
            sum,
            prod,
            min_entropy_sum_relation(&rho)?,
            multi_mub_relation(&rho, &singles, &sets)?,
            multi_mub_min_entropy(&rho, &singles)?,
            maassen_uffink(&rho)?,
        ] {
            rows.push(SweepRow { trial: i, n, state_seed, set_seed, relation: r.relation, lhs: r.lhs, rhs: r.rhs, slack: r.slack });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_state_is_tight() {
        for n in 2..=8 {
            let rho = invariant_state(n).unwrap().density();
            let r = two_basis_relation(&rho, &[0], &[0]).unwrap();
            assert!((r.lhs - (1.0 + 2f64.powf(-(n as f64) / 2.0))).abs() < 1e-12);
            assert!(r.slack.abs() < 1e-12);
            let (s, p) = max_prob_relation(&rho).unwrap();
            assert!(s.slack.abs() < 1e-12 && p.slack.abs() < 1e-12);
            assert!(min_entropy_sum_relation(&rho).unwrap().slack.abs() < 1e-9);
        }
    }

    #[test]
    fn half_split_is_tight() {
        for n in [2, 4, 6, 8] {
            let (st, lp, lx) = half_split_fixture(n).unwrap();
            let r = two_basis_relation(&st.density(), &lp, &lx).unwrap();
            assert!((r.lhs - 2.0).abs() < 1e-12 && (r.rhs - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_state_max_prob() {
        let n = 4;
        let rho = PureState::basis_state(n, 0).unwrap().density();
        let (s, _) = max_prob_relation(&rho).unwrap();
        assert!((s.lhs - (1.0 + 2f64.powi(-(n as i32)))).abs() < 1e-12);
        let mu = maassen_uffink(&rho).unwrap();
        assert!(mu.slack.abs() < 1e-9);
        let mixed = DensityOperator::maximally_mixed(1 << n);
        assert!((min_entropy_sum_relation(&mixed).unwrap().lhs - 2.0 * n as f64).abs() < 1e-9);
    }

    #[test]
    fn mub_fully_mixed() {
        let rho = DensityOperator::maximally_mixed(8);
        let singles = [Basis::plus(), Basis::cross(), Basis::circular()];
        let r = multi_mub_relation(&rho, &singles, &[vec![1], vec![2], vec![5]]).unwrap();
        assert!((r.lhs - 3.0 / 8.0).abs() < 1e-12);
        assert!(multi_mub_relation(&rho, &[Basis::plus(), Basis::breitbart()], &[vec![0], vec![0]]).is_err());
        assert!(two_basis_relation(&rho, &[0, 0], &[1]).is_err());
    }

    #[test]
    fn events() {
        let mixed = DensityOperator::maximally_mixed(256);
        let e = event_construction(&mixed, 0.3, None).unwrap();
        assert_eq!(e.plus.small_set.len(), 256);
        assert!((e.plus.min_entropy.unwrap() - 8.0).abs() < 1e-9);
        assert!(e.sum_holds && e.entropy_holds);
        let zero = PureState::basis_state(8, 0).unwrap().density();
        let e = event_construction(&zero, 0.3, None).unwrap();
        assert!(e.plus.emptied && e.plus.probability == 0.0);
        assert!(e.sum_holds && e.entropy_holds);
        let inv = invariant_state(8).unwrap().density();
        let e = event_construction(&inv, 0.3, None).unwrap();
        assert!(e.plus.emptied && !e.cross.emptied && e.sum_holds && e.entropy_holds);
        assert!((e.cross.probability - 15.0 / 32.0).abs() < 1e-12);
        assert!(event_construction(&inv, 0.5, None).is_err());
    }

    #[test]
    fn floor_hugging_has_exact_entropy() {
        let m = FloorHugging::new(4, 1.2).unwrap();
        let p = Distribution::new(m.conditional(&[2])).unwrap();
        assert!((entropy::shannon_entropy(&p) - 1.2).abs() < 1e-9);
        assert_eq!(p.mass()[2], p.max());
    }

    #[test]
    fn accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = accumulated_min_entropy(&IidUniform(2), 50, 1.0, 0.1, 200, &mut rng).unwrap();
        assert_eq!(r.exceedance, 0.0);
        let e = accumulated_min_entropy(&Deterministic(2), 10, 0.5, 0.1, 1, &mut rng).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
        assert!(accumulated_min_entropy(&Deterministic(2), 10, 0.0, 0.1, 1, &mut rng).is_err());
        let fh = FloorHugging::new(4, 1.0).unwrap();
        let r = accumulated_min_entropy(&fh, 200, 1.0, 0.1, 300, &mut rng).unwrap();
        assert!(r.holds && r.min_step_entropy >= 1.0 - 1e-9);
    }

    #[test]
    fn bloch_bounds() {
        let bb84 = average_entropy_bound(&[Basis::plus(), Basis::cross()], 2000).unwrap();
        assert!((bb84.value - 0.5).abs() < 1e-3);
        let six = average_entropy_bound(&[Basis::plus(), Basis::cross(), Basis::circular()], 2000).unwrap();
        assert!(six.value >= 2.0 / 3.0 - 1e-3 && six.value <= 2.0 / 3.0 + 1e-3);
    }

    #[test]
    fn second_relation_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = PureState::basis_state(8, 0).unwrap().density();
        let r = second_relation_sample(&rho, &[Basis::plus(), Basis::cross()], 0.5, 0.1, 400, &mut rng).unwrap();
        assert!((r.mean_shannon - 4.0).abs() < 0.3);
        assert!(r.holds);
        let mixed = DensityOperator::maximally_mixed(64);
        let r = second_relation_sample(&mixed, &[Basis::plus(), Basis::cross()], 0.5, 0.1, 20, &mut rng).unwrap();
        assert!((r.mean_shannon - 6.0).abs() < 1e-9 && r.bad_mass == 0.0);
    }

    #[test]
    fn small_sweep_has_no_violation() {
        let rows = relation_sweep(4, 60, 9).unwrap();
        assert!(rows.iter().all(|r| r.slack >= -1e-9), "{:?}", rows.iter().find(|r| r.slack < -1e-9));
        assert_eq!(rows, relation_sweep(4, 60, 9).unwrap());
    }
}
