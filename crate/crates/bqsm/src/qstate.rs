//! Dense state-vector and density-matrix machinery for small qubit registers.
//!
//! Qubit 0 is the most significant bit of a basis index, so the string
//! `x_0 x_1 ... x_{n-1}` labels index `sum x_i 2^(n-1-i)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

use crate::entropy::Distribution;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 14;

pub const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("register of {0} qubits exceeds the dense capacity of {MAX_QUBITS}")]
    Capacity(usize),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("operator is not a density operator: {0}")]
    NotPhysical(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type QResult<T> = Result<T, QError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_capacity(n: usize) -> QResult<()> {
    if n > MAX_QUBITS {
        Err(QError::Capacity(n))
    } else {
        Ok(())
    }
}

fn log2_exact(d: usize) -> Option<usize> {
    if d.is_power_of_two() {
        Some(d.trailing_zeros() as usize)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Hermitian helpers
// ---------------------------------------------------------------------------

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].re.abs(),
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)];
            let tr = a + d;
            let disc = ((a - d) * (a - d) / 4.0 + b.norm_sqr()).sqrt();
            let l1 = tr / 2.0 + disc;
            let l2 = tr / 2.0 - disc;
            l1.abs() + l2.abs()
        }
        _ => hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum(),
    }
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max(m: &CMat) -> f64 {
    *hermitian_eigenvalues(m).last().unwrap()
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(f(v), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

fn is_hermitian(m: &CMat, tol: f64) -> bool {
    let n = m.nrows();
    if m.ncols() != n {
        return false;
    }
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amps: CVec,
}

impl PureState {
    pub fn new(amps: CVec) -> QResult<Self> {
        let len = amps.len();
        let n = log2_exact(len).ok_or_else(|| QError::Invalid(format!("length {len} is not a power of two")))?;
        if n == 0 {
            return Err(QError::Invalid("a pure state needs at least one qubit".into()));
        }
        check_capacity(n)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QError::NotNormalized(norm));
        }
        Ok(Self { n, amps })
    }

    /// Normalizes the given amplitudes first.
    pub fn normalized(amps: CVec) -> QResult<Self> {
        let norm = amps.norm();
        if norm == 0.0 {
            return Err(QError::NotNormalized(0.0));
        }
        Self::new(amps.unscale(norm))
    }

    pub fn from_real(amps: &[f64]) -> QResult<Self> {
        Self::new(CVec::from_iterator(amps.len(), amps.iter().map(|&a| c(a, 0.0))))
    }

    pub fn basis_state(n: usize, index: usize) -> QResult<Self> {
        check_capacity(n)?;
        let mut v = CVec::zeros(1 << n);
        if index >= 1 << n {
            return Err(QError::Invalid(format!("index {index} out of range")));
        }
        v[index] = c(1.0, 0.0);
        Self::new(v)
    }

    /// Haar-random pure state on n qubits.
    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QResult<Self> {
        check_capacity(n)?;
        let d = 1 << n;
        let v = CVec::from_iterator(
            d,
            (0..d).map(|_| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))),
        );
        Self::normalized(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &PureState) -> bool {
        self.n == other.n && (self.inner(other).norm() - 1.0).abs() < TOL
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { m: &self.amps * self.amps.adjoint() }
    }

    pub fn tensor(&self, other: &PureState) -> QResult<PureState> {
        check_capacity(self.n + other.n)?;
        Ok(PureState { n: self.n + other.n, amps: self.amps.kronecker(&other.amps) })
    }

    /// Applies a single-qubit operator to qubit `k` in place.
    pub fn apply_1q(&mut self, k: usize, u: &CMat) {
        apply_1q_vec(&mut self.amps, self.n, k, u);
    }

    /// Applies a full-register unitary.
    pub fn apply(&self, u: &CMat) -> QResult<PureState> {
        if u.nrows() != self.dim() {
            return Err(QError::DimensionMismatch(u.nrows(), self.dim()));
        }
        Ok(PureState { n: self.n, amps: u * &self.amps })
    }

    /// Outcome distribution when every qubit is measured in its own basis.
    pub fn measure_per_qubit(&self, theta: &[Basis]) -> QResult<Distribution> {
        if theta.len() != self.n {
            return Err(QError::LengthMismatch { expected: self.n, got: theta.len() });
        }
        let mut v = self.amps.clone();
        for (k, b) in theta.iter().enumerate() {
            if b.dim() != 2 {
                return Err(QError::DimensionMismatch(b.dim(), 2));
            }
            apply_1q_vec(&mut v, self.n, k, &b.matrix().adjoint());
        }
        Ok(Distribution::from_unchecked(v.iter().map(|a| a.norm_sqr()).collect()))
    }

    pub fn measure(&self, basis: &Basis) -> QResult<Distribution> {
        if basis.dim() != self.dim() {
            return Err(QError::DimensionMismatch(basis.dim(), self.dim()));
        }
        Ok(Distribution::from_unchecked(
            basis.vectors.iter().map(|b| b.dotc(&self.amps).norm_sqr()).collect(),
        ))
    }
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n: usize,
            amplitudes: Vec<f64>,
        }
        let amplitudes = self.amps.iter().flat_map(|a| [a.re, a.im]).collect();
        Repr { n: self.n, amplitudes }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            amplitudes: Vec<f64>,
        }
        let r = Repr::deserialize(d)?;
        if r.amplitudes.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd number of interleaved components"));
        }
        let v = CVec::from_iterator(r.amplitudes.len() / 2, r.amplitudes.chunks(2).map(|p| c(p[0], p[1])));
        PureState::new(v).map_err(serde::de::Error::custom)
    }
}

fn apply_1q_vec(v: &mut CVec, n: usize, k: usize, u: &CMat) {
    let stride = 1usize << (n - 1 - k);
    let d = v.len();
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let mut i = 0;
    while i < d {
        for j in i..i + stride {
            let a = v[j];
            let b = v[j + stride];
            v[j] = u00 * a + u01 * b;
            v[j + stride] = u10 * a + u11 * b;
        }
        i += 2 * stride;
    }
}

// ---------------------------------------------------------------------------
// Density operators
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace, positive semidefinite operator. The dimension is
/// arbitrary so classical registers of any size can be attached; `n()` is
/// the qubit count when the dimension is a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    m: CMat,
}

impl DensityOperator {
    pub fn new(m: CMat) -> QResult<Self> {
        let d = m.nrows();
        if m.ncols() != d || d == 0 {
            return Err(QError::NotPhysical("not square".into()));
        }
        if let Some(n) = log2_exact(d) {
            check_capacity(n)?;
        }
        if !is_hermitian(&m, 1e-10) {
            return Err(QError::NotPhysical("not Hermitian".into()));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(QError::NotPhysical(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -1e-10 {
            return Err(QError::NotPhysical(format!("negative eigenvalue {min}")));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_unchecked(m: CMat) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { m: identity(d).unscale(d as f64) }
    }

    pub fn diagonal(p: &[f64]) -> QResult<Self> {
        Self::new(CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0)))))
    }

    pub fn scalar() -> Self {
        Self { m: identity(1) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n(&self) -> Option<usize> {
        log2_exact(self.dim())
    }

    pub fn tensor(&self, other: &DensityOperator) -> QResult<DensityOperator> {
        let d = self.dim() * other.dim();
        if let Some(n) = log2_exact(d) {
            check_capacity(n)?;
        }
        Ok(Self { m: kron(&self.m, &other.m) })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > 1e-10).count()
    }

    /// Max-entropy log rank(rho).
    pub fn h0(&self) -> f64 {
        (self.rank() as f64).log2()
    }

    pub fn h_min(&self) -> f64 {
        -lambda_max(&self.m).log2()
    }

    pub fn evolve(&self, u: &CMat) -> QResult<DensityOperator> {
        if u.nrows() != self.dim() {
            return Err(QError::DimensionMismatch(u.nrows(), self.dim()));
        }
        Ok(Self { m: u * &self.m * u.adjoint() })
    }

    pub fn expectation(&self, e: &CMat) -> f64 {
        (e * &self.m).trace().re
    }
}

/// Kronecker product for states and operators alike.
pub trait Tensor: Sized {
    fn tensor_with(&self, other: &Self) -> QResult<Self>;
}

impl Tensor for PureState {
    fn tensor_with(&self, other: &Self) -> QResult<Self> {
        self.tensor(other)
    }
}

impl Tensor for DensityOperator {
    fn tensor_with(&self, other: &Self) -> QResult<Self> {
        self.tensor(other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> QResult<T> {
    a.tensor_with(b)
}

/// Reorders subsystems: output subsystem `k` is input subsystem `perm[k]`.
pub fn permute_subsystems(m: &CMat, dims: &[usize], perm: &[usize]) -> QResult<CMat> {
    let d: usize = dims.iter().product();
    if m.nrows() != d {
        return Err(QError::DimensionMismatch(m.nrows(), d));
    }
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(QError::Invalid("not a permutation".into()));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map: Vec<usize> = (0..d)
        .map(|idx| {
            let digits = split_index(idx, dims);
            let nd: Vec<usize> = perm.iter().map(|&p| digits[p]).collect();
            join_index(&nd, &new_dims)
        })
        .collect();
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

pub(crate) fn split_index(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

pub(crate) fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Partial trace over arbitrary subsystems; `keep` lists the retained ones in order.
pub fn partial_trace_dims(m: &CMat, dims: &[usize], keep: &[usize]) -> QResult<CMat> {
    let d: usize = dims.iter().product();
    if m.nrows() != d {
        return Err(QError::DimensionMismatch(m.nrows(), d));
    }
    for &k in keep {
        if k >= dims.len() {
            return Err(QError::Invalid(format!("subsystem {k} out of range")));
        }
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let mut perm = keep.to_vec();
    perm.extend(&traced);
    let pm = permute_subsystems(m, dims, &perm)?;
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dt = d / dk;
    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for t in 0..dt {
                s += pm[(i * dt + t, j * dt + t)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Reduced state on the qubits listed in `keep` (0-based). An empty `keep`
/// yields the 1x1 trace.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> QResult<DensityOperator> {
    let n = rho.n().ok_or_else(|| QError::Invalid("not a qubit register".into()))?;
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(QError::Invalid("duplicate index in keep set".into()));
    }
    let m = partial_trace_dims(rho.matrix(), &vec![2; n], keep)?;
    Ok(DensityOperator::from_unchecked(m))
}

pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> QResult<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix())))
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.singular_values().max()
}

// ---------------------------------------------------------------------------
// Bases
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub label: String,
    vectors: Vec<CVec>,
}

impl Basis {
    pub fn new(label: impl Into<String>, vectors: Vec<CVec>) -> QResult<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(QError::Invalid("empty basis".into()));
        }
        for v in &vectors {
            if v.len() != d {
                return Err(QError::DimensionMismatch(v.len(), d));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let ip = vectors[i].dotc(&vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (ip - c(target, 0.0)).norm() > 1e-10 {
                    return Err(QError::Invalid(format!("vectors {i},{j} not orthonormal")));
                }
            }
        }
        Ok(Self { label: label.into(), vectors })
    }

    /// Basis given by the columns of a unitary.
    pub fn from_unitary(label: impl Into<String>, u: &CMat) -> QResult<Self> {
        Self::new(label, (0..u.ncols()).map(|j| u.column(j).into_owned()).collect())
    }

    pub fn computational(d: usize) -> Self {
        let vectors = (0..d)
            .map(|i| {
                let mut v = CVec::zeros(d);
                v[i] = c(1.0, 0.0);
                v
            })
            .collect();
        Self { label: "+".into(), vectors }
    }

    pub fn plus() -> Self {
        Self::computational(2)
    }

    pub fn cross() -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            label: "x".into(),
            vectors: vec![CVec::from_vec(vec![c(h, 0.0), c(h, 0.0)]), CVec::from_vec(vec![c(h, 0.0), c(-h, 0.0)])],
        }
    }

    pub fn circular() -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            label: "o".into(),
            vectors: vec![CVec::from_vec(vec![c(h, 0.0), c(0.0, h)]), CVec::from_vec(vec![c(h, 0.0), c(0.0, -h)])],
        }
    }

    /// Real qubit basis {cos t|0> + sin t|1>, sin t|0> - cos t|1>}.
    pub fn real_rotated(label: impl Into<String>, t: f64) -> Self {
        Self {
            label: label.into(),
            vectors: vec![
                CVec::from_vec(vec![c(t.cos(), 0.0), c(t.sin(), 0.0)]),
                CVec::from_vec(vec![c(t.sin(), 0.0), c(-t.cos(), 0.0)]),
            ],
        }
    }

    pub fn breitbart() -> Self {
        Self::real_rotated("breitbart", PI / 8.0)
    }

    /// Breitbart basis turned by 45 degrees towards |->.
    pub fn breitbart_rotated() -> Self {
        Self::real_rotated("breitbart-rot", -PI / 8.0)
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    /// Unitary whose columns are the basis vectors.
    pub fn matrix(&self) -> CMat {
        CMat::from_columns(&self.vectors)
    }

    pub fn projector(&self, j: usize) -> CMat {
        &self.vectors[j] * self.vectors[j].adjoint()
    }

    pub fn tensor(&self, other: &Basis) -> Basis {
        let mut vectors = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.vectors {
            for b in &other.vectors {
                vectors.push(a.kronecker(b));
            }
        }
        Basis { label: format!("{}{}", self.label, other.label), vectors }
    }

    pub fn tensor_power(&self, n: usize) -> Basis {
        let mut b = self.clone();
        for _ in 1..n {
            b = b.tensor(self);
        }
        b.label = format!("{}^{}", self.label, n);
        b
    }

    /// Product basis over several single-qubit bases.
    pub fn product(bases: &[Basis]) -> Basis {
        let mut b = bases[0].clone();
        for x in &bases[1..] {
            b = b.tensor(x);
        }
        b
    }
}

/// The BB84 basis choice for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bb84 {
    Plus,
    Cross,
}

impl Bb84 {
    pub fn from_bit(b: u8) -> Self {
        if b == 0 {
            Bb84::Plus
        } else {
            Bb84::Cross
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Bb84::Plus => 0,
            Bb84::Cross => 1,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Bb84::Plus => Basis::plus(),
            Bb84::Cross => Basis::cross(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    pub bases: Vec<Basis>,
    pub mutually_unbiased: bool,
}

impl BasisSet {
    pub fn new(bases: Vec<Basis>, claim_unbiased: bool) -> QResult<Self> {
        let d = bases.first().map(|b| b.dim()).ok_or_else(|| QError::Invalid("empty basis set".into()))?;
        for b in &bases {
            if b.dim() != d {
                return Err(QError::DimensionMismatch(b.dim(), d));
            }
        }
        if claim_unbiased {
            let target = (d as f64).powf(-0.5);
            for i in 0..bases.len() {
                for j in i + 1..bases.len() {
                    for a in bases[i].vectors() {
                        for b in bases[j].vectors() {
                            if (a.dotc(b).norm() - target).abs() > 1e-10 {
                                return Err(QError::Invalid(format!("bases {i} and {j} are not unbiased")));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { bases, mutually_unbiased: claim_unbiased })
    }

    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Tensor powers of {+,x} ("bb84") or {+,x,circular} ("six-state").
pub fn standard_basis_set(kind: &str, n: usize) -> QResult<BasisSet> {
    check_capacity(n)?;
    if n == 0 {
        return Err(QError::Invalid("n must be positive".into()));
    }
    let singles = match kind {
        "bb84" => vec![Basis::plus(), Basis::cross()],
        "six-state" => vec![Basis::plus(), Basis::cross(), Basis::circular()],
        other => return Err(QError::Invalid(format!("unknown basis set {other}"))),
    };
    BasisSet::new(singles.iter().map(|b| b.tensor_power(n)).collect(), true)
}

// ---------------------------------------------------------------------------
// Preparation and measurement
// ---------------------------------------------------------------------------

/// The product state |x_1>_{theta_1} ... |x_n>_{theta_n}.
pub fn prepare_bb84(x: &[u8], theta: &[Bb84]) -> QResult<PureState> {
    if x.len() != theta.len() {
        return Err(QError::LengthMismatch { expected: x.len(), got: theta.len() });
    }
    if x.is_empty() {
        return Err(QError::Invalid("empty string".into()));
    }
    check_capacity(x.len())?;
    let mut amps = CVec::from_element(1, c(1.0, 0.0));
    for (&xi, &t) in x.iter().zip(theta) {
        if xi > 1 {
            return Err(QError::Invalid(format!("bit value {xi}")));
        }
        amps = amps.kronecker(&t.basis().vectors()[xi as usize]);
    }
    PureState::new(amps)
}

/// Born-rule distribution over the basis indices.
pub fn measure(rho: &DensityOperator, basis: &Basis) -> QResult<Distribution> {
    if rho.dim() != basis.dim() {
        return Err(QError::DimensionMismatch(rho.dim(), basis.dim()));
    }
    let p = basis
        .vectors()
        .iter()
        .map(|b| (b.adjoint() * rho.matrix() * b)[(0, 0)].re.max(0.0))
        .collect();
    Ok(Distribution::from_unchecked(p))
}

/// Measures qubit k in basis theta[k] for every k.
pub fn measure_per_qubit(rho: &DensityOperator, theta: &[Basis]) -> QResult<Distribution> {
    let n = rho.n().ok_or_else(|| QError::Invalid("not a qubit register".into()))?;
    if theta.len() != n {
        return Err(QError::LengthMismatch { expected: n, got: theta.len() });
    }
    let mut m = rho.matrix().clone();
    for (k, b) in theta.iter().enumerate() {
        let ud = b.matrix().adjoint();
        let u = b.matrix();
        for j in 0..m.ncols() {
            let mut col = m.column(j).into_owned();
            apply_1q_vec(&mut col, n, k, &ud);
            m.set_column(j, &col);
        }
        // right multiplication by u: act on rows with u^T
        let ut = u.transpose();
        for i in 0..m.nrows() {
            let mut row: CVec = m.row(i).transpose();
            apply_1q_vec(&mut row, n, k, &ut);
            m.set_row(i, &row.transpose());
        }
    }
    Ok(Distribution::from_unchecked((0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect()))
}

/// The Bell basis in the order Phi+, Psi+, Phi-, Psi-.
pub fn bell_basis() -> Basis {
    let h = FRAC_1_SQRT_2;
    let v = |a: f64, b: f64, cc: f64, d: f64| CVec::from_vec(vec![c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0)]);
    Basis {
        label: "bell".into(),
        vectors: vec![v(h, 0.0, 0.0, h), v(0.0, h, h, 0.0), v(h, 0.0, 0.0, -h), v(0.0, h, -h, 0.0)],
    }
}

pub fn bell_measure(rho: &DensityOperator) -> QResult<Distribution> {
    if rho.dim() != 4 {
        return Err(QError::DimensionMismatch(rho.dim(), 4));
    }
    measure(rho, &bell_basis())
}

/// |Phi+> = (|00> + |11>)/sqrt 2.
pub fn epr_pair() -> PureState {
    PureState::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
}

pub fn hadamard() -> CMat {
    Basis::cross().matrix()
}

/// Haar-random d x d unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal absorbed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density operator of rank `rank` on n qubits (partial trace of a Haar state).
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> QResult<DensityOperator> {
    let d = 1usize << n;
    let mut m = CMat::zeros(d, d);
    let mut w = 0.0;
    for _ in 0..rank.max(1) {
        let psi = PureState::haar(n, rng)?;
        let t: f64 = rng.gen_range(0.05..1.0);
        m += psi.density().matrix().scale(t);
        w += t;
    }
    DensityOperator::new(m.unscale(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bb84_one_cross_is_minus() {
        let s = prepare_bb84(&[1], &[Bb84::Cross]).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.amplitudes()[1].re + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn bb84_second_qubit_unbiased_in_plus() {
        let s = prepare_bb84(&[0, 1], &[Bb84::Plus, Bb84::Cross]).unwrap();
        let p = s.measure_per_qubit(&[Basis::plus(), Basis::plus()]).unwrap();
        assert!((p.mass()[0] - 0.5).abs() < 1e-12);
        assert!((p.mass()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(prepare_bb84(&[0, 1], &[Bb84::Plus]), Err(QError::LengthMismatch { .. })));
    }

    #[test]
    fn measure_basics() {
        let zero = PureState::basis_state(1, 0).unwrap().density();
        assert_eq!(measure(&zero, &Basis::plus()).unwrap().mass(), &[1.0, 0.0]);
        let p = measure(&zero, &Basis::cross()).unwrap();
        assert!((p.mass()[0] - 0.5).abs() < 1e-12);
        let mixed = DensityOperator::maximally_mixed(4);
        let b = Basis::cross().tensor(&Basis::circular());
        for v in measure(&mixed, &b).unwrap().mass() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn per_qubit_density_matches_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = PureState::haar(3, &mut rng).unwrap();
        let th = vec![Basis::cross(), Basis::circular(), Basis::breitbart()];
        let a = psi.measure_per_qubit(&th).unwrap();
        let b = measure_per_qubit(&psi.density(), &th).unwrap();
        let full = psi.measure(&Basis::product(&th)).unwrap();
        for i in 0..8 {
            assert!((a.mass()[i] - b.mass()[i]).abs() < 1e-12);
            assert!((a.mass()[i] - full.mass()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_examples() {
        let a = PureState::basis_state(1, 0).unwrap();
        let b = PureState::basis_state(1, 1).unwrap();
        assert!(a.tensor(&b).unwrap().same_ray(&PureState::basis_state(2, 1).unwrap()));
        let m = tensor(&DensityOperator::maximally_mixed(2), &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((m.matrix() - DensityOperator::maximally_mixed(4).matrix()).norm() < 1e-15);
        let pp = prepare_bb84(&[0, 0], &[Bb84::Cross, Bb84::Cross]).unwrap();
        for a in pp.amplitudes().iter() {
            assert!((a.re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_traces() {
        let epr = epr_pair().density();
        let r = partial_trace(&epr, &[0]).unwrap();
        assert!((r.matrix() - DensityOperator::maximally_mixed(2).matrix()).norm() < 1e-12);
        let h = FRAC_1_SQRT_2;
        let mut ghz = vec![0.0; 8];
        ghz[0] = h;
        ghz[7] = h;
        let g = PureState::from_real(&ghz).unwrap().density();
        let r = partial_trace(&g, &[0]).unwrap();
        assert!((r.matrix() - DensityOperator::maximally_mixed(2).matrix()).norm() < 1e-12);
        let s = prepare_bb84(&[1, 0], &[Bb84::Cross, Bb84::Plus]).unwrap();
        let r = partial_trace(&s.density(), &[0]).unwrap();
        let f = prepare_bb84(&[1], &[Bb84::Cross]).unwrap().density();
        assert!((r.matrix() - f.matrix()).norm() < 1e-12);
        let t = partial_trace(&g, &[]).unwrap();
        assert!((t.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let z = PureState::basis_state(1, 0).unwrap().density();
        let o = PureState::basis_state(1, 1).unwrap().density();
        assert!(trace_distance(&z, &z).unwrap().abs() < 1e-12);
        assert!((trace_distance(&z, &o).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&z, &DensityOperator::maximally_mixed(2)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&identity(4)) - 1.0).abs() < 1e-12);
        assert!((operator_norm(&Basis::cross().projector(1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_examples() {
        let p = bell_measure(&epr_pair().density()).unwrap();
        assert!((p.mass()[0] - 1.0).abs() < 1e-12);
        // receiver halves of two EPR pairs: qubits (1,3) of |Phi+>|Phi+>
        let two = epr_pair().tensor(&epr_pair()).unwrap().density();
        let halves = partial_trace(&two, &[1, 3]).unwrap();
        for v in bell_measure(&halves).unwrap().mass() {
            assert!((v - 0.25).abs() < 1e-12);
        }
        // Psi+ in the + basis has odd parity, in the x basis even parity
        let psi_plus = PureState::new(bell_basis().vectors()[1].clone()).unwrap();
        let pp = psi_plus.measure_per_qubit(&[Basis::plus(), Basis::plus()]).unwrap();
        assert!((pp.mass()[1] + pp.mass()[2] - 1.0).abs() < 1e-12);
        let px = psi_plus.measure_per_qubit(&[Basis::cross(), Basis::cross()]).unwrap();
        assert!((px.mass()[0] + px.mass()[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_sets() {
        let s = standard_basis_set("bb84", 1).unwrap();
        assert_eq!(s.len(), 2);
        let s = standard_basis_set("six-state", 1).unwrap();
        assert_eq!(s.len(), 3);
        let s = standard_basis_set("six-state", 3).unwrap();
        let ov = s.bases[0].vectors()[5].dotc(&s.bases[2].vectors()[3]).norm();
        assert!((ov - 2f64.powf(-1.5)).abs() < 1e-12);
        assert!(standard_basis_set("nine", 1).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(PureState::basis_state(15, 0), Err(QError::Capacity(15))));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(4, &mut rng);
        assert!((u.adjoint() * &u - identity(4)).norm() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let s = prepare_bb84(&[1, 0], &[Bb84::Cross, Bb84::Plus]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let t: PureState = serde_json::from_str(&j).unwrap();
        assert!(s.same_ray(&t));
    }
}
