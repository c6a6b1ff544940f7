//! Finite-horizon mixing and ergodicity diagnostics for bounded vector sequences.
//!
//! A [`BoundedSequence`] is a lazily generated sequence `k ↦ x_k` (indices start
//! at 1) in a finite-dimensional normed space, together with a certified bound
//! `M ≥ ‖x_k‖`. All Cesàro sums run over `k = 1..=n`.
//!
//! Four statistics are computed on a grid of horizons `n`:
//!
//! * weak mixing `(1/n) Σ |f(x_k)|` for a functional `f`,
//! * weak ergodicity `(1/n) |Σ f(x_k)|`,
//! * ergodicity `(1/n) ‖Σ x_k‖`,
//! * uniform weak mixing `sup_{‖f‖ ≤ 1} (1/n) Σ |f(x_k)|`, exact on sup-norm
//!   and l1 spaces and bracketed by `[S_n / M, √S_n]` on euclidean spaces, where
//!   `S_n` is the supremum of the mean of squares.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, c, CMatrix, CVector, NumericsError};

/// Largest l1 dimension for which the dual sup ball is enumerated.
pub const MAX_L1_ENUM_DIM: usize = 20;
/// Default cutoff for exact sign enumeration on euclidean spaces.
pub const DEFAULT_EXACT_MAX_N: usize = 16;
/// Default classification grid.
pub const DEFAULT_GRID: [usize; 4] = [10, 100, 1_000, 10_000];
pub const DEFAULT_TOL: f64 = 1e-2;
/// A statistic whose last value is at least this fraction of the previous
/// one is treated as not decaying.
pub const STALL_RATIO: f64 = 0.9;

const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} exceeds horizon {horizon}")]
    BeyondHorizon { index: usize, horizon: usize },
    #[error("grid must be strictly increasing and start at 1 or later")]
    BadGrid,
    #[error("grid is empty")]
    EmptyGrid,
    #[error("term {k} has norm {norm} above the declared bound {bound}")]
    BoundViolated { k: usize, norm: f64, bound: f64 },
    #[error("term {k} has a non-finite entry")]
    NonFinite { k: usize },
    #[error("bound must be finite and nonnegative, got {0}")]
    BadBound(f64),
    #[error("mixed norm tags {0} and {1}")]
    MixedNorms(NormTag, NormTag),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("subsequence is not strictly increasing at position {0}")]
    NotIncreasing(usize),
    #[error("subsequence violates k_n <= {bound} n at n = {n} (k_n = {k})")]
    DensityViolated { n: usize, k: usize, bound: f64 },
    #[error("every sampled denominator was zero")]
    AllDenominatorsZero,
    #[error("verdicts violate the implication lattice: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, SequenceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    Euclidean,
    Sup,
    L1,
}

impl NormTag {
    pub fn norm(self, x: &CVector) -> f64 {
        match self {
            NormTag::Euclidean => x.norm(),
            NormTag::Sup => x.iter().map(|z| z.norm()).fold(0.0, f64::max),
            NormTag::L1 => x.iter().map(|z| z.norm()).sum(),
        }
    }

    pub fn dual(self) -> NormTag {
        match self {
            NormTag::Euclidean => NormTag::Euclidean,
            NormTag::Sup => NormTag::L1,
            NormTag::L1 => NormTag::Sup,
        }
    }
}

impl fmt::Display for NormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormTag::Euclidean => "euclidean",
            NormTag::Sup => "sup",
            NormTag::L1 => "l1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormedSpace {
    pub dim: usize,
    pub norm: NormTag,
}

impl NormedSpace {
    pub fn new(dim: usize, norm: NormTag) -> Self {
        assert!(dim >= 1, "space dimension must be positive");
        NormedSpace { dim, norm }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, NormTag::Euclidean)
    }

    pub fn sup(dim: usize) -> Self {
        Self::new(dim, NormTag::Sup)
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(dim, NormTag::L1)
    }

    pub fn norm_of(&self, x: &CVector) -> f64 {
        self.norm.norm(x)
    }
}

/// A bounded linear functional `f(x) = Σ conj(f_i) x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub space: NormedSpace,
    pub coefficients: CVector,
    pub dual_norm: f64,
}

impl Functional {
    pub fn new(space: NormedSpace, coefficients: CVector) -> Result<Self> {
        if coefficients.len() != space.dim {
            return Err(SequenceError::DimensionMismatch {
                expected: space.dim,
                got: coefficients.len(),
            });
        }
        if !numerics::is_finite_vec(&coefficients) {
            return Err(SequenceError::NonFinite { k: 0 });
        }
        let dual_norm = space.norm.dual().norm(&coefficients);
        Ok(Functional {
            space,
            coefficients,
            dual_norm,
        })
    }

    /// The `i`-th coordinate functional (0-based). Dual norm 1 under every tag.
    pub fn coordinate(space: NormedSpace, i: usize) -> Self {
        let mut coeffs = CVector::zeros(space.dim);
        coeffs[i] = c(1.0, 0.0);
        Functional {
            space,
            coefficients: coeffs,
            dual_norm: 1.0,
        }
    }

    pub fn in_dual_ball(&self) -> bool {
        self.dual_norm <= 1.0 + 1e-12
    }

    pub fn apply(&self, x: &CVector) -> Complex64 {
        self.coefficients.dotc(x)
    }
}

/// Source of sequence terms. Indices are 1-based.
pub trait TermSource: Send + Sync {
    fn term(&self, k: usize) -> CVector;

    /// Terms `x_1..=x_n`. Sources with cheap sequential generation override this.
    fn terms(&self, n: usize) -> Vec<CVector> {
        (1..=n).map(|k| self.term(k)).collect()
    }
}

struct FnSource<F>(F);

impl<F> TermSource for FnSource<F>
where
    F: Fn(usize) -> CVector + Send + Sync,
{
    fn term(&self, k: usize) -> CVector {
        (self.0)(k)
    }
}

struct TableSource(Vec<CVector>);

impl TermSource for TableSource {
    fn term(&self, k: usize) -> CVector {
        self.0[k - 1].clone()
    }

    fn terms(&self, n: usize) -> Vec<CVector> {
        self.0[..n].to_vec()
    }
}

struct ScaledSource {
    inner: Arc<dyn TermSource>,
    factor: f64,
}

impl TermSource for ScaledSource {
    fn term(&self, k: usize) -> CVector {
        self.inner.term(k) * c(self.factor, 0.0)
    }

    fn terms(&self, n: usize) -> Vec<CVector> {
        self.inner
            .terms(n)
            .into_iter()
            .map(|x| x * c(self.factor, 0.0))
            .collect()
    }
}

struct ReindexedSource {
    inner: Arc<dyn TermSource>,
    indices: Vec<usize>,
}

impl TermSource for ReindexedSource {
    fn term(&self, k: usize) -> CVector {
        self.inner.term(self.indices[k - 1])
    }

    fn terms(&self, n: usize) -> Vec<CVector> {
        let last = self.indices[..n].last().copied().unwrap_or(0);
        let all = self.inner.terms(last);
        self.indices[..n].iter().map(|&k| all[k - 1].clone()).collect()
    }
}

struct TensorSource {
    a: Arc<dyn TermSource>,
    b: Arc<dyn TermSource>,
}

impl TermSource for TensorSource {
    fn term(&self, k: usize) -> CVector {
        numerics::kron_vec(&self.a.term(k), &self.b.term(k))
    }

    fn terms(&self, n: usize) -> Vec<CVector> {
        self.a
            .terms(n)
            .iter()
            .zip(self.b.terms(n).iter())
            .map(|(x, y)| numerics::kron_vec(x, y))
            .collect()
    }
}

/// A sequence `k ↦ x_k` with a declared bound `M` and a usable horizon.
#[derive(Clone)]
pub struct BoundedSequence {
    space: NormedSpace,
    bound: f64,
    horizon: usize,
    label: String,
    source: Arc<dyn TermSource>,
}

impl fmt::Debug for BoundedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedSequence")
            .field("space", &self.space)
            .field("bound", &self.bound)
            .field("horizon", &self.horizon)
            .field("label", &self.label)
            .finish()
    }
}

impl BoundedSequence {
    pub fn new(space: NormedSpace, bound: f64, horizon: usize, source: Arc<dyn TermSource>) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(SequenceError::BadBound(bound));
        }
        Ok(BoundedSequence {
            space,
            bound,
            horizon,
            label: String::new(),
            source,
        })
    }

    pub fn from_fn<F>(space: NormedSpace, bound: f64, horizon: usize, f: F) -> Result<Self>
    where
        F: Fn(usize) -> CVector + Send + Sync + 'static,
    {
        Self::new(space, bound, horizon, Arc::new(FnSource(f)))
    }

    /// Materialized sequence; the bound is the largest term norm.
    pub fn from_terms(space: NormedSpace, terms: Vec<CVector>) -> Result<Self> {
        for (i, x) in terms.iter().enumerate() {
            if x.len() != space.dim {
                return Err(SequenceError::DimensionMismatch {
                    expected: space.dim,
                    got: x.len(),
                });
            }
            if !numerics::is_finite_vec(x) {
                return Err(SequenceError::NonFinite { k: i + 1 });
            }
        }
        let bound = terms.iter().map(|x| space.norm_of(x)).fold(0.0, f64::max);
        let horizon = terms.len();
        Self::new(space, bound, horizon, Arc::new(TableSource(terms)))
    }

    pub fn zero(space: NormedSpace, horizon: usize) -> Self {
        let dim = space.dim;
        Self::from_fn(space, 0.0, horizon, move |_| CVector::zeros(dim)).expect("zero bound is valid")
    }

    /// The constant sequence `x_k = x`.
    pub fn constant(space: NormedSpace, x: CVector, horizon: usize) -> Result<Self> {
        if x.len() != space.dim {
            return Err(SequenceError::DimensionMismatch {
                expected: space.dim,
                got: x.len(),
            });
        }
        let bound = space.norm_of(&x);
        Self::from_fn(space, bound, horizon, move |_| x.clone())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn space(&self) -> NormedSpace {
        self.space
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> Arc<dyn TermSource> {
        Arc::clone(&self.source)
    }

    fn check_term(&self, k: usize, x: &CVector) -> Result<()> {
        if x.len() != self.space.dim {
            return Err(SequenceError::DimensionMismatch {
                expected: self.space.dim,
                got: x.len(),
            });
        }
        if !numerics::is_finite_vec(x) {
            return Err(SequenceError::NonFinite { k });
        }
        let norm = self.space.norm_of(x);
        if norm > self.bound * (1.0 + BOUND_SLACK) + BOUND_SLACK {
            return Err(SequenceError::BoundViolated {
                k,
                norm,
                bound: self.bound,
            });
        }
        Ok(())
    }

    /// Term `x_k`, checked against the horizon and the declared bound.
    pub fn term(&self, k: usize) -> Result<CVector> {
        if k == 0 || k > self.horizon {
            return Err(SequenceError::BeyondHorizon {
                index: k,
                horizon: self.horizon,
            });
        }
        let x = self.source.term(k);
        self.check_term(k, &x)?;
        Ok(x)
    }

    /// Terms `x_1..=x_n`, each checked.
    pub fn terms(&self, n: usize) -> Result<Vec<CVector>> {
        if n > self.horizon {
            return Err(SequenceError::BeyondHorizon {
                index: n,
                horizon: self.horizon,
            });
        }
        let xs = self.source.terms(n);
        for (i, x) in xs.iter().enumerate() {
            self.check_term(i + 1, x)?;
        }
        Ok(xs)
    }

    /// The sequence `c · x_k` for `c ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(SequenceError::BadBound(factor));
        }
        let source = Arc::new(ScaledSource {
            inner: Arc::clone(&self.source),
            factor,
        });
        Ok(BoundedSequence {
            space: self.space,
            bound: self.bound * factor,
            horizon: self.horizon,
            label: self.label.clone(),
            source,
        })
    }

    /// The sequence `n ↦ x_{k_n}`; `indices` must be strictly increasing and
    /// within the horizon.
    pub fn reindexed(&self, indices: Vec<usize>) -> Result<Self> {
        check_increasing(&indices)?;
        if let Some(&last) = indices.last() {
            if last > self.horizon {
                return Err(SequenceError::BeyondHorizon {
                    index: last,
                    horizon: self.horizon,
                });
            }
        }
        let horizon = indices.len();
        let source = Arc::new(ReindexedSource {
            inner: Arc::clone(&self.source),
            indices,
        });
        Ok(BoundedSequence {
            space: self.space,
            bound: self.bound,
            horizon,
            label: format!("{}[sub]", self.label),
            source,
        })
    }
}

fn check_increasing(indices: &[usize]) -> Result<()> {
    if indices.first() == Some(&0) {
        return Err(SequenceError::NotIncreasing(0));
    }
    for (i, w) in indices.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(SequenceError::NotIncreasing(i + 1));
        }
    }
    Ok(())
}

fn check_grid(grid: &[usize], horizon: usize) -> Result<usize> {
    if grid.first() == Some(&0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SequenceError::BadGrid);
    }
    match grid.last() {
        None => Ok(0),
        Some(&last) if last > horizon => Err(SequenceError::BeyondHorizon { index: last, horizon }),
        Some(&last) => Ok(last),
    }
}

fn check_functional(seq: &BoundedSequence, f: &Functional) -> Result<()> {
    if f.space.dim != seq.space.dim {
        return Err(SequenceError::DimensionMismatch {
            expected: seq.space.dim,
            got: f.space.dim,
        });
    }
    Ok(())
}

/// Evaluates `stat(n, running)` at every grid point while accumulating
/// `running` over the terms.
fn scan<S, U, R>(xs: &[CVector], grid: &[usize], init: S, mut update: U, read: R) -> Vec<f64>
where
    U: FnMut(&mut S, &CVector),
    R: Fn(&S, usize) -> f64,
{
    let mut state = init;
    let mut out = Vec::with_capacity(grid.len());
    let mut g = grid.iter().peekable();
    for (i, x) in xs.iter().enumerate() {
        update(&mut state, x);
        let n = i + 1;
        while g.peek() == Some(&&n) {
            out.push(read(&state, n));
            g.next();
        }
    }
    out
}

/// `(1/n) Σ_{k=1}^n |f(x_k)|` on the grid.
pub fn weak_profile(seq: &BoundedSequence, f: &Functional, grid: &[usize]) -> Result<Vec<f64>> {
    check_functional(seq, f)?;
    let n = check_grid(grid, seq.horizon)?;
    let xs = seq.terms(n)?;
    Ok(scan(
        &xs,
        grid,
        0.0,
        |s, x| *s += f.apply(x).norm(),
        |s, n| s / n as f64,
    ))
}

/// `(1/n) |Σ_{k=1}^n f(x_k)|` on the grid.
pub fn weak_ergodic_profile(seq: &BoundedSequence, f: &Functional, grid: &[usize]) -> Result<Vec<f64>> {
    check_functional(seq, f)?;
    let n = check_grid(grid, seq.horizon)?;
    let xs = seq.terms(n)?;
    Ok(scan(
        &xs,
        grid,
        c(0.0, 0.0),
        |s, x| *s += f.apply(x),
        |s, n| s.norm() / n as f64,
    ))
}

/// `(1/n) ‖Σ_{k=1}^n x_k‖` on the grid.
pub fn ergodic_profile(seq: &BoundedSequence, grid: &[usize]) -> Result<Vec<f64>> {
    let n = check_grid(grid, seq.horizon)?;
    let xs = seq.terms(n)?;
    let norm = seq.space.norm;
    Ok(scan(
        &xs,
        grid,
        CVector::zeros(seq.space.dim),
        |s, x| *s += x,
        |s, n| norm.norm(s) / n as f64,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// True when `lower == upper` is the exact supremum.
    pub exact: bool,
}

fn sign_patterns(dim: usize) -> impl Iterator<Item = Vec<f64>> {
    // ε and -ε give the same |⟨ε, x⟩|, so fix the first sign.
    let count = 1usize << dim.saturating_sub(1);
    (0..count).map(move |mask| {
        (0..dim)
            .map(|i| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    })
}

/// Bracket `[U_lower, U_upper]` for `U_n = sup_{f ∈ B_{X*}} (1/n) Σ |f(x_k)|`.
///
/// Euclidean spaces use `S_n = λ_max((1/n) Σ x_k x_k^*)` with
/// `U_lower = S_n / M` and `U_upper = √S_n`. Sup-norm spaces are exact via the
/// coordinate maximum; real l1 spaces are exact via the sign vertices of the
/// dual sup ball.
pub fn uniform_bounds(seq: &BoundedSequence, grid: &[usize]) -> Result<UniformBounds> {
    let n = check_grid(grid, seq.horizon)?;
    let xs = seq.terms(n)?;
    let d = seq.space.dim;
    let bound = seq.bound;
    match seq.space.norm {
        NormTag::Euclidean => {
            let gram = scan(
                &xs,
                grid,
                CMatrix::zeros(d, d),
                |g, x| *g += x * x.adjoint(),
                |g, n| {
                    let mean = g / c(n as f64, 0.0);
                    let herm = (&mean + mean.adjoint()) * c(0.5, 0.0);
                    herm.symmetric_eigenvalues()
                        .iter()
                        .copied()
                        .fold(0.0_f64, f64::max)
                        .max(0.0)
                },
            );
            let lower = gram
                .iter()
                .map(|&s| if bound > 0.0 { (s / bound).min(s.sqrt()) } else { 0.0 })
                .collect();
            let upper = gram.iter().map(|s| s.sqrt()).collect();
            Ok(UniformBounds {
                lower,
                upper,
                exact: false,
            })
        }
        NormTag::Sup => {
            let u = scan(
                &xs,
                grid,
                vec![0.0; d],
                |acc, x| {
                    for (a, z) in acc.iter_mut().zip(x.iter()) {
                        *a += z.norm();
                    }
                },
                |acc, n| acc.iter().copied().fold(0.0, f64::max) / n as f64,
            );
            Ok(UniformBounds {
                lower: u.clone(),
                upper: u,
                exact: true,
            })
        }
        NormTag::L1 => {
            if d > MAX_L1_ENUM_DIM {
                return Err(SequenceError::Unsupported("l1 spaces above dimension 20"));
            }
            if xs.iter().any(|x| x.iter().any(|z| z.im != 0.0)) {
                return Err(SequenceError::Unsupported("complex l1 uniform supremum"));
            }
            let patterns: Vec<Vec<f64>> = sign_patterns(d).collect();
            let u = scan(
                &xs,
                grid,
                vec![0.0; patterns.len()],
                |acc, x| {
                    for (a, eps) in acc.iter_mut().zip(patterns.iter()) {
                        let dot: f64 = eps.iter().zip(x.iter()).map(|(e, z)| e * z.re).sum();
                        *a += dot.abs();
                    }
                },
                |acc, n| acc.iter().copied().fold(0.0, f64::max) / n as f64,
            );
            Ok(UniformBounds {
                lower: u.clone(),
                upper: u,
                exact: true,
            })
        }
    }
}

/// Exact `U_n = (1/n) max_{ε ∈ {±1}^n} ‖Σ ε_k x_k‖₂` on real euclidean
/// sequences, for grid points `n ≤ max_n`; larger `n` give `None`.
pub fn uniform_exact(seq: &BoundedSequence, grid: &[usize], max_n: usize) -> Result<Vec<Option<f64>>> {
    if seq.space.norm != NormTag::Euclidean {
        return Err(SequenceError::Unsupported("exact enumeration needs a euclidean space"));
    }
    let n = check_grid(grid, seq.horizon)?;
    let fetch = n.min(max_n);
    let xs = seq.terms(fetch)?;
    if xs.iter().any(|x| x.iter().any(|z| z.im != 0.0)) {
        return Err(SequenceError::Unsupported("complex euclidean exact supremum"));
    }
    let real: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|z| z.re).collect()).collect();
    Ok(grid
        .iter()
        .map(|&n| (n <= max_n).then(|| signed_sum_max(&real[..n]) / n as f64))
        .collect())
}

/// `max_ε ‖Σ ε_k x_k‖₂` by Gray-code enumeration with `ε_1 = +1`.
fn signed_sum_max(xs: &[Vec<f64>]) -> f64 {
    let d = xs[0].len();
    let mut sum = vec![0.0; d];
    for x in xs {
        for (s, v) in sum.iter_mut().zip(x) {
            *s += v;
        }
    }
    let mut signs = vec![1.0; xs.len()];
    let mut best = sum.iter().map(|v| v * v).sum::<f64>();
    let flips = 1usize << (xs.len() - 1);
    for step in 1..flips {
        // Gray code: flip the bit at the lowest set position of `step`, on terms 2..n.
        let bit = step.trailing_zeros() as usize + 1;
        signs[bit] = -signs[bit];
        for (s, v) in sum.iter_mut().zip(&xs[bit]) {
            *s += 2.0 * signs[bit] * v;
        }
        best = best.max(sum.iter().map(|v| v * v).sum::<f64>());
    }
    best.sqrt()
}

/// All four statistics on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub grid: Vec<usize>,
    pub weak: Vec<f64>,
    pub weak_ergodic: Vec<f64>,
    pub ergodic: Vec<f64>,
    pub uniform_lower: Vec<f64>,
    pub uniform_upper: Vec<f64>,
    pub uniform_exact: Option<Vec<Option<f64>>>,
}

pub fn mixing_profile(
    seq: &BoundedSequence,
    f: &Functional,
    grid: &[usize],
    exact_max_n: Option<usize>,
) -> Result<MixingProfile> {
    let bounds = uniform_bounds(seq, grid)?;
    let real_euclidean = seq.space.norm == NormTag::Euclidean
        && seq
            .terms(grid.last().copied().unwrap_or(0).min(exact_max_n.unwrap_or(0)))?
            .iter()
            .all(|x| x.iter().all(|z| z.im == 0.0));
    let uniform_exact = match exact_max_n {
        Some(max_n) if real_euclidean => Some(uniform_exact(seq, grid, max_n)?),
        _ => None,
    };
    Ok(MixingProfile {
        grid: grid.to_vec(),
        weak: weak_profile(seq, f, grid)?,
        weak_ergodic: weak_ergodic_profile(seq, f, grid)?,
        ergodic: ergodic_profile(seq, grid)?,
        uniform_lower: bounds.lower,
        uniform_upper: bounds.upper,
        uniform_exact,
    })
}

/// The sequence `k ↦ x_k ⊗ y_k` in the tensor space with the matching cross norm.
pub fn tensor_sequences(a: &BoundedSequence, b: &BoundedSequence) -> Result<BoundedSequence> {
    if a.space.norm != b.space.norm {
        return Err(SequenceError::MixedNorms(a.space.norm, b.space.norm));
    }
    let space = NormedSpace::new(a.space.dim * b.space.dim, a.space.norm);
    let source = Arc::new(TensorSource {
        a: Arc::clone(&a.source),
        b: Arc::clone(&b.source),
    });
    Ok(
        BoundedSequence::new(space, a.bound * b.bound, a.horizon.min(b.horizon), source)?
            .with_label(format!("{}⊗{}", a.label, b.label)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlumHansonReport {
    pub subsequence_len: usize,
    pub density_bound: f64,
    /// Observed `max k_n / n`.
    pub observed_density: f64,
    pub profile: Vec<f64>,
}

/// Ergodic profile of `n ↦ x_{k_n}` for an admissible subsequence with
/// `k_n ≤ C·n`. Grid points index positions in the subsequence.
pub fn blum_hanson_test(
    seq: &BoundedSequence,
    subseq: &[usize],
    density_bound: f64,
    grid: &[usize],
) -> Result<BlumHansonReport> {
    check_increasing(subseq)?;
    let mut observed: f64 = 0.0;
    for (i, &k) in subseq.iter().enumerate() {
        let n = i + 1;
        let ratio = k as f64 / n as f64;
        if ratio > density_bound {
            return Err(SequenceError::DensityViolated {
                n,
                k,
                bound: density_bound,
            });
        }
        observed = observed.max(ratio);
    }
    let sub = seq.reindexed(subseq.to_vec())?;
    Ok(BlumHansonReport {
        subsequence_len: subseq.len(),
        density_bound,
        observed_density: observed,
        profile: ergodic_profile(&sub, grid)?,
    })
}

/// Admissible subsequences of length `len` with `k_n ≤ density·n`: every
/// arithmetic progression `k_n = m·n + r` that fits, followed by `random`
/// subsequences with i.i.d. gaps in `1..=density`.
pub fn admissible_subsequences(len: usize, density: usize, random: usize, seed: u64) -> Vec<Vec<usize>> {
    let density = density.max(1);
    let mut out = Vec::new();
    for m in 1..=density {
        for r in 0..=(density - m) {
            out.push((1..=len).map(|n| m * n + r).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let mut k = 0;
        let sub: Vec<usize> = (1..=len)
            .map(|n| {
                k += rng.random_range(1..=density);
                // keep k_n ≤ density·n
                k = k.min(density * n);
                k
            })
            .collect();
        out.push(sub);
    }
    out
}

/// Searches sampled admissible subsequences for one whose ergodic profile at
/// the last grid point exceeds `tol`.
pub fn find_non_ergodic_subsequence(
    seq: &BoundedSequence,
    grid: &[usize],
    tol: f64,
    density: usize,
    random: usize,
    seed: u64,
) -> Result<Option<(Vec<usize>, BlumHansonReport)>> {
    let len = match grid.last() {
        Some(&n) => n,
        None => return Err(SequenceError::EmptyGrid),
    };
    for sub in admissible_subsequences(len, density, random, seed) {
        if sub.last().is_some_and(|&k| k > seq.horizon) {
            continue;
        }
        let report = blum_hanson_test(seq, &sub, density as f64, grid)?;
        if report.profile.last().is_some_and(|&v| v > tol) {
            return Ok(Some((sub, report)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftBoundEstimate {
    /// Largest sampled ratio; a lower bound on the shift constant.
    pub estimate: f64,
    pub evaluated: usize,
    pub skipped_zero_denominator: usize,
}

/// Samples `‖Σ λ_j x_{j+k}‖ / ‖Σ λ_j x_j‖` over `p`, `λ ≥ 0` and `k ≥ 1`.
/// Denominators below `1e-9 · M · Σλ` count as zero and are skipped.
pub fn convex_shift_bounded_estimate(
    seq: &BoundedSequence,
    trials: usize,
    rng_seed: u64,
) -> Result<ShiftBoundEstimate> {
    if seq.horizon < 2 {
        return Err(SequenceError::BeyondHorizon {
            index: 2,
            horizon: seq.horizon,
        });
    }
    let xs = seq.terms(seq.horizon)?;
    let norm = seq.space.norm;
    let max_p = 16.min(seq.horizon - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut estimate: f64 = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for _ in 0..trials {
        let p = rng.random_range(1..=max_p);
        let k = rng.random_range(1..=seq.horizon - p);
        let lambdas: Vec<f64> = (0..p)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let total: f64 = lambdas.iter().sum();
        let mut base = CVector::zeros(seq.space.dim);
        let mut shifted = CVector::zeros(seq.space.dim);
        for (j, &l) in lambdas.iter().enumerate() {
            base += &xs[j] * c(l, 0.0);
            shifted += &xs[j + k] * c(l, 0.0);
        }
        let denom = norm.norm(&base);
        if denom <= 1e-9 * seq.bound.max(f64::MIN_POSITIVE) * total || total == 0.0 {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        estimate = estimate.max(norm.norm(&shifted) / denom);
    }
    if evaluated == 0 {
        return Err(SequenceError::AllDenominatorsZero);
    }
    Ok(ShiftBoundEstimate {
        estimate,
        evaluated,
        skipped_zero_denominator: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Which coordinate functionals the weak statistics quantify over.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ProbeFamily {
    /// Coordinates touched by the terms up to the first grid point; all
    /// coordinates if none are. The functionals are fixed before the tail of
    /// the horizon is observed. For an orbit of a linear map in dimension
    /// `d`, any first grid point `≥ d` already covers every coordinate the
    /// orbit ever reaches.
    #[default]
    InitialSupport,
    /// Every coordinate functional.
    AllCoordinates,
    /// An explicit list of coordinate indices.
    Coordinates(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub probes: ProbeFamily,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: DEFAULT_TOL,
            probes: ProbeFamily::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceVerdicts {
    pub weak_mixing: Verdict,
    pub uniform_weak_mixing: Verdict,
    pub weak_ergodic: Verdict,
    pub ergodic: Verdict,
    pub probes: Vec<usize>,
    /// Profiles the verdicts were read from (max over probes for the weak ones).
    pub weak: Vec<f64>,
    pub weak_ergodic_stat: Vec<f64>,
    pub ergodic_stat: Vec<f64>,
    pub uniform_lower: Vec<f64>,
    pub uniform_upper: Vec<f64>,
}

/// Tail-window decision on a statistic known to lie in `[lower, upper]`.
///
/// * `yes` if the upper value at the last grid point is numerically zero, or is
///   below `tol` and lower than at the previous grid point;
/// * `no` if the lower value is at least `10·tol`, or is not decaying (at
///   least [`STALL_RATIO`] of its previous value) while above the floor;
/// * `undecided` otherwise.
pub fn decide(lower: &[f64], upper: &[f64], tol: f64, floor: f64) -> Verdict {
    let (Some(&hi), Some(&lo)) = (upper.last(), lower.last()) else {
        return Verdict::Undecided;
    };
    let prev = |s: &[f64]| (s.len() >= 2).then(|| s[s.len() - 2]);
    if hi <= floor {
        return Verdict::Yes;
    }
    if lo >= 10.0 * tol {
        return Verdict::No;
    }
    if let Some(p) = prev(lower) {
        if lo > floor && lo >= STALL_RATIO * p {
            return Verdict::No;
        }
    }
    if hi <= tol && prev(upper).is_none_or(|p| hi < p) {
        return Verdict::Yes;
    }
    Verdict::Undecided
}

/// Reconcile a weaker property with a stronger one that implies it.
fn reconcile(strong: Verdict, weak: Verdict) -> (Verdict, Verdict) {
    match (strong, weak) {
        (_, Verdict::No) => (Verdict::No, Verdict::No),
        (Verdict::Yes, _) => (Verdict::Yes, Verdict::Yes),
        other => other,
    }
}

fn probe_indices(seq: &BoundedSequence, xs: &[CVector], grid: &[usize], family: &ProbeFamily) -> Vec<usize> {
    let d = seq.space.dim;
    match family {
        ProbeFamily::AllCoordinates => (0..d).collect(),
        ProbeFamily::Coordinates(list) => list.iter().copied().filter(|&i| i < d).collect(),
        ProbeFamily::InitialSupport => {
            let n0 = grid[0];
            let cut = 1e-12 * seq.bound.max(1.0);
            let touched: Vec<usize> = (0..d).filter(|&i| xs[..n0].iter().any(|x| x[i].norm() > cut)).collect();
            if touched.is_empty() {
                (0..d).collect()
            } else {
                touched
            }
        }
    }
}

pub fn classify(seq: &BoundedSequence, grid: &[usize], tol: f64) -> Result<SequenceVerdicts> {
    classify_with(
        seq,
        grid,
        &ClassifyOptions {
            tol,
            ..ClassifyOptions::default()
        },
    )
}

/// Finite-horizon verdicts for the four properties.
///
/// The weak statistics are maxima over the probe coordinate functionals; the
/// uniform verdict uses the `[lower, upper]` bracket. Verdicts are then made
/// consistent with `uniform ⟹ weak` and `ergodic ⟹ weak ergodic`: a `no` on
/// the weaker property forces `no` on the stronger, a `yes` on the stronger
/// forces `yes` on the weaker.
pub fn classify_with(seq: &BoundedSequence, grid: &[usize], opts: &ClassifyOptions) -> Result<SequenceVerdicts> {
    if grid.is_empty() {
        return Err(SequenceError::EmptyGrid);
    }
    let n = check_grid(grid, seq.horizon)?;
    let xs = seq.terms(n)?;
    let probes = probe_indices(seq, &xs, grid, &opts.probes);
    let npr = probes.len();

    let weak = scan(
        &xs,
        grid,
        vec![0.0; npr],
        |acc, x| {
            for (a, &i) in acc.iter_mut().zip(&probes) {
                *a += x[i].norm();
            }
        },
        |acc, n| acc.iter().copied().fold(0.0, f64::max) / n as f64,
    );
    let weak_erg = scan(
        &xs,
        grid,
        vec![c(0.0, 0.0); npr],
        |acc, x| {
            for (a, &i) in acc.iter_mut().zip(&probes) {
                *a += x[i];
            }
        },
        |acc, n| acc.iter().map(|z| z.norm()).fold(0.0, f64::max) / n as f64,
    );
    let erg = ergodic_profile(seq, grid)?;
    let bounds = uniform_bounds(seq, grid)?;

    let floor = 1e-12 * seq.bound.max(1.0);
    let tol = opts.tol;
    let w = decide(&weak, &weak, tol, floor);
    let u = decide(&bounds.lower, &bounds.upper, tol, floor);
    let we = decide(&weak_erg, &weak_erg, tol, floor);
    let e = decide(&erg, &erg, tol, floor);

    let (u, w) = reconcile(u, w);
    let (e, we) = reconcile(e, we);
    let verdicts = SequenceVerdicts {
        weak_mixing: w,
        uniform_weak_mixing: u,
        weak_ergodic: we,
        ergodic: e,
        probes,
        weak,
        weak_ergodic_stat: weak_erg,
        ergodic_stat: erg,
        uniform_lower: bounds.lower,
        uniform_upper: bounds.upper,
    };
    check_lattice(&verdicts)?;
    Ok(verdicts)
}

fn check_lattice(v: &SequenceVerdicts) -> Result<()> {
    if v.uniform_weak_mixing == Verdict::Yes && v.weak_mixing != Verdict::Yes {
        return Err(SequenceError::Inconsistent(
            "uniform weak mixing without weak mixing".into(),
        ));
    }
    if v.ergodic == Verdict::Yes && v.weak_ergodic != Verdict::Yes {
        return Err(SequenceError::Inconsistent("ergodic without weak ergodicity".into()));
    }
    Ok(())
}
