//! Finite-dimensional abelian C*-dynamical systems `(ℂ^d, T)`.
//!
//! On the abelian algebra `ℂ^d` a unital completely positive map is exactly a
//! row-stochastic matrix acting by `(Tx)_i = Σ_j T_ij x_j`. This module
//! validates such maps, computes fixed-point spaces and the Cesàro projection
//! `E_T`, and classifies systems as unique `E`-ergodic and unique `E`-weakly
//! mixing. Weak mixing is decided twice, from the peripheral spectrum and from
//! the Cesàro deviation sums themselves, and the two answers are compared.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, c, CMatrix, CVector, NumericsError};
use crate::sequences::{Functional, NormedSpace, SequenceError};

/// Entry and row-sum slack accepted by [`validate_ucp`].
pub const UCP_TOL: f64 = 1e-12;
/// Default Cauchy tolerance for Cesàro projections.
pub const DEFAULT_CESARO_TOL: f64 = 1e-8;
/// Largest horizon the doubling Cesàro iteration may reach.
pub const CESARO_CAP_LOG2: u32 = 40;
/// Horizons `2^k` at which the direct weak-mixing test looks at deviation sums.
pub const DIRECT_CHECKPOINTS_LOG2: std::ops::RangeInclusive<u32> = 6..=14;
/// Below this the deviation sum counts as identically zero.
pub const DEVIATION_FLOOR: f64 = 1e-12;
/// Probability mass below this is treated as a missing edge.
pub const EDGE_TOL: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CstarError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("entry ({row},{col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("Cesàro means did not settle below {tol} by n = 2^{cap_log2}")]
    NoConvergence { tol: f64, cap_log2: u32 },
    #[error("spectral and iterative projections differ by {diff} (allowed {allowed})")]
    ProjectionDisagreement { diff: f64, allowed: f64 },
    #[error(
        "spectral criterion says weak mixing = {spectral}, deviation sums say {direct}; \
         worst pair x = e_{x_index}, phi = e_{phi_index}"
    )]
    MethodDisagreement {
        spectral: bool,
        direct: bool,
        x_index: usize,
        phi_index: usize,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

pub type Result<T> = std::result::Result<T, CstarError>;

/// A row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UcpMap {
    matrix: DMatrix<f64>,
}

impl UcpMap {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn complex(&self) -> CMatrix {
        numerics::to_complex(&self.matrix)
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        self.complex() * x
    }
}

/// Accepts `m` when it is square, entrywise `≥ -1e-12` and every row sums to
/// 1 within `1e-12`. Small negatives are clamped and rows renormalized.
pub fn validate_ucp(m: &DMatrix<f64>) -> Result<UcpMap> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(CstarError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(CstarError::Empty);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(CstarError::NonFinite);
    }
    for i in 0..rows {
        for j in 0..cols {
            let value = m[(i, j)];
            if value < -UCP_TOL {
                return Err(CstarError::NegativeEntry { row: i, col: j, value });
            }
        }
        let sum = m.row(i).sum();
        if (sum - 1.0).abs() > UCP_TOL {
            return Err(CstarError::RowSum { row: i, sum });
        }
    }
    let mut matrix = m.map(|v| v.max(0.0));
    normalize_rows(&mut matrix);
    Ok(UcpMap { matrix })
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynSystem {
    pub map: UcpMap,
    pub label: String,
}

impl DynSystem {
    pub fn new(map: UcpMap, label: impl Into<String>) -> Self {
        DynSystem {
            map,
            label: label.into(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(CstarError::Empty);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(CstarError::NotSquare { rows: d, cols: r.len() });
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Ok(DynSystem::new(validate_ucp(&m)?, label))
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.map.matrix()
    }

    /// `T^n`, rows renormalized after every product.
    pub fn power(&self, n: u64) -> DMatrix<f64> {
        let d = self.dim();
        let mut result = DMatrix::identity(d, d);
        let mut base = self.matrix().clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
                normalize_rows(&mut result);
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
                normalize_rows(&mut base);
            }
        }
        result
    }
}

/// Orthonormal basis of `{x : Tx = x}`. Always contains the direction of `𝟙`.
pub fn fixed_point_space(sys: &DynSystem) -> Vec<DVector<f64>> {
    let d = sys.dim();
    numerics::null_space_real(&(sys.matrix() - DMatrix::<f64>::identity(d, d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CesaroMethod {
    Spectral,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionE {
    pub matrix: DMatrix<f64>,
    pub range_basis: Vec<DVector<f64>>,
    /// Horizon reached by the iterative method, `None` for the spectral one.
    pub horizon: Option<u64>,
}

impl ProjectionE {
    pub fn apply(&self, x: &CVector) -> CVector {
        numerics::to_complex(&self.matrix) * x
    }

    pub fn rank(&self) -> usize {
        self.range_basis.len()
    }
}

/// Largest absolute entry of `a - b`.
pub fn max_entry_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Induced sup-norm: the largest absolute row sum.
pub fn sup_operator_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn cesaro_projection(sys: &DynSystem, method: CesaroMethod, tol: f64) -> Result<ProjectionE> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CstarError::BadTolerance(tol));
    }
    match method {
        CesaroMethod::Spectral => spectral_projection(sys),
        CesaroMethod::Iterative => iterative_projection(sys, tol),
    }
}

/// `E = V (WᵀV)⁻¹ Wᵀ` with `V`, `W` bases of the right and left fixed spaces.
fn spectral_projection(sys: &DynSystem) -> Result<ProjectionE> {
    let d = sys.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let right = fixed_point_space(sys);
    let left = numerics::null_space_real(&(sys.matrix().transpose() - &id));
    let v = DMatrix::from_columns(&right);
    let w = DMatrix::from_columns(&left);
    let gram = w.transpose() * &v;
    let inv = gram.try_inverse().ok_or(NumericsError::NoConvergence)?;
    let mut e = &v * inv * w.transpose();
    e.iter_mut().for_each(|x| {
        if x.abs() < 1e-14 {
            *x = 0.0;
        }
    });
    Ok(ProjectionE {
        matrix: e,
        range_basis: right,
        horizon: None,
    })
}

/// Doubling Cesàro means: `A_{2n} = (A_n + T^n A_n) / 2`, stopped after two
/// consecutive Cauchy steps `‖A_{2n} − A_n‖ ≤ tol`.
fn iterative_projection(sys: &DynSystem, tol: f64) -> Result<ProjectionE> {
    let mut a = sys.matrix().clone();
    let mut p = a.clone();
    let mut settled = 0;
    for k in 0..CESARO_CAP_LOG2 {
        let mut next = (&a + &p * &a) * 0.5;
        normalize_rows(&mut next);
        let step = sup_operator_norm(&(&next - &a));
        a = next;
        p = &p * &p;
        normalize_rows(&mut p);
        settled = if step <= tol { settled + 1 } else { 0 };
        if settled == 2 {
            return Ok(ProjectionE {
                matrix: a,
                range_basis: fixed_point_space(sys),
                horizon: Some(1u64 << (k + 1)),
            });
        }
    }
    Err(CstarError::NoConvergence {
        tol,
        cap_log2: CESARO_CAP_LOG2,
    })
}

/// Both projections, required to agree within `10·tol`.
pub fn cross_validated_projection(sys: &DynSystem, tol: f64) -> Result<(ProjectionE, ProjectionE)> {
    let spectral = cesaro_projection(sys, CesaroMethod::Spectral, tol)?;
    let iterative = cesaro_projection(sys, CesaroMethod::Iterative, tol)?;
    let diff = max_entry_diff(&spectral.matrix, &iterative.matrix);
    if diff > 10.0 * tol {
        return Err(CstarError::ProjectionDisagreement {
            diff,
            allowed: 10.0 * tol,
        });
    }
    Ok((spectral, iterative))
}

/// `‖A_n − E_T‖` in the induced sup norm, `A_n = (1/n) Σ_{k=1}^n T^k`.
pub fn cesaro_residual(sys: &DynSystem, n: u64) -> Result<f64> {
    let e = spectral_projection(sys)?;
    Ok(sup_operator_norm(&(cesaro_mean(sys, n) - e.matrix)))
}

/// `(1/n) Σ_{k=1}^n T^k` in `O(log n)` products.
pub fn cesaro_mean(sys: &DynSystem, n: u64) -> DMatrix<f64> {
    let d = sys.dim();
    if n == 0 {
        return DMatrix::zeros(d, d);
    }
    let t = sys.matrix();
    // s = Σ_{k=1}^m T^k, p = T^m, walking the bits of n from the top.
    let mut s = DMatrix::<f64>::zeros(d, d);
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut m: u64 = 0;
    for bit in (0..64 - n.leading_zeros()).rev() {
        if m > 0 {
            s = &s + &p * &s;
            p = &p * &p;
            normalize_rows(&mut p);
            m *= 2;
        }
        if (n >> bit) & 1 == 1 {
            p = &p * t;
            normalize_rows(&mut p);
            s += &p;
            m += 1;
        }
    }
    debug_assert_eq!(m, n);
    s / n as f64
}

/// `(1/n) Σ_{k=1}^n |φ(T^k x) − φ(E x)|` at each grid point.
pub fn deviation_profile(sys: &DynSystem, x: &CVector, phi: &Functional, grid: &[usize]) -> Result<Vec<f64>> {
    let d = sys.dim();
    if x.len() != d {
        return Err(CstarError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if phi.coefficients.len() != d {
        return Err(CstarError::DimensionMismatch {
            expected: d,
            got: phi.coefficients.len(),
        });
    }
    if grid.is_empty() {
        return Err(SequenceError::EmptyGrid.into());
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(SequenceError::NotIncreasing(w[1]).into());
    }
    if grid[0] == 0 {
        return Err(SequenceError::BadGrid.into());
    }
    let e = spectral_projection(sys)?;
    let target = phi.apply(&e.apply(x));
    let t = sys.map.complex();
    let mut y = x.clone();
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    let mut next = grid.iter().peekable();
    for k in 1..=*grid.last().unwrap() {
        y = &t * y;
        sum += (phi.apply(&y) - target).norm();
        if next.peek() == Some(&&k) {
            out.push(sum / k as f64);
            next.next();
        }
    }
    Ok(out)
}

/// Outcome of the deviation-sum weak-mixing test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectCriterion {
    pub weak_mixing: bool,
    /// Horizon at which the decision was taken.
    pub horizon: usize,
    /// Largest deviation mean over the probe pairs at that horizon.
    pub deviation: f64,
    /// `deviation(horizon) / deviation(horizon / 16)`.
    pub decay_ratio: f64,
    /// Indices `(x, φ)` of the pair attaining the largest deviation.
    pub worst_pair: (usize, usize),
}

/// Weak-mixing test on explicit probe pairs.
///
/// The largest deviation mean `D(n)` is tracked at `n = 2^6, …, 2^14`. When
/// every deviation is summable `D(n)` falls like `1/n`; a peripheral
/// eigenvalue other than 1 keeps it bounded below. The test answers yes once
/// `D(n) ≤ D(n/16)/4` and no once `D(n) ≥ 0.9·D(n/16)`; at the last horizon
/// it splits at a ratio of 1/2.
pub fn direct_criterion(sys: &DynSystem, xs: &[CVector], phis: &[Functional]) -> Result<DirectCriterion> {
    let d = sys.dim();
    for x in xs {
        if x.len() != d {
            return Err(CstarError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
    }
    for f in phis {
        if f.coefficients.len() != d {
            return Err(CstarError::DimensionMismatch {
                expected: d,
                got: f.coefficients.len(),
            });
        }
    }
    let e = numerics::to_complex(&spectral_projection(sys)?.matrix);
    let t = sys.map.complex();
    let xmat = if xs.is_empty() {
        CMatrix::zeros(d, 0)
    } else {
        CMatrix::from_columns(xs)
    };
    // Rows are the conjugated coefficient vectors, so Φ·y = (φ_i(y))_i.
    let phimat = CMatrix::from_fn(phis.len(), d, |i, j| phis[i].coefficients[j].conj());
    let target = &phimat * &e * &xmat;
    let mut y = xmat;
    let mut sums = DMatrix::<f64>::zeros(phis.len(), xs.len());
    let checkpoints: Vec<usize> = DIRECT_CHECKPOINTS_LOG2.map(|k| 1usize << k).collect();
    let mut history: Vec<(f64, (usize, usize))> = Vec::new();
    let mut k = 0;
    for (ci, &n) in checkpoints.iter().enumerate() {
        while k < n {
            y = &t * y;
            let vals = &phimat * &y - &target;
            sums.zip_apply(&vals, |s, v: Complex64| *s += v.norm());
            k += 1;
        }
        let (mut worst, mut pair) = (0.0, (0, 0));
        for ((i, j), s) in sums
            .iter()
            .enumerate()
            .map(|(idx, s)| ((idx % sums.nrows(), idx / sums.nrows()), s))
        {
            if *s > worst {
                worst = *s;
                pair = (j, i);
            }
        }
        let dn = worst / n as f64;
        history.push((dn, pair));
        if ci < 4 {
            continue;
        }
        let prev = history[ci - 4].0;
        let ratio = if prev > 0.0 { dn / prev } else { 0.0 };
        let last = ci + 1 == checkpoints.len();
        let verdict = if dn <= DEVIATION_FLOOR || ratio <= 0.25 {
            Some(true)
        } else if ratio >= 0.9 {
            Some(false)
        } else if last {
            Some(ratio <= 0.5)
        } else {
            None
        };
        if let Some(weak_mixing) = verdict {
            return Ok(DirectCriterion {
                weak_mixing,
                horizon: n,
                deviation: dn,
                decay_ratio: ratio,
                worst_pair: pair,
            });
        }
    }
    unreachable!("the last checkpoint always decides")
}

/// [`direct_criterion`] over coordinate vectors × coordinate functionals.
pub fn direct_criterion_coordinates(sys: &DynSystem) -> Result<DirectCriterion> {
    let d = sys.dim();
    let space = NormedSpace::sup(d);
    let xs: Vec<CVector> = (0..d).map(|j| unit(d, j)).collect();
    let phis: Vec<Functional> = (0..d).map(|i| Functional::coordinate(space, i)).collect();
    direct_criterion(sys, &xs, &phis)
}

fn unit(d: usize, j: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[j] = c(1.0, 0.0);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixClass {
    pub unique_e_ergodic: bool,
    pub unique_e_weak_mixing: bool,
    #[serde(serialize_with = "ser_complex_vec")]
    pub peripheral_eigenvalues: Vec<Complex64>,
    pub method_agreement: bool,
    pub spectral_weak_mixing: bool,
    pub direct: DirectCriterion,
    /// Horizon at which the iterative Cesàro means settled.
    pub cesaro_horizon: Option<u64>,
    /// Max-entry gap between the spectral and iterative projections.
    pub projection_gap: f64,
    pub fixed_space_dim: usize,
}

pub(crate) fn ser_complex_vec<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Classification that records disagreement instead of failing on it.
pub fn analyze_system(sys: &DynSystem, tol: f64) -> Result<MixClass> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CstarError::BadTolerance(tol));
    }
    let report = numerics::spectrum(&sys.map.complex())?;
    let spectral_weak_mixing = report.peripheral_is_trivial();
    let direct = direct_criterion_coordinates(sys)?;
    let spectral = spectral_projection(sys)?;
    let (unique_e_ergodic, cesaro_horizon, projection_gap) = match iterative_projection(sys, tol) {
        Ok(it) => {
            let gap = max_entry_diff(&spectral.matrix, &it.matrix);
            (gap <= 10.0 * tol, it.horizon, gap)
        }
        Err(CstarError::NoConvergence { .. }) => (false, None, f64::INFINITY),
        Err(e) => return Err(e),
    };
    let method_agreement = spectral_weak_mixing == direct.weak_mixing;
    Ok(MixClass {
        unique_e_ergodic,
        unique_e_weak_mixing: spectral_weak_mixing && direct.weak_mixing,
        peripheral_eigenvalues: report.peripheral,
        method_agreement,
        spectral_weak_mixing,
        direct,
        cesaro_horizon,
        projection_gap,
        fixed_space_dim: spectral.range_basis.len(),
    })
}

/// Like [`analyze_system`] but fails when the two weak-mixing criteria
/// disagree, naming the worst `(x, φ)` coordinate pair.
pub fn classify_system(sys: &DynSystem, tol: f64) -> Result<MixClass> {
    let m = analyze_system(sys, tol)?;
    if !m.method_agreement {
        return Err(CstarError::MethodDisagreement {
            spectral: m.spectral_weak_mixing,
            direct: m.direct.weak_mixing,
            x_index: m.direct.worst_pair.0,
            phi_index: m.direct.worst_pair.1,
        });
    }
    Ok(m)
}

/// `(ℂ^{d_a} ⊗ ℂ^{d_b}, T_a ⊗ T_b)` with the Kronecker layout `a` outer.
pub fn tensor_system(a: &DynSystem, b: &DynSystem) -> DynSystem {
    let m = numerics::kron_real(a.matrix(), b.matrix());
    let map = validate_ucp(&m).expect("Kronecker products of stochastic matrices are stochastic");
    DynSystem::new(map, format!("{}⊗{}", a.label, b.label))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCheck {
    pub factorizes: bool,
    /// `E_{T⊗H}` computed on the tensor system.
    pub lhs: ProjectionE,
    /// `E_T ⊗ E_H`.
    pub rhs: DMatrix<f64>,
    pub max_entry_error: f64,
    pub tensor_fixed_dim: usize,
    pub product_fixed_dim: usize,
}

pub fn e_factorization_check(a: &DynSystem, b: &DynSystem, tol: f64) -> Result<FactorizationCheck> {
    let ea = spectral_projection(a)?;
    let eb = spectral_projection(b)?;
    let lhs = spectral_projection(&tensor_system(a, b))?;
    let rhs = numerics::kron_real(&ea.matrix, &eb.matrix);
    let err = max_entry_diff(&lhs.matrix, &rhs);
    Ok(FactorizationCheck {
        factorizes: err <= tol,
        tensor_fixed_dim: lhs.rank(),
        product_fixed_dim: ea.rank() * eb.rank(),
        lhs,
        rhs,
        max_entry_error: err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixAReport {
    pub a: MixClass,
    pub b: MixClass,
    pub tensor: MixClass,
    /// `wm(a) ∧ wm(b) ⟺ wm(a⊗b)`.
    pub holds: bool,
    /// Every classification had agreeing criteria.
    pub methods_agree: bool,
}

/// Weak mixing of the tensor system against weak mixing of both factors.
pub fn theorem_mix_a_check(a: &DynSystem, b: &DynSystem, tol: f64) -> Result<MixAReport> {
    let ca = analyze_system(a, tol)?;
    let cb = analyze_system(b, tol)?;
    let ct = analyze_system(&tensor_system(a, b), tol)?;
    let holds = (ca.unique_e_weak_mixing && cb.unique_e_weak_mixing) == ct.unique_e_weak_mixing;
    let methods_agree = ca.method_agreement && cb.method_agreement && ct.method_agreement;
    Ok(MixAReport {
        a: ca,
        b: cb,
        tensor: ct,
        holds,
        methods_agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MixCReport {
    Skipped {
        reason: String,
    },
    Checked {
        /// Cesàro means of the tensor map converge to `E_T ⊗ E_H`.
        tensor_ergodic: bool,
        horizon: u64,
        /// `‖A_n − E_T ⊗ E_H‖` at the settled horizon.
        residual: f64,
    },
}

/// One-directional: a weakly mixing `a` plus `E_{T⊗H} = E_T ⊗ E_H` must give
/// Cesàro convergence of the tensor system to `E_T ⊗ E_H`.
pub fn theorem_mix_c_check(a: &DynSystem, b: &DynSystem, tol: f64) -> Result<MixCReport> {
    let ca = analyze_system(a, tol)?;
    if !ca.unique_e_weak_mixing {
        return Ok(MixCReport::Skipped {
            reason: format!("{} is not weakly mixing", a.label),
        });
    }
    let fac = e_factorization_check(a, b, 1e-10_f64.max(tol))?;
    if !fac.factorizes {
        return Ok(MixCReport::Skipped {
            reason: format!("E does not factorize (error {:.3e})", fac.max_entry_error),
        });
    }
    let t = tensor_system(a, b);
    match iterative_projection(&t, tol) {
        Ok(p) => {
            let residual = sup_operator_norm(&(&p.matrix - &fac.rhs));
            Ok(MixCReport::Checked {
                tensor_ergodic: residual <= 10.0 * tol,
                horizon: p.horizon.unwrap_or(0),
                residual,
            })
        }
        Err(CstarError::NoConvergence { .. }) => Ok(MixCReport::Checked {
            tensor_ergodic: false,
            horizon: 1 << CESARO_CAP_LOG2,
            residual: f64::INFINITY,
        }),
        Err(e) => Err(e),
    }
}

/// Smallest power of two `n ≤ 2^max_log2` with Cesàro residual `≤ tol`.
pub fn cesaro_convergence_horizon(sys: &DynSystem, tol: f64, max_log2: u32) -> Result<Option<(u64, f64)>> {
    let e = spectral_projection(sys)?;
    for k in 0..=max_log2 {
        let n = 1u64 << k;
        let r = sup_operator_norm(&(cesaro_mean(sys, n) - &e.matrix));
        if r <= tol {
            return Ok(Some((n, r)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantStates {
    /// Stationary distribution of each closed class, the extreme invariant states.
    pub extreme_points: Vec<DVector<f64>>,
    pub closed_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    /// Some invariant state is strictly positive everywhere.
    pub faithful: bool,
}

impl InvariantStates {
    /// Whether `mu` is a convex combination of the extreme points.
    pub fn contains(&self, mu: &DVector<f64>, tol: f64) -> bool {
        if mu.iter().any(|&v| v < -tol) || (mu.sum() - 1.0).abs() > tol {
            return false;
        }
        if self.transient.iter().any(|&i| mu[i].abs() > tol) {
            return false;
        }
        // Closed classes are disjoint, so the weights are the class masses.
        let mut recon = DVector::zeros(mu.len());
        for (cls, p) in self.closed_classes.iter().zip(&self.extreme_points) {
            let w: f64 = cls.iter().map(|&i| mu[i]).sum();
            recon += p * w;
        }
        (recon - mu).amax() <= tol
    }
}

/// Invariant states of the dual action `μ ↦ μT` on the probability simplex.
pub fn state_set_probe(sys: &DynSystem) -> InvariantStates {
    let d = sys.dim();
    let t = sys.matrix();
    let mut g = DiGraph::<usize, ()>::with_capacity(d, d * d);
    let nodes: Vec<_> = (0..d).map(|i| g.add_node(i)).collect();
    for i in 0..d {
        for j in 0..d {
            if t[(i, j)] > EDGE_TOL {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut closed = Vec::new();
    let mut transient = Vec::new();
    for scc in tarjan_scc(&g) {
        let members: Vec<usize> = scc.iter().map(|n| g[*n]).collect();
        let leaves = members
            .iter()
            .any(|&i| (0..d).any(|j| t[(i, j)] > EDGE_TOL && !members.contains(&j)));
        if leaves {
            transient.extend(members);
        } else {
            let mut m = members;
            m.sort_unstable();
            closed.push(m);
        }
    }
    closed.sort();
    transient.sort_unstable();
    let extreme_points = closed.iter().map(|cls| class_stationary(t, cls, d)).collect();
    InvariantStates {
        extreme_points,
        faithful: transient.is_empty(),
        closed_classes: closed,
        transient,
    }
}

fn class_stationary(t: &DMatrix<f64>, cls: &[usize], d: usize) -> DVector<f64> {
    let m = cls.len();
    let sub = DMatrix::from_fn(m, m, |a, b| t[(cls[a], cls[b])]);
    let kernel = numerics::null_space_real(&(sub.transpose() - DMatrix::identity(m, m)));
    let v = &kernel[0];
    let s = v.sum();
    let mut out = DVector::zeros(d);
    for (a, &i) in cls.iter().enumerate() {
        out[i] = (v[a] / s).max(0.0);
    }
    let total = out.sum();
    out / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cvec_from_real;

    fn sys(rows: &[Vec<f64>]) -> DynSystem {
        DynSystem::from_rows(rows, "t").unwrap()
    }

    fn t31() -> DynSystem {
        sys(&[vec![0.5, 0.5], vec![0.0, 1.0]])
    }

    fn h31() -> DynSystem {
        sys(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5]])
    }

    fn swap() -> DynSystem {
        sys(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    fn in_span(basis: &[DVector<f64>], v: &DVector<f64>) -> bool {
        let b = DMatrix::from_columns(basis);
        let proj = &b * (b.transpose() * v);
        (proj - v).norm() <= 1e-10 * v.norm().max(1.0)
    }

    #[test]
    fn validation() {
        assert!(DynSystem::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]], "x").is_err());
        assert!(matches!(
            DynSystem::from_rows(&[vec![1.1, -0.1], vec![0.0, 1.0]], "x"),
            Err(CstarError::NegativeEntry { row: 0, col: 1, .. })
        ));
        let m = validate_ucp(&DMatrix::from_row_slice(2, 2, &[1.0 + 5e-13, -5e-13, 0.0, 1.0])).unwrap();
        assert!(m.matrix().iter().all(|&v| v >= 0.0));
        assert!(validate_ucp(&DMatrix::<f64>::identity(4, 4)).is_ok());
        assert!(matches!(
            validate_ucp(&DMatrix::<f64>::zeros(2, 3)),
            Err(CstarError::NotSquare { .. })
        ));
    }

    #[test]
    fn fixed_spaces() {
        let f = fixed_point_space(&t31());
        assert_eq!(f.len(), 1);
        assert!(in_span(&f, &DVector::from_vec(vec![1.0, 1.0])));
        let f = fixed_point_space(&h31());
        assert_eq!(f.len(), 2);
        assert!(in_span(&f, &DVector::from_vec(vec![1.0, 0.0, 0.0])));
        assert!(in_span(&f, &DVector::from_vec(vec![0.0, 1.0, 1.0])));
    }

    #[test]
    fn projections_of_small_examples() {
        for method in [CesaroMethod::Spectral, CesaroMethod::Iterative] {
            let e = cesaro_projection(&t31(), method, 1e-10).unwrap();
            let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
            assert!(max_entry_diff(&e.matrix, &want) <= 1e-9, "{method:?}");
            let e = cesaro_projection(&h31(), method, 1e-10).unwrap();
            let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
            assert!(max_entry_diff(&e.matrix, &want) <= 1e-9, "{method:?}");
        }
        let id = sys(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let e = cesaro_projection(&id, CesaroMethod::Spectral, 1e-8).unwrap();
        assert!(max_entry_diff(&e.matrix, &DMatrix::identity(3, 3)) <= 1e-12);
        assert!(cesaro_projection(&id, CesaroMethod::Spectral, 0.0).is_err());
    }

    #[test]
    fn period_three_converges_iteratively() {
        let cyc = sys(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        let (s, it) = cross_validated_projection(&cyc, 1e-8).unwrap();
        assert!(max_entry_diff(&s.matrix, &DMatrix::from_element(3, 3, 1.0 / 3.0)) <= 1e-12);
        assert!(it.horizon.unwrap() > 1 << 20);
    }

    #[test]
    fn cesaro_mean_matches_direct_sum() {
        let t = sys(&[vec![0.2, 0.5, 0.3], vec![0.0, 0.0, 1.0], vec![0.6, 0.4, 0.0]]);
        let mut p = DMatrix::<f64>::identity(3, 3);
        let mut s = DMatrix::<f64>::zeros(3, 3);
        for n in 1..=37u64 {
            p = &p * t.matrix();
            s += &p;
            assert!(max_entry_diff(&cesaro_mean(&t, n), &(&s / n as f64)) <= 1e-13);
            assert!(max_entry_diff(&t.power(n), &p) <= 1e-13);
        }
    }

    #[test]
    fn deviation_profiles() {
        let space = NormedSpace::sup(2);
        let e1 = Functional::coordinate(space, 0);
        let x = cvec_from_real(&[1.0, 0.0]);
        let prof = deviation_profile(&swap(), &x, &e1, &[1, 2, 3, 10, 1000]).unwrap();
        for v in prof {
            assert!((v - 0.5).abs() <= 1e-15);
        }
        let prof = deviation_profile(&t31(), &x, &e1, &[10, 100, 1000]).unwrap();
        for (n, v) in [10.0, 100.0, 1000.0].iter().zip(&prof) {
            assert!(*v <= 2.0 / n);
        }
        assert!(prof[2] < 1e-2);
        let fixed = cvec_from_real(&[1.0, 1.0]);
        assert!(deviation_profile(&t31(), &fixed, &e1, &[5, 50])
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-15));
        assert!(deviation_profile(&t31(), &cvec_from_real(&[1.0]), &e1, &[5]).is_err());
    }

    #[test]
    fn classification_examples() {
        let s = classify_system(&swap(), 1e-8).unwrap();
        assert!(s.unique_e_ergodic);
        assert!(!s.unique_e_weak_mixing);
        assert!(s
            .peripheral_eigenvalues
            .iter()
            .any(|z| (z - c(-1.0, 0.0)).norm() < 1e-9));
        let t = classify_system(&t31(), 1e-8).unwrap();
        assert!(t.unique_e_ergodic && t.unique_e_weak_mixing);
        let id = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let i = classify_system(&id, 1e-8).unwrap();
        assert!(i.unique_e_ergodic && i.unique_e_weak_mixing);
        assert_eq!(i.direct.deviation, 0.0);
    }

    #[test]
    fn tensor_block_form_and_powers() {
        let th = tensor_system(&t31(), &h31());
        let h = h31().matrix().clone();
        let m = th.matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], 0.5 * h[(i, j)]);
                assert_eq!(m[(i, j + 3)], 0.5 * h[(i, j)]);
                assert_eq!(m[(i + 3, j)], 0.0);
                assert_eq!(m[(i + 3, j + 3)], h[(i, j)]);
            }
        }
        for k in 1..=10 {
            let lhs = th.power(k);
            let rhs = numerics::kron_real(&t31().power(k), &h31().power(k));
            assert!(max_entry_diff(&lhs, &rhs) <= 1e-14);
        }
        let one = sys(&[vec![1.0]]);
        assert_eq!(tensor_system(&t31(), &one).matrix(), t31().matrix());
    }

    #[test]
    fn factorization_examples() {
        let f = e_factorization_check(&t31(), &h31(), 1e-10).unwrap();
        assert!(f.factorizes);
        assert_eq!(f.tensor_fixed_dim, 2);
        let ss = e_factorization_check(&swap(), &swap(), 1e-10).unwrap();
        assert_eq!(ss.tensor_fixed_dim, 2);
        assert_eq!(ss.product_fixed_dim, 1);
        assert!(!ss.factorizes);
        let id = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(e_factorization_check(&id, &id, 1e-10).unwrap().factorizes);
    }

    #[test]
    fn mix_a_and_mix_c() {
        let r = theorem_mix_a_check(&t31(), &h31(), 1e-8).unwrap();
        assert!(r.holds && r.methods_agree && r.tensor.unique_e_weak_mixing);
        let r = theorem_mix_a_check(&swap(), &swap(), 1e-8).unwrap();
        assert!(r.holds && !r.tensor.unique_e_weak_mixing);
        match theorem_mix_c_check(&t31(), &swap(), 1e-8).unwrap() {
            MixCReport::Checked { tensor_ergodic, .. } => assert!(tensor_ergodic),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            theorem_mix_c_check(&swap(), &swap(), 1e-8).unwrap(),
            MixCReport::Skipped { .. }
        ));
        let ss = tensor_system(&swap(), &swap());
        let (n, r) = cesaro_convergence_horizon(&ss, 1e-8, 16).unwrap().unwrap();
        assert!(n <= 1 << 16 && r <= 1e-8);
    }

    #[test]
    fn invariant_states() {
        let s = state_set_probe(&h31());
        assert!(!s.faithful);
        assert_eq!(s.closed_classes, vec![vec![0], vec![1]]);
        assert_eq!(s.transient, vec![2]);
        assert!(s.contains(&DVector::from_vec(vec![0.3, 0.7, 0.0]), 1e-12));
        assert!(!s.contains(&DVector::from_vec(vec![0.3, 0.6, 0.1]), 1e-12));
        let id = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let s = state_set_probe(&id);
        assert!(s.faithful);
        assert!(s.contains(&DVector::from_vec(vec![0.25, 0.75]), 1e-12));
        let p = sys(&[vec![0.1, 0.6, 0.3], vec![0.5, 0.2, 0.3], vec![0.3, 0.3, 0.4]]);
        let s = state_set_probe(&p);
        assert!(s.faithful && s.extreme_points.len() == 1);
        // power iteration oracle
        let mut mu = DVector::from_element(3, 1.0 / 3.0);
        for _ in 0..500 {
            mu = p.matrix().transpose() * mu;
        }
        assert!((&s.extreme_points[0] - mu).amax() <= 1e-12);
    }
}
