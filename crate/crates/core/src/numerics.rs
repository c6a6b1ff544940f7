//! Dense complex linear algebra used by every other module.
//!
//! Matrices and vectors are `nalgebra` dynamic types over [`Complex64`]. The
//! decompositions (SVD, Schur, Hermitian eigen) come from `nalgebra`; this
//! module adds the pieces the rest of the crate relies on: eigenvalue
//! clustering with multiplicities, the semisimplicity test for peripheral
//! eigenvalues, numerical rank and null spaces.
//!
//! Tolerances are relative to `max(1, ‖A‖_F)` of the matrix under study.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use thiserror::Error;

pub type Scalar = Complex64;
pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-9;
/// Eigenvalues closer than this (relative) are treated as one eigenvalue.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Eigenvalues within this (relative) distance of the spectral radius are peripheral.
pub const PERIPHERAL_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("empty input")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub fn c(re: f64, im: f64) -> Scalar {
    Complex64::new(re, im)
}

/// Complex matrix from real row-major rows.
pub fn cmat_from_rows(rows: &[Vec<f64>]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    CMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn cvec_from_real(xs: &[f64]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn is_finite_mat(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(m: &CMatrix) -> Result<(), NumericsError> {
    if is_finite_mat(m) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

/// Tolerance scale `max(1, ‖A‖_F)`.
pub fn scale_of(m: &CMatrix) -> f64 {
    m.norm().max(1.0)
}

/// Kronecker product. `(A⊗B)(u⊗v) = Au ⊗ Bv`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub fn kron_vec(x: &CVector, y: &CVector) -> CVector {
    x.kronecker(y)
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn operator_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn nuclear_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Numerical rank: number of singular values above `tol`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of `ker(m)` for a real matrix, using singular values
/// below `RANK_TOL · max(1, ‖m‖_F)`.
pub fn null_space_real(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    let tol = RANK_TOL * m.norm().max(1.0);
    // Pad to square so that V carries a full basis of the domain.
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect()
}

/// Largest eigenvalue of the Hermitian matrix `(1/n) Σ x_k x_k^*`.
pub fn gram_top_eig(xs: &[CVector]) -> Result<f64, NumericsError> {
    let first = xs.first().ok_or(NumericsError::Empty)?;
    let d = first.len();
    let mut g = CMatrix::zeros(d, d);
    for x in xs {
        if x.len() != d {
            return Err(NumericsError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if !is_finite_vec(x) {
            return Err(NumericsError::NonFinite);
        }
        g += x * x.adjoint();
    }
    g /= c(xs.len() as f64, 0.0);
    // Symmetrize away rounding so the Hermitian solver sees an exact Hermitian input.
    let g = (&g + g.adjoint()) * c(0.5, 0.0);
    let top = g.symmetric_eigenvalues().iter().copied().fold(0.0_f64, f64::max);
    Ok(top.max(0.0))
}

/// One distinct eigenvalue with its multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub value: Scalar,
    pub algebraic: usize,
    pub geometric: usize,
    pub semisimple: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// All eigenvalues with repetition, ordered by `(-|λ|, arg λ)`.
    pub eigenvalues: Vec<Scalar>,
    /// Distinct eigenvalues in the same order.
    pub clusters: Vec<EigenCluster>,
    pub spectral_radius: f64,
    /// Distinct eigenvalues of modulus equal to the spectral radius.
    pub peripheral: Vec<Scalar>,
    pub semisimple_peripheral: bool,
}

impl SpectralReport {
    pub fn geometric_mults(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.geometric).collect()
    }

    pub fn algebraic_mults(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.algebraic).collect()
    }

    /// True when the only peripheral eigenvalue is 1.
    pub fn peripheral_is_trivial(&self) -> bool {
        let tol = CLUSTER_TOL;
        self.peripheral.len() == 1 && (self.peripheral[0] - c(1.0, 0.0)).norm() <= tol
    }
}

fn snap(z: Scalar, tol: f64) -> Scalar {
    let re = if z.re.abs() <= tol { 0.0 } else { z.re };
    let im = if z.im.abs() <= tol { 0.0 } else { z.im };
    c(re, im)
}

/// Argument in `[0, 2π)`, so that the eigenvalue 1 sorts first on its circle.
fn arg_positive(z: &Scalar) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// Ordering by `(-|λ|, arg λ)`, moduli compared up to `tol`.
fn spectral_order(a: &Scalar, b: &Scalar, tol: f64) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > tol {
        return mb.total_cmp(&ma);
    }
    arg_positive(a).total_cmp(&arg_positive(b))
}

fn eigenvalues_of(a: &CMatrix) -> Result<Vec<Scalar>, NumericsError> {
    let d = a.nrows();
    if d == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    if a.iter().all(|z| z.im == 0.0) {
        let real = a.map(|z| z.re);
        if let Some(schur) = Schur::try_new(real.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
        // Shifted QR can stall on permutation-like inputs; an orthogonal
        // similarity keeps the spectrum and breaks the symmetry.
        let q = fixed_orthogonal(d);
        let rotated = &q * real * q.transpose();
        let schur = Schur::try_new(rotated, f64::EPSILON, SCHUR_MAX_ITER).ok_or(NumericsError::NoConvergence)?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    } else {
        let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER)
            .or_else(|| {
                let q = to_complex(&fixed_orthogonal(d));
                Schur::try_new(&q * a * q.transpose(), f64::EPSILON, SCHUR_MAX_ITER)
            })
            .ok_or(NumericsError::NoConvergence)?;
        let (_, t) = schur.unpack();
        Ok((0..d).map(|i| t[(i, i)]).collect())
    }
}

/// A deterministic, well-conditioned orthogonal matrix.
fn fixed_orthogonal(d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| ((i * 7 + j * 13 + 1) as f64 * 0.618_033_988_75).sin());
    m.qr().q()
}

/// Eigenvalues with algebraic and geometric multiplicities.
///
/// Multiplicities come from clustering the computed eigenvalues; geometric
/// multiplicity is `d - rank(A - λI)` and semisimplicity is decided by
/// comparing `rank(A - λI)` with `rank((A - λI)²)`.
pub fn spectrum(a: &CMatrix) -> Result<SpectralReport, NumericsError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(NumericsError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(NumericsError::Empty);
    }
    ensure_finite(a)?;
    let d = rows;
    let scale = scale_of(a);

    let mut eigs: Vec<Scalar> = eigenvalues_of(a)?.into_iter().map(|z| snap(z, 1e-12 * scale)).collect();
    eigs.sort_by(|x, y| spectral_order(x, y, RANK_TOL * scale));

    // Greedy clustering around the first member of each group.
    let mut groups: Vec<Vec<Scalar>> = Vec::new();
    for &z in &eigs {
        match groups.iter_mut().find(|g| (g[0] - z).norm() <= CLUSTER_TOL * scale) {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }

    let rank_tol = RANK_TOL * scale;
    let ident = CMatrix::identity(d, d);
    let mut clusters: Vec<EigenCluster> = groups
        .iter()
        .map(|g| {
            let mean = g.iter().sum::<Scalar>() / c(g.len() as f64, 0.0);
            let value = snap(mean, 1e-12 * scale);
            let shifted = a - &ident * value;
            let r1 = rank(&shifted, rank_tol);
            let r2 = rank(&(&shifted * &shifted), rank_tol);
            let algebraic = g.len();
            let geometric = (d - r1).clamp(1, algebraic);
            EigenCluster {
                value,
                algebraic,
                geometric,
                semisimple: r1 == r2,
            }
        })
        .collect();
    clusters.sort_by(|x, y| spectral_order(&x.value, &y.value, RANK_TOL * scale));

    let spectral_radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let peripheral_cut = spectral_radius - PERIPHERAL_TOL * scale;
    let peripheral: Vec<Scalar> = clusters
        .iter()
        .filter(|c| c.value.norm() >= peripheral_cut)
        .map(|c| c.value)
        .collect();
    let semisimple_peripheral = clusters
        .iter()
        .filter(|c| c.value.norm() >= peripheral_cut)
        .all(|c| c.semisimple);

    Ok(SpectralReport {
        eigenvalues: eigs,
        clusters,
        spectral_radius,
        peripheral,
        semisimple_peripheral,
    })
}
