//! Cross norms on order-2 tensors over euclidean factors.
//!
//! A tensor `w ∈ X ⊗ Y` is stored as a `dim X × dim Y` matrix, with the
//! elementary tensor `x ⊗ y` represented by `x yᵀ`. On euclidean factors the
//! injective norm is the largest singular value and the projective norm is the
//! sum of singular values, and these two norms are dual to each other.
//!
//! The closed convex hull of `{f ⊗ g : ‖f‖, ‖g‖ ≤ 1}` is exactly the nuclear
//! unit ball, so hull membership is decided by the SVD, which also supplies
//! the decomposition certificate.
//!
//! The dual-space identity `X* ⊗ Y* = (X ⊗ Y)*` holds for every norm pair in
//! finite dimensions (the spaces coincide as sets), so it has no runtime check.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, c, CMatrix, CVector};

/// Membership tolerance used by the condition and inclusion probes.
pub const HULL_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 1_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("tensor dimensions must be positive")]
    EmptyTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossNormTag {
    Injective,
    Projective,
}

impl CrossNormTag {
    /// The norm of the dual tensor space.
    pub fn dual(self) -> CrossNormTag {
        match self {
            CrossNormTag::Injective => CrossNormTag::Projective,
            CrossNormTag::Projective => CrossNormTag::Injective,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    matrix: CMatrix,
}

impl Tensor2 {
    pub fn new(matrix: CMatrix) -> Result<Self, TensorError> {
        if matrix.is_empty() {
            return Err(TensorError::EmptyTensor);
        }
        Ok(Tensor2 { matrix })
    }

    pub fn zeros(dim_x: usize, dim_y: usize) -> Self {
        Tensor2 {
            matrix: CMatrix::zeros(dim_x, dim_y),
        }
    }

    /// `x ⊗ y` as the matrix `x yᵀ`.
    pub fn elementary(x: &CVector, y: &CVector) -> Self {
        Tensor2 {
            matrix: x * y.transpose(),
        }
    }

    /// `Σ_i e_i ⊗ e_i` over `min(dim_x, dim_y)` indices.
    pub fn identity(dim_x: usize, dim_y: usize) -> Self {
        Tensor2 {
            matrix: CMatrix::identity(dim_x, dim_y),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Tensor2 {
            matrix: &self.matrix * c(s, 0.0),
        }
    }

    pub fn add(&self, other: &Tensor2) -> Self {
        Tensor2 {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn rank(&self) -> usize {
        let tol = numerics::RANK_TOL * numerics::scale_of(&self.matrix);
        numerics::rank(&self.matrix, tol)
    }
}

pub fn cross_norm(w: &Tensor2, tag: CrossNormTag) -> f64 {
    match tag {
        CrossNormTag::Injective => numerics::operator_norm(&w.matrix),
        CrossNormTag::Projective => numerics::nuclear_norm(&w.matrix),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallMembershipCertificate {
    /// `(λ_k, f_k, g_k)` with `‖f_k‖ = ‖g_k‖ = 1`.
    pub terms: Vec<(f64, CVector, CVector)>,
    pub total_weight: f64,
    /// `‖w − Σ λ_k f_k ⊗ g_k‖_F`.
    pub residual: f64,
}

impl BallMembershipCertificate {
    pub fn reconstruct(&self, dims: (usize, usize)) -> Tensor2 {
        let mut m = CMatrix::zeros(dims.0, dims.1);
        for (l, f, g) in &self.terms {
            m += f * g.transpose() * c(*l, 0.0);
        }
        Tensor2 { matrix: m }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Member(BallMembershipCertificate),
    Refused { nuclear_norm: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// Decides whether `w` lies in the closed convex hull of elementary tensors of
/// unit-ball vectors (total weight at most 1).
pub fn elementary_ball_membership(w: &Tensor2, tol: f64) -> Membership {
    let svd = w.matrix.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let nuclear: f64 = svd.singular_values.iter().sum();
    if nuclear > 1.0 + tol {
        return Membership::Refused { nuclear_norm: nuclear };
    }
    let terms: Vec<(f64, CVector, CVector)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        // w = Σ σ u v^*, and v^* = (v̄)ᵀ
        .map(|(k, &s)| (s, u.column(k).into_owned(), v_t.row(k).transpose()))
        .collect();
    let cert = BallMembershipCertificate {
        total_weight: terms.iter().map(|t| t.0).sum(),
        residual: 0.0,
        terms,
    };
    let residual = (&w.matrix - cert.reconstruct(w.dims()).matrix).norm();
    Membership::Member(BallMembershipCertificate { residual, ..cert })
}

fn random_cmat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(r, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> CVector {
    loop {
        let v = random_cmat(rng, d, 1).column(0).into_owned();
        let n = v.norm();
        if n > 1e-3 {
            return v / c(n, 0.0);
        }
    }
}

/// `U V^*` from the SVD of a random matrix: all singular values equal to 1.
fn random_partial_isometry(rng: &mut ChaCha8Rng, dx: usize, dy: usize) -> CMatrix {
    let svd = random_cmat(rng, dx, dy).svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

/// Points of the unit ball of `norm`: extreme points first, then interior.
fn sample_unit_ball(rng: &mut ChaCha8Rng, dx: usize, dy: usize, norm: CrossNormTag, count: usize) -> Vec<Tensor2> {
    let mut out = Vec::with_capacity(count + 1);
    if norm == CrossNormTag::Injective {
        out.push(Tensor2::identity(dx, dy));
    }
    while out.len() < count {
        let boundary = out.len() % 2 == 0;
        let m = match (norm, boundary) {
            (CrossNormTag::Projective, true) => random_unit(rng, dx) * random_unit(rng, dy).transpose(),
            (CrossNormTag::Injective, true) => random_partial_isometry(rng, dx, dy),
            (tag, false) => {
                let m = random_cmat(rng, dx, dy);
                let n = cross_norm(&Tensor2 { matrix: m.clone() }, tag);
                m * c(rng.random::<f64>() / n, 0.0)
            }
        };
        out.push(Tensor2 { matrix: m });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionICheck {
    pub holds: bool,
    /// A dual-ball element outside the hull when the condition fails.
    pub witness: Option<Tensor2>,
    pub samples_checked: usize,
    /// Largest nuclear norm seen among the sampled dual-ball elements.
    pub max_nuclear_norm: f64,
}

/// Whether the dual unit ball of `(X ⊗_tag Y)` equals the closed hull of
/// elementary products of dual unit-ball vectors, on euclidean `X = ℂ^dim_x`,
/// `Y = ℂ^dim_y`.
pub fn condition_i_check(dim_x: usize, dim_y: usize, tag: CrossNormTag) -> ConditionICheck {
    condition_i_check_with(dim_x, dim_y, tag, DEFAULT_SAMPLES, DEFAULT_SEED)
}

pub fn condition_i_check_with(
    dim_x: usize,
    dim_y: usize,
    tag: CrossNormTag,
    samples: usize,
    seed: u64,
) -> ConditionICheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_unit_ball(&mut rng, dim_x, dim_y, tag.dual(), samples);
    let mut max_nuclear: f64 = 0.0;
    let mut witness = None;
    for p in &points {
        match elementary_ball_membership(p, HULL_TOL) {
            Membership::Member(cert) => {
                max_nuclear = max_nuclear.max(cert.total_weight);
            }
            Membership::Refused { nuclear_norm } => {
                max_nuclear = max_nuclear.max(nuclear_norm);
                if witness.is_none() {
                    witness = Some(p.clone());
                }
            }
        }
    }
    ConditionICheck {
        holds: witness.is_none(),
        witness,
        samples_checked: points.len(),
        max_nuclear_norm: max_nuclear,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionProbe {
    pub contained: bool,
    pub samples_checked: usize,
    pub max_nuclear_norm: f64,
    pub counterexample: Option<Tensor2>,
}

/// Probes whether the dual ball of radius `r` around `y0` (dual norm of
/// `tag`) lies inside the elementary hull. One-sided: `true` means no sampled
/// point escaped.
pub fn ball_inclusion_probe(
    y0: &Tensor2,
    r: f64,
    tag: CrossNormTag,
    samples: usize,
    rng_seed: u64,
) -> Result<InclusionProbe, TensorError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(TensorError::BadRadius(r));
    }
    let (dx, dy) = y0.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut dirs = sample_unit_ball(&mut rng, dx, dy, tag.dual(), samples);
    // The direction of y0 itself pushes furthest out along its own ray.
    let n0 = cross_norm(y0, tag.dual());
    if n0 > 0.0 {
        dirs.push(y0.scaled(1.0 / n0));
    }
    let mut max_nuclear: f64 = 0.0;
    let mut counterexample = None;
    for z in &dirs {
        let p = y0.add(&z.scaled(r));
        match elementary_ball_membership(&p, HULL_TOL) {
            Membership::Member(cert) => max_nuclear = max_nuclear.max(cert.total_weight),
            Membership::Refused { nuclear_norm } => {
                max_nuclear = max_nuclear.max(nuclear_norm);
                if counterexample.is_none() {
                    counterexample = Some(p);
                }
            }
        }
    }
    Ok(InclusionProbe {
        contained: counterexample.is_none(),
        samples_checked: dirs.len(),
        max_nuclear_norm: max_nuclear,
        counterexample,
    })
}

/// Real matrix view, convenient for reports.
pub fn real_part(w: &Tensor2) -> DMatrix<f64> {
    w.matrix.map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cvec_from_real;
    use proptest::prelude::*;

    fn e1e1_half() -> Tensor2 {
        let e1 = cvec_from_real(&[1.0, 0.0]);
        Tensor2::elementary(&e1, &e1).scaled(0.5)
    }

    #[test]
    fn identity_norms() {
        let i2 = Tensor2::identity(2, 2);
        assert!((cross_norm(&i2, CrossNormTag::Injective) - 1.0).abs() < 1e-14);
        assert!((cross_norm(&i2, CrossNormTag::Projective) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn half_elementary_is_member_with_one_term() {
        match elementary_ball_membership(&e1e1_half(), 1e-12) {
            Membership::Member(cert) => {
                assert_eq!(cert.terms.len(), 1);
                assert!((cert.terms[0].0 - 0.5).abs() < 1e-15);
                assert!(cert.residual < 1e-15);
            }
            other => panic!("expected member, got {other:?}"),
        }
    }

    #[test]
    fn identity_is_refused() {
        match elementary_ball_membership(&Tensor2::identity(2, 2), 1e-12) {
            Membership::Refused { nuclear_norm } => assert!((nuclear_norm - 2.0).abs() < 1e-14),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn random_rank_one_unit_tensor_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let w = Tensor2::elementary(&random_unit(&mut rng, 3), &random_unit(&mut rng, 4));
            match elementary_ball_membership(&w, 1e-10) {
                Membership::Member(cert) => {
                    assert!(cert.residual <= 1e-12);
                    assert!(cert.total_weight <= 1.0 + 1e-12);
                }
                other => panic!("expected member, got {other:?}"),
            }
        }
    }

    #[test]
    fn condition_i_examples() {
        let p = condition_i_check(2, 2, CrossNormTag::Projective);
        assert!(!p.holds);
        let w = p.witness.unwrap();
        assert!((cross_norm(&w, CrossNormTag::Injective) - 1.0).abs() < 1e-12);
        assert!((cross_norm(&w, CrossNormTag::Projective) - 2.0).abs() < 1e-12);

        for tag in [CrossNormTag::Injective, CrossNormTag::Projective] {
            assert!(condition_i_check(1, 4, tag).holds);
        }
        let inj = condition_i_check(2, 2, CrossNormTag::Injective);
        assert!(inj.holds);
        assert!(inj.samples_checked >= 1_000);
    }

    #[test]
    fn projective_fails_whenever_both_dims_at_least_two() {
        for dx in 2..=4 {
            for dy in 2..=4 {
                let r = condition_i_check_with(dx, dy, CrossNormTag::Projective, 50, 9);
                assert!(!r.holds);
                let w = r.witness.unwrap();
                assert!(cross_norm(&w, CrossNormTag::Injective) <= 1.0 + 1e-12);
                assert!(cross_norm(&w, CrossNormTag::Projective) > 1.0);
            }
        }
    }

    #[test]
    fn inclusion_probe_examples() {
        let zero = Tensor2::zeros(2, 2);
        assert!(
            ball_inclusion_probe(&zero, 1.0, CrossNormTag::Injective, 500, 1)
                .unwrap()
                .contained
        );
        let proj = ball_inclusion_probe(&zero, 1.0, CrossNormTag::Projective, 500, 1).unwrap();
        assert!(!proj.contained);
        assert!(proj.max_nuclear_norm >= 2.0 - 1e-12);
        let near = ball_inclusion_probe(&e1e1_half(), 0.25, CrossNormTag::Injective, 500, 2).unwrap();
        assert!(near.contained);
        assert!(near.max_nuclear_norm <= 0.75 + 1e-12);
        assert_eq!(
            ball_inclusion_probe(&zero, 0.0, CrossNormTag::Injective, 5, 1).unwrap_err(),
            TensorError::BadRadius(0.0)
        );
    }

    fn tensor_strategy() -> impl Strategy<Value = Tensor2> {
        (1usize..4, 1usize..4).prop_flat_map(|(r, k)| {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * k).prop_map(move |v| {
                Tensor2::new(CMatrix::from_iterator(r, k, v.into_iter().map(|(a, b)| c(a, b)))).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn injective_below_projective_below_rank_times_injective(w in tensor_strategy()) {
            let inj = cross_norm(&w, CrossNormTag::Injective);
            let proj = cross_norm(&w, CrossNormTag::Projective);
            prop_assert!(inj <= proj + 1e-12);
            prop_assert!(proj <= w.rank().max(1) as f64 * inj + 1e-12);
        }

        #[test]
        fn cross_norm_on_elementary_tensors(
            x in proptest::collection::vec(-2.0f64..2.0, 3),
            y in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let (x, y) = (cvec_from_real(&x), cvec_from_real(&y));
            let w = Tensor2::elementary(&x, &y);
            for tag in [CrossNormTag::Injective, CrossNormTag::Projective] {
                prop_assert!((cross_norm(&w, tag) - x.norm() * y.norm()).abs() <= 1e-12 * (1.0 + x.norm() * y.norm()));
            }
        }

        #[test]
        fn triangle_and_homogeneity(a in tensor_strategy(), s in -3.0f64..3.0, seed in 0u64..1000) {
            let (r, k) = a.dims();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = Tensor2::new(random_cmat(&mut rng, r, k)).unwrap();
            for tag in [CrossNormTag::Injective, CrossNormTag::Projective] {
                prop_assert!(cross_norm(&a.add(&b), tag) <= cross_norm(&a, tag) + cross_norm(&b, tag) + 1e-12);
                prop_assert!((cross_norm(&a.scaled(s), tag) - s.abs() * cross_norm(&a, tag)).abs() <= 1e-12 * (1.0 + cross_norm(&a, tag)));
            }
        }

        #[test]
        fn membership_agrees_with_nuclear_norm(w in tensor_strategy(), scale in 0.1f64..3.0) {
            let w = w.scaled(scale);
            let nuclear = cross_norm(&w, CrossNormTag::Projective);
            match elementary_ball_membership(&w, 1e-12) {
                Membership::Member(cert) => {
                    prop_assert!(nuclear <= 1.0 + 1e-12);
                    prop_assert!(cert.residual <= 1e-10);
                    for (l, f, g) in &cert.terms {
                        prop_assert!(*l >= 0.0);
                        prop_assert!((f.norm() - 1.0).abs() < 1e-10 && (g.norm() - 1.0).abs() < 1e-10);
                    }
                }
                Membership::Refused { nuclear_norm } => {
                    prop_assert!(nuclear > 1.0);
                    prop_assert!((nuclear_norm - nuclear).abs() < 1e-12);
                }
            }
        }
    }
}
