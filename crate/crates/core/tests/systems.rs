use ergomix::catalog::{named_system, random_system, RandomProfile};
use ergomix::cstar::{
    self, analyze_system, cesaro_projection, classify_system, direct_criterion, fixed_point_space, max_entry_diff,
    tensor_system, theorem_mix_a_check, CesaroMethod, DynSystem,
};
use ergomix::numerics::{self, c, CVector};
use ergomix::sequences::{Functional, NormedSpace};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROFILES: [RandomProfile; 3] = [
    RandomProfile::Generic,
    RandomProfile::Reducible,
    RandomProfile::Periodic,
];

fn catalog_systems() -> Vec<DynSystem> {
    ["T31", "H31", "swap", "P33"]
        .iter()
        .map(|n| named_system(n).unwrap())
        .collect()
}

fn random_suite(count: u64, dims: std::ops::RangeInclusive<usize>) -> Vec<DynSystem> {
    let span = (dims.end() - dims.start() + 1) as u64;
    (0..count)
        .map(|s| {
            let d = dims.start() + (s % span) as usize;
            random_system(d, 1000 + s, PROFILES[(s / span) as usize % 3]).unwrap()
        })
        .collect()
}

#[test]
fn projection_invariants_on_catalog_and_random_systems() {
    let tol = 1e-8;
    for sys in catalog_systems().into_iter().chain(random_suite(100, 2..=6)) {
        let (s, it) = cstar::cross_validated_projection(&sys, tol).unwrap();
        let e = &s.matrix;
        let t = sys.matrix();
        assert!(max_entry_diff(&(e * e), e) <= 1e-10, "{}", sys.label);
        assert!(max_entry_diff(&(e * t), e) <= 1e-10, "{}", sys.label);
        assert!(max_entry_diff(&(t * e), e) <= 1e-10, "{}", sys.label);
        assert!(e.iter().all(|&v| v >= -1e-10), "{}", sys.label);
        for r in e.row_iter() {
            assert!((r.sum() - 1.0).abs() <= 1e-10);
        }
        assert!(max_entry_diff(e, &it.matrix) <= 10.0 * tol, "{}", sys.label);
        // range(E) and the fixed space contain each other
        let fixed = fixed_point_space(&sys);
        assert_eq!(fixed.len(), s.rank());
        let b = DMatrix::from_columns(&fixed);
        let proj = &b * b.transpose();
        for col in e.column_iter() {
            assert!((&proj * col - col).norm() <= 1e-9);
        }
        for v in &fixed {
            assert!((e * v - v).norm() <= 1e-9);
        }
    }
}

#[test]
fn spectral_and_direct_criteria_agree() {
    for sys in catalog_systems().into_iter().chain(random_suite(150, 2..=6)) {
        let m = classify_system(&sys, 1e-8).unwrap_or_else(|e| panic!("{}: {e}", sys.label));
        assert!(m.unique_e_ergodic, "{}", sys.label);
        assert!(!m.unique_e_weak_mixing || m.unique_e_ergodic);
    }
}

#[test]
fn random_profiles_have_expected_verdicts() {
    for seed in 0..30 {
        for d in 2..=6 {
            let g = analyze_system(&random_system(d, seed, RandomProfile::Generic).unwrap(), 1e-8).unwrap();
            assert!(g.unique_e_weak_mixing && g.method_agreement);
            let p = analyze_system(&random_system(d, seed, RandomProfile::Periodic).unwrap(), 1e-8).unwrap();
            assert!(!p.unique_e_weak_mixing && p.method_agreement);
        }
    }
}

#[test]
fn states_and_functionals_give_the_same_direct_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for sys in catalog_systems().into_iter().chain(random_suite(30, 2..=5)) {
        let d = sys.dim();
        let coord = cstar::direct_criterion_coordinates(&sys).unwrap();
        let space = NormedSpace::sup(d);
        let states: Vec<Functional> = (0..4)
            .map(|_| {
                let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = w.iter().sum();
                Functional::new(
                    space,
                    numerics::cvec_from_real(&w.iter().map(|v| v / s).collect::<Vec<_>>()),
                )
                .unwrap()
            })
            .collect();
        let xs: Vec<CVector> = (0..d)
            .map(|j| {
                let mut v = CVector::zeros(d);
                v[j] = c(1.0, 0.0);
                v
            })
            .collect();
        let by_states = direct_criterion(&sys, &xs, &states).unwrap();
        assert_eq!(coord.weak_mixing, by_states.weak_mixing, "{}", sys.label);
    }
}

#[test]
fn tensor_spectrum_is_product_of_factor_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in 0..30u64 {
        let a = random_system(rng.random_range(2..=3), s, PROFILES[s as usize % 3]).unwrap();
        let b = random_system(rng.random_range(2..=3), s + 100, PROFILES[(s as usize + 1) % 3]).unwrap();
        let t = tensor_system(&a, &b);
        let ea = numerics::spectrum(&a.map.complex()).unwrap().eigenvalues;
        let eb = numerics::spectrum(&b.map.complex()).unwrap().eigenvalues;
        let mut products: Vec<_> = ea.iter().flat_map(|x| eb.iter().map(move |y| x * y)).collect();
        let mut et = numerics::spectrum(&t.map.complex()).unwrap().eigenvalues;
        assert_eq!(products.len(), et.len());
        // greedy matching, each computed eigenvalue used once
        for z in et.drain(..) {
            let (idx, dist) = products
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist <= 1e-6, "{} vs {}: {z}", a.label, b.label);
            products.swap_remove(idx);
        }
    }
}

#[test]
fn mix_a_never_violated() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for s in 0..60u64 {
        let a = random_system(rng.random_range(2..=4), s, PROFILES[rng.random_range(0..3)]).unwrap();
        let b = random_system(rng.random_range(2..=4), s + 7919, PROFILES[rng.random_range(0..3)]).unwrap();
        let r = theorem_mix_a_check(&a, &b, 1e-8).unwrap();
        assert!(r.holds, "{} / {}", a.label, b.label);
        assert!(r.methods_agree, "{} / {}", a.label, b.label);
    }
}

fn stochastic(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(0.0f64..1.0, d * d).prop_map(move |v| {
        let mut m = DMatrix::from_row_slice(d, d, &v);
        for mut r in m.row_iter_mut() {
            let s = r.sum();
            if s == 0.0 {
                r.fill(1.0 / d as f64);
            } else {
                r /= s;
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kronecker_of_stochastic_validates(a in stochastic(3), b in stochastic(2)) {
        let a = DynSystem::new(cstar::validate_ucp(&a).unwrap(), "a");
        let b = DynSystem::new(cstar::validate_ucp(&b).unwrap(), "b");
        let t = tensor_system(&a, &b);
        prop_assert!(cstar::validate_ucp(t.matrix()).is_ok());
        for k in 1..=10 {
            let lhs = t.power(k);
            let rhs = numerics::kron_real(&a.power(k), &b.power(k));
            prop_assert!(max_entry_diff(&lhs, &rhs) <= 1e-12);
        }
    }

    #[test]
    fn spectral_projection_is_idempotent_ucp(m in stochastic(4)) {
        let sys = DynSystem::new(cstar::validate_ucp(&m).unwrap(), "p");
        let e = cesaro_projection(&sys, CesaroMethod::Spectral, 1e-8).unwrap().matrix;
        prop_assert!(max_entry_diff(&(&e * &e), &e) <= 1e-9);
        let ones = DVector::from_element(4, 1.0);
        prop_assert!((&e * &ones - &ones).amax() <= 1e-9);
    }
}
