//! Named constructors for the concrete sequences and systems used by the
//! tests, the examples and the command line.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cstar::{self, CesaroMethod, CstarError, DynSystem};
use crate::numerics::{self, c, CMatrix, CVector};
use crate::sequences::{BoundedSequence, NormTag, NormedSpace, SequenceError, TermSource};

pub const DEFAULT_ORBIT_HORIZON: usize = 10_000;
pub const DEFAULT_BLOCKS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown catalog name `{0}`")]
    UnknownName(String),
    #[error("block counterexample needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("need u, v > 0 with u + v = 1, got u = {u}, v = {v}")]
    BadWeights { u: f64, v: f64 },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error(transparent)]
    System(#[from] CstarError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

/// `n_1 = 1, n_2 = 2, n_{j+1} = 2 n_j − 1`, returned as `n_1 ..= n_{J+1}`.
pub fn block_boundaries(blocks: usize) -> Vec<usize> {
    let mut n = vec![1usize];
    for j in 0..blocks {
        let next = if j == 0 { 2 } else { 2 * n[j] - 1 };
        n.push(next);
    }
    n
}

/// Last index of each block, `n_{j+1} − 1` for `j = 1..=J`.
pub fn block_end_grid(blocks: usize) -> Vec<usize> {
    block_boundaries(blocks)[1..].iter().map(|n| n - 1).collect()
}

/// `x_k = e_j` for `n_j ≤ k < n_{j+1}` in a sup-norm space of dimension `J`,
/// up to the horizon `n_{J+1} − 1`.
///
/// Every coordinate functional eventually sees a Cesàro mean of order
/// (block length)/n, while the block ending at `n` fills half the window.
pub fn block_counterexample(blocks: usize) -> Result<BoundedSequence> {
    block_counterexample_in(blocks, NormTag::Sup)
}

pub fn block_counterexample_in(blocks: usize, norm: NormTag) -> Result<BoundedSequence> {
    if blocks < 2 {
        return Err(CatalogError::TooFewBlocks(blocks));
    }
    let bounds = block_boundaries(blocks);
    let horizon = bounds[blocks] - 1;
    let space = NormedSpace::new(blocks, norm);
    let seq = BoundedSequence::from_fn(space, 1.0, horizon, move |k| {
        // block j (0-based) holds k in [n_j, n_{j+1})
        let j = bounds.partition_point(|&n| n <= k) - 1;
        let mut x = CVector::zeros(blocks);
        x[j.min(blocks - 1)] = c(1.0, 0.0);
        x
    })?;
    Ok(seq.with_label(format!("block_counterexample(J={blocks})")))
}

struct OrbitSource {
    t: CMatrix,
    x: CVector,
    shift: CVector,
    sys: DynSystem,
}

impl TermSource for OrbitSource {
    fn term(&self, k: usize) -> CVector {
        numerics::to_complex(&self.sys.power(k as u64)) * &self.x - &self.shift
    }

    fn terms(&self, n: usize) -> Vec<CVector> {
        let mut y = self.x.clone();
        (0..n)
            .map(|_| {
                y = &self.t * &y;
                &y - &self.shift
            })
            .collect()
    }
}

/// `k ↦ T^k x`, or `T^k x − E_T x` when centered, over [`DEFAULT_ORBIT_HORIZON`].
pub fn orbit_sequence(sys: &DynSystem, x: &CVector, centered: bool) -> Result<BoundedSequence> {
    orbit_sequence_with_horizon(sys, x, centered, DEFAULT_ORBIT_HORIZON)
}

pub fn orbit_sequence_with_horizon(
    sys: &DynSystem,
    x: &CVector,
    centered: bool,
    horizon: usize,
) -> Result<BoundedSequence> {
    let d = sys.dim();
    if x.len() != d {
        return Err(SequenceError::DimensionMismatch {
            expected: d,
            got: x.len(),
        }
        .into());
    }
    let space = NormedSpace::sup(d);
    let shift = if centered {
        cstar::cesaro_projection(sys, CesaroMethod::Spectral, cstar::DEFAULT_CESARO_TOL)?.apply(x)
    } else {
        CVector::zeros(d)
    };
    // T is a sup-norm contraction.
    let bound = space.norm_of(x) + space.norm_of(&shift);
    let source = OrbitSource {
        t: sys.map.complex(),
        x: x.clone(),
        shift,
        sys: sys.clone(),
    };
    let label = format!(
        "{}orbit of {} under {}",
        if centered { "centered " } else { "" },
        fmt_vec(x),
        sys.label
    );
    Ok(BoundedSequence::new(space, bound, horizon, Arc::new(source))?.with_label(label))
}

fn fmt_vec(x: &CVector) -> String {
    let parts: Vec<String> = x
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{}", z.re)
            } else {
                format!("{z}")
            }
        })
        .collect();
    format!("({})", parts.join(","))
}

/// Default weights of the three-state map `P(x,y,z) = (y, x, uy + vz)`.
pub const P33_DEFAULT: (f64, f64) = (0.5, 0.5);

/// One of `T31`, `H31`, `swap`, `P33` (with default weights).
pub fn named_system(name: &str) -> Result<DynSystem> {
    let rows: Vec<Vec<f64>> = match name {
        "T31" => vec![vec![0.5, 0.5], vec![0.0, 1.0]],
        "H31" => vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5]],
        "swap" => vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        "P33" => return p33(P33_DEFAULT.0, P33_DEFAULT.1),
        other => return Err(CatalogError::UnknownName(other.to_string())),
    };
    Ok(DynSystem::from_rows(&rows, name)?)
}

/// `P(x,y,z) = (y, x, uy + vz)` with `u, v > 0`, `u + v = 1`.
pub fn p33(u: f64, v: f64) -> Result<DynSystem> {
    if !(u > 0.0 && v > 0.0 && (u + v - 1.0).abs() <= 1e-12) {
        return Err(CatalogError::BadWeights { u, v });
    }
    let rows = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, u, v]];
    Ok(DynSystem::from_rows(&rows, "P33")?)
}

/// Named pairs for the factorization and tensor theorems.
pub fn system_pair(name: &str) -> Result<(DynSystem, DynSystem)> {
    let (a, b) = match name {
        "T31_H31" => ("T31", "H31"),
        "swap_swap" => ("swap", "swap"),
        "P33_swap" => ("P33", "swap"),
        "T31_swap" => ("T31", "swap"),
        other => return Err(CatalogError::UnknownName(other.to_string())),
    };
    Ok((named_system(a)?, named_system(b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomProfile {
    /// Strictly positive rows.
    Generic,
    /// Transient states first, then one or two strictly positive closed classes.
    Reducible,
    /// Cyclic classes visited in order, period between 2 and `d`.
    Periodic,
}

impl std::str::FromStr for RandomProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "generic" => Ok(RandomProfile::Generic),
            "reducible" => Ok(RandomProfile::Reducible),
            "periodic" => Ok(RandomProfile::Periodic),
            other => Err(format!("unknown profile `{other}`")),
        }
    }
}

fn positive_row(rng: &mut ChaCha8Rng, len: usize, mass: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| mass * v / s).collect()
}

/// A seeded random row-stochastic system.
pub fn random_system(d: usize, seed: u64, profile: RandomProfile) -> Result<DynSystem> {
    if d == 0 {
        return Err(CatalogError::ZeroDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::<f64>::zeros(d, d);
    match profile {
        _ if d == 1 => m[(0, 0)] = 1.0,
        RandomProfile::Generic => {
            for i in 0..d {
                for (j, v) in positive_row(&mut rng, d, 1.0).into_iter().enumerate() {
                    m[(i, j)] = v;
                }
            }
        }
        RandomProfile::Reducible => {
            let transient = rng.random_range(1..d);
            let closed = d - transient;
            let classes = if closed >= 2 { rng.random_range(1..=2) } else { 1 };
            let split = if classes == 2 {
                rng.random_range(1..closed)
            } else {
                closed
            };
            let blocks = [(transient, transient + split), (transient + split, d)];
            for &(lo, hi) in blocks.iter().filter(|(lo, hi)| hi > lo) {
                for i in lo..hi {
                    for (j, v) in positive_row(&mut rng, hi - lo, 1.0).into_iter().enumerate() {
                        m[(i, lo + j)] = v;
                    }
                }
            }
            for i in 0..transient {
                let out = rng.random_range(0.3..1.0);
                for (j, v) in positive_row(&mut rng, transient, 1.0 - out).into_iter().enumerate() {
                    m[(i, j)] = v;
                }
                for (j, v) in positive_row(&mut rng, closed, out).into_iter().enumerate() {
                    m[(i, transient + j)] = v;
                }
            }
        }
        RandomProfile::Periodic => {
            let p = rng.random_range(2..=d);
            let mut states: Vec<usize> = (0..d).collect();
            states.shuffle(&mut rng);
            // first p states seed the classes, the rest are assigned at random
            let mut class_of = vec![0usize; d];
            for (idx, &s) in states.iter().enumerate() {
                class_of[s] = if idx < p { idx } else { rng.random_range(0..p) };
            }
            for i in 0..d {
                let targets: Vec<usize> = (0..d).filter(|&j| class_of[j] == (class_of[i] + 1) % p).collect();
                for (j, v) in targets.iter().zip(positive_row(&mut rng, targets.len(), 1.0)) {
                    m[(i, *j)] = v;
                }
            }
        }
    }
    let map = cstar::validate_ucp(&m)?;
    let tag = match profile {
        RandomProfile::Generic => "generic",
        RandomProfile::Reducible => "reducible",
        RandomProfile::Periodic => "periodic",
    };
    Ok(DynSystem::new(map, format!("random_{tag}(d={d},seed={seed})")))
}

/// `count` seeded pairs with dimensions in `dims` and profiles drawn uniformly.
pub fn random_pairs(
    count: usize,
    seed: u64,
    dims: std::ops::RangeInclusive<usize>,
) -> Result<Vec<(DynSystem, DynSystem)>> {
    const PROFILES: [RandomProfile; 3] = [
        RandomProfile::Generic,
        RandomProfile::Reducible,
        RandomProfile::Periodic,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut draw = || -> Result<DynSystem> {
                let d = rng.random_range(dims.clone());
                let profile = PROFILES[rng.random_range(0..3)];
                random_system(d, rng.random(), profile)
            };
            Ok((draw()?, draw()?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Sequence,
    System,
    SystemPair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub params: Value,
    pub locator: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    use EntryKind::*;
    vec![
        CatalogEntry {
            name: "block_counterexample",
            kind: Sequence,
            params: json!({ "J": DEFAULT_BLOCKS, "norm": "sup" }),
            locator: "unit vectors repeated over blocks of doubling length; weakly but not uniformly mixing",
        },
        CatalogEntry {
            name: "orbit",
            kind: Sequence,
            params: json!({ "system": "T31", "x": [1.0, 0.0], "centered": true, "horizon": DEFAULT_ORBIT_HORIZON }),
            locator: "orbit k -> T^k x of a catalog system, optionally minus E_T x",
        },
        CatalogEntry {
            name: "T31",
            kind: System,
            params: json!({}),
            locator: "2x2 upper-triangular map [[1/2,1/2],[0,1]] with E(x,y) = (y,y)",
        },
        CatalogEntry {
            name: "H31",
            kind: System,
            params: json!({}),
            locator: "3x3 map with two absorbing states and no faithful invariant state",
        },
        CatalogEntry {
            name: "swap",
            kind: System,
            params: json!({}),
            locator: "coordinate flip on C^2; ergodic, not weakly mixing",
        },
        CatalogEntry {
            name: "P33",
            kind: System,
            params: json!({ "u": P33_DEFAULT.0, "v": P33_DEFAULT.1 }),
            locator: "P(x,y,z) = (y, x, uy + vz), u + v = 1; uniquely ergodic, period two on its closed class",
        },
        CatalogEntry {
            name: "random",
            kind: System,
            params: json!({ "d": 3, "seed": 0, "profile": "generic" }),
            locator: "seeded random stochastic matrix (generic, reducible or periodic)",
        },
        CatalogEntry {
            name: "T31_H31",
            kind: SystemPair,
            params: json!({}),
            locator: "pair whose Cesaro projection factorizes over the tensor product",
        },
        CatalogEntry {
            name: "swap_swap",
            kind: SystemPair,
            params: json!({}),
            locator: "tensor square of the flip; ergodic with a two-dimensional fixed space",
        },
        CatalogEntry {
            name: "P33_swap",
            kind: SystemPair,
            params: json!({ "u": P33_DEFAULT.0, "v": P33_DEFAULT.1 }),
            locator: "pair whose tensor fixed space is larger than the product of fixed spaces",
        },
        CatalogEntry {
            name: "T31_swap",
            kind: SystemPair,
            params: json!({}),
            locator: "weakly mixing factor against an ergodic one; tensor stays ergodic",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar::classify_system;
    use crate::sequences::{classify, weak_profile, Functional, Verdict};

    #[test]
    fn boundaries_and_ratio() {
        assert_eq!(block_boundaries(5), vec![1, 2, 3, 5, 9, 17]);
        let b = block_boundaries(12);
        for w in b[1..].windows(2) {
            assert_eq!(2 * (w[0] - 1), w[1] - 1);
        }
        assert_eq!(block_end_grid(4), vec![1, 2, 4, 8]);
        assert!(matches!(block_counterexample(1), Err(CatalogError::TooFewBlocks(1))));
    }

    #[test]
    fn block_terms() {
        let s = block_counterexample(5).unwrap();
        assert_eq!(s.horizon(), 16);
        let which: Vec<usize> = s
            .terms(16)
            .unwrap()
            .iter()
            .map(|x| x.iter().position(|z| z.re == 1.0).unwrap())
            .collect();
        assert_eq!(which, vec![0, 1, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4, 4, 4, 4]);
        let f = Functional::coordinate(s.space(), 4);
        assert_eq!(weak_profile(&s, &f, &[16]).unwrap(), vec![0.5]);
    }

    #[test]
    fn block_verdicts() {
        let s = block_counterexample(8).unwrap();
        let v = classify(&s, &block_end_grid(8), 1e-2).unwrap();
        assert_eq!(v.weak_mixing, Verdict::Yes);
        assert_eq!(v.uniform_weak_mixing, Verdict::No);
    }

    #[test]
    fn orbits() {
        let t = named_system("T31").unwrap();
        let s = orbit_sequence(&t, &numerics::cvec_from_real(&[1.0, 0.0]), true).unwrap();
        let terms = s.terms(30).unwrap();
        for (k, x) in terms.iter().enumerate() {
            assert!((x[0].re - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
            assert_eq!(x[1].re, 0.0);
            assert!((s.term(k + 1).unwrap() - x).camax() < 1e-15);
        }
        let sw = named_system("swap").unwrap();
        let s = orbit_sequence(&sw, &numerics::cvec_from_real(&[1.0, 0.0]), true).unwrap();
        for (k, x) in s.terms(6).unwrap().iter().enumerate() {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            assert!((x[0].re - 0.5 * sign).abs() < 1e-15 && (x[1].re + 0.5 * sign).abs() < 1e-15);
        }
        let fixed = orbit_sequence(&t, &numerics::cvec_from_real(&[2.0, 2.0]), true).unwrap();
        assert!(fixed.terms(20).unwrap().iter().all(|x| x.camax() < 1e-14));
        assert!(orbit_sequence(&t, &numerics::cvec_from_real(&[1.0]), true).is_err());
    }

    #[test]
    fn named_systems() {
        assert_eq!(
            named_system("T31").unwrap().matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0])
        );
        let sw = named_system("swap").unwrap();
        assert_eq!(sw.power(2), DMatrix::identity(2, 2));
        let (u, v) = P33_DEFAULT;
        let p2 = named_system("P33").unwrap().power(2);
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, u, u * v, v * v]);
        assert_eq!(p2, want);
        assert!(named_system("nope").is_err());
        assert!(p33(0.0, 1.0).is_err());
        assert!(p33(0.6, 0.6).is_err());
        for e in catalog() {
            match e.kind {
                EntryKind::System if e.name != "random" => assert!(named_system(e.name).is_ok()),
                EntryKind::SystemPair => assert!(system_pair(e.name).is_ok()),
                _ => {}
            }
        }
    }

    #[test]
    fn random_profiles() {
        for seed in 0..20 {
            let g = random_system(3, seed, RandomProfile::Generic).unwrap();
            assert_eq!(g, random_system(3, seed, RandomProfile::Generic).unwrap());
            assert!(classify_system(&g, 1e-8).unwrap().unique_e_weak_mixing);
            let p = random_system(4, seed, RandomProfile::Periodic).unwrap();
            assert!(!classify_system(&p, 1e-8).unwrap().unique_e_weak_mixing);
            let r = random_system(5, seed, RandomProfile::Reducible).unwrap();
            assert!(classify_system(&r, 1e-8).unwrap().unique_e_weak_mixing);
        }
        assert!(random_system(0, 1, RandomProfile::Generic).is_err());
    }
}
