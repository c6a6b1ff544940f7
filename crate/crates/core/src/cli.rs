//! Batch front end: scenario configs in, reports out.
//!
//! A scenario is a JSON document (see [`ScenarioConfig`]) or a catalog name
//! with `key=value` parameters on the command line; flags override either.
//! Exit codes: 0 success, 1 input error, 2 an undecided verdict under
//! `--strict`.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::catalog::{self, CatalogError, RandomProfile};
use crate::cstar::{self, CstarError, DynSystem, MixCReport};
use crate::numerics::{self, CVector};
use crate::report::{self, Cell, Report, Table};
use crate::sequences::{self, BoundedSequence, Functional, NormTag, NormedSpace, SequenceError, Verdict};
use crate::tensor_norms::{self, CrossNormTag, TensorError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

pub const DEFAULT_THEOREM_PAIRS: usize = 100;
pub const DEFAULT_SAMPLES: usize = 1_000;
/// Largest dimension for which per-coordinate weak profiles are tabulated.
const MAX_COORDINATE_COLUMNS: usize = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    System(#[from] CstarError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "ergomix",
    version,
    about = "Cesàro mixing diagnostics for sequences and stochastic systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak, uniform, weak-ergodic and ergodic profiles of a bounded sequence.
    AnalyzeSequence(RunArgs),
    /// Fixed space, Cesàro projection and mixing class of a stochastic system.
    AnalyzeSystem(RunArgs),
    /// Projection factorization for a pair of systems, or cross-norm conditions.
    TensorCheck(RunArgs),
    /// Randomized tensor-product theorem suite.
    VerifyTheorems(RunArgs),
    /// Catalog of named objects.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Print every catalog entry with its default parameters.
    List {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Catalog name, e.g. `swap` or `block_counterexample`.
    pub name: Option<String>,
    /// Builder parameters as key=value; values are read as JSON when they parse.
    pub params: Vec<String>,
    /// JSON scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated, strictly increasing horizons.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Verdict tolerance (default 1e-2 for sequences, 1e-8 for systems).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for every sampled quantity; recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for report.json and the CSV tables; stdout stays empty.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 when any verdict is undecided.
    #[arg(long)]
    pub strict: bool,
    /// Largest n for exact sign enumeration of the uniform statistic.
    #[arg(long)]
    pub exact_sup_max_n: Option<usize>,
    /// Number of random pairs for `verify-theorems`.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AnalyzeSequence,
    AnalyzeSystem,
    TensorCheck,
    VerifyTheorems,
}

/// One object: a catalog entry with parameters, an inline matrix, inline
/// sequence terms, or a pair of objects.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<Vec<ObjectSpec>>,
}

impl ObjectSpec {
    pub fn named(name: &str) -> Self {
        ObjectSpec {
            catalog: Some(name.to_string()),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let set = [
            self.catalog.is_some(),
            self.matrix.is_some(),
            self.terms.is_some(),
            self.pair.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if set != 1 {
            return Err(config_err(
                "object needs exactly one of `catalog`, `matrix`, `terms`, `pair`",
            ));
        }
        if let Some(p) = &self.pair {
            if p.len() != 2 {
                return Err(config_err(format!("`pair` needs 2 objects, got {}", p.len())));
            }
            for o in p {
                o.validate()?;
            }
        }
        Ok(())
    }
}

fn default_exact_max_n() -> usize {
    sequences::DEFAULT_EXACT_MAX_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_exact_max_n")]
    pub exact_sup_max_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Vector for the deviation profile of `analyze-system` (default `e_1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// Functional for the deviation profile of `analyze-system` (default `e_1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioConfig {
            scenario,
            object: None,
            grid: None,
            tol: None,
            seed: 0,
            out: None,
            strict: false,
            exact_sup_max_n: default_exact_max_n(),
            count: None,
            x: None,
            phi: None,
            samples: None,
        }
    }

    /// Parses a JSON scenario; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(g) = &self.grid {
            if g.is_empty() {
                return Err(config_err("`grid` is empty"));
            }
            if g[0] == 0 {
                return Err(config_err("`grid` entries must be positive"));
            }
            if let Some(w) = g.windows(2).find(|w| w[1] <= w[0]) {
                return Err(config_err(format!("`grid` not strictly increasing at {}", w[1])));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config_err(format!("`tol` must be positive, got {t}")));
            }
        }
        match (&self.object, self.scenario) {
            (Some(o), _) => o.validate(),
            (None, Scenario::VerifyTheorems) => Ok(()),
            (None, _) => Err(config_err("missing `object`")),
        }
    }

    fn apply_overrides(&mut self, a: &RunArgs) -> Result<(), CliError> {
        if let Some(name) = &a.name {
            let mut obj = ObjectSpec::named(name);
            for kv in &a.params {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| config_err(format!("parameter `{kv}` is not key=value")))?;
                let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
                obj.params.insert(k.to_string(), value);
            }
            self.object = Some(obj);
        } else if !a.params.is_empty() {
            return Err(config_err("parameters given without a catalog name"));
        }
        if a.grid.is_some() {
            self.grid = a.grid.clone();
        }
        if a.tol.is_some() {
            self.tol = a.tol;
        }
        if let Some(s) = a.seed {
            self.seed = s;
        }
        if a.out.is_some() {
            self.out = a.out.clone();
        }
        self.strict |= a.strict;
        if let Some(n) = a.exact_sup_max_n {
            self.exact_sup_max_n = n;
        }
        if a.count.is_some() {
            self.count = a.count;
        }
        self.validate()
    }
}

/// Builds the config for a subcommand from its file (if any) and flags.
pub fn resolve_config(scenario: Scenario, args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let mut cfg: ScenarioConfig =
                serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            if cfg.scenario != scenario {
                return Err(config_err(format!(
                    "{} declares scenario {:?}, subcommand is {:?}",
                    path.display(),
                    cfg.scenario,
                    scenario
                )));
            }
            cfg.scenario = scenario;
            cfg
        }
        None => ScenarioConfig::new(scenario),
    };
    cfg.apply_overrides(args)?;
    Ok(cfg)
}

struct Params<'a> {
    owner: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    fn new(owner: &'a str, map: &'a Map<String, Value>, allowed: &[&str]) -> Result<Self, CliError> {
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(config_err(format!(
                "unknown parameter `{k}` for `{owner}` (expected one of: {})",
                allowed.join(", ")
            )));
        }
        Ok(Params { owner, map })
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        config_err(format!("parameter `{key}` of `{}` must be {want}", self.owner))
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| self.bad(key, "a non-negative integer")),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| self.bad(key, "a non-negative integer")),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.bad(key, "a number")),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.bad(key, "true or false")),
        }
    }

    fn str(&self, key: &str, default: &'a str) -> Result<&'a str, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| self.bad(key, "a string")),
        }
    }

    fn vec(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| self.bad(key, "an array of numbers")))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(self.bad(key, "an array of numbers")),
        }
    }
}

const SYSTEM_PARAMS: [&str; 5] = ["u", "v", "d", "seed", "profile"];

fn system_by_name(name: &str, p: &Params) -> Result<DynSystem, CliError> {
    match name {
        "P33" => {
            let u = p.f64("u", catalog::P33_DEFAULT.0)?;
            let v = p.f64("v", 1.0 - u)?;
            Ok(catalog::p33(u, v)?)
        }
        "random" => {
            let profile: RandomProfile = p.str("profile", "generic")?.parse().map_err(config_err)?;
            Ok(catalog::random_system(p.usize("d", 3)?, p.u64("seed", 0)?, profile)?)
        }
        other => Ok(catalog::named_system(other)?),
    }
}

fn build_system(obj: &ObjectSpec) -> Result<DynSystem, CliError> {
    if let Some(rows) = &obj.matrix {
        return Ok(DynSystem::from_rows(rows, "inline")?);
    }
    match &obj.catalog {
        Some(name) => {
            let p = Params::new(name, &obj.params, &SYSTEM_PARAMS)?;
            system_by_name(name, &p)
        }
        None => Err(config_err("expected a system (`catalog` or `matrix`)")),
    }
}

fn build_pair(obj: &ObjectSpec) -> Result<(DynSystem, DynSystem), CliError> {
    if let Some(p) = &obj.pair {
        return Ok((build_system(&p[0])?, build_system(&p[1])?));
    }
    match &obj.catalog {
        Some(name) if name == "P33_swap" => {
            let p = Params::new(name, &obj.params, &["u", "v"])?;
            Ok((system_by_name("P33", &p)?, catalog::named_system("swap")?))
        }
        Some(name) => {
            Params::new(name, &obj.params, &[])?;
            Ok(catalog::system_pair(name)?)
        }
        None => Err(config_err("expected a system pair (`catalog` or `pair`)")),
    }
}

/// The sequence and its natural grid.
fn build_sequence(obj: &ObjectSpec) -> Result<(BoundedSequence, Vec<usize>), CliError> {
    if let Some(terms) = &obj.terms {
        let dim = terms.first().map_or(0, |t| t.len());
        if dim == 0 {
            return Err(config_err("`terms` must hold at least one non-empty vector"));
        }
        let space = NormedSpace::new(dim, obj.norm.unwrap_or(NormTag::Euclidean));
        let xs = terms.iter().map(|t| numerics::cvec_from_real(t)).collect();
        let seq = BoundedSequence::from_terms(space, xs)?.with_label("inline");
        let grid = default_grid(seq.horizon());
        return Ok((seq, grid));
    }
    let name = obj
        .catalog
        .as_deref()
        .ok_or_else(|| config_err("expected a sequence (`catalog` or `terms`)"))?;
    match name {
        "block_counterexample" => {
            let p = Params::new(name, &obj.params, &["J"])?;
            let j = p.usize("J", catalog::DEFAULT_BLOCKS)?;
            let seq = catalog::block_counterexample_in(j, obj.norm.unwrap_or(NormTag::Sup))?;
            Ok((seq, catalog::block_end_grid(j)))
        }
        "orbit" => {
            let mut allowed = vec!["system", "x", "centered", "horizon"];
            allowed.extend(SYSTEM_PARAMS);
            let p = Params::new(name, &obj.params, &allowed)?;
            let sys = system_by_name(p.str("system", "T31")?, &p)?;
            let x = match p.vec("x")? {
                Some(v) => numerics::cvec_from_real(&v),
                None => unit_vector(sys.dim(), 0),
            };
            let horizon = p.usize("horizon", catalog::DEFAULT_ORBIT_HORIZON)?;
            let seq = catalog::orbit_sequence_with_horizon(&sys, &x, p.bool("centered", true)?, horizon)?;
            Ok((seq, default_grid(horizon)))
        }
        other => Err(CatalogError::UnknownName(other.to_string()).into()),
    }
}

fn default_grid(horizon: usize) -> Vec<usize> {
    let g: Vec<usize> = sequences::DEFAULT_GRID
        .iter()
        .copied()
        .filter(|&n| n <= horizon)
        .collect();
    if g.is_empty() {
        vec![horizon.max(1)]
    } else {
        g
    }
}

fn unit_vector(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = numerics::c(1.0, 0.0);
    v
}

fn matrix_table(name: &str, m: &DMatrix<f64>) -> Table {
    let mut cols = vec!["row".to_string()];
    cols.extend((0..m.ncols()).map(|j| format!("c{j}")));
    let mut t = Table::with_columns(name, cols);
    for i in 0..m.nrows() {
        let mut row = vec![Cell::from(i)];
        row.extend(m.row(i).iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    t
}

fn verdict_of(b: bool) -> Verdict {
    if b {
        Verdict::Yes
    } else {
        Verdict::No
    }
}

/// Runs a validated scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let mut echo = cfg.clone();
    echo.out = None;
    match cfg.scenario {
        Scenario::AnalyzeSequence => analyze_sequence(cfg, echo),
        Scenario::AnalyzeSystem => analyze_system(cfg, echo),
        Scenario::TensorCheck => tensor_check(cfg, echo),
        Scenario::VerifyTheorems => verify_theorems(cfg, echo),
    }
}

fn echo_value(echo: &ScenarioConfig) -> Value {
    serde_json::to_value(echo).expect("config serializes")
}

fn analyze_sequence(cfg: &ScenarioConfig, mut echo: ScenarioConfig) -> Result<Report, CliError> {
    let obj = cfg.object.as_ref().expect("validated");
    let (seq, natural_grid) = build_sequence(obj)?;
    let grid = cfg.grid.clone().unwrap_or(natural_grid);
    let tol = cfg.tol.unwrap_or(sequences::DEFAULT_TOL);
    echo.grid = Some(grid.clone());
    echo.tol = Some(tol);
    let mut rep = Report::new(cfg.seed, echo_value(&echo));

    let v = sequences::classify(&seq, &grid, tol)?;
    let real_euclidean = seq.space().norm == NormTag::Euclidean
        && seq
            .terms(grid.last().copied().unwrap_or(0).min(cfg.exact_sup_max_n))?
            .iter()
            .all(|x| x.iter().all(|z| z.im == 0.0));
    let exact = if real_euclidean {
        sequences::uniform_exact(&seq, &grid, cfg.exact_sup_max_n)?
    } else {
        vec![None; grid.len()]
    };
    let mut profile = Table::new(
        "profile",
        &[
            "n",
            "weak",
            "weak_ergodic",
            "ergodic",
            "uniform_lower",
            "uniform_upper",
            "uniform_exact",
        ],
    );
    for (i, &n) in grid.iter().enumerate() {
        profile.push(vec![
            n.into(),
            v.weak[i].into(),
            v.weak_ergodic_stat[i].into(),
            v.ergodic_stat[i].into(),
            v.uniform_lower[i].into(),
            v.uniform_upper[i].into(),
            exact[i].into(),
        ]);
    }
    rep.tables.push(profile);

    let dim = seq.space().dim;
    if dim <= MAX_COORDINATE_COLUMNS {
        let mut cols = vec!["n".to_string()];
        cols.extend((0..dim).map(|i| format!("e{i}")));
        let per: Vec<Vec<f64>> = (0..dim)
            .map(|i| sequences::weak_profile(&seq, &Functional::coordinate(seq.space(), i), &grid))
            .collect::<Result<_, _>>()?;
        let mut t = Table::with_columns("weak_by_coordinate", cols);
        for (g, &n) in grid.iter().enumerate() {
            let mut row = vec![Cell::from(n)];
            row.extend(per.iter().map(|p| Cell::Num(p[g])));
            t.push(row);
        }
        rep.tables.push(t);
    }

    // Blum-Hanson: subsequences with k_n ≤ 2n, positions up to half the horizon.
    let bh_grid: Vec<usize> = grid.iter().copied().filter(|&n| 2 * n <= seq.horizon()).collect();
    if !bh_grid.is_empty() {
        let found = sequences::find_non_ergodic_subsequence(&seq, &bh_grid, tol, 2, 8, cfg.seed)?;
        let mut t = Table::new("blum_hanson", &["n", "ergodic_subsequence"]);
        let witness = match &found {
            Some((sub, r)) => {
                for (&n, &val) in bh_grid.iter().zip(&r.profile) {
                    t.push(vec![n.into(), val.into()]);
                }
                json!({ "first_terms": sub.iter().take(8).collect::<Vec<_>>(), "density": r.observed_density })
            }
            None => Value::Null,
        };
        rep.add_verdict("non_ergodic_subsequence", verdict_of(found.is_some()), witness);
        rep.tables.push(t);
    }

    if seq.horizon() >= 2 {
        if let Ok(s) = sequences::convex_shift_bounded_estimate(&seq, 2_000, cfg.seed) {
            let mut t = Table::new("shift_bound", &["estimate", "evaluated", "skipped_zero_denominator"]);
            t.push(vec![
                s.estimate.into(),
                s.evaluated.into(),
                s.skipped_zero_denominator.into(),
            ]);
            rep.tables.push(t);
        }
    }

    let last = grid.len() - 1;
    let stat = |name: &str, verdict: Verdict, value: f64| (name.to_string(), verdict, value);
    for (name, verdict, value) in [
        stat("weak_mixing", v.weak_mixing, v.weak[last]),
        stat("uniform_weak_mixing", v.uniform_weak_mixing, v.uniform_lower[last]),
        stat("weak_ergodic", v.weak_ergodic, v.weak_ergodic_stat[last]),
        stat("ergodic", v.ergodic, v.ergodic_stat[last]),
    ] {
        rep.add_verdict(
            &name,
            verdict,
            json!({ "n": grid[last], "statistic": value, "probes": v.probes }),
        );
    }
    Ok(rep)
}

fn analyze_system(cfg: &ScenarioConfig, mut echo: ScenarioConfig) -> Result<Report, CliError> {
    let sys = build_system(cfg.object.as_ref().expect("validated"))?;
    let d = sys.dim();
    let grid = cfg.grid.clone().unwrap_or_else(|| sequences::DEFAULT_GRID.to_vec());
    let tol = cfg.tol.unwrap_or(cstar::DEFAULT_CESARO_TOL);
    echo.grid = Some(grid.clone());
    echo.tol = Some(tol);
    let mut rep = Report::new(cfg.seed, echo_value(&echo));

    let m = cstar::analyze_system(&sys, tol)?;
    let x = match &cfg.x {
        Some(v) => numerics::cvec_from_real(v),
        None => unit_vector(d, 0),
    };
    let phi = match &cfg.phi {
        Some(v) => Functional::new(NormedSpace::sup(d), numerics::cvec_from_real(v))?,
        None => Functional::coordinate(NormedSpace::sup(d), 0),
    };
    let dev = cstar::deviation_profile(&sys, &x, &phi, &grid)?;
    let mut t = Table::new("deviation", &["n", "deviation"]);
    for (&n, &v) in grid.iter().zip(&dev) {
        t.push(vec![n.into(), v.into()]);
    }
    rep.tables.push(t);

    let e = cstar::cesaro_projection(&sys, cstar::CesaroMethod::Spectral, tol)?;
    rep.tables.push(matrix_table("projection", &e.matrix));

    let spec = numerics::spectrum(&sys.map.complex()).map_err(CstarError::from)?;
    let mut t = Table::new("spectrum", &["index", "re", "im", "modulus"]);
    for (i, z) in spec.eigenvalues.iter().enumerate() {
        t.push(vec![i.into(), z.re.into(), z.im.into(), z.norm().into()]);
    }
    rep.tables.push(t);

    let states = cstar::state_set_probe(&sys);
    let mut cols = vec!["class".to_string()];
    cols.extend((0..d).map(|i| format!("p{i}")));
    let mut t = Table::with_columns("invariant_states", cols);
    for (k, p) in states.extreme_points.iter().enumerate() {
        let mut row = vec![Cell::from(k)];
        row.extend(p.iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    rep.tables.push(t);

    rep.add_verdict(
        "ergodic",
        verdict_of(m.unique_e_ergodic),
        json!({ "cesaro_horizon": m.cesaro_horizon, "projection_gap": m.projection_gap, "fixed_space_dim": m.fixed_space_dim }),
    );
    let wm = if m.method_agreement {
        verdict_of(m.unique_e_weak_mixing)
    } else {
        Verdict::Undecided
    };
    rep.add_verdict("weak_mixing", wm, serde_json::to_value(&m).expect("serializes"));
    rep.add_verdict(
        "faithful_invariant_state",
        verdict_of(states.faithful),
        json!({ "closed_classes": states.closed_classes, "transient": states.transient }),
    );
    Ok(rep)
}

fn tensor_check(cfg: &ScenarioConfig, mut echo: ScenarioConfig) -> Result<Report, CliError> {
    let obj = cfg.object.as_ref().expect("validated");
    if obj.catalog.as_deref() == Some("cross_norms") {
        return cross_norm_check(cfg, obj, echo);
    }
    let (a, b) = build_pair(obj)?;
    let tol = cfg.tol.unwrap_or(cstar::DEFAULT_CESARO_TOL);
    echo.tol = Some(tol);
    let mut rep = Report::new(cfg.seed, echo_value(&echo));

    let fac = cstar::e_factorization_check(&a, &b, 1e-10_f64.max(tol))?;
    rep.tables.push(matrix_table("e_tensor", &fac.lhs.matrix));
    rep.tables.push(matrix_table("e_product", &fac.rhs));
    let mut dims = Table::new("fixed_dims", &["space", "dim"]);
    dims.push(vec![
        format!("fixed({})", a.label).into(),
        cstar::fixed_point_space(&a).len().into(),
    ]);
    dims.push(vec![
        format!("fixed({})", b.label).into(),
        cstar::fixed_point_space(&b).len().into(),
    ]);
    dims.push(vec!["fixed(tensor)".into(), fac.tensor_fixed_dim.into()]);
    dims.push(vec!["product of fixed spaces".into(), fac.product_fixed_dim.into()]);
    rep.tables.push(dims);
    rep.add_verdict(
        "factorizes",
        verdict_of(fac.factorizes),
        json!({ "max_entry_error": fac.max_entry_error, "tensor_fixed_dim": fac.tensor_fixed_dim, "product_fixed_dim": fac.product_fixed_dim }),
    );

    let mix = cstar::theorem_mix_a_check(&a, &b, tol)?;
    rep.add_verdict(
        "mix_a_equivalence",
        verdict_of(mix.holds),
        json!({ "a": mix.a.unique_e_weak_mixing, "b": mix.b.unique_e_weak_mixing, "tensor": mix.tensor.unique_e_weak_mixing, "methods_agree": mix.methods_agree }),
    );
    rep.add_verdict(
        "tensor_weak_mixing",
        verdict_of(mix.tensor.unique_e_weak_mixing),
        Value::Null,
    );
    rep.add_verdict("tensor_ergodic", verdict_of(mix.tensor.unique_e_ergodic), Value::Null);

    let mut t = Table::new("mix_c", &["status", "tensor_ergodic", "horizon", "residual", "reason"]);
    match cstar::theorem_mix_c_check(&a, &b, tol)? {
        MixCReport::Skipped { reason } => t.push(vec![
            "skipped".into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            reason.into(),
        ]),
        MixCReport::Checked {
            tensor_ergodic,
            horizon,
            residual,
        } => {
            rep.add_verdict(
                "mix_c_tensor_ergodic",
                verdict_of(tensor_ergodic),
                json!({ "residual": residual }),
            );
            t.push(vec![
                "checked".into(),
                tensor_ergodic.into(),
                horizon.into(),
                residual.into(),
                Cell::Empty,
            ])
        }
    }
    rep.tables.push(t);
    Ok(rep)
}

fn cross_norm_check(cfg: &ScenarioConfig, obj: &ObjectSpec, mut echo: ScenarioConfig) -> Result<Report, CliError> {
    let p = Params::new("cross_norms", &obj.params, &["dim_x", "dim_y", "radius"])?;
    let (dx, dy) = (p.usize("dim_x", 2)?, p.usize("dim_y", 2)?);
    if dx == 0 || dy == 0 {
        return Err(config_err("`dim_x` and `dim_y` must be positive"));
    }
    let radius = p.f64("radius", 1.0)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    echo.samples = Some(samples);
    let mut rep = Report::new(cfg.seed, echo_value(&echo));
    let mut t = Table::new(
        "condition_i",
        &["tag", "holds", "samples", "max_nuclear_norm", "ball_probe_contained"],
    );
    let y0 = tensor_norms::Tensor2::zeros(dx, dy);
    for (tag, name) in [
        (CrossNormTag::Injective, "injective"),
        (CrossNormTag::Projective, "projective"),
    ] {
        let c = tensor_norms::condition_i_check_with(dx, dy, tag, samples, cfg.seed);
        let probe = tensor_norms::ball_inclusion_probe(&y0, radius, tag, samples, cfg.seed)?;
        t.push(vec![
            name.into(),
            c.holds.into(),
            c.samples_checked.into(),
            c.max_nuclear_norm.into(),
            probe.contained.into(),
        ]);
        let witness = c.witness.as_ref().map_or(Value::Null, |w| {
            json!({
                "injective": tensor_norms::cross_norm(w, CrossNormTag::Injective),
                "projective": tensor_norms::cross_norm(w, CrossNormTag::Projective),
            })
        });
        rep.add_verdict(&format!("condition_i_{name}"), verdict_of(c.holds), witness);
    }
    rep.tables.push(t);
    Ok(rep)
}

fn verify_theorems(cfg: &ScenarioConfig, mut echo: ScenarioConfig) -> Result<Report, CliError> {
    let count = cfg.count.unwrap_or(DEFAULT_THEOREM_PAIRS);
    let tol = cfg.tol.unwrap_or(cstar::DEFAULT_CESARO_TOL);
    let seq_tol = sequences::DEFAULT_TOL;
    echo.count = Some(count);
    echo.tol = Some(tol);
    let mut rep = Report::new(cfg.seed, echo_value(&echo));
    let pairs = catalog::random_pairs(count, cfg.seed, 2..=4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut mix_a = Table::new(
        "mix_a",
        &["index", "a", "b", "wm_a", "wm_b", "wm_tensor", "holds", "methods_agree"],
    );
    let mut mix_c = Table::new("mix_c", &["index", "status", "tensor_ergodic", "residual"]);
    let mut squares = Table::new(
        "tensor_square",
        &["index", "weak_mixing", "tensor_square_ergodic", "consistent"],
    );
    let (mut violations, mut disagreements, mut c_failures, mut sq_failures) = (0, 0, 0, 0);
    for (i, (a, b)) in pairs.iter().enumerate() {
        let r = cstar::theorem_mix_a_check(a, b, tol)?;
        violations += usize::from(!r.holds);
        disagreements += usize::from(!r.methods_agree);
        mix_a.push(vec![
            i.into(),
            a.label.as_str().into(),
            b.label.as_str().into(),
            r.a.unique_e_weak_mixing.into(),
            r.b.unique_e_weak_mixing.into(),
            r.tensor.unique_e_weak_mixing.into(),
            r.holds.into(),
            r.methods_agree.into(),
        ]);
        match cstar::theorem_mix_c_check(a, b, tol)? {
            MixCReport::Skipped { .. } => mix_c.push(vec![i.into(), "skipped".into(), Cell::Empty, Cell::Empty]),
            MixCReport::Checked {
                tensor_ergodic,
                residual,
                ..
            } => {
                c_failures += usize::from(!tensor_ergodic);
                mix_c.push(vec![i.into(), "checked".into(), tensor_ergodic.into(), residual.into()])
            }
        }
        let x: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (wm, erg) = tensor_square_verdicts(a, &numerics::cvec_from_real(&x), seq_tol)?;
        sq_failures += usize::from(wm != erg);
        squares.push(vec![
            i.into(),
            wm.to_string().into(),
            erg.to_string().into(),
            (wm == erg).into(),
        ]);
    }
    rep.tables.extend([mix_a, mix_c, squares]);
    rep.add_verdict(
        "mix_a_equivalence",
        verdict_of(violations == 0),
        json!({ "pairs": count, "violations": violations }),
    );
    rep.add_verdict(
        "methods_agree",
        verdict_of(disagreements == 0),
        json!({ "disagreements": disagreements }),
    );
    rep.add_verdict(
        "mix_c_implication",
        verdict_of(c_failures == 0),
        json!({ "failures": c_failures }),
    );
    rep.add_verdict(
        "tensor_square_consistency",
        verdict_of(sq_failures == 0),
        json!({ "failures": sq_failures }),
    );
    Ok(rep)
}

/// Weak-mixing verdict of the centered orbit `x_k = T^k x − E x` and the
/// ergodic verdict of `x_k ⊗ x_k`, on the default horizon and grid.
pub fn tensor_square_verdicts(sys: &DynSystem, x: &CVector, tol: f64) -> Result<(Verdict, Verdict), CliError> {
    let seq = catalog::orbit_sequence(sys, x, true)?;
    let sq = sequences::tensor_sequences(&seq, &seq)?;
    let grid = sequences::DEFAULT_GRID;
    let wm = sequences::classify(&seq, &grid, tol)?.weak_mixing;
    let erg = sequences::classify(&sq, &grid, tol)?.ergodic;
    Ok((wm, erg))
}

fn catalog_report() -> Report {
    let mut rep = Report::new(0, json!({ "command": "catalog list" }));
    let mut t = Table::new("catalog", &["name", "kind", "params", "locator"]);
    for e in catalog::catalog() {
        t.push(vec![
            e.name.into(),
            serde_json::to_value(e.kind)
                .expect("serializes")
                .as_str()
                .unwrap_or("")
                .into(),
            e.params.to_string().into(),
            e.locator.into(),
        ]);
    }
    rep.tables.push(t);
    rep
}

/// Parses arguments, runs, writes output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (scenario, args) = match cli.command {
        Command::Catalog {
            action: CatalogAction::List { out },
        } => {
            let rep = catalog_report();
            match out {
                Some(dir) => report::write_report(&rep, &dir)?,
                None => print!("{}", rep.table("catalog").expect("present").to_csv()),
            }
            return Ok(EXIT_OK);
        }
        Command::AnalyzeSequence(a) => (Scenario::AnalyzeSequence, a),
        Command::AnalyzeSystem(a) => (Scenario::AnalyzeSystem, a),
        Command::TensorCheck(a) => (Scenario::TensorCheck, a),
        Command::VerifyTheorems(a) => (Scenario::VerifyTheorems, a),
    };
    let cfg = resolve_config(scenario, &args)?;
    let rep = run(&cfg)?;
    match &cfg.out {
        Some(dir) => report::write_report(&rep, dir)?,
        None => print!("{}", rep.to_json()),
    }
    for (name, v) in &rep.verdicts {
        if v.verdict == Verdict::Undecided {
            eprintln!("undecided: {name}");
        }
    }
    Ok(if cfg.strict && rep.any_undecided() {
        EXIT_UNDECIDED
    } else {
        EXIT_OK
    })
}
