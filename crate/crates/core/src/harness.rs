//! Run configuration, validation, scheduling and CSV/JSON output.
//!
//! A [`RunConfig`] is validated in full before any computation starts. Work
//! runs on a dedicated thread pool, results are collected in grid order and
//! serialized in one piece, so the emitted bytes do not depend on the thread
//! count. The output file is written to a temporary name and renamed, which
//! leaves no file behind when the run fails.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functionals::{
    equilibrium, fermat_rationals, fermat_scan, functional_main, required_extent, split21_functional,
    substituted_t, MAX_COMPUTABLE_T,
};
use crate::ladder::{Ladder, LadderConfig};
use crate::quadrature::QuadratureSpec;
use crate::special_fns::{
    theta, z, z_oracle, z_prime_f1, z_prime_fd, EvalConfig,
};
use crate::sum_asymptotics::{consecutive_windows, locate_odd_root, window_length, MAX_SUM_DELTA, MIN_BIG_T};
use crate::tbar_seq::{tbar_range, theta_residual, ParityFilter};
use crate::trig_sums::{fit_samples, probe_cells, sample_cells, DeltaPreset};

/// Bumped whenever a column set changes.
pub const COLUMNS_VERSION: u32 = 1;

const MAX_GRID_CELLS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eval,
    Tbar,
    TrigFit,
    SumCheck,
    FindRoot,
    LadderCheck,
    Functional,
    FermatScan,
    Equilibrium,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Eval,
        Command::Tbar,
        Command::TrigFit,
        Command::SumCheck,
        Command::FindRoot,
        Command::LadderCheck,
        Command::Functional,
        Command::FermatScan,
        Command::Equilibrium,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Tbar => "tbar",
            Command::TrigFit => "trig-fit",
            Command::SumCheck => "sum-check",
            Command::FindRoot => "find-root",
            Command::LadderCheck => "ladder-check",
            Command::Functional => "functional",
            Command::FermatScan => "fermat-scan",
            Command::Equilibrium => "equilibrium",
        }
    }

    /// Output columns, fixed per command and [`COLUMNS_VERSION`].
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Command::Eval => &[
                "t",
                "theta",
                "z",
                "z_remainder_bound",
                "z_prime_f1",
                "f1_remainder_bound",
                "z_oracle",
                "z_prime_fd",
            ],
            Command::Tbar => &["nu", "t", "parity", "theta_residual"],
            Command::TrigFit => &["t_grid", "sub_dyadic", "seed", "target_A", "delta_hat", "A_hat", "samples", "max_violation_ratio"],
            Command::SumCheck => &[
                "window",
                "T",
                "delta",
                "H",
                "parity",
                "n_points",
                "sum",
                "main_term",
                "ratio",
                "error_envelope",
                "nu_first",
                "nu_last",
                "beyond_formula2_window",
            ],
            Command::FindRoot => &[
                "T", "delta", "lo", "hi", "fd_lo", "fd_hi", "refined_lo", "refined_hi", "root", "samples",
            ],
            Command::LadderCheck => &[
                "kind",
                "base_T",
                "k",
                "iterates",
                "step_integrals",
                "linear_increments",
                "solver_residuals",
                "segment_lengths",
                "equidistance_deviation",
                "integral_equality_deviation",
                "equidistance_constant",
                "integral_equality_constant",
                "prime_proxy_ratios",
                "telescoping_error",
            ],
            Command::Functional => &[
                "functional",
                "x_target",
                "tau",
                "delta",
                "T",
                "H",
                "n_points",
                "numerator",
                "denominator",
                "ratio_over_tau",
                "abs_ratio_over_tau",
                "envelope",
            ],
            Command::FermatScan => &[
                "x",
                "y",
                "z",
                "n",
                "value",
                "tau",
                "delta",
                "T",
                "H",
                "n_points",
                "numerator",
                "denominator",
                "ratio_over_tau",
                "distance_from_one",
                "envelope",
                "error",
            ],
            Command::Equilibrium => &[
                "tau",
                "delta",
                "T",
                "H",
                "n_points",
                "lhs",
                "tau_hat",
                "c1",
                "c1_direct",
                "c2",
                "rhs",
                "altitude",
                "ratio",
                "sqrt_abs_lhs",
            ],
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            Command::Eval => &["t", "oracle"],
            Command::Tbar => &["T", "H", "delta", "parity"],
            Command::TrigFit => &["t-grid", "sub-dyadic", "seed", "target-A"],
            Command::SumCheck => &["T", "delta", "parity", "windows"],
            Command::FindRoot => &["T", "delta", "random", "seed", "T-min", "T-max"],
            Command::LadderCheck => &["T", "k"],
            Command::Functional => &["x", "tau", "delta", "variant", "l1", "l2"],
            Command::FermatScan => &["max-n", "max-xyz", "tau", "delta"],
            Command::Equilibrium => &["tau", "delta"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Command parameters as strings, e.g. `T = "1e4"`, `tau = "4.6,6.8"`.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Directory for persisted ladder caches; overrides the environment.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            params: BTreeMap::new(),
            quadrature: QuadratureSpec::default(),
            eval: EvalConfig::default(),
            ladder: LadderConfig::default(),
            threads: 1,
            output_path: None,
            format: OutputFormat::Csv,
            cache_dir: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// SHA-256 of the canonical JSON form without `threads`, `output_path`
    /// and `cache_dir`.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut value {
            map.remove("threads");
            map.remove("output_path");
            map.remove("cache_dir");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every parameter against the preconditions of the operation it
    /// feeds. Nothing is computed.
    pub fn validate(&self) -> Result<()> {
        self.plan().map(|_| ())
    }

    fn plan(&self) -> Result<Plan> {
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        self.quadrature.validate()?;
        self.eval.validate()?;
        self.ladder.validate()?;
        let allowed = self.command.allowed_params();
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "unknown parameter '{key}' for {} (allowed: {})",
                    self.command,
                    allowed.join(", ")
                )));
            }
        }
        let p = Params { command: self.command, map: &self.params };
        let plan = match self.command {
            Command::Eval => {
                let ts = p.f64_list("t")?;
                for &t in &ts {
                    require(t >= self.eval.min_t, || format!("t = {t} is below min_t = {}", self.eval.min_t))?;
                }
                Plan::Eval { ts, oracle: p.bool_or("oracle", false)? }
            }
            Command::Tbar => {
                let big_t = p.f64("T")?;
                require(big_t >= self.eval.min_t, || format!("T = {big_t} is below min_t = {}", self.eval.min_t))?;
                let h = match p.get("H") {
                    Some(_) => {
                        require(!p.has("delta"), || "give either H or delta, not both".into())?;
                        p.f64("H")?
                    }
                    None => window_length(big_t, p.delta_or_sixth()?),
                };
                require(h > 0.0, || format!("H = {h} must be positive"))?;
                let count = h * crate::special_fns::theta_prime_unchecked(big_t + h) / std::f64::consts::PI;
                require(count <= 1e7, || format!("window holds about {count:.0} points; at most 1e7 allowed"))?;
                Plan::Tbar { big_t, h, filter: p.parity_or("parity", ParityFilter::All)? }
            }
            Command::TrigFit => {
                let t_grid = p.f64_list("t-grid")?;
                for &t in &t_grid {
                    require(t >= 8.0 * std::f64::consts::TAU, || format!("t = {t} admits no dyadic pair"))?;
                }
                let target_a = p.f64_or("target-A", 1.0)?;
                require(target_a > 0.0, || "target-A must be positive".into())?;
                Plan::TrigFit { t_grid, sub_dyadic: p.u64_or("sub-dyadic", 8)? as usize, seed: p.u64_or("seed", 1)?, target_a }
            }
            Command::SumCheck => {
                let ts = p.f64_list("T")?;
                let delta = p.sum_delta()?;
                for &t in &ts {
                    require(t >= MIN_BIG_T.max(self.eval.min_t), || format!("T = {t} is below {MIN_BIG_T}"))?;
                }
                let windows = p.u64_or("windows", 1)? as usize;
                require((1..=10_000).contains(&windows), || "windows must lie in 1..=10000".into())?;
                Plan::SumCheck { ts, delta, parity: p.parity_or("parity", ParityFilter::Odd)?, windows }
            }
            Command::FindRoot => {
                let delta = p.sum_delta()?;
                let ts = match (p.has("T"), p.has("random")) {
                    (true, false) => {
                        require(!p.has("seed") && !p.has("T-min") && !p.has("T-max"), || {
                            "seed, T-min and T-max only apply with random".into()
                        })?;
                        p.f64_list("T")?
                    }
                    (false, true) => {
                        let count = p.u64_or("random", 0)? as usize;
                        let lo = p.f64_or("T-min", 1e4)?;
                        let hi = p.f64_or("T-max", 1e6)?;
                        require(lo < hi, || format!("T-min = {lo} must be below T-max = {hi}"))?;
                        require(count <= MAX_GRID_CELLS, || "too many random T values".into())?;
                        let mut rng = ChaCha8Rng::seed_from_u64(p.u64_or("seed", 1)?);
                        (0..count).map(|_| rng.gen_range(lo..hi)).collect()
                    }
                    _ => return Err(Error::InvalidConfig("find-root needs exactly one of T or random".into())),
                };
                for &t in &ts {
                    require(t >= MIN_BIG_T.max(self.eval.min_t), || format!("T = {t} is below {MIN_BIG_T}"))?;
                }
                Plan::FindRoot { ts, delta }
            }
            Command::LadderCheck => {
                let ts = p.f64_list("T")?;
                let k = p.u64_or("k", 3)? as usize;
                require((1..=5).contains(&k), || format!("k = {k} must lie in 1..=5"))?;
                for &t in &ts {
                    require(t >= self.eval.min_t, || format!("T = {t} is below min_t = {}", self.eval.min_t))?;
                    require(t <= MAX_COMPUTABLE_T, || format!("T = {t} exceeds {MAX_COMPUTABLE_T:e}"))?;
                }
                Plan::LadderCheck { ts, k }
            }
            Command::Functional => {
                let xs = p.f64_list("x")?;
                let taus = p.f64_list("tau")?;
                let delta = p.sum_delta()?;
                let variant = match p.get("variant").unwrap_or("main") {
                    "main" => {
                        require(!p.has("l1") && !p.has("l2"), || "l1 and l2 only apply to variant split21".into())?;
                        Variant::Main
                    }
                    "split21" => {
                        let default = 1.0 / (4.0 * std::f64::consts::PI.sqrt());
                        let l1 = p.f64_or("l1", default)?;
                        let l2 = p.f64_or("l2", default)?;
                        require(l1 > 0.0 && l2 > 0.0 && (l1 * l2 * 16.0 * std::f64::consts::PI - 1.0).abs() <= 1e-12, || {
                            format!("l1·l2 = {} must equal 1/(16π)", l1 * l2)
                        })?;
                        Variant::Split21 { l1, l2 }
                    }
                    other => return Err(Error::InvalidConfig(format!("unknown variant '{other}' (main or split21)"))),
                };
                require(xs.len() * taus.len() <= MAX_GRID_CELLS, || "grid too large".into())?;
                for &x in &xs {
                    for &tau in &taus {
                        substituted_t(x, tau, delta)?;
                    }
                }
                Plan::Functional { xs, taus, delta, variant }
            }
            Command::FermatScan => {
                let max_n = p.u64("max-n")?;
                let max_xyz = p.u64("max-xyz")?;
                require(max_n >= 3, || format!("max-n = {max_n} must be at least 3"))?;
                require(max_n <= 64 && max_xyz <= 1000, || "max-n ≤ 64 and max-xyz ≤ 1000".into())?;
                let taus = p.f64_list("tau")?;
                let delta = p.sum_delta()?;
                let cells = fermat_rationals(max_n as u32, max_xyz)?.len() * taus.len();
                require(cells <= MAX_GRID_CELLS, || format!("{cells} cells exceed {MAX_GRID_CELLS}"))?;
                for &tau in &taus {
                    require(tau > 0.0, || format!("tau = {tau} must be positive"))?;
                }
                Plan::FermatScan { max_n: max_n as u32, max_xyz, taus, delta }
            }
            Command::Equilibrium => {
                let taus = p.f64_list("tau")?;
                let delta = p.sum_delta()?;
                for &tau in &taus {
                    substituted_t(1.0, tau, delta)?;
                }
                Plan::Equilibrium { taus, delta }
            }
        };
        Ok(plan)
    }
}

fn require(ok: bool, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(message()))
    }
}

struct Params<'a> {
    command: Command,
    map: &'a BTreeMap<String, String>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.trim())
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn missing(&self, key: &str) -> Error {
        Error::InvalidConfig(format!("{} needs parameter '{key}'", self.command))
    }

    fn parse_f64(key: &str, s: &str) -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidConfig(format!("parameter '{key}': '{s}' is not a finite number")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        Self::parse_f64(key, self.get(key).ok_or_else(|| self.missing(key))?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |s| Self::parse_f64(key, s))
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key).ok_or_else(|| self.missing(key))?;
        let values: Vec<f64> = raw.split(',').map(|s| Self::parse_f64(key, s.trim())).collect::<Result<_>>()?;
        require(!values.is_empty(), || format!("parameter '{key}' is empty"))?;
        require(values.len() <= MAX_GRID_CELLS, || format!("parameter '{key}' lists too many values"))?;
        Ok(values)
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let raw = self.get(key).ok_or_else(|| self.missing(key))?;
        raw.parse::<u64>()
            .map_err(|_| Error::InvalidConfig(format!("parameter '{key}': '{raw}' is not a nonnegative integer")))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        if self.has(key) {
            self.u64(key)
        } else {
            Ok(default)
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(Error::InvalidConfig(format!("parameter '{key}': '{other}' is not a boolean"))),
        }
    }

    fn parity_or(&self, key: &str, default: ParityFilter) -> Result<ParityFilter> {
        self.get(key).map_or(Ok(default), |s| s.parse())
    }

    fn delta_or_sixth(&self) -> Result<f64> {
        match self.get("delta") {
            None => Ok(1.0 / 6.0),
            Some(s) => parse_delta(s),
        }
    }

    /// Δ for the sum-based commands, limited to (0, 1/6].
    fn sum_delta(&self) -> Result<f64> {
        let delta = match self.get("delta") {
            None => return Err(self.missing("delta")),
            Some(s) => parse_delta(s)?,
        };
        require(delta > 0.0 && delta <= MAX_SUM_DELTA, || format!("delta = {delta} must lie in (0, 1/6]"))?;
        Ok(delta)
    }
}

/// A number or a preset name (`sixth`, `kolesnik[:eps]`, `lindelof-eps:eps`).
pub fn parse_delta(s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::InvalidConfig(format!("delta '{s}' is not finite"))),
        Err(_) => Ok(DeltaPreset::parse(s)?.value()),
    }
}

#[derive(Clone, Copy, Debug)]
enum Variant {
    Main,
    Split21 { l1: f64, l2: f64 },
}

#[derive(Clone, Debug)]
enum Plan {
    Eval { ts: Vec<f64>, oracle: bool },
    Tbar { big_t: f64, h: f64, filter: ParityFilter },
    TrigFit { t_grid: Vec<f64>, sub_dyadic: usize, seed: u64, target_a: f64 },
    SumCheck { ts: Vec<f64>, delta: f64, parity: ParityFilter, windows: usize },
    FindRoot { ts: Vec<f64>, delta: f64 },
    LadderCheck { ts: Vec<f64>, k: usize },
    Functional { xs: Vec<f64>, taus: Vec<f64>, delta: f64, variant: Variant },
    FermatScan { max_n: u32, max_xyz: u64, taus: Vec<f64>, delta: f64 },
    Equilibrium { taus: Vec<f64>, delta: f64 },
}

type Row = Map<String, Value>;

/// Serializes `value` and lifts the fields of nested objects to the top
/// level (outer fields win on a name clash).
fn flatten<T: Serialize>(value: &T) -> Row {
    let mut out = Row::new();
    let mut nested = Vec::new();
    if let Value::Object(map) = serde_json::to_value(value).expect("row serializes") {
        for (k, v) in map {
            match v {
                Value::Object(inner) => nested.push(inner),
                other => {
                    out.insert(k, other);
                }
            }
        }
    }
    for inner in nested {
        for (k, v) in inner {
            out.entry(k).or_insert(v);
        }
    }
    out
}

fn ordered<T, F>(cells: &[T], f: F) -> Result<Vec<Row>>
where
    T: Sync,
    F: Fn(&T) -> Result<Row> + Sync + Send,
{
    cells.par_iter().map(f).collect()
}

fn new_ladder(config: &RunConfig) -> Result<Ladder> {
    let ladder = Ladder::new(config.ladder, config.quadrature, config.eval)?;
    Ok(match &config.cache_dir {
        Some(dir) => ladder.with_cache_dir(Some(dir.clone())),
        None => ladder,
    })
}

fn execute(config: &RunConfig, plan: &Plan) -> Result<Vec<Row>> {
    let cfg = &config.eval;
    match plan {
        Plan::Eval { ts, oracle } => ordered(ts, |&t| {
            let zv = z(t, cfg)?;
            let d = z_prime_f1(t, cfg)?;
            let mut row = Row::new();
            row.insert("t".into(), t.into());
            row.insert("theta".into(), theta(t, cfg)?.into());
            row.insert("z".into(), zv.value.into());
            row.insert("z_remainder_bound".into(), zv.remainder_bound.into());
            row.insert("z_prime_f1".into(), d.value.into());
            row.insert("f1_remainder_bound".into(), d.remainder_bound.into());
            if *oracle {
                row.insert("z_oracle".into(), z_oracle(t, cfg)?.into());
                row.insert("z_prime_fd".into(), z_prime_fd(t, cfg)?.into());
            }
            Ok(row)
        }),
        Plan::Tbar { big_t, h, filter } => {
            let points = tbar_range(*big_t, *h, *filter, cfg)?;
            Ok(points
                .iter()
                .map(|p| {
                    let mut row = flatten(p);
                    row.insert("theta_residual".into(), theta_residual(p.nu, p.t).into());
                    row
                })
                .collect())
        }
        Plan::TrigFit { t_grid, sub_dyadic, seed, target_a } => {
            let cells = probe_cells(t_grid, *sub_dyadic, *seed);
            let samples = sample_cells(&cells, 0.0, 1.0)?;
            let fit = fit_samples(&samples, *target_a)?;
            let mut row = flatten(&fit);
            row.insert("t_grid".into(), t_grid.clone().into());
            row.insert("sub_dyadic".into(), (*sub_dyadic as u64).into());
            row.insert("seed".into(), (*seed).into());
            row.insert("target_A".into(), (*target_a).into());
            Ok(vec![row])
        }
        Plan::SumCheck { ts, delta, parity, windows } => {
            let mut rows = Vec::new();
            for &t in ts {
                for (i, report) in consecutive_windows(t, *delta, *parity, *windows, cfg)?.iter().enumerate() {
                    let mut row = flatten(report);
                    row.insert("window".into(), (i as u64).into());
                    rows.push(row);
                }
            }
            Ok(rows)
        }
        Plan::FindRoot { ts, delta } => ordered(ts, |&t| Ok(flatten(&locate_odd_root(t, *delta, cfg)?))),
        Plan::LadderCheck { ts, k } => {
            let ladder = new_ladder(config)?;
            for &t in ts {
                ladder.ensure_chain(t, *k)?;
            }
            ordered(ts, |&t| Ok(flatten(&ladder.check_partition(t, *k)?)))
        }
        Plan::Functional { xs, taus, delta, variant } => {
            let ladder = new_ladder(config)?;
            let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| taus.iter().map(move |&tau| (x, tau))).collect();
            let top = cells.iter().map(|&(x, tau)| substituted_t(x, tau, *delta)).collect::<Result<Vec<_>>>()?;
            let top = top.into_iter().fold(0.0, f64::max);
            ladder.extend_to(required_extent(&ladder, top))?;
            ordered(&cells, |&(x, tau)| {
                let sample = match variant {
                    Variant::Main => functional_main(&ladder, x, tau, *delta)?,
                    Variant::Split21 { l1, l2 } => split21_functional(&ladder, x, tau, *delta, *l1, *l2)?,
                };
                Ok(flatten(&sample))
            })
        }
        Plan::FermatScan { max_n, max_xyz, taus, delta } => {
            let ladder = new_ladder(config)?;
            let mut top: f64 = 0.0;
            for r in fermat_rationals(*max_n, *max_xyz)? {
                for &tau in taus {
                    if let Ok(t) = substituted_t(r.value, tau, *delta) {
                        top = top.max(t);
                    }
                }
            }
            if top > 0.0 {
                ladder.extend_to(required_extent(&ladder, top))?;
            }
            Ok(fermat_scan(&ladder, *max_n, *max_xyz, taus, *delta)?
                .iter()
                .map(|row| {
                    let mut flat = flatten(row);
                    flat.insert("delta".into(), (*delta).into());
                    flat
                })
                .collect())
        }
        Plan::Equilibrium { taus, delta } => {
            let ladder = new_ladder(config)?;
            let top = taus.iter().map(|&tau| substituted_t(1.0, tau, *delta)).collect::<Result<Vec<_>>>()?;
            ladder.extend_to(required_extent(&ladder, top.into_iter().fold(0.0, f64::max)))?;
            ordered(taus, |&tau| Ok(flatten(&equilibrium(&ladder, tau, *delta)?)))
        }
    }
}

/// Output of a run that has been rendered but not necessarily written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub rows: usize,
    pub path: Option<PathBuf>,
}

fn csv_cell(value: Option<&Value>) -> String {
    match value {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        Some(Value::Array(items)) => items.iter().map(|v| csv_cell(Some(v))).collect::<Vec<_>>().join(";"),
        Some(other) => other.to_string(),
    }
}

fn meta(config: &RunConfig) -> Row {
    let mut m = Row::new();
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("command".into(), config.command.name().into());
    m.insert("config_hash".into(), config.config_hash().into());
    m.insert("euler_c".into(), config.ladder.euler_c.into());
    m.insert("ladder_kind".into(), config.ladder.kind.to_string().into());
    m.insert("rs_correction_order".into(), config.eval.rs_correction_order.into());
    m.insert("columns_version".into(), COLUMNS_VERSION.into());
    m
}

fn render(config: &RunConfig, rows: &[Row]) -> String {
    let columns = config.command.columns();
    match config.format {
        OutputFormat::Csv => {
            let mut out = format!("# zladder {}\n", env!("CARGO_PKG_VERSION"));
            for (k, v) in meta(config) {
                if k != "version" {
                    out.push_str(&format!("# {k}: {}\n", csv_cell(Some(&v))));
                }
            }
            out.push_str(&columns.join(","));
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = columns.iter().map(|c| csv_cell(row.get(*c))).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let mut m = meta(config);
            m.insert("columns".into(), columns.iter().map(|c| Value::from(*c)).collect::<Vec<_>>().into());
            let rows: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut r = Row::new();
                    for c in columns {
                        r.insert((*c).into(), row.get(*c).cloned().unwrap_or(Value::Null));
                    }
                    Value::Object(r)
                })
                .collect();
            let doc = serde_json::json!({ "meta": m, "rows": rows });
            let mut s = serde_json::to_string_pretty(&doc).expect("json renders");
            s.push('\n');
            s
        }
    }
}

/// Validates, computes and renders without touching the file system.
pub fn render_run(config: &RunConfig) -> Result<RunOutput> {
    let plan = config.plan()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {} threads: {e}", config.threads)))?;
    let rows = pool.install(|| execute(config, &plan))?;
    Ok(RunOutput { text: render(config, &rows), rows: rows.len(), path: config.output_path.clone() })
}

/// [`render_run`] followed by an atomic write to `output_path`, if set.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let output = render_run(config)?;
    if let Some(path) = &output.path {
        write_atomic(path, output.text.as_bytes())?;
    }
    Ok(output)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("output path '{}' has no file name", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}
