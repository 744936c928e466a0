//! Elementary sums S(a, b) = Σ_{a ≤ n < b} n^{it} and an empirical probe of
//! the exponent Δ in |S(a, b)| < A √a t^Δ.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_fns::with_logs;
use crate::summation::ComplexNeumaierSum;

/// Named exponents for which the bound is known or conjectured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaPreset {
    /// The classical 1/6.
    Sixth,
    /// Kolesnik's 35/216, plus a user ε.
    Kolesnik { eps: f64 },
    /// Any ε > 0, conditional on the Lindelöf hypothesis.
    LindelofEps { eps: f64 },
}

pub const SIXTH: f64 = 1.0 / 6.0;
pub const KOLESNIK: f64 = 35.0 / 216.0;

impl DeltaPreset {
    pub fn value(self) -> f64 {
        match self {
            DeltaPreset::Sixth => SIXTH,
            DeltaPreset::Kolesnik { eps } => KOLESNIK + eps,
            DeltaPreset::LindelofEps { eps } => eps,
        }
    }

    /// Parses `sixth`, `kolesnik`, `kolesnik:<eps>` or `lindelof-eps:<eps>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let eps = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|e| *e >= 0.0)
                    .ok_or_else(|| Error::InvalidConfig(format!("bad ε '{a}' in delta preset"))),
                None => default.ok_or_else(|| Error::InvalidConfig(format!("delta preset '{name}' needs ':<eps>'"))),
            }
        };
        match name {
            "sixth" if arg.is_none() => Ok(DeltaPreset::Sixth),
            "kolesnik" => Ok(DeltaPreset::Kolesnik { eps: eps(Some(0.0))? }),
            "lindelof-eps" => {
                let e = eps(None)?;
                if e <= 0.0 {
                    return Err(Error::InvalidConfig("lindelof-eps needs ε > 0".into()));
                }
                Ok(DeltaPreset::LindelofEps { eps: e })
            }
            _ => Err(Error::InvalidConfig(format!("unknown delta preset '{s}'"))),
        }
    }
}

fn check_pair(a: f64, b: f64, t: f64) -> Result<()> {
    if !(a > 0.0 && a <= b && b <= 2.0 * a) {
        return Err(Error::Constraint(format!("need 0 < a <= b <= 2a, got a={a}, b={b}")));
    }
    let limit = (t / TAU).sqrt();
    if !(b <= limit) {
        return Err(Error::Constraint(format!("need b <= sqrt(t/2pi) = {limit}, got b={b} at t={t}")));
    }
    Ok(())
}

/// Integer range ⌈a⌉ ≤ n < ⌈b⌉.
pub fn integer_range(a: f64, b: f64) -> (usize, usize) {
    (a.ceil() as usize, b.ceil() as usize)
}

/// S(a, b) at `t`, with phases t ln n formed in double-double.
pub fn s_sum(a: f64, b: f64, t: f64) -> Result<Complex64> {
    check_pair(a, b, t)?;
    let (first, end) = integer_range(a, b);
    if end <= first {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(with_logs(end, |logs| {
        let mut acc = ComplexNeumaierSum::new();
        for log in &logs[first..end] {
            let (s, c) = log.mul_f64(t).rem_two_pi().sin_cos();
            acc.add(Complex64::new(c, s));
        }
        acc.value()
    }))
}

/// S(a, b) with plain double phases. Loses about |t ln n|·2⁻⁵³ per term; kept
/// as a cross-check for [`s_sum`].
pub fn s_sum_plain(a: f64, b: f64, t: f64) -> Complex64 {
    let (first, end) = integer_range(a, b);
    (first..end).map(|n| Complex64::from_polar(1.0, t * (n as f64).ln())).sum()
}

pub fn bound(a: f64, t: f64, delta: f64, big_a: f64) -> f64 {
    big_a * a.sqrt() * t.powf(delta)
}

/// Whether |S(a, b)| < A √a t^Δ.
pub fn check_bound(a: f64, b: f64, t: f64, delta: f64, big_a: f64) -> Result<bool> {
    Ok(s_sum(a, b, t)?.norm() < bound(a, t, delta, big_a))
}

/// One evaluated sum, in the CSV layout a,b,t,abs_s,bound,ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSample {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub abs_s: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub delta_hat: f64,
    #[serde(rename = "A_hat")]
    pub a_hat: f64,
    pub samples: usize,
    /// max |S| / (target_A √a t^{delta_hat}); below 1 whenever delta_hat < 1/2.
    pub max_violation_ratio: f64,
}

/// Dyadic pairs (2^j, 2^{j+1}) with 2^j ≤ √(t/2π)/2.
pub fn dyadic_pairs(t: f64) -> Vec<(f64, f64)> {
    let top = 0.5 * (t / TAU).sqrt();
    let mut out = Vec::new();
    let mut a = 1.0;
    while a <= top {
        out.push((a, 2.0 * a));
        a *= 2.0;
    }
    out
}

/// Random sub-dyadic pairs a ≤ b ≤ 2a with b ≤ √(t/2π), drawn log-uniformly
/// in a from a seeded generator.
pub fn sub_dyadic_pairs(t: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let limit = (t / TAU).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t.to_bits());
    (0..count)
        .map(|_| {
            let a = limit.powf(rng.gen::<f64>()).min(limit);
            let b = (a * (1.0 + rng.gen::<f64>())).min(limit);
            (a, b)
        })
        .collect()
}

/// Evaluates every (a, b) pair at every t. Order follows `t_grid` then `pairs`.
pub fn sample_grid(t_grid: &[f64], pairs: &[(f64, f64)], delta: f64, big_a: f64) -> Result<Vec<TrigSample>> {
    let cells: Vec<(f64, f64, f64)> =
        t_grid.iter().flat_map(|&t| pairs.iter().map(move |&(a, b)| (a, b, t))).collect();
    sample_cells(&cells, delta, big_a)
}

/// Evaluates explicit (a, b, t) cells, preserving their order.
pub fn sample_cells(cells: &[(f64, f64, f64)], delta: f64, big_a: f64) -> Result<Vec<TrigSample>> {
    cells
        .par_iter()
        .map(|&(a, b, t)| {
            let abs_s = s_sum(a, b, t)?.norm();
            let bound = bound(a, t, delta, big_a);
            Ok(TrigSample { a, b, t, abs_s, bound, ratio: abs_s / bound })
        })
        .collect()
}

/// Per-t probe cells: every dyadic pair admissible at that t followed by
/// `sub_dyadic` seeded random pairs.
pub fn probe_cells(t_grid: &[f64], sub_dyadic: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    t_grid
        .iter()
        .flat_map(|&t| {
            dyadic_pairs(t)
                .into_iter()
                .chain(sub_dyadic_pairs(t, sub_dyadic, seed))
                .map(move |(a, b)| (a, b, t))
        })
        .collect()
}

const GRID_INV: f64 = 1e3;
const GRID_STEPS: u32 = 500;

/// Smallest Δ on the 10⁻³ grid in [0, 1/2] for which |S| < A √a t^Δ holds at
/// every sample with A = `target_a`.
pub fn fit_delta(t_grid: &[f64], pairs: &[(f64, f64)], target_a: f64) -> Result<ExponentFit> {
    let samples = sample_grid(t_grid, pairs, 0.0, 1.0)?;
    fit_samples(&samples, target_a)
}

/// As [`fit_delta`] on precomputed samples (only `a`, `t`, `abs_s` are read).
pub fn fit_samples(samples: &[TrigSample], target_a: f64) -> Result<ExponentFit> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(target_a > 0.0) {
        return Err(Error::InvalidConfig(format!("target A must be positive, got {target_a}")));
    }
    let holds = |delta: f64| samples.iter().all(|s| s.abs_s < bound(s.a, s.t, delta, target_a));
    let step = (0..=GRID_STEPS).find(|&k| holds(k as f64 / GRID_INV)).unwrap_or(GRID_STEPS);
    let delta_hat = step as f64 / GRID_INV;
    let a_hat = samples.iter().map(|s| s.abs_s / (s.a.sqrt() * s.t.powf(delta_hat))).fold(0.0, f64::max);
    let max_violation_ratio = a_hat / target_a;
    Ok(ExponentFit { delta_hat, a_hat, samples: samples.len(), max_violation_ratio })
}
