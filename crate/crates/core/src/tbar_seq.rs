//! The points t̄ν with θ(t̄ν) = πν + π/2, split by the parity of ν.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, PI as PI_DD};
use crate::error::{Error, Result};
use crate::roots::lambert_w0;
use crate::special_fns::{theta_dd, theta_prime_unchecked, theta_unchecked, EvalConfig};

/// Target residual |θ(t̄) − πν − π/2| when t itself is not the limiting factor.
pub const SOLVER_TOL: f64 = 1e-9;

const MAX_NEWTON: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(nu: u64) -> Self {
        if nu % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Which points of a window to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityFilter {
    Even,
    Odd,
    All,
}

impl ParityFilter {
    pub fn accepts(self, parity: Parity) -> bool {
        match self {
            ParityFilter::All => true,
            ParityFilter::Even => parity == Parity::Even,
            ParityFilter::Odd => parity == Parity::Odd,
        }
    }
}

impl fmt::Display for ParityFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParityFilter::Even => "even",
            ParityFilter::Odd => "odd",
            ParityFilter::All => "all",
        })
    }
}

impl FromStr for ParityFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(ParityFilter::Even),
            "odd" => Ok(ParityFilter::Odd),
            "all" => Ok(ParityFilter::All),
            other => Err(Error::InvalidConfig(format!("unknown parity '{other}' (expected even, odd or all)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TbarPoint {
    pub nu: u64,
    pub t: f64,
    pub parity: Parity,
}

fn target(nu: u64) -> DoubleDouble {
    PI_DD.mul_f64(nu as f64 + 0.5)
}

/// Signed residual θ(t) − πν − π/2, formed in double-double.
pub fn theta_residual(nu: u64, t: f64) -> f64 {
    (theta_dd(t) - target(nu)).to_f64()
}

/// Residual tolerance at `t`: [`SOLVER_TOL`], or the θ-change across one ulp
/// of `t` once that is larger (above t ≈ 2·10⁶).
pub fn tolerance_at(t: f64) -> f64 {
    let ulp = f64::from_bits(t.to_bits() + 1) - t;
    SOLVER_TOL.max(theta_prime_unchecked(t) * ulp)
}

/// Start value from inverting the two leading terms of θ:
/// with x = t/2π, x ln(x/e) = y where y = θ/π + 1/8, so x = y / W(y/e).
pub fn seed(nu: u64) -> f64 {
    let y = nu as f64 + 0.5 + 0.125;
    let x = y / lambert_w0(y / std::f64::consts::E);
    2.0 * PI * x
}

fn solve(nu: u64, start: f64) -> Result<f64> {
    let mut t = start;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let r = theta_residual(nu, t);
        last = r;
        if r.abs() <= tolerance_at(t) {
            return Ok(t);
        }
        let next = t - r / theta_prime_unchecked(t);
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if next == t {
            // Stalled on the grid of doubles; step by one ulp toward the root.
            t = if r > 0.0 { f64::from_bits(t.to_bits() - 1) } else { f64::from_bits(t.to_bits() + 1) };
        } else {
            t = next;
        }
    }
    bisect(nu, start).map_err(|_| Error::NonConvergence { what: "tbar Newton", iterations: MAX_NEWTON, residual: last })
}

/// Bisection fallback. θ is increasing above its minimum near t ≈ 6.3, so a
/// bracket is found by widening around the seed.
fn bisect(nu: u64, start: f64) -> Result<f64> {
    let mut width = 1.0;
    let (mut lo, mut hi);
    loop {
        lo = (start - width).max(7.0);
        hi = start + width;
        if theta_residual(nu, lo) <= 0.0 && theta_residual(nu, hi) >= 0.0 {
            break;
        }
        width *= 2.0;
        if width > 1e12 {
            return Err(Error::NonConvergence { what: "tbar bracket", iterations: 0, residual: f64::NAN });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = theta_residual(nu, mid);
        if r.abs() <= tolerance_at(mid) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if r > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence { what: "tbar bisection", iterations: 200, residual: theta_residual(nu, lo) })
}

/// Smallest ν with t̄ν ≥ `cfg.min_t`.
pub fn nu_min(cfg: &EvalConfig) -> u64 {
    first_nu_at_or_after(cfg.min_t)
}

fn first_nu_at_or_after(t: f64) -> u64 {
    let raw = ((theta_unchecked(t) - 0.5 * PI) / PI).ceil().max(0.0) as u64;
    // The f64 estimate may be off by one right at a boundary; settle it with
    // the double-double residual.
    let mut nu = raw.saturating_sub(1);
    while theta_residual(nu, t) > 0.0 {
        nu += 1;
    }
    nu
}

pub fn tbar(nu: u64, cfg: &EvalConfig) -> Result<TbarPoint> {
    let floor = nu_min(cfg);
    if nu < floor {
        return Err(Error::Domain { what: "tbar index", value: nu as f64, floor: floor as f64 });
    }
    let t = solve(nu, seed(nu))?;
    Ok(TbarPoint { nu, t, parity: Parity::of(nu) })
}

/// All points with `big_t <= t̄ <= big_t + h` whose parity passes `filter`,
/// in increasing order.
pub fn tbar_range(big_t: f64, h: f64, filter: ParityFilter, cfg: &EvalConfig) -> Result<Vec<TbarPoint>> {
    if !(big_t >= cfg.min_t) || !big_t.is_finite() {
        return Err(Error::Domain { what: "tbar_range T", value: big_t, floor: cfg.min_t });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidConfig(format!("window length H must be positive, got {h}")));
    }
    let end = big_t + h;
    let mut out = Vec::with_capacity((h * theta_prime_unchecked(big_t) / PI) as usize + 2);
    let mut nu = first_nu_at_or_after(big_t);
    let mut t = solve(nu, seed(nu))?;
    while t <= end {
        if t >= big_t {
            let parity = Parity::of(nu);
            if filter.accepts(parity) {
                out.push(TbarPoint { nu, t, parity });
            }
        }
        let next_seed = t + PI / theta_prime_unchecked(t);
        nu += 1;
        t = solve(nu, next_seed)?;
    }
    Ok(out)
}

/// Number of points in the window predicted by counting θ-levels.
pub fn expected_count(big_t: f64, h: f64) -> i64 {
    let lo = ((theta_unchecked(big_t) - 0.5 * PI) / PI).ceil() as i64;
    let hi = ((theta_unchecked(big_t + h) - 0.5 * PI) / PI).floor() as i64;
    hi - lo + 1
}
