//! Sums of Z′ over the points t̄ν in [T, T + H] with H = T^Δ ln T, and the
//! search for an odd-order root of Z′ in (T, T + H).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect_sign;
use crate::special_fns::{
    f1_remainder_bound, theta_prime_unchecked, z_prime_f1_unchecked, z_prime_fd, EvalConfig,
};
use crate::summation::NeumaierSum;
use crate::tbar_seq::{tbar_range, Parity, ParityFilter};

/// Smallest T accepted by the sum and root checks.
pub const MIN_BIG_T: f64 = 1e3;

/// Largest exponent accepted by [`sum_zprime`]. 1/6 plus slack for decimal
/// inputs such as 0.1666667.
pub const MAX_SUM_DELTA: f64 = 1.0 / 6.0 + 1e-6;

/// Constant in the error envelope C·T^Δ ln²T. Fitted as about twice the
/// largest |sum − main| / (T^Δ ln²T) seen over 16 consecutive windows at each
/// of T = 10⁴, 10⁵, 10⁶ (both parities).
pub const ENVELOPE_CONSTANT: f64 = 0.05;

/// Bisection width for the refined root estimate.
pub const REFINED_WIDTH: f64 = 1e-6;

/// H = T^Δ ln T.
pub fn window_length(big_t: f64, delta: f64) -> f64 {
    big_t.powf(delta) * big_t.ln()
}

/// (1/4π) H ln²(T/2π), taken positive.
pub fn main_term(big_t: f64, h: f64) -> f64 {
    h * (big_t / (2.0 * PI)).ln().powi(2) / (4.0 * PI)
}

pub fn error_envelope(big_t: f64, delta: f64) -> f64 {
    ENVELOPE_CONSTANT * big_t.powf(delta) * big_t.ln().powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumCheckReport {
    #[serde(rename = "T")]
    pub big_t: f64,
    pub delta: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub parity: ParityFilter,
    pub n_points: usize,
    pub sum: f64,
    pub main_term: f64,
    /// sum / main_term, signed; main_term is positive.
    pub ratio: f64,
    pub error_envelope: f64,
    /// First and last ν in the window (None when empty).
    pub nu_first: Option<u64>,
    pub nu_last: Option<u64>,
    /// H exceeds T^{1/4}, the range where Formula 2 applies; Formula 1 is
    /// used throughout regardless.
    pub beyond_formula2_window: bool,
}

fn check_sum_args(big_t: f64, delta: f64) -> Result<()> {
    if !(big_t >= MIN_BIG_T) || !big_t.is_finite() {
        return Err(Error::Domain { what: "T", value: big_t, floor: MIN_BIG_T });
    }
    if !(delta > 0.0 && delta <= MAX_SUM_DELTA) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1/6], got {delta}")));
    }
    Ok(())
}

/// Σ Z′(t̄ν) over T ≤ t̄ν ≤ T + H of the requested parity, Z′ by Formula 1.
///
/// For `ParityFilter::All` the result is the even sum plus the odd sum, each
/// accumulated in index order, so it equals the two single-parity reports
/// added together bit for bit.
pub fn sum_zprime(big_t: f64, delta: f64, parity: ParityFilter, cfg: &EvalConfig) -> Result<SumCheckReport> {
    check_sum_args(big_t, delta)?;
    let h = window_length(big_t, delta);
    let points = tbar_range(big_t, h, parity, cfg)?;
    let values: Vec<f64> = points.par_iter().map(|p| z_prime_f1_unchecked(p.t)).collect();
    let mut even = NeumaierSum::new();
    let mut odd = NeumaierSum::new();
    for (p, v) in points.iter().zip(&values) {
        match p.parity {
            Parity::Even => even.add(*v),
            Parity::Odd => odd.add(*v),
        }
    }
    let sum = match parity {
        ParityFilter::Even => even.value(),
        ParityFilter::Odd => odd.value(),
        ParityFilter::All => even.value() + odd.value(),
    };
    let main = main_term(big_t, h);
    Ok(SumCheckReport {
        big_t,
        delta,
        h,
        parity,
        n_points: points.len(),
        sum,
        main_term: main,
        ratio: sum / main,
        error_envelope: error_envelope(big_t, delta),
        nu_first: points.first().map(|p| p.nu),
        nu_last: points.last().map(|p| p.nu),
        beyond_formula2_window: h > big_t.powf(0.25),
    })
}

/// Reports for `count` consecutive windows, each starting where the previous
/// one ends.
pub fn consecutive_windows(
    big_t: f64,
    delta: f64,
    parity: ParityFilter,
    count: usize,
    cfg: &EvalConfig,
) -> Result<Vec<SumCheckReport>> {
    let mut starts = Vec::with_capacity(count);
    let mut t = big_t;
    for _ in 0..count {
        starts.push(t);
        t += window_length(t, delta);
    }
    starts.into_iter().map(|s| sum_zprime(s, delta, parity, cfg)).collect()
}

/// Root-mean-square of | |ratio| − 1 | over a set of reports.
pub fn rms_deviation(reports: &[SumCheckReport]) -> f64 {
    if reports.is_empty() {
        return f64::NAN;
    }
    let ss: f64 = reports.iter().map(|r| (r.ratio.abs() - 1.0).powi(2)).sum();
    (ss / reports.len() as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    /// Grid points with Z′ of opposite sign; the sign of each endpoint is
    /// certified by Formula 1 exceeding its remainder bound and re-checked
    /// with the finite-difference oracle.
    pub lo: f64,
    pub hi: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub delta: f64,
    pub fd_lo: f64,
    pub fd_hi: f64,
    /// Bisection of Formula 1 inside [lo, hi] down to [`REFINED_WIDTH`].
    /// Near the root |Z′| drops below the Formula 1 bound, so this inner
    /// bracket is an estimate, not a certified one.
    pub refined_lo: f64,
    pub refined_hi: f64,
    pub root: f64,
    pub samples: usize,
}

/// Scans Z′ on a grid of step π/(4θ′(T)) over the open interval (T, T + H),
/// H = T^Δ ln T, and returns the first certified sign change.
pub fn locate_odd_root(big_t: f64, delta: f64, cfg: &EvalConfig) -> Result<RootBracket> {
    if !(big_t >= MIN_BIG_T) || !big_t.is_finite() {
        return Err(Error::Domain { what: "T", value: big_t, floor: MIN_BIG_T });
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let h = window_length(big_t, delta);
    let step = PI / (4.0 * theta_prime_unchecked(big_t));
    let end = big_t + h;
    let mut last_confident: Option<(f64, f64)> = None;
    let mut samples = 0usize;
    let mut max_abs = 0.0f64;
    let mut i = 1usize;
    loop {
        let t = big_t + i as f64 * step;
        if t >= end {
            break;
        }
        i += 1;
        samples += 1;
        let v = z_prime_f1_unchecked(t);
        max_abs = max_abs.max(v.abs());
        if v.abs() <= f1_remainder_bound(t) {
            continue;
        }
        if let Some((t0, v0)) = last_confident {
            if v0.signum() != v.signum() {
                let fd_lo = z_prime_fd(t0, cfg)?;
                let fd_hi = z_prime_fd(t, cfg)?;
                if fd_lo.signum() == v0.signum() && fd_hi.signum() == v.signum() {
                    let (rlo, rhi) = bisect_sign(z_prime_f1_unchecked, t0, t, REFINED_WIDTH);
                    return Ok(RootBracket {
                        lo: t0,
                        hi: t,
                        big_t,
                        delta,
                        fd_lo,
                        fd_hi,
                        refined_lo: rlo,
                        refined_hi: rhi,
                        root: 0.5 * (rlo + rhi),
                        samples,
                    });
                }
            }
        }
        last_confident = Some((t, v));
    }
    Err(Error::RootNotFound { lo: big_t, hi: end, samples, max_abs })
}
