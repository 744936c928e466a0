//! Finite-τ evaluations of the limit functionals built from the odd-parity
//! Z′ sum and the ladder product integrals.
//!
//! None of the limits can be taken numerically; each operation returns one
//! sample of the trajectory together with its inputs and a relative envelope.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{hl_integral, Ladder, LadderKind};
use crate::quadrature::adaptive_gk;
use crate::special_fns::{theta_prime_unchecked, z_squared};
use crate::sum_asymptotics::{error_envelope, main_term, sum_zprime, MIN_BIG_T};
use crate::tbar_seq::ParityFilter;

/// Largest T = (xτ)^{1/Δ} the functionals will evaluate.
pub const MAX_COMPUTABLE_T: f64 = 1e8;

/// l̄ with 2l̄ = 1/4π.
pub const L_BAR: f64 = 1.0 / (8.0 * PI);

/// Relative tolerance of the adaptive product-integral quadrature.
pub const PRODUCT_RTOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    Main,
    Split21,
    Equilibrium,
    Generalized,
}

/// (xⁿ + yⁿ)/zⁿ with n ≥ 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermatRational {
    pub x: u64,
    pub y: u64,
    pub z: u64,
    pub n: u32,
    pub value: f64,
}

impl FermatRational {
    pub fn new(x: u64, y: u64, z: u64, n: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::Constraint(format!("Fermat exponent n = {n} must be at least 3")));
        }
        if x == 0 || y == 0 || z == 0 {
            return Err(Error::Constraint("x, y, z must be positive integers".into()));
        }
        let (xf, yf, zf) = (x as f64, y as f64, z as f64);
        let value = (xf / zf).powi(n as i32) + (yf / zf).powi(n as i32);
        Ok(FermatRational { x, y, z, n, value })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub functional: FunctionalKind,
    pub x_target: f64,
    pub tau: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub n_points: usize,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio_over_tau: f64,
    pub abs_ratio_over_tau: f64,
    /// Relative envelope: sum error term plus ln ln T / ln T.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    #[serde(rename = "T")]
    pub big_t: f64,
    pub delta: f64,
    pub l: f64,
    pub n_points: usize,
    pub sum: f64,
    pub product_integral: f64,
    /// (1/8πl)·T^Δ·product_integral.
    pub scaled_integral: f64,
    pub ratio: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub tau: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub n_points: usize,
    pub lhs: f64,
    /// τ̂ with ∫_τ^τ̂ Z² = (1 − c)τ.
    pub tau_hat: f64,
    pub c1: f64,
    /// c1 recomputed by standalone quadrature over [τ, τ̂].
    pub c1_direct: f64,
    pub c2: f64,
    pub rhs: f64,
    pub altitude: f64,
    pub ratio: f64,
    pub sqrt_abs_lhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermatRow {
    pub rational: FermatRational,
    pub tau: f64,
    pub sample: Option<FunctionalSample>,
    /// |ratio_over_tau − 1|.
    pub distance_from_one: Option<f64>,
    pub error: Option<String>,
}

/// ∫ over [φ₁^{−k}(a), φ₁^{−k}(b)] of ∏_{r<k} Z²(φ₁ʳ(t)).
pub fn product_integral_window(ladder: &Ladder, a: f64, b: f64, k: usize) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::Constraint(format!("product integral order k = {k} must lie in 1..=3")));
    }
    if !(a <= b) {
        return Err(Error::Constraint(format!("window [{a}, {b}] is reversed")));
    }
    let lo = ladder.reverse_iter(a, k)?;
    let hi = ladder.reverse_iter(b, k)?;
    if lo == hi {
        return Ok(0.0);
    }
    let eval = *ladder.eval_config();
    let mut failure = None;
    let mut integrand = |t: f64| -> f64 {
        let mut x = t;
        let mut product = 1.0;
        for r in 0..k {
            if r > 0 {
                x = match ladder.phi1_forward(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        return 0.0;
                    }
                };
            }
            product *= match z_squared(x, &eval) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
        }
        product
    };
    // resolve the fastest oscillation of Z² with a few panels per period
    let period = PI / theta_prime_unchecked(hi).max(1.0);
    let panels = (((hi - lo) / period).ceil() as usize).clamp(4, 1 << 16);
    let scale = (b - a) * a.ln().powi(k as i32);
    let (value, _) = adaptive_gk(&mut integrand, lo, hi, PRODUCT_RTOL * scale, panels, 40)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// ∫ over [φ₁^{−k}(T), φ₁^{−k}(T + 2l)] of ∏_{r<k} Z²(φ₁ʳ(t)).
pub fn product_integral(ladder: &Ladder, big_t: f64, k: usize, l: f64) -> Result<f64> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Constraint(format!("l = {l} must be positive")));
    }
    product_integral_window(ladder, big_t, big_t + 2.0 * l, k)
}

/// The mean-square ladder turns the product integral into
/// ∫_T^{T+2l} ∏_{j<k} F′(φ₁^{−j}(w)) dw with F′(x) = ln(x/2π) + 1 + c.
pub fn product_integral_identity(ladder: &Ladder, big_t: f64, k: usize, l: f64) -> Result<f64> {
    if ladder.config().kind != LadderKind::MeanSquare {
        return Err(Error::Constraint("the closed form holds for the mean-square ladder only".into()));
    }
    let c = ladder.config().euler_c;
    let mut failure = None;
    let integrand = |w: f64| -> f64 {
        let mut x = w;
        let mut product = 1.0;
        for j in 0..k {
            if j > 0 {
                x = match ladder.reverse_step(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        return 0.0;
                    }
                };
            }
            product *= (x / (2.0 * PI)).ln() + 1.0 + c;
        }
        product
    };
    let (value, _) = crate::quadrature::gk15(integrand, big_t, big_t + 2.0 * l);
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// T = (xτ)^{1/Δ}, refused when it leaves [MIN_BIG_T, MAX_COMPUTABLE_T].
pub fn substituted_t(x: f64, tau: f64, delta: f64) -> Result<f64> {
    if !(x > 0.0 && tau > 0.0 && delta > 0.0) {
        return Err(Error::Constraint(format!("x = {x}, tau = {tau} and delta = {delta} must be positive")));
    }
    let ln_t = (x * tau).ln() / delta;
    if ln_t > MAX_COMPUTABLE_T.ln() {
        return Err(Error::OutOfRange(format!(
            "T = (x·tau)^(1/delta) = ({})^{} = 10^{:.1} exceeds the computable limit {MAX_COMPUTABLE_T:e}; \
             the 1/delta power outgrows any direct evaluation",
            x * tau,
            1.0 / delta,
            ln_t / std::f64::consts::LN_10
        )));
    }
    let big_t = ln_t.exp();
    if big_t < MIN_BIG_T {
        return Err(Error::Domain { what: "T = (x·tau)^(1/delta)", value: big_t, floor: MIN_BIG_T });
    }
    Ok(big_t)
}

fn relative_envelope(big_t: f64, delta: f64, h: f64) -> f64 {
    let ln_t = big_t.ln();
    error_envelope(big_t, delta) / main_term(big_t, h) + ln_t.ln() / ln_t
}

/// Largest abscissa a functional at T touches, for sizing the ladder cache.
pub fn required_extent(ladder: &Ladder, big_t: f64) -> f64 {
    ladder.chain_end_estimate(big_t + 1.0, 3)
}

pub fn lemma1_check(ladder: &Ladder, big_t: f64, delta: f64, l: f64) -> Result<LemmaReport> {
    let sum = sum_zprime(big_t, delta, ParityFilter::Odd, ladder.eval_config())?;
    let product = product_integral(ladder, big_t, 3, l)?;
    if product == 0.0 {
        return Err(Error::Constraint("product integral vanished".into()));
    }
    let scaled = big_t.powf(delta) * product / (8.0 * PI * l);
    Ok(LemmaReport {
        big_t,
        delta,
        l,
        n_points: sum.n_points,
        sum: sum.sum,
        product_integral: product,
        scaled_integral: scaled,
        ratio: sum.sum / scaled,
        envelope: relative_envelope(big_t, delta, sum.h),
    })
}

/// The functional with a denominator ∏ᵢ (product integral of order kᵢ and
/// half-width lᵢ). Requires Σkᵢ = 3 and ∏ 2lᵢ = 1/4π.
pub fn generalized_split(
    ladder: &Ladder,
    x: f64,
    tau: f64,
    delta: f64,
    parts: &[(usize, f64)],
) -> Result<FunctionalSample> {
    generalized_inner(ladder, x, tau, delta, parts, FunctionalKind::Generalized)
}

fn generalized_inner(
    ladder: &Ladder,
    x: f64,
    tau: f64,
    delta: f64,
    parts: &[(usize, f64)],
    kind: FunctionalKind,
) -> Result<FunctionalSample> {
    let total: usize = parts.iter().map(|p| p.0).sum();
    if total != 3 || parts.iter().any(|p| p.0 == 0) {
        return Err(Error::Constraint(format!("split orders must be positive and add up to 3, got {parts:?}")));
    }
    let product: f64 = parts.iter().map(|p| 2.0 * p.1).product();
    if !((product * 4.0 * PI - 1.0).abs() <= 1e-12) {
        return Err(Error::Constraint(format!("the product of the 2l_i is {product}, not 1/(4π)")));
    }
    let big_t = substituted_t(x, tau, delta)?;
    let sum = sum_zprime(big_t, delta, ParityFilter::Odd, ladder.eval_config())?;
    let mut denominator = 1.0;
    for &(k, l) in parts {
        denominator *= product_integral(ladder, big_t, k, l)?;
    }
    if denominator == 0.0 {
        return Err(Error::Constraint("denominator vanished".into()));
    }
    let ratio = sum.sum / (denominator * tau);
    Ok(FunctionalSample {
        functional: kind,
        x_target: x,
        tau,
        delta,
        big_t,
        h: sum.h,
        n_points: sum.n_points,
        numerator: sum.sum,
        denominator,
        ratio_over_tau: ratio,
        abs_ratio_over_tau: ratio.abs(),
        envelope: relative_envelope(big_t, delta, sum.h),
    })
}

pub fn functional_main(ladder: &Ladder, x: f64, tau: f64, delta: f64) -> Result<FunctionalSample> {
    generalized_inner(ladder, x, tau, delta, &[(3, L_BAR)], FunctionalKind::Main)
}

pub fn split21_functional(
    ladder: &Ladder,
    x: f64,
    tau: f64,
    delta: f64,
    l1: f64,
    l2: f64,
) -> Result<FunctionalSample> {
    if !(l1 > 0.0 && l2 > 0.0) || !((l1 * l2 * 16.0 * PI - 1.0).abs() <= 1e-12) {
        return Err(Error::Constraint(format!("l1·l2 = {} must equal 1/(16π) = {}", l1 * l2, 1.0 / (16.0 * PI))));
    }
    generalized_inner(ladder, x, tau, delta, &[(1, l1), (2, l2)], FunctionalKind::Split21)
}

/// Every (x, y, z, n) with x ≤ y (the value is symmetric), all at most
/// `max_xyz`, and 3 ≤ n ≤ `max_n`.
pub fn fermat_rationals(max_n: u32, max_xyz: u64) -> Result<Vec<FermatRational>> {
    if max_n < 3 {
        return Err(Error::Constraint(format!("max_n = {max_n} must be at least 3")));
    }
    if max_xyz == 0 {
        return Err(Error::Constraint("max_xyz must be positive".into()));
    }
    let mut out = Vec::new();
    for n in 3..=max_n {
        for x in 1..=max_xyz {
            for y in x..=max_xyz {
                for z in 1..=max_xyz {
                    out.push(FermatRational::new(x, y, z, n)?);
                }
            }
        }
    }
    Ok(out)
}

/// functional_main at each Fermat rational and τ. Cells that fail (mostly
/// T out of range) carry the error text and the scan goes on.
pub fn fermat_scan(ladder: &Ladder, max_n: u32, max_xyz: u64, tau_grid: &[f64], delta: f64) -> Result<Vec<FermatRow>> {
    if tau_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let cells: Vec<(FermatRational, f64)> = fermat_rationals(max_n, max_xyz)?
        .into_iter()
        .flat_map(|r| tau_grid.iter().map(move |&tau| (r, tau)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(rational, tau)| match functional_main(ladder, rational.value, tau, delta) {
            Ok(sample) => FermatRow {
                rational,
                tau,
                distance_from_one: Some((sample.ratio_over_tau - 1.0).abs()),
                sample: Some(sample),
                error: None,
            },
            Err(e) => FermatRow { rational, tau, sample: None, distance_from_one: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// Sum against c1·c2 at T = τ^{1/Δ}.
///
/// c1 = ∫_τ^τ̂ Z² uses the exactly linear step (1 − c)τ because τ itself is
/// tiny (τ^{1/Δ} ≤ 10⁸ forces τ ≤ 21.5 at Δ = 1/6), far below where the
/// mean-square ladder is defined. c2 is the order-3 product integral at
/// 2l̃ = 1/(4π(1 − c)) with the configured ladder.
pub fn equilibrium(ladder: &Ladder, tau: f64, delta: f64) -> Result<EquilibriumReport> {
    let big_t = substituted_t(1.0, tau, delta)?;
    let sum = sum_zprime(big_t, delta, ParityFilter::Odd, ladder.eval_config())?;
    let step = ladder.reverse_step_with(LadderKind::Increment, tau)?;
    let c1 = step.integral;
    let c1_direct = hl_integral(tau, step.t_hat, ladder.quadrature(), ladder.eval_config())?;
    let one_minus_c = 1.0 - ladder.config().euler_c;
    let l_tilde = 1.0 / (8.0 * PI * one_minus_c);
    let c2 = product_integral(ladder, big_t, 3, l_tilde)?;
    let rhs = c1 * c2;
    Ok(EquilibriumReport {
        tau,
        delta,
        big_t,
        h: sum.h,
        n_points: sum.n_points,
        lhs: sum.sum,
        tau_hat: step.t_hat,
        c1,
        c1_direct,
        c2,
        rhs,
        altitude: rhs.sqrt(),
        ratio: sum.sum / rhs,
        sqrt_abs_lhs: sum.sum.abs().sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermat_values() {
        assert_eq!(FermatRational::new(1, 1, 1, 3).unwrap().value, 2.0);
        assert!(FermatRational::new(3, 4, 5, 2).is_err());
        let near = FermatRational::new(6, 8, 9, 3).unwrap().value;
        assert!((near - 728.0 / 729.0).abs() < 1e-15);
    }

    #[test]
    fn substitution_range() {
        let t = substituted_t(4.6, 1.0, 1.0 / 6.0).unwrap();
        assert!((t - 4.6f64.powi(6)).abs() < 1e-9 * t);
        assert!(matches!(substituted_t(1.0, 2.0, 1e-6), Err(Error::OutOfRange(_))));
        assert!(matches!(substituted_t(1.0, 2.0, 1.0 / 6.0), Err(Error::Domain { .. })));
    }
}
