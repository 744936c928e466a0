//! θ(t), Z(t) and two closed forms for Z′(t), each with an explicit error
//! bound, plus a slow ζ(½ + it) oracle used to check them.

mod ln_table;
mod oracle;
mod rs_coeffs;
mod stream;
mod theta;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

pub use ln_table::with_logs;
pub use oracle::{zeta_half_with_estimate, ORACLE_TARGET};
pub use rs_coeffs::psi_closed_form;
pub use stream::{z_progression, RESYNC};
pub use theta::{theta_dd, theta_main_term, theta_mod_two_pi};

/// Lowest floor any configuration may use.
pub const HARD_FLOOR: f64 = 20.0;

/// Riemann–Siegel remainder constants, indexed by the number of correction
/// terms kept. Orders 1–3 are Gabcke's published constants; order 0 is the
/// maximum of |C₀| times (2π)^{1/4} plus the order-1 constant.
const RS_REMAINDER: [f64; 4] = [1.6, 0.127, 0.061, 0.053];

/// Constant in the Formula 1 bound `C t^{-1/4} ln t`. Fitted from the
/// comparison against the finite-difference oracle on [20, 10⁶] with a safety
/// factor of about three.
const F1_REMAINDER: f64 = 0.1;

/// Floor added to every bound for rounding in the main sum.
const ROUNDING: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Correction terms beyond the main sum (0 to 3).
    pub rs_correction_order: u32,
    /// Euler–Maclaurin terms in the ζ oracle.
    pub oracle_terms: usize,
    /// Base step of the central-difference Z′ oracle, scaled by 1/ln t.
    pub fd_step: f64,
    /// Domain floor for every checked evaluation.
    pub min_t: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { rs_correction_order: 2, oracle_terms: 30, fd_step: 1e-3, min_t: 100.0 }
    }
}

impl EvalConfig {
    /// The relaxed floor used by tests.
    pub fn testing() -> Self {
        EvalConfig { min_t: HARD_FLOOR, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_t >= HARD_FLOOR) || !self.min_t.is_finite() {
            return Err(Error::InvalidConfig(format!("min_t must be at least {HARD_FLOOR}, got {}", self.min_t)));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 0.1) {
            return Err(Error::InvalidConfig(format!("fd_step must lie in (0, 0.1], got {}", self.fd_step)));
        }
        if self.rs_correction_order > 3 {
            return Err(Error::InvalidConfig(format!(
                "rs_correction_order must be at most 3, got {}",
                self.rs_correction_order
            )));
        }
        if self.oracle_terms == 0 {
            return Err(Error::InvalidConfig("oracle_terms must be positive".into()));
        }
        Ok(())
    }

    fn check(&self, what: &'static str, t: f64) -> Result<()> {
        if t >= self.min_t && t.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { what, value: t, floor: self.min_t })
        }
    }
}

/// A value together with a bound on the neglected remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZValue {
    pub t: f64,
    pub value: f64,
    pub remainder_bound: f64,
}

pub fn theta(t: f64, cfg: &EvalConfig) -> Result<f64> {
    cfg.check("theta", t)?;
    Ok(theta::theta_unchecked(t))
}

pub fn theta_prime(t: f64, cfg: &EvalConfig) -> Result<f64> {
    cfg.check("theta_prime", t)?;
    Ok(theta::theta_prime_unchecked(t))
}

/// θ without a domain check. The series is accurate to ~1e-12 down to t = 20
/// and degrades slowly below.
pub fn theta_unchecked(t: f64) -> f64 {
    theta::theta_unchecked(t)
}

pub fn theta_prime_unchecked(t: f64) -> f64 {
    theta::theta_prime_unchecked(t)
}

pub fn theta_second_unchecked(t: f64) -> f64 {
    theta::theta_second_unchecked(t)
}

/// Length of the Riemann–Siegel main sum at `t`.
pub fn main_sum_length(t: f64) -> usize {
    (t / TAU).sqrt().floor() as usize
}

/// Upper bound on the Riemann–Siegel remainder with `order` corrections.
pub fn rs_remainder_bound(t: f64, order: u32) -> f64 {
    let order = order.min(3) as usize;
    let exponent = (2 * order + 1) as f64 / 4.0;
    let amp = 1.0 + (t / TAU).sqrt().sqrt();
    RS_REMAINDER[order] * t.powf(-exponent) + ROUNDING * amp
}

/// Bound used for Formula 1.
pub fn f1_remainder_bound(t: f64) -> f64 {
    F1_REMAINDER * t.powf(-0.25) * t.ln() + ROUNDING * (1.0 + t.ln()) * (1.0 + (t / TAU).sqrt().sqrt())
}

/// Z(t) by the Riemann–Siegel formula, no domain check.
pub fn z_unchecked(t: f64, order: u32) -> f64 {
    let a = (t / TAU).sqrt();
    let n = a.floor() as usize;
    let th = theta::theta_dd(t);
    let main = with_logs(n, |logs| {
        let mut acc = NeumaierSum::new();
        for k in 1..=n {
            let phase = (th - logs[k].mul_f64(t)).rem_two_pi();
            acc.add(phase.cos() / (k as f64).sqrt());
        }
        2.0 * acc.value()
    });
    main + rs_correction(t, order)
}

/// The correction terms (−1)^{N−1} a^{−1/2} Σ_{k<order} C_k(p) a^{−k}.
pub fn rs_correction(t: f64, order: u32) -> f64 {
    if order == 0 {
        return 0.0;
    }
    let a = (t / TAU).sqrt();
    let n = a.floor() as usize;
    let p = a - n as f64;
    let coeffs = rs_coeffs::Corrections::get();
    let inv_a = 1.0 / a;
    let mut corr = 0.0;
    let mut scale = 1.0;
    for k in 0..(order as usize).min(3) {
        corr += coeffs.eval(k, p) * scale;
        scale *= inv_a;
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * corr / a.sqrt()
}

pub fn z(t: f64, cfg: &EvalConfig) -> Result<ZValue> {
    cfg.check("z", t)?;
    let order = cfg.rs_correction_order;
    Ok(ZValue { t, value: z_unchecked(t, order), remainder_bound: rs_remainder_bound(t, order) })
}

/// Z(t)² where `t` may lie anywhere on [0, ∞). Below `min_t` the oracle
/// |ζ(½ + it)|² is used.
pub fn z_squared(t: f64, cfg: &EvalConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain { what: "z_squared", value: t, floor: 0.0 });
    }
    if t >= cfg.min_t {
        let v = z_unchecked(t, cfg.rs_correction_order);
        Ok(v * v)
    } else {
        Ok(oracle::zeta_half(t, cfg.oracle_terms.max(30))?.norm_sqr())
    }
}

/// ζ(½ + it) by Euler–Maclaurin summation. Slow: cost grows like |t|.
pub fn zeta_half_oracle(t: f64, cfg: &EvalConfig) -> Result<Complex64> {
    oracle::zeta_half(t, cfg.oracle_terms)
}

/// Re(e^{iθ(t)} ζ(½ + it)).
pub fn z_oracle(t: f64, cfg: &EvalConfig) -> Result<f64> {
    if !(t >= HARD_FLOOR.min(cfg.min_t)) {
        return Err(Error::Domain { what: "z_oracle", value: t, floor: HARD_FLOOR });
    }
    let zeta = oracle::zeta_half(t, cfg.oracle_terms)?;
    let th = theta::theta_mod_two_pi(t);
    Ok((Complex64::from_polar(1.0, th) * zeta).re)
}

/// Formula 1: −2 Σ_{n ≤ √(t/2π)} n^{−1/2} (θ′ − ln n) sin(θ − t ln n).
pub fn z_prime_f1(t: f64, cfg: &EvalConfig) -> Result<ZValue> {
    cfg.check("z_prime_f1", t)?;
    Ok(ZValue { t, value: z_prime_f1_unchecked(t), remainder_bound: f1_remainder_bound(t) })
}

pub fn z_prime_f1_unchecked(t: f64) -> f64 {
    let n = main_sum_length(t);
    let th = theta::theta_dd(t);
    let dth = theta::theta_prime_unchecked(t);
    with_logs(n, |logs| {
        let mut acc = NeumaierSum::new();
        for k in 1..=n {
            let phase = (th - logs[k].mul_f64(t)).rem_two_pi();
            acc.add((dth - logs[k].hi) * phase.sin() / (k as f64).sqrt());
        }
        -2.0 * acc.value()
    })
}

/// Formula 2 inside the window t ∈ [T, T + T^{1/4}]:
/// −2 Σ_{n < P₀} n^{−1/2} ln(P₀/n) sin(θ(t) − t ln n), P₀ = √(T/2π).
pub fn z_prime_f2(t: f64, big_t: f64, cfg: &EvalConfig) -> Result<ZValue> {
    cfg.check("z_prime_f2", big_t)?;
    let hi = big_t + big_t.powf(0.25);
    if !(t >= big_t && t <= hi) {
        return Err(Error::Window { t, lo: big_t, hi });
    }
    let p0 = (big_t / TAU).sqrt();
    let ln_p0 = p0.ln();
    let last = if p0.fract() == 0.0 { p0 as usize - 1 } else { p0.floor() as usize };
    let th = theta::theta_dd(t);
    let value = with_logs(last, |logs| {
        let mut acc = NeumaierSum::new();
        for k in 1..=last {
            let phase = (th - logs[k].mul_f64(t)).rem_two_pi();
            acc.add((ln_p0 - logs[k].hi) * phase.sin() / (k as f64).sqrt());
        }
        -2.0 * acc.value()
    });
    // Replacing θ′(t) by ln P₀ costs at most |θ′ − ln P₀| Σ 2n^{−1/2} ≤ 4√P₀ |θ′ − ln P₀|;
    // terms with P₀ ≤ n ≤ √(t/2π) carry the same small amplitude.
    let shift = (theta::theta_prime_unchecked(t) - ln_p0).abs();
    let extra = (main_sum_length(t).saturating_sub(last)) as f64 * 2.0 * shift / p0.sqrt();
    let remainder_bound = f1_remainder_bound(big_t) + 4.0 * p0.sqrt() * shift + extra;
    Ok(ZValue { t, value, remainder_bound })
}

/// Central difference of the oracle Z with step `fd_step / ln t`.
pub fn z_prime_fd(t: f64, cfg: &EvalConfig) -> Result<f64> {
    cfg.check("z_prime_fd", t)?;
    let h = fd_step_at(t, cfg);
    Ok((z_oracle(t + h, cfg)? - z_oracle(t - h, cfg)?) / (2.0 * h))
}

pub fn fd_step_at(t: f64, cfg: &EvalConfig) -> f64 {
    cfg.fd_step / t.ln()
}

/// Rough bound on the truncation error of [`z_prime_fd`]: Z‴ is at most of
/// order 4√(t/2π)^{1/2}·(½ ln t)³ by the main sum.
pub fn fd_truncation_bound(t: f64, cfg: &EvalConfig) -> f64 {
    let h = fd_step_at(t, cfg);
    let third = 4.0 * (t / TAU).sqrt().sqrt() * (0.5 * (t / TAU).ln()).powi(3);
    h * h / 6.0 * third + 2.0 * ORACLE_TARGET / h
}
