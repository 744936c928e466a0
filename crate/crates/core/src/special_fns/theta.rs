//! Riemann–Siegel θ from its asymptotic expansion, evaluated in double-double
//! so that θ(t) mod 2π keeps full precision at t ~ 10^7.

use crate::dd::{DoubleDouble, LN_2PI, PI_OVER_8};

/// Coefficients of the odd-power tail 1/(48t) + 7/(5760t³) + …
const TAIL: [f64; 5] = [
    1.0 / 48.0,
    7.0 / 5760.0,
    31.0 / 80640.0,
    127.0 / 430080.0,
    511.0 / 1216512.0,
];

/// `(t/2)·ln(t/2π) − t/2 − π/8`, no small-t corrections.
pub fn theta_main_term(t: f64) -> f64 {
    0.5 * t * (t / std::f64::consts::TAU).ln() - 0.5 * t - std::f64::consts::FRAC_PI_8
}

fn tail(t: f64) -> f64 {
    let inv = 1.0 / t;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in TAIL.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// θ(t) in double-double. No domain check; the expansion is accurate to about
/// 1e-12 at t = 20 and far better above.
pub fn theta_dd(t: f64) -> DoubleDouble {
    let log = DoubleDouble::from_f64(t).ln() - LN_2PI;
    let half_t = 0.5 * t;
    (log.mul_f64(half_t) - DoubleDouble::from_f64(half_t) - PI_OVER_8).add_f64(tail(t))
}

/// θ(t) rounded to `f64`, no domain check.
pub fn theta_unchecked(t: f64) -> f64 {
    theta_dd(t).to_f64()
}

/// θ′(t) = ½ ln(t/2π) − 1/(48t²) − 7/(1920t⁴) − 31/(16128t⁶) − …, no domain check.
pub fn theta_prime_unchecked(t: f64) -> f64 {
    let inv2 = 1.0 / (t * t);
    let mut acc = 0.0;
    for (k, c) in TAIL.iter().enumerate().rev() {
        // d/dt c t^{-(2k+1)} = -(2k+1) c t^{-(2k+2)}
        acc = acc * inv2 + (2 * k + 1) as f64 * c;
    }
    0.5 * (t / std::f64::consts::TAU).ln() - acc * inv2
}

/// θ″(t) ≈ 1/(2t) + 1/(24t³).
pub fn theta_second_unchecked(t: f64) -> f64 {
    0.5 / t + 1.0 / (24.0 * t * t * t)
}

/// θ(t) reduced into [−π, π].
pub fn theta_mod_two_pi(t: f64) -> f64 {
    theta_dd(t).rem_two_pi()
}
