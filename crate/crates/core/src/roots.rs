//! Scalar root finding used by the solvers: bracketed Newton with bisection
//! fallback, plain bisection on a sign change, and the principal branch of
//! Lambert W for seeding.

use crate::error::{Error, Result};

/// Newton iteration confined to a sign-changing bracket `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. A Newton step that leaves the bracket,
/// or a zero derivative, is replaced by bisection. Stops once `|f| <= ftol`
/// or the bracket shrinks to `xtol`.
pub fn newton_bracketed<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Constraint(format!(
            "bracket [{lo}, {hi}] does not change sign ({flo:e}, {fhi:e})"
        )));
    }
    let increasing = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        last = fx;
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= xtol {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence { what: "bracketed Newton", iterations: 200, residual: last })
}

/// Bisection on the sign of `f` until the bracket is no wider than `width`.
/// Returns the final `(lo, hi)` with `f(lo)` and `f(hi)` of opposite signs.
pub fn bisect_sign<F>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let slo = f(lo).signum();
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = f(mid).signum();
        if s == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Principal branch W₀(x) for x ≥ 0 by Halley iteration.
pub fn lambert_w0(x: f64) -> f64 {
    assert!(x >= 0.0, "lambert_w0 needs x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < 3.0 { (1.0 + x).ln() * 0.75 } else { x.ln() - x.ln().ln().max(0.0) };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(1.0) {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt2() {
        let r = newton_bracketed(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-15, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // derivative vanishes at 0; bracket forces bisection there
        let r = newton_bracketed(|x| (x * x * x - 0.001, 3.0 * x * x), -1.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!((r - 0.1).abs() < 1e-9);
    }

    #[test]
    fn newton_rejects_non_bracket() {
        assert!(newton_bracketed(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 1e-12).is_err());
    }

    #[test]
    fn bisection_width() {
        let (lo, hi) = bisect_sign(|x| x - 0.3, 0.0, 1.0, 1e-6);
        assert!(hi - lo <= 1e-6 && lo <= 0.3 && hi >= 0.3);
    }

    #[test]
    fn lambert_w_identity() {
        for &x in &[1e-6, 0.1, 1.0, std::f64::consts::E, 10.0, 1e3, 1e7] {
            let w = lambert_w0(x);
            assert!((w * w.exp() - x).abs() <= 1e-13 * x.max(1.0), "x={x}");
        }
        assert!((lambert_w0(std::f64::consts::E) - 1.0).abs() < 1e-15);
    }
}
