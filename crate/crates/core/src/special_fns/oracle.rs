//! Euler–Maclaurin evaluation of ζ(½ + it).
//!
//! ζ(s) = Σ_{n<N} n^{−s} + N^{1−s}/(s−1) + N^{−s}/2
//!        + Σ_{k=1}^{M} B_{2k}/(2k)! · s(s+1)…(s+2k−2) · N^{−s−2k+1} + R_M
//!
//! with N chosen above |s|/π so the correction terms shrink geometrically.
//! The magnitude of the first omitted term serves as the error estimate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::ln_table::with_logs;
use crate::error::{Error, Result};
use crate::summation::ComplexNeumaierSum;

/// Accuracy the oracle promises; estimates above this are reported as errors.
pub const ORACLE_TARGET: f64 = 1e-11;

const MAX_TERMS: usize = 60;

/// ζ(2k) for k = 1..=MAX_TERMS+1 (index k).
fn zeta_even() -> &'static [f64] {
    static CELL: OnceLock<Vec<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = vec![0.0; MAX_TERMS + 2];
        out[1] = PI * PI / 6.0;
        for (k, slot) in out.iter_mut().enumerate().skip(2) {
            let s = 2.0 * k as f64;
            let cut = 1000usize;
            // Summed small-to-large for accuracy.
            let direct: f64 = (1..cut).rev().map(|n| (n as f64).powf(-s)).sum();
            let c = cut as f64;
            let tail = c.powf(1.0 - s) / (s - 1.0) + 0.5 * c.powf(-s) + s / 12.0 * c.powf(-s - 1.0);
            *slot = direct + tail;
        }
        out
    })
}

/// B_{2k}/(2k)! for k = 1..=MAX_TERMS+1 (index k).
pub fn bernoulli_over_factorial() -> &'static [f64] {
    static CELL: OnceLock<Vec<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        let z = zeta_even();
        (0..z.len())
            .map(|k| {
                if k == 0 {
                    return 1.0;
                }
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * 2.0 * z[k] / (2.0 * PI).powi(2 * k as i32)
            })
            .collect()
    })
}

/// Number of leading terms summed directly for a given |t|.
pub fn cutoff(t: f64) -> usize {
    let modulus = (0.25 + t * t).sqrt();
    (modulus / PI).ceil() as usize + 16
}

/// ζ(½ + it) together with the Euler–Maclaurin truncation estimate.
pub fn zeta_half_with_estimate(t: f64, terms: usize) -> (Complex64, f64) {
    let n_cut = cutoff(t);
    let terms = terms.min(MAX_TERMS);
    let s = Complex64::new(0.5, t);

    // n^{-s} = n^{-1/2} e^{-it ln n}, phase kept in double-double.
    let (head, ln_cut) = with_logs(n_cut, |logs| {
        let mut acc = ComplexNeumaierSum::new();
        for n in (1..n_cut).rev() {
            let phase = logs[n].mul_f64(-t).rem_two_pi();
            let (sin, cos) = phase.sin_cos();
            let amp = 1.0 / (n as f64).sqrt();
            acc.add(Complex64::new(amp * cos, amp * sin));
        }
        (acc.value(), logs[n_cut])
    });

    let nf = n_cut as f64;
    let phase = ln_cut.mul_f64(-t).rem_two_pi();
    let n_pow_minus_s = Complex64::from_polar(1.0 / nf.sqrt(), phase);
    let mut total = head + n_pow_minus_s * nf / (s - 1.0) + n_pow_minus_s * 0.5;

    let bern = bernoulli_over_factorial();
    // factor = s(s+1)…(s+2k−2) · N^{−s−2k+1}, updated as a ratio so neither
    // part overflows on its own at large |s|.
    let mut factor = s * n_pow_minus_s / nf;
    let mut estimate = 0.0;
    for k in 1..=terms + 1 {
        let term = factor * bern[k];
        if k == terms + 1 {
            estimate = term.norm();
            break;
        }
        total += term;
        let j = (2 * k - 1) as f64;
        factor = factor * ((s + j) / nf) * ((s + j + 1.0) / nf);
    }
    (total, estimate)
}

/// ζ(½ + it) checked against [`ORACLE_TARGET`].
pub fn zeta_half(t: f64, terms: usize) -> Result<Complex64> {
    let (value, estimate) = zeta_half_with_estimate(t, terms);
    if !(estimate <= ORACLE_TARGET) {
        return Err(Error::AccuracyNotReached { estimate, target: ORACLE_TARGET });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_ratios_match_exact_rationals() {
        // B_{2k} as exact fractions, divided by (2k)!.
        let exact: [(f64, f64, u32); 6] = [
            (1.0, 6.0, 2),
            (-1.0, 30.0, 4),
            (1.0, 42.0, 6),
            (-691.0, 2730.0, 12),
            (-3617.0, 510.0, 16),
            (8615841276005.0, 14322.0, 30),
        ];
        let b = bernoulli_over_factorial();
        for (num, den, two_k) in exact {
            let fact: f64 = (1..=two_k).map(|i| i as f64).product();
            let expected = num / den / fact;
            let got = b[(two_k / 2) as usize];
            assert!(((got - expected) / expected).abs() < 1e-13, "B{two_k}: {got} vs {expected}");
        }
    }

    #[test]
    fn reproduces_zeta_one_half() {
        let z = zeta_half(0.0, 30).unwrap();
        assert!((z.re + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!(z.im.abs() < 1e-15);
    }

    #[test]
    fn matches_reference_values() {
        let cases = [
            (20.0, 0.429_913_860_437_843_37, -1.064_291_443_080_589_1),
            (100.0, 2.692_619_885_681_324_1, -0.020_386_029_602_598_162),
            (1000.0, 0.356_334_367_194_396_06, 0.931_997_831_232_993_67),
            (1e4, -0.339_373_802_638_834_46, -0.037_091_505_973_206_031),
        ];
        for (t, re, im) in cases {
            let z = zeta_half(t, 30).unwrap();
            assert!((z.re - re).abs() < 1e-10 && (z.im - im).abs() < 1e-10, "t={t}: {z}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for &t in &[3.5, 47.25, 812.0] {
            let a = zeta_half(t, 30).unwrap();
            let b = zeta_half(-t, 30).unwrap();
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn too_few_terms_is_reported() {
        assert!(matches!(zeta_half(1e4, 1), Err(Error::AccuracyNotReached { .. })));
    }
}
