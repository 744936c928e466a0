//! Riemann–Siegel correction functions C₀, C₁, C₂.
//!
//! All three are built from Ψ(p) = cos(2π(p² − p − 1/16)) / cos(2πp). In the
//! variable z = 2p − 1 this is Ψ = −cos(πz²/2 − 5π/8) / cos(πz), an entire
//! even function. Its Taylor coefficients are obtained once by a discrete
//! Cauchy integral on |z| = 2, and the derivatives the corrections need are
//! taken term by term:
//!
//! * C₀ = Ψ
//! * C₁ = −Ψ⁽³⁾ / (96π²)
//! * C₂ = Ψ⁽⁶⁾ / (18432π⁴) + Ψ⁽²⁾ / (64π²)
//!
//! with derivatives in p (d/dp = 2 d/dz).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

const DEGREE: usize = 48;
const POINTS: usize = 256;
const RADIUS: f64 = 2.0;

pub struct Corrections {
    polys: [Vec<f64>; 3],
}

fn psi_complex(z: Complex64) -> Complex64 {
    let arg = z * z * (PI / 2.0) - Complex64::new(5.0 * PI / 8.0, 0.0);
    -arg.cos() / (z * PI).cos()
}

fn taylor_coefficients() -> Vec<f64> {
    (0..=DEGREE)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..POINTS {
                let phi = 2.0 * PI * (m as f64 + 0.5) / POINTS as f64;
                let z = Complex64::from_polar(RADIUS, phi);
                acc += psi_complex(z) * Complex64::from_polar(1.0, -(j as f64) * phi);
            }
            acc.re / POINTS as f64 / RADIUS.powi(j as i32)
        })
        .collect()
}

/// Coefficients (in z) of the m-th p-derivative of the series `c`.
fn p_derivative(c: &[f64], m: usize) -> Vec<f64> {
    let scale = 2f64.powi(m as i32);
    (m..c.len())
        .map(|j| {
            let falling: f64 = (0..m).map(|i| (j - i) as f64).product();
            c[j] * falling * scale
        })
        .chain(std::iter::repeat(0.0).take(m))
        .collect()
}

fn combine(terms: &[(f64, &Vec<f64>)]) -> Vec<f64> {
    let len = terms.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    (0..len)
        .map(|j| terms.iter().map(|(w, v)| w * v.get(j).copied().unwrap_or(0.0)).sum())
        .collect()
}

impl Corrections {
    fn build() -> Self {
        let psi = taylor_coefficients();
        let d2 = p_derivative(&psi, 2);
        let d3 = p_derivative(&psi, 3);
        let d6 = p_derivative(&psi, 6);
        let pi2 = PI * PI;
        let c1 = combine(&[(-1.0 / (96.0 * pi2), &d3)]);
        let c2 = combine(&[(1.0 / (18432.0 * pi2 * pi2), &d6), (1.0 / (64.0 * pi2), &d2)]);
        Corrections { polys: [psi, c1, c2] }
    }

    pub fn get() -> &'static Corrections {
        static CELL: OnceLock<Corrections> = OnceLock::new();
        CELL.get_or_init(Corrections::build)
    }

    /// C_k(p) for k = 0, 1, 2.
    pub fn eval(&self, k: usize, p: f64) -> f64 {
        let z = 2.0 * p - 1.0;
        self.polys[k].iter().rev().fold(0.0, |acc, c| acc * z + c)
    }
}

/// Ψ(p) straight from its closed form (removable singularities at p = 1/4, 3/4
/// excluded by the caller).
pub fn psi_closed_form(p: f64) -> f64 {
    (2.0 * PI * (p * p - p - 1.0 / 16.0)).cos() / (2.0 * PI * p).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_series_matches_closed_form() {
        let c = Corrections::get();
        for i in 0..=40 {
            let p = i as f64 / 40.0;
            if (p - 0.25).abs() < 1e-3 || (p - 0.75).abs() < 1e-3 {
                continue;
            }
            assert!((c.eval(0, p) - psi_closed_form(p)).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn leading_taylor_coefficients_match_tabulated_values() {
        // Classical tabulation of C₀ in powers of (2p − 1).
        let c = Corrections::get();
        assert!((c.polys[0][0] - 0.382_683_432_365_089_77).abs() < 1e-15);
        assert!((c.polys[0][2] - 0.437_240_468_077_520_45).abs() < 1e-15);
        assert!((c.polys[0][4] - 0.132_376_575_480_343_52).abs() < 1e-15);
        assert!(c.polys[0][1].abs() < 1e-15);
    }

    #[test]
    fn c1_is_odd_in_z() {
        let c = Corrections::get();
        for &p in &[0.1, 0.3, 0.45] {
            assert!((c.eval(1, p) + c.eval(1, 1.0 - p)).abs() < 1e-14);
        }
    }

    #[test]
    fn c1_matches_finite_difference_of_psi() {
        // third derivative by a 5-point stencil on the closed form
        let h = 1e-3;
        let p = 0.1;
        let f = psi_closed_form;
        let d3 = (f(p + 2.0 * h) - 2.0 * f(p + h) + 2.0 * f(p - h) - f(p - 2.0 * h)) / (2.0 * h * h * h);
        let expected = -d3 / (96.0 * PI * PI);
        assert!((Corrections::get().eval(1, p) - expected).abs() < 1e-6);
    }
}
