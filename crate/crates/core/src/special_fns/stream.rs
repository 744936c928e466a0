//! Z on an arithmetic progression of abscissae.
//!
//! Each oscillator n^{−1/2} e^{−it ln n} is advanced from one node to the next
//! by a fixed rotation e^{−i·step·ln n}, so a node costs one complex multiply
//! per term instead of a double-double phase and a cosine. The oscillators
//! are recomputed from exact phases every [`RESYNC`] nodes.
//!
//! Node j sits at the real number start + j·step, held in double-double, so
//! the rotation never drifts from the nominal positions.

use super::{main_sum_length, rs_correction, theta, with_logs};
use crate::dd::DoubleDouble;

/// Nodes between exact recomputations of the oscillators.
pub const RESYNC: usize = 256;

/// Z(start + j·step) for j < count, with start + j·step taken exactly.
pub fn z_progression(start: f64, step: f64, count: usize, order: u32) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let last = start + (count - 1) as f64 * step;
    let n_max = main_sum_length(last.max(start));
    with_logs(n_max, |logs| {
        let logs = &logs[1..=n_max];
        let amp: Vec<f64> = (1..=n_max).map(|n| 1.0 / (n as f64).sqrt()).collect();
        let (mut rot_re, mut rot_im) = (Vec::with_capacity(n_max), Vec::with_capacity(n_max));
        for log in logs {
            let (s, c) = log.mul_f64(-step).rem_two_pi().sin_cos();
            rot_re.push(c);
            rot_im.push(s);
        }
        let mut re = vec![0.0; n_max];
        let mut im = vec![0.0; n_max];
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            let exact = DoubleDouble::from_f64(start) + DoubleDouble::product(j as f64, step);
            let t = exact.hi;
            if j % RESYNC == 0 {
                for n in 0..n_max {
                    let phase = logs[n].mul_f64(-exact.hi) - logs[n].mul_f64(exact.lo);
                    let (s, c) = phase.rem_two_pi().sin_cos();
                    re[n] = amp[n] * c;
                    im[n] = amp[n] * s;
                }
            }
            let used = main_sum_length(t).min(n_max);
            let (sr, si) = (lane_sum(&re[..used]), lane_sum(&im[..used]));
            let th = theta::theta_dd(t).add_f64(theta::theta_prime_unchecked(t) * exact.lo);
            let (sin_th, cos_th) = th.rem_two_pi().sin_cos();
            out.push(2.0 * (cos_th * sr - sin_th * si) + rs_correction(t, order));
            if (j + 1) % RESYNC != 0 {
                rotate(&mut re, &mut im, &rot_re, &rot_im);
            }
        }
        out
    })
}

/// Sum with four independent accumulators in a fixed pattern.
#[inline]
fn lane_sum(x: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = x.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            acc[k] += c[k];
        }
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for v in rest {
        total += v;
    }
    total
}

#[inline]
fn rotate(re: &mut [f64], im: &mut [f64], rot_re: &[f64], rot_im: &[f64]) {
    for (((a, b), c), s) in re.iter_mut().zip(im.iter_mut()).zip(rot_re).zip(rot_im) {
        let (x, y) = (*a, *b);
        *a = x * c - y * s;
        *b = x * s + y * c;
    }
}

#[cfg(test)]
mod tests {
    use super::super::z_unchecked;
    use super::*;

    #[test]
    fn matches_pointwise_evaluation() {
        for &(start, step) in &[(1.0e4, 0.125), (123_456.0, 0.0625), (1.0e6 - 37.0, 0.25)] {
            let values = z_progression(start, step, 300, 2);
            for (j, v) in values.iter().enumerate() {
                let t = start + j as f64 * step;
                assert!((v - z_unchecked(t, 2)).abs() < 1e-11, "t={t}");
            }
        }
        // A step that is not a power of two: compare at positions that are exact in f64.
        let step = 0.3;
        let values = z_progression(5.0e5, step, 1000, 2);
        for (j, v) in values.iter().enumerate() {
            let exact = DoubleDouble::from_f64(5.0e5) + DoubleDouble::product(j as f64, step);
            let slope = super::super::z_prime_f1_unchecked(exact.hi);
            let expected = z_unchecked(exact.hi, 2) + slope * exact.lo;
            assert!((v - expected).abs() < 1e-11, "j={j} {}", v - expected);
        }
    }

    #[test]
    fn handles_main_sum_growth_inside_the_run() {
        // 2π·40² ≈ 10053.1 lies inside the run.
        let values = z_progression(10_040.0, 0.125, 400, 2);
        for (j, v) in values.iter().enumerate() {
            let t = 10_040.0 + j as f64 * 0.125;
            assert!((v - z_unchecked(t, 2)).abs() < 1e-11, "t={t}");
        }
    }
}
