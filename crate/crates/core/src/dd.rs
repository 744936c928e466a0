//! Double-double arithmetic.
//!
//! Phases such as `t ln n` reach 10^8 radians for the largest abscissae the
//! crate handles. A plain `f64` product loses roughly eight digits of the
//! reduced angle at that size, so every phase is formed as an unevaluated sum
//! `hi + lo` (about 32 significant digits) and reduced modulo 2π before any
//! trigonometric call.
//!
//! Products use Dekker splitting rather than `f64::mul_add`, which falls back
//! to a slow software routine on targets without hardware FMA.

use std::ops::{Add, Mul, Neg, Sub};

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

pub const PI: DoubleDouble = DoubleDouble::from_parts(3.141592653589793, 1.2246467991473532e-16);
pub const TWO_PI: DoubleDouble =
    DoubleDouble::from_parts(6.283185307179586, 2.4492935982947064e-16);
pub const HALF_PI: DoubleDouble =
    DoubleDouble::from_parts(1.5707963267948966, 6.123233995736766e-17);
pub const PI_OVER_8: DoubleDouble =
    DoubleDouble::from_parts(0.39269908169872414, 1.5308084989341915e-17);
pub const LN_2: DoubleDouble =
    DoubleDouble::from_parts(0.6931471805599453, 2.3190468138462996e-17);
pub const LN_2PI: DoubleDouble =
    DoubleDouble::from_parts(1.8378770664093456, -7.756588316134483e-17);

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        Self::renorm(s, e + self.lo)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn product(a: f64, b: f64) -> Self {
        let (p, e) = two_prod(a, b);
        DoubleDouble { hi: p, lo: e }
    }

    pub fn div(self, b: DoubleDouble) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 }.add_f64(q3)
    }

    #[inline]
    pub fn scale_pow2(self, factor: f64) -> Self {
        DoubleDouble { hi: self.hi * factor, lo: self.lo * factor }
    }

    /// Reduces the value into `[-π, π]` and returns it rounded to `f64`.
    #[inline]
    pub fn rem_two_pi(self) -> f64 {
        let k = (self.hi / TWO_PI.hi).round();
        if k == 0.0 {
            return self.to_f64();
        }
        (self - TWO_PI.mul_f64(k)).to_f64()
    }

    /// `e^x` to roughly 30 significant digits for `|x| < 700`.
    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return DoubleDouble::ONE;
        }
        let k = (self.hi / LN_2.hi).round();
        let r = self - LN_2.mul_f64(k);
        // e^r = (e^{r/512})^512, with the inner expm1 from its Taylor series.
        let r = r.scale_pow2(1.0 / 512.0);
        let mut term = r;
        let mut sum = r;
        let mut n = 1.0;
        loop {
            n += 1.0;
            term = (term * r).div(DoubleDouble::from_f64(n));
            sum = sum + term;
            if term.hi.abs() < 1e-34 || n > 20.0 {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2s + s^2 keeps the small quantity exact-ish.
        for _ in 0..9 {
            sum = sum.scale_pow2(2.0) + sum * sum;
        }
        let result = sum.add_f64(1.0);
        result.scale_pow2(2f64.powi(k as i32))
    }

    /// Natural logarithm by one Newton step on [`DoubleDouble::exp`].
    pub fn ln(self) -> Self {
        debug_assert!(self.hi > 0.0);
        let y = DoubleDouble::from_f64(self.hi.ln());
        // y + x e^{-y} - 1
        let correction = (self * (-y).exp()).add_f64(-1.0);
        y + correction
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        DoubleDouble::renorm(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn neg(self) -> DoubleDouble {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn mul(self, b: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        DoubleDouble::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}
