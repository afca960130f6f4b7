//! Double-double arithmetic: an unevaluated sum `hi + lo` of two binary64 values.

use super::{elementary, Parts, Real, MAX_PARTS};
use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// About 106 significant bits, honouring a 30-digit rounding contract.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134217729.0;
    if a.abs() > 6.69692879491417e+299 {
        let a = a * 3.7252902984619140625e-09;
        let t = SPLITTER * a;
        let hi = t - (t - a);
        let lo = a - hi;
        (hi * 268435456.0, lo * 268435456.0)
    } else {
        let t = SPLITTER * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DoubleDouble { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p1, mut p2) = two_prod(self.hi, b);
        p2 += self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        DoubleDouble { hi, lo }
    }

    fn normalized(self) -> Self {
        if !self.hi.is_finite() {
            return DoubleDouble { hi: self.hi, lo: 0.0 };
        }
        self
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        if !s1.is_finite() {
            return DoubleDouble { hi: s1, lo: 0.0 };
        }
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, mut p2) = two_prod(self.hi, b.hi);
        if !p1.is_finite() {
            return DoubleDouble { hi: p1, lo: 0.0 };
        }
        p2 += self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || b.hi == 0.0 {
            return DoubleDouble { hi: q1, lo: 0.0 };
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        (DoubleDouble { hi: q1, lo: q2 } + DoubleDouble { hi: q3, lo: 0.0 }).normalized()
    }
}

macro_rules! assign_ops {
    ($t:ty) => {
        impl core::ops::AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, b: Self) {
                *self = *self + b;
            }
        }
        impl core::ops::SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, b: Self) {
                *self = *self - b;
            }
        }
        impl core::ops::MulAssign for $t {
            #[inline]
            fn mul_assign(&mut self, b: Self) {
                *self = *self * b;
            }
        }
        impl core::ops::DivAssign for $t {
            #[inline]
            fn div_assign(&mut self, b: Self) {
                *self = *self / b;
            }
        }
    };
}
pub(crate) use assign_ops;

assign_ops!(DoubleDouble);

impl Real for DoubleDouble {
    const DIGITS: u32 = 30;
    const MAX_EXP10: f64 = 308.0;
    const NAME: &'static str = "double-double";
    type Wider = super::Wide<3>;

    fn zero() -> Self {
        DoubleDouble { hi: 0.0, lo: 0.0 }
    }
    fn one() -> Self {
        DoubleDouble { hi: 1.0, lo: 0.0 }
    }
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
    fn to_f64(self) -> f64 {
        self.hi
    }
    fn from_i64(n: i64) -> Self {
        let hi = (n >> 32) as f64 * 4294967296.0;
        let lo = (n & 0xffff_ffff) as f64;
        Self::from_sum(hi, lo)
    }
    fn mul_pow2(self, e: i32) -> Self {
        DoubleDouble { hi: libm::scalbn(self.hi, e), lo: libm::scalbn(self.lo, e) }
    }
    fn floor(self) -> Self {
        let hi = libm::floor(self.hi);
        if hi == self.hi {
            let lo = libm::floor(self.lo);
            let (hi, lo) = quick_two_sum(hi, lo);
            DoubleDouble { hi, lo }
        } else {
            DoubleDouble { hi, lo: 0.0 }
        }
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble { hi: libm::sqrt(self.hi), lo: 0.0 };
        }
        if !self.hi.is_finite() {
            return self;
        }
        let x = 1.0 / libm::sqrt(self.hi);
        let ax = self.hi * x;
        let ax_dd = DoubleDouble::from_f64(ax);
        let diff = (self - ax_dd * ax_dd).hi * (x * 0.5);
        DoubleDouble::from_sum(ax, diff)
    }
    fn exp(self) -> Self {
        elementary::exp(self)
    }
    fn ln(self) -> Self {
        elementary::ln(self)
    }
    fn sin(self) -> Self {
        elementary::sin(self)
    }
    fn cos(self) -> Self {
        elementary::cos(self)
    }
    fn pi() -> Self {
        DoubleDouble { hi: core::f64::consts::PI, lo: 1.2246467991473532e-16 }
    }
    fn ln2() -> Self {
        DoubleDouble { hi: core::f64::consts::LN_2, lo: 2.3190468138462996e-17 }
    }
    fn parts(self) -> Parts {
        let mut limbs = [0.0; MAX_PARTS];
        limbs[0] = self.hi;
        limbs[1] = self.lo;
        Parts { limbs, len: 2, exp2: 0 }
    }
    fn from_parts(p: &Parts) -> Self {
        let mut acc = DoubleDouble::zero();
        for i in (0..p.len).rev() {
            acc += DoubleDouble::from_f64(p.limbs[i]);
        }
        acc.mul_pow2(super::clamp_i32(p.exp2))
    }
    fn frexp_exponent(self) -> Option<i64> {
        if self.hi == 0.0 || !self.hi.is_finite() {
            return None;
        }
        let (m, e) = libm::frexp(self.hi);
        // hi may be an exact power of two with a negative tail.
        if m.abs() == 0.5 && self.lo != 0.0 && (self.lo < 0.0) == (self.hi > 0.0) {
            Some(e as i64 - 1)
        } else {
            Some(e as i64)
        }
    }
}
