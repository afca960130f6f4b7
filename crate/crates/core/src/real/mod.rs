//! Precision-generic real scalars.
//!
//! Every numerical routine in this crate is written against [`Real`]. Three
//! families of backends are provided: native `f64` (16 digits), the
//! double-double [`DoubleDouble`] (30 digits) and the multi-limb binary float
//! [`Wide`] (52 to 187 digits depending on the limb count). [`with_digits`]
//! picks the smallest backend that honours a requested number of digits.

mod dd;
mod dispatch;
mod elementary;
mod wide;

use alloc::string::String;
use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub use dd::DoubleDouble;
pub use dispatch::{backend_name, with_digits, PrecisionTask, MAX_DIGITS, MIN_DIGITS};
pub use wide::Wide;

/// Maximum number of `f64` pieces in a [`Parts`] expansion.
pub const MAX_PARTS: usize = 14;

/// A value split into a non-overlapping sum of doubles times a power of two.
///
/// This is the exchange format between backends: `value = 2^exp2 * Σ limbs[i]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parts {
    pub limbs: [f64; MAX_PARTS],
    pub len: usize,
    pub exp2: i64,
}

impl Parts {
    pub fn single(x: f64) -> Self {
        let mut limbs = [0.0; MAX_PARTS];
        limbs[0] = x;
        Parts { limbs, len: 1, exp2: 0 }
    }
}

/// Real scalar with a fixed number of significant decimal digits.
pub trait Real:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Guaranteed significant decimal digits (the `D` of the rounding contract).
    const DIGITS: u32;
    /// Largest decimal exponent representable before overflow.
    const MAX_EXP10: f64;
    /// Short human-readable backend name.
    const NAME: &'static str;
    /// A strictly more precise backend (or `Self` at the top of the ladder),
    /// used for decimal conversion.
    type Wider: Real;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Exact multiplication by `2^e`.
    fn mul_pow2(self, e: i32) -> Self;
    fn floor(self) -> Self;
    fn is_finite(self) -> bool;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn pi() -> Self;
    fn ln2() -> Self;
    fn parts(self) -> Parts;
    fn from_parts(p: &Parts) -> Self;
    /// Base-2 exponent `e` with `|self| = m * 2^e`, `m ∈ [0.5, 1)`; `None` for zero or non-finite.
    fn frexp_exponent(self) -> Option<i64>;

    fn from_i64(n: i64) -> Self {
        let hi = (n >> 32) as f64 * 4294967296.0;
        let lo = (n & 0xffff_ffff) as f64;
        Self::from_f64(hi) + Self::from_f64(lo)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_i64(n as i64)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn two() -> Self {
        Self::from_f64(2.0)
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }

    /// Unit roundoff, `10^(1−D)` or better.
    fn epsilon() -> Self {
        Self::pow10(1 - Self::DIGITS as i32)
    }

    /// `10^(k − D)`: the scale used for precision-relative tolerances.
    fn tol(k: i32) -> Self {
        Self::pow10(k - Self::DIGITS as i32)
    }

    fn pow10(k: i32) -> Self {
        Self::from_f64(10.0).powi(k)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    #[allow(clippy::eq_op)]
    fn is_nan(self) -> bool {
        self != self
    }

    fn signum(self) -> Self {
        if self < Self::zero() {
            -Self::one()
        } else {
            Self::one()
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn round(self) -> Self {
        (self + Self::half()).floor()
    }

    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    /// `self^y` for positive `self`.
    fn powf(self, y: Self) -> Self {
        (y * self.ln()).exp()
    }

    fn cbrt(self) -> Self {
        if self == Self::zero() {
            return self;
        }
        let a = self.abs();
        let mut y = a.powf(Self::from_ratio(1, 3));
        let three = Self::from_f64(3.0);
        y = y - (y * y * y - a) / (three * y * y);
        if self < Self::zero() {
            -y
        } else {
            y
        }
    }

    fn ln10() -> Self {
        Self::from_f64(10.0).ln()
    }

    /// `log10 |self|` as an `f64`, valid over the full exponent range of the backend.
    fn log10_abs(self) -> f64 {
        match self.frexp_exponent() {
            None => {
                if self == Self::zero() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            Some(e) => {
                let m = self.abs().mul_pow2(clamp_i32(-e)).to_f64();
                libm::log10(m) + e as f64 * core::f64::consts::LOG10_2
            }
        }
    }

    /// Convert to another backend through the exact [`Parts`] exchange format.
    fn convert<S: Real>(self) -> S {
        S::from_parts(&self.parts())
    }

    /// Parse a decimal (`-1.25e-3`) or rational (`7/3`) literal.
    fn parse_literal(text: &str) -> Option<Self> {
        elementary::parse_literal::<Self::Wider>(text).map(|w| w.convert())
    }

    /// Scientific notation with `sig` significant digits.
    fn to_sci_string(self, sig: usize) -> String {
        elementary::to_sci_string(self.convert::<Self::Wider>(), sig)
    }

    /// Shortest decimal string that parses back to the same value. Double-double
    /// values whose low word lies far below the high word's last bit carry more
    /// than `DIGITS + 6` digits; those come back rounded to the full mantissa.
    fn to_shortest_string(self) -> String {
        elementary::to_shortest_string(self)
    }
}

pub(crate) fn clamp_i32(e: i64) -> i32 {
    e.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32
}

impl Real for f64 {
    const DIGITS: u32 = 16;
    const MAX_EXP10: f64 = 308.0;
    const NAME: &'static str = "binary64";
    type Wider = DoubleDouble;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn mul_pow2(self, e: i32) -> Self {
        libm::scalbn(self, e)
    }
    fn floor(self) -> Self {
        libm::floor(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn pi() -> Self {
        core::f64::consts::PI
    }
    fn ln2() -> Self {
        core::f64::consts::LN_2
    }
    fn powf(self, y: Self) -> Self {
        libm::pow(self, y)
    }
    fn cbrt(self) -> Self {
        libm::cbrt(self)
    }
    fn pow10(k: i32) -> Self {
        libm::pow(10.0, k as f64)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn abs(self) -> Self {
        libm::fabs(self)
    }
    fn round(self) -> Self {
        libm::floor(self + 0.5)
    }
    fn parts(self) -> Parts {
        Parts::single(self)
    }
    fn from_parts(p: &Parts) -> Self {
        let mut acc = 0.0;
        for i in (0..p.len).rev() {
            acc += p.limbs[i];
        }
        libm::scalbn(acc, clamp_i32(p.exp2))
    }
    fn frexp_exponent(self) -> Option<i64> {
        if self == 0.0 || !self.is_finite() {
            None
        } else {
            Some(libm::frexp(self).1 as i64)
        }
    }
    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => Some(Self::parse_literal(n)? / Self::parse_literal(d)?),
            None => text.parse().ok(),
        }
    }
    fn to_shortest_string(self) -> String {
        alloc::format!("{:e}", self)
    }
}
