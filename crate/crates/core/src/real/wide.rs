//! Multi-limb binary floating point with `64·L` mantissa bits and a 64-bit exponent.

use super::dd::assign_ops;
use super::{elementary, Parts, Real, MAX_PARTS};
use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

const WORK: usize = 24;

const PI_LIMBS: [u64; 11] = [
    0xc90fdaa22168c234,
    0xc4c6628b80dc1cd1,
    0x29024e088a67cc74,
    0x020bbea63b139b22,
    0x514a08798e3404dd,
    0xef9519b3cd3a431b,
    0x302b0a6df25f1437,
    0x4fe1356d6d51c245,
    0xe485b576625e7ec6,
    0xf44c42e9a637ed6b,
    0x0bff5cb6f406b7ed,
];

const LN2_LIMBS: [u64; 11] = [
    0xb17217f7d1cf79ab,
    0xc9e3b39803f2f6af,
    0x40f343267298b62d,
    0x8a0d175b8baafa2b,
    0xe7b876206debac98,
    0x559552fb4afa1b10,
    0xed2eae35c1382144,
    0x27573b291169b825,
    0x3e96ca16224ae8c5,
    0x1acbda11317c387e,
    0xb9ea9bc3b136603b,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Zero,
    Normal,
    Inf,
    Nan,
}

/// Binary float `±0.m · 2^exp` with an `L`-limb normalized mantissa.
///
/// Supported limb counts are 3 to 10. Results are rounded to nearest using two
/// guard limbs.
#[derive(Clone, Copy, Debug)]
pub struct Wide<const L: usize> {
    class: Class,
    neg: bool,
    exp: i64,
    mant: [u64; L],
}

impl<const L: usize> Wide<L> {
    const ZERO: Self = Wide { class: Class::Zero, neg: false, exp: 0, mant: [0; L] };
    const NAN: Self = Wide { class: Class::Nan, neg: false, exp: 0, mant: [0; L] };

    fn inf(neg: bool) -> Self {
        Wide { class: Class::Inf, neg, exp: 0, mant: [0; L] }
    }

    fn from_limbs(neg: bool, exp: i64, src: &[u64]) -> Self {
        let mut mant = [0u64; L];
        mant.copy_from_slice(&src[..L]);
        let mut w = Wide { class: Class::Normal, neg, exp, mant };
        if src.len() > L && src[L] >= 1 << 63 {
            w.increment();
        }
        w
    }

    fn increment(&mut self) {
        for i in (0..L).rev() {
            let (v, carry) = self.mant[i].overflowing_add(1);
            self.mant[i] = v;
            if !carry {
                return;
            }
        }
        self.mant = [0; L];
        self.mant[0] = 1 << 63;
        self.exp += 1;
    }

    /// Round a normalized work buffer of `L + 2` limbs to `L` limbs.
    fn round_buffer(neg: bool, exp: i64, buf: &[u64]) -> Self {
        let mut mant = [0u64; L];
        mant.copy_from_slice(&buf[..L]);
        let mut w = Wide { class: Class::Normal, neg, exp, mant };
        let guard = buf[L];
        let rest = buf[L + 1];
        let half = 1u64 << 63;
        if guard > half || (guard == half && (rest != 0 || mant[L - 1] & 1 == 1)) {
            w.increment();
        }
        w
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.mant.cmp(&other.mant),
            o => o,
        }
    }

    fn add_normal(a: &Self, b: &Self, b_neg: bool) -> Self {
        let (big, small, big_neg, small_neg) = if a.cmp_magnitude(b) != Ordering::Less {
            (a, b, a.neg, b_neg)
        } else {
            (b, a, b_neg, a.neg)
        };
        let d = (big.exp - small.exp) as u64;
        let width = L + 2;
        if d >= 64 * width as u64 {
            let mut r = *big;
            r.neg = big_neg;
            return r;
        }
        let mut x = [0u64; WORK];
        x[..L].copy_from_slice(&big.mant);
        let mut y = [0u64; WORK];
        let limb_shift = (d / 64) as usize;
        let bit = (d % 64) as u32;
        for i in 0..width {
            if i < limb_shift {
                continue;
            }
            let j = i - limb_shift;
            let hi = if j < L { small.mant[j] >> bit } else { 0 };
            let lo = if bit > 0 && j >= 1 && j - 1 < L { small.mant[j - 1] << (64 - bit) } else { 0 };
            y[i] = hi | lo;
        }
        let mut exp = big.exp;
        if big_neg == small_neg {
            let mut carry = 0u64;
            for i in (0..width).rev() {
                let (s1, c1) = x[i].overflowing_add(y[i]);
                let (s2, c2) = s1.overflowing_add(carry);
                x[i] = s2;
                carry = (c1 as u64) + (c2 as u64);
            }
            if carry > 0 {
                for i in (1..width).rev() {
                    x[i] = (x[i] >> 1) | (x[i - 1] << 63);
                }
                x[0] = (x[0] >> 1) | (1 << 63);
                exp += 1;
            }
            Self::round_buffer(big_neg, exp, &x[..width])
        } else {
            let mut borrow = 0u64;
            for i in (0..width).rev() {
                let (s1, b1) = x[i].overflowing_sub(y[i]);
                let (s2, b2) = s1.overflowing_sub(borrow);
                x[i] = s2;
                borrow = (b1 as u64) + (b2 as u64);
            }
            let mut lz = 0u64;
            let mut first = width;
            for (i, &v) in x[..width].iter().enumerate() {
                if v != 0 {
                    first = i;
                    lz += v.leading_zeros() as u64;
                    break;
                }
                lz += 64;
            }
            if first == width {
                return Self::ZERO;
            }
            if lz > 0 {
                shl_buffer(&mut x[..width], lz);
                exp -= lz as i64;
            }
            Self::round_buffer(big_neg, exp, &x[..width])
        }
    }

    fn mul_normal(a: &Self, b: &Self) -> Self {
        let mut prod = [0u64; 2 * WORK];
        for i in (0..L).rev() {
            let mut carry: u128 = 0;
            for j in (0..L).rev() {
                let cur = prod[i + j + 1] as u128 + (a.mant[i] as u128) * (b.mant[j] as u128) + carry;
                prod[i + j + 1] = cur as u64;
                carry = cur >> 64;
            }
            prod[i] = carry as u64;
        }
        let mut exp = a.exp + b.exp;
        if prod[0] >> 63 == 0 {
            shl_buffer(&mut prod[..2 * L], 1);
            exp -= 1;
        }
        let mut buf = [0u64; WORK];
        buf[..L + 1].copy_from_slice(&prod[..L + 1]);
        buf[L + 1] = prod[L + 1..2 * L].iter().fold(0, |acc, &v| acc | v);
        Self::round_buffer(a.neg != b.neg, exp, &buf[..L + 2])
    }

    fn mantissa_only(&self) -> Self {
        Wide { class: Class::Normal, neg: false, exp: 0, mant: self.mant }
    }

    fn newton_steps() -> usize {
        let mut bits = 50usize;
        let mut n = 0;
        while bits < 64 * L + 8 {
            bits *= 2;
            n += 1;
        }
        n
    }

    fn reciprocal_mantissa(m: Self) -> Self
    where
        Self: Real,
    {
        let one = Self::one();
        let mut x = Self::from_f64(1.0 / m.to_f64());
        for _ in 0..Self::newton_steps() {
            x = x + x * (one - m * x);
        }
        x
    }

    fn constant(limbs: &[u64; 11], exp: i64) -> Self {
        Self::from_limbs(false, exp, &limbs[..])
    }
}

fn shl_buffer(x: &mut [u64], shift: u64) {
    let limbs = (shift / 64) as usize;
    let bit = (shift % 64) as u32;
    let n = x.len();
    for i in 0..n {
        let src = i + limbs;
        let hi = if src < n { x[src] << bit } else { 0 };
        let lo = if bit > 0 && src + 1 < n { x[src + 1] >> (64 - bit) } else { 0 };
        x[i] = hi | lo;
    }
}

impl<const L: usize> PartialEq for Wide<L> {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl<const L: usize> PartialOrd for Wide<L> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use Class::*;
        if self.class == Nan || other.class == Nan {
            return None;
        }
        let key = |w: &Self| -> i8 {
            match (w.class, w.neg) {
                (Zero, _) => 0,
                (Inf, false) => 2,
                (Inf, true) => -2,
                (_, false) => 1,
                (_, true) => -1,
            }
        };
        let (ka, kb) = (key(self), key(other));
        if ka != kb || ka == 0 || ka.abs() == 2 {
            return Some(ka.cmp(&kb));
        }
        let mag = self.cmp_magnitude(other);
        Some(if self.neg { mag.reverse() } else { mag })
    }
}

impl<const L: usize> Neg for Wide<L> {
    type Output = Self;
    fn neg(mut self) -> Self {
        if self.class != Class::Nan && self.class != Class::Zero {
            self.neg = !self.neg;
        }
        self
    }
}

impl<const L: usize> Add for Wide<L> {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        use Class::*;
        match (self.class, b.class) {
            (Nan, _) | (_, Nan) => Self::NAN,
            (Inf, Inf) => {
                if self.neg == b.neg {
                    self
                } else {
                    Self::NAN
                }
            }
            (Inf, _) => self,
            (_, Inf) => b,
            (Zero, _) => b,
            (_, Zero) => self,
            (Normal, Normal) => Self::add_normal(&self, &b, b.neg),
        }
    }
}

impl<const L: usize> Sub for Wide<L> {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl<const L: usize> Mul for Wide<L> {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        use Class::*;
        let neg = self.neg != b.neg;
        match (self.class, b.class) {
            (Nan, _) | (_, Nan) => Self::NAN,
            (Inf, Zero) | (Zero, Inf) => Self::NAN,
            (Inf, _) | (_, Inf) => Self::inf(neg),
            (Zero, _) | (_, Zero) => Self::ZERO,
            (Normal, Normal) => Self::mul_normal(&self, &b),
        }
    }
}

impl<const L: usize> Div for Wide<L>
where
    Wide<L>: Real,
{
    type Output = Self;
    fn div(self, b: Self) -> Self {
        use Class::*;
        let neg = self.neg != b.neg;
        match (self.class, b.class) {
            (Nan, _) | (_, Nan) => Self::NAN,
            (Inf, Inf) | (Zero, Zero) => Self::NAN,
            (Inf, _) => Self::inf(neg),
            (_, Inf) => Self::ZERO,
            (Zero, _) => Self::ZERO,
            (_, Zero) => Self::inf(neg),
            (Normal, Normal) => {
                let m = b.mantissa_only();
                let x = Self::reciprocal_mantissa(m);
                let mut a = self;
                a.neg = false;
                a.exp -= b.exp;
                let q = a * x;
                let r = a - q * m;
                let mut q = q + r * x;
                q.neg = neg;
                q
            }
        }
    }
}

assign_ops!(Wide<3>);
assign_ops!(Wide<4>);
assign_ops!(Wide<5>);
assign_ops!(Wide<6>);
assign_ops!(Wide<8>);
assign_ops!(Wide<10>);

macro_rules! wide_real {
    ($($l:literal => $w:literal),*) => {$(
        impl Real for Wide<$l> {
            const DIGITS: u32 = ((64 * $l - 16) * 30103) / 100000;
            const MAX_EXP10: f64 = 1.0e8;
            const NAME: &'static str = concat!("wide-", stringify!($l));
            type Wider = Wide<$w>;

            fn zero() -> Self {
                Self::ZERO
            }
            fn one() -> Self {
                let mut mant = [0u64; $l];
                mant[0] = 1 << 63;
                Wide { class: Class::Normal, neg: false, exp: 1, mant }
            }
            fn from_f64(x: f64) -> Self {
                wide_from_f64(x)
            }
            fn to_f64(self) -> f64 {
                wide_to_f64(&self)
            }
            fn mul_pow2(mut self, e: i32) -> Self {
                if self.class == Class::Normal {
                    self.exp += e as i64;
                }
                self
            }
            fn floor(self) -> Self {
                wide_floor(self)
            }
            fn is_finite(self) -> bool {
                matches!(self.class, Class::Zero | Class::Normal)
            }
            fn sqrt(self) -> Self {
                match self.class {
                    Class::Zero => self,
                    Class::Nan => self,
                    _ if self.neg => Self::NAN,
                    Class::Inf => self,
                    Class::Normal => {
                        let mut m = self.mantissa_only();
                        let mut e = self.exp;
                        if e % 2 != 0 {
                            m.exp -= 1;
                            e += 1;
                        }
                        let one = Self::one();
                        let half = Self::half();
                        let mut y = Self::from_f64(1.0 / libm::sqrt(m.to_f64()));
                        for _ in 0..Self::newton_steps() {
                            y = y + y * (one - m * y * y) * half;
                        }
                        let s = m * y;
                        let s = s + (m - s * s) * y * half;
                        s.mul_pow2((e / 2) as i32)
                    }
                }
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
                Self::constant(&PI_LIMBS, 2)
            }
            fn ln2() -> Self {
                Self::constant(&LN2_LIMBS, 0)
            }
            fn parts(self) -> Parts {
                wide_parts(&self)
            }
            fn from_parts(p: &Parts) -> Self {
                let mut acc = Self::ZERO;
                for i in (0..p.len).rev() {
                    acc += Self::from_f64(p.limbs[i]);
                }
                if acc.class == Class::Normal {
                    acc.exp += p.exp2;
                }
                acc
            }
            fn frexp_exponent(self) -> Option<i64> {
                if self.class == Class::Normal {
                    Some(self.exp)
                } else {
                    None
                }
            }
        }
    )*};
}

wide_real!(3 => 4, 4 => 5, 5 => 6, 6 => 8, 8 => 10, 10 => 10);

fn wide_from_f64<const L: usize>(x: f64) -> Wide<L> {
    if x.is_nan() {
        return Wide::<L>::NAN;
    }
    if x.is_infinite() {
        return Wide::<L>::inf(x < 0.0);
    }
    if x == 0.0 {
        return Wide::<L>::ZERO;
    }
    let (m, e) = libm::frexp(x.abs());
    let bits = libm::scalbn(m, 53) as u64;
    let mut mant = [0u64; L];
    mant[0] = bits << 11;
    Wide { class: Class::Normal, neg: x < 0.0, exp: e as i64, mant }
}

fn wide_to_f64<const L: usize>(w: &Wide<L>) -> f64 {
    match w.class {
        Class::Zero => 0.0,
        Class::Nan => f64::NAN,
        Class::Inf => {
            if w.neg {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
        Class::Normal => {
            let v = if w.exp > 1100 {
                f64::INFINITY
            } else if w.exp < -1200 {
                0.0
            } else {
                let top = w.mant[0];
                let sticky = w.mant[1..].iter().any(|&v| v != 0) as u64;
                let t = if top & 0x7ff == 0x400 { top | sticky } else { top };
                libm::scalbn(t as f64, (w.exp - 64) as i32)
            };
            if w.neg {
                -v
            } else {
                v
            }
        }
    }
}

fn wide_floor<const L: usize>(w: Wide<L>) -> Wide<L>
where
    Wide<L>: Real,
{
    if w.class != Class::Normal {
        return w;
    }
    if w.exp <= 0 {
        return if w.neg { -Wide::<L>::one() } else { Wide::<L>::ZERO };
    }
    if w.exp >= 64 * L as i64 {
        return w;
    }
    let keep = w.exp as usize;
    let mut r = w;
    let mut frac = false;
    for i in 0..L {
        let start = 64 * i;
        if start >= keep {
            frac |= r.mant[i] != 0;
            r.mant[i] = 0;
        } else if keep < start + 64 {
            let kb = keep - start;
            let mask = if kb == 0 { 0 } else { !0u64 << (64 - kb) };
            frac |= r.mant[i] & !mask != 0;
            r.mant[i] &= mask;
        }
    }
    if w.neg && frac {
        r - Wide::<L>::one()
    } else {
        r
    }
}

fn wide_parts<const L: usize>(w: &Wide<L>) -> Parts {
    if w.class != Class::Normal {
        return Parts::single(wide_to_f64(w));
    }
    let mut limbs = [0.0; MAX_PARTS];
    let total = 64 * L;
    let mut len = 0;
    let mut pos = 0;
    while pos < total && len < MAX_PARTS {
        let take = (total - pos).min(53);
        let mut chunk: u64 = 0;
        for b in pos..pos + take {
            let bit = (w.mant[b / 64] >> (63 - (b % 64))) & 1;
            chunk = (chunk << 1) | bit;
        }
        let v = libm::scalbn(chunk as f64, -((pos + take) as i32));
        limbs[len] = if w.neg { -v } else { v };
        len += 1;
        pos += take;
    }
    Parts { limbs, len, exp2: w.exp }
}
