//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] stores `f(t), f'(t), …, f^(r)(t)`. Products follow the Leibniz
//! rule; the elementary functions use the usual power-series recurrences on
//! normalized coefficients `f^(k)/k!`.

use crate::{Error, Real, Result};
use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<R> {
    coeffs: Vec<R>,
}

fn factorials<R: Real>(order: usize) -> Vec<R> {
    let mut f = Vec::with_capacity(order + 1);
    let mut acc = R::one();
    f.push(acc);
    for k in 1..=order {
        acc *= R::from_usize(k);
        f.push(acc);
    }
    f
}

impl<R: Real> Jet<R> {
    /// Jet from derivative values `f, f', …`; panics if `coeffs` is empty.
    pub fn new(coeffs: Vec<R>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the function value");
        Jet { coeffs }
    }

    pub fn constant(c: R, order: usize) -> Self {
        let mut coeffs = vec![R::zero(); order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    /// The identity function `t ↦ t` expanded at `t`.
    pub fn variable(t: R, order: usize) -> Self {
        let mut coeffs = vec![R::zero(); order + 1];
        coeffs[0] = t;
        if order >= 1 {
            coeffs[1] = R::one();
        }
        Jet { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(R::zero(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> R {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<R> {
        self.coeffs
    }

    /// Derivative of order `k`.
    pub fn derivative(&self, k: usize) -> R {
        self.coeffs[k]
    }

    /// Same function, expansion truncated to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        Jet { coeffs: self.coeffs[..=order.min(self.order())].to_vec() }
    }

    fn taylor(&self) -> Vec<R> {
        let f = factorials::<R>(self.order());
        self.coeffs.iter().zip(&f).map(|(&c, &fk)| c / fk).collect()
    }

    fn from_taylor(a: Vec<R>) -> Self {
        let f = factorials::<R>(a.len() - 1);
        Jet { coeffs: a.into_iter().zip(f).map(|(c, fk)| c * fk).collect() }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(Error::OrderMismatch(self.order(), other.order()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Jet { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Jet { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a - b).collect() })
    }

    pub fn neg(&self) -> Self {
        Jet { coeffs: self.coeffs.iter().map(|&a| -a).collect() }
    }

    pub fn scale(&self, c: R) -> Self {
        Jet { coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }

    pub fn add_scalar(&self, c: R) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Leibniz product: `(fg)^(k) = Σ C(k,i) f^(i) g^(k−i)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.order();
        let mut out = vec![R::zero(); n + 1];
        let mut binom = vec![R::one(); n + 1];
        for k in 0..=n {
            if k > 0 {
                for i in (1..k).rev() {
                    binom[i] = binom[i] + binom[i - 1];
                }
                binom[k] = R::one();
            }
            let mut acc = R::zero();
            for i in 0..=k {
                acc += binom[i] * self.coeffs[i] * other.coeffs[k - i];
            }
            out[k] = acc;
        }
        Ok(Jet { coeffs: out })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let a = self.taylor();
        let b = other.taylor();
        let mut c = vec![R::zero(); a.len()];
        for k in 0..a.len() {
            let mut acc = a[k];
            for j in 1..=k {
                acc -= b[j] * c[k - j];
            }
            c[k] = acc / b[0];
        }
        Ok(Self::from_taylor(c))
    }

    pub fn recip(&self) -> Self {
        Self::constant(R::one(), self.order()).div(self).expect("orders match by construction")
    }

    pub fn powi(&self, n: i32) -> Self {
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(R::one(), self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("orders match by construction");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("orders match by construction");
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn exp(&self) -> Self {
        let a = self.taylor();
        let mut b = vec![R::zero(); a.len()];
        b[0] = a[0].exp();
        for k in 1..a.len() {
            let mut acc = R::zero();
            for j in 1..=k {
                acc += R::from_usize(j) * a[j] * b[k - j];
            }
            b[k] = acc / R::from_usize(k);
        }
        Self::from_taylor(b)
    }

    pub fn ln(&self) -> Self {
        let a = self.taylor();
        let mut b = vec![R::zero(); a.len()];
        b[0] = a[0].ln();
        for k in 1..a.len() {
            let mut acc = R::zero();
            for j in 1..k {
                acc += R::from_usize(j) * b[j] * a[k - j];
            }
            b[k] = (a[k] - acc / R::from_usize(k)) / a[0];
        }
        Self::from_taylor(b)
    }

    pub fn sqrt(&self) -> Self {
        let a = self.taylor();
        let mut b = vec![R::zero(); a.len()];
        b[0] = a[0].sqrt();
        for k in 1..a.len() {
            let mut acc = a[k];
            for j in 1..k {
                acc -= b[j] * b[k - j];
            }
            b[k] = acc / (R::two() * b[0]);
        }
        Self::from_taylor(b)
    }

    /// Real power `f^γ` for `f(t) > 0`.
    pub fn powf(&self, gamma: R) -> Self {
        let a = self.taylor();
        let mut b = vec![R::zero(); a.len()];
        b[0] = a[0].powf(gamma);
        for k in 1..a.len() {
            let mut acc = R::zero();
            for j in 1..=k {
                let w = gamma * R::from_usize(j) - R::from_usize(k - j);
                acc += w * a[j] * b[k - j];
            }
            b[k] = acc / (R::from_usize(k) * a[0]);
        }
        Self::from_taylor(b)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Leibniz product of two jets of equal order.
pub fn jet_mul<R: Real>(a: &Jet<R>, b: &Jet<R>) -> Result<Jet<R>> {
    a.mul(b)
}
