//! Elementary functions and decimal conversion shared by the software backends.

use super::Real;
use alloc::string::String;
use alloc::vec::Vec;

fn mantissa_bits<R: Real>() -> f64 {
    R::DIGITS as f64 * core::f64::consts::LOG2_10 + 4.0
}

fn overflow<R: Real>() -> R {
    R::from_f64(f64::INFINITY)
}

/// `exp(x)` by reduction modulo `ln 2`, halving, and a Taylor series for `expm1`.
pub(crate) fn exp<R: Real>(x: R) -> R {
    if x.is_nan() {
        return x;
    }
    let xf = x.to_f64();
    let limit = R::MAX_EXP10 * core::f64::consts::LN_10;
    if xf > limit {
        return overflow();
    }
    if xf < -limit - 50.0 {
        return R::zero();
    }
    let k = libm::round(xf / core::f64::consts::LN_2);
    let r = x - R::from_f64(k) * R::ln2();
    let squarings = libm::ceil(libm::sqrt(mantissa_bits::<R>()) * 0.9) as i32;
    let r = r.mul_pow2(-squarings);
    let eps = R::epsilon().mul_pow2(-8);
    let mut term = r;
    let mut sum = r;
    let mut j = 2i64;
    loop {
        term = term * r / R::from_i64(j);
        sum += term;
        if term.abs() <= eps * sum.abs() || j > 400 {
            break;
        }
        j += 1;
    }
    for _ in 0..squarings {
        sum = sum.mul_pow2(1) + sum * sum;
    }
    (R::one() + sum).mul_pow2(k as i32)
}

/// Natural logarithm: split off the binary exponent, then the `atanh` series.
pub(crate) fn ln<R: Real>(x: R) -> R {
    if x.is_nan() || x < R::zero() {
        return R::from_f64(f64::NAN);
    }
    if x == R::zero() {
        return R::from_f64(f64::NEG_INFINITY);
    }
    if !x.is_finite() {
        return x;
    }
    let mut e = x.frexp_exponent().unwrap_or(0);
    let mut m = x.mul_pow2(super::clamp_i32(-e));
    if m.to_f64() < core::f64::consts::FRAC_1_SQRT_2 {
        m = m.mul_pow2(1);
        e -= 1;
    }
    let z = (m - R::one()) / (m + R::one());
    let z2 = z * z;
    let eps = R::epsilon().mul_pow2(-8);
    let mut power = z;
    let mut sum = z;
    let mut j = 3i64;
    loop {
        power *= z2;
        let term = power / R::from_i64(j);
        sum += term;
        if term.abs() <= eps * sum.abs() || j > 4000 {
            break;
        }
        j += 2;
    }
    sum.mul_pow2(1) + R::from_i64(e) * R::ln2()
}

fn sin_cos_reduced<R: Real>(r: R) -> (R, R) {
    let eps = R::epsilon().mul_pow2(-8);
    let r2 = r * r;
    let mut term = r;
    let mut s = r;
    let mut j = 1i64;
    loop {
        term = -term * r2 / R::from_i64((2 * j) * (2 * j + 1));
        s += term;
        if term.abs() <= eps * s.abs().max(eps) || j > 400 {
            break;
        }
        j += 1;
    }
    let mut term = R::one();
    let mut c = R::one();
    let mut j = 1i64;
    loop {
        term = -term * r2 / R::from_i64((2 * j - 1) * (2 * j));
        c += term;
        if term.abs() <= eps * c.abs().max(eps) || j > 400 {
            break;
        }
        j += 1;
    }
    (s, c)
}

fn sin_cos<R: Real>(x: R) -> (R, R) {
    let half_pi = R::pi().mul_pow2(-1);
    let k = libm::round(x.to_f64() / core::f64::consts::FRAC_PI_2);
    let r = x - R::from_f64(k) * half_pi;
    let (s, c) = sin_cos_reduced(r);
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub(crate) fn sin<R: Real>(x: R) -> R {
    sin_cos(x).0
}

pub(crate) fn cos<R: Real>(x: R) -> R {
    sin_cos(x).1
}

/// Parse a decimal or `p/q` literal at the precision of `R`.
pub(crate) fn parse_literal<R: Real>(text: &str) -> Option<R> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: R = parse_literal(num)?;
        let d: R = parse_literal(den)?;
        return Some(n / d);
    }
    parse_decimal(text)
}

fn parse_decimal<R: Real>(text: &str) -> Option<R> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut negative = false;
    if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
        negative = bytes[pos] == b'-';
        pos += 1;
    }
    let rest = &text[pos..];
    if rest.eq_ignore_ascii_case("inf") || rest.eq_ignore_ascii_case("infinity") {
        let v = R::from_f64(f64::INFINITY);
        return Some(if negative { -v } else { v });
    }
    if rest.eq_ignore_ascii_case("nan") {
        return Some(R::from_f64(f64::NAN));
    }
    let mut digits: Vec<u8> = Vec::new();
    let mut frac_digits: i64 = 0;
    let mut seen_dot = false;
    let mut any_digit = false;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_digit() {
            any_digit = true;
            if !(digits.is_empty() && c == b'0') {
                digits.push(c - b'0');
            }
            if seen_dot {
                frac_digits += 1;
            }
        } else if c == b'.' && !seen_dot {
            seen_dot = true;
        } else {
            break;
        }
        pos += 1;
    }
    if !any_digit {
        return None;
    }
    let mut exp10: i64 = 0;
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let e: i64 = text[pos + 1..].parse().ok()?;
        exp10 = e;
        pos = bytes.len();
    }
    if pos != bytes.len() {
        return None;
    }
    exp10 -= frac_digits;
    let mut value = R::zero();
    for chunk in digits.chunks(15) {
        let mut c: i64 = 0;
        for &d in chunk {
            c = c * 10 + d as i64;
        }
        value = value * R::pow10(chunk.len() as i32) + R::from_i64(c);
    }
    if exp10 > 0 {
        value *= R::pow10(exp10.min(i32::MAX as i64) as i32);
    } else if exp10 < 0 {
        let e = (-exp10).min(i32::MAX as i64) as i32;
        let scale = R::pow10(e);
        if scale.is_finite() {
            value /= scale;
        } else {
            value = value * R::pow10(-e / 2) * R::pow10(-(e - e / 2));
        }
    }
    Some(if negative { -value } else { value })
}

/// Scientific notation `d.ddd…e±x` with `sig` significant digits, trailing zeros trimmed.
pub(crate) fn to_sci_string<R: Real>(x: R, sig: usize) -> String {
    use core::fmt::Write;
    let sig = sig.max(1);
    let mut out = String::new();
    if x.is_nan() {
        out.push_str("NaN");
        return out;
    }
    if x < R::zero() {
        out.push('-');
    }
    if !x.is_finite() {
        out.push_str("inf");
        return out;
    }
    if x == R::zero() {
        out.push_str("0e0");
        return out;
    }
    let a = x.abs();
    let mut e10 = libm::floor(a.log10_abs()) as i64;
    let scale_down = |v: R, e: i64| -> R {
        if e >= 0 {
            v / R::pow10(e as i32)
        } else {
            v * R::pow10((-e) as i32)
        }
    };
    let mut y = scale_down(a, e10);
    let ten = R::from_f64(10.0);
    if y >= ten {
        y /= ten;
        e10 += 1;
    } else if y < R::one() {
        y *= ten;
        e10 -= 1;
    }
    let mut ds: Vec<u8> = Vec::with_capacity(sig + 1);
    for _ in 0..=sig {
        let d = y.floor().to_f64().clamp(0.0, 9.0);
        ds.push(d as u8);
        y = (y - R::from_f64(d)) * ten;
    }
    let round_up = ds.pop().map(|d| d >= 5).unwrap_or(false);
    if round_up {
        let mut i = ds.len();
        loop {
            if i == 0 {
                ds.insert(0, 1);
                ds.pop();
                e10 += 1;
                break;
            }
            i -= 1;
            if ds[i] == 9 {
                ds[i] = 0;
            } else {
                ds[i] += 1;
                break;
            }
        }
    }
    while ds.len() > 1 && *ds.last().unwrap() == 0 {
        ds.pop();
    }
    out.push((b'0' + ds[0]) as char);
    if ds.len() > 1 {
        out.push('.');
        for &d in &ds[1..] {
            out.push((b'0' + d) as char);
        }
    }
    let _ = write!(out, "e{}", e10);
    out
}

pub(crate) fn to_shortest_string<R: Real>(x: R) -> String {
    if !x.is_finite() || x == R::zero() {
        return to_sci_string(x, 1);
    }
    let max = R::DIGITS as usize + 6;
    for sig in 1..=max {
        let s = x.to_sci_string(sig);
        if R::parse_literal(&s) == Some(x) {
            return s;
        }
    }
    x.to_sci_string(max)
}

#[cfg(test)]
mod tests {
    use super::super::{DoubleDouble, Wide};
    use super::*;

    fn check_identities<R: Real>() {
        let tol = R::tol(2);
        let one = R::one();
        let e = R::one().exp();
        assert!((e.ln() - one).abs() < tol);
        let x = R::from_ratio(7, 3);
        assert!(((x.ln()).exp() - x).abs() < tol * x);
        let (s, c) = (x.sin(), x.cos());
        assert!((s * s + c * c - one).abs() < tol);
        let y = R::from_f64(-40.25);
        assert!(((y.exp()).ln() - y).abs() < tol * y.abs());
        assert!((R::from_f64(2.0).sqrt().powi(2) - R::two()).abs() < tol);
        assert!((R::pi().mul_pow2(-2).sin() - R::half().sqrt()).abs() < tol);
        assert!((R::from_ratio(1, 1000000).ln() + R::from_f64(6.0) * R::ln10()).abs() < tol * R::from_f64(14.0));
    }

    #[test]
    fn exp_ln_sin_cos_are_consistent() {
        check_identities::<DoubleDouble>();
        check_identities::<Wide<3>>();
        check_identities::<Wide<8>>();
    }

    #[test]
    fn euler_number_matches_reference_digits() {
        let e = DoubleDouble::one().exp();
        let reference = DoubleDouble::parse_literal("2.71828182845904523536028747135266249775724709369995").unwrap();
        assert!(((e - reference) / reference).abs() < DoubleDouble::tol(1));
        let w = Wide::<6>::one().exp();
        let reference = Wide::<6>::parse_literal(
            "2.718281828459045235360287471352662497757247093699959574966967627724076630353547594571382178525166427427466391932003059921817413596629",
        )
        .unwrap();
        assert!(((w - reference) / reference).abs() < Wide::<6>::tol(1));
    }

    #[test]
    fn sci_strings() {
        assert_eq!(to_sci_string(1.0f64, 3), "1e0");
        assert_eq!(to_sci_string(-0.00012345f64, 3), "-1.23e-4");
        assert_eq!(to_sci_string(9.9996f64, 4), "1e1");
        let x = DoubleDouble::parse_literal("0.000108088745179140").unwrap();
        assert_eq!(x.to_sci_string(15), "1.0808874517914e-4");
    }

    #[test]
    fn rational_literals() {
        let x: DoubleDouble = parse_literal("1/3").unwrap();
        assert!((x * DoubleDouble::from_f64(3.0) - DoubleDouble::one()).abs() < DoubleDouble::tol(1));
        assert!(parse_literal::<f64>("1.2.3").is_none());
        assert!(parse_literal::<f64>("abc").is_none());
    }
}
