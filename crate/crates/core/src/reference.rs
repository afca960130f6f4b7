//! Independent oracles and shared fixtures: Airy functions by Maclaurin
//! series at elevated precision, `₀F₁`, the integral `H^k_n(x, y)` by
//! adaptive Gauss–Legendre quadrature, and the example systems.

use crate::expr::{params, Expr};
use crate::linalg::Matrix;
use crate::operator::{companion_system, gauge_transform, FirstOrderSystem, ScalarOperator};
use crate::real::{with_digits, Parts, PrecisionTask, MAX_DIGITS};
use crate::steppers::{legendre, legendre_roots};
use crate::{Error, Real, Result};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// `Γ(1/3)` from `Γ(1/3)³ = 2^{4/3} π² / (3^{1/4} AGM(1, (√6+√2)/4))`.
pub fn gamma_one_third<R: Real>() -> R {
    let two = R::two();
    let three = R::from_f64(3.0);
    let mut a = R::one();
    let mut b = (R::from_f64(6.0).sqrt() + two.sqrt()) / R::from_f64(4.0);
    for _ in 0..64 {
        let next_a = (a + b) * R::half();
        let next_b = (a * b).sqrt();
        let done = (next_a - next_b).abs() <= R::epsilon() * next_a;
        a = next_a;
        b = next_b;
        if done {
            break;
        }
    }
    let agm = (a + b) * R::half();
    let pi = R::pi();
    let cube = two.powf(R::from_ratio(4, 3)) * pi * pi / (three.sqrt().sqrt() * agm);
    cube.cbrt()
}

/// `Ai(0) = 1/(3^{2/3} Γ(2/3))`.
pub fn airy_ai_zero<R: Real>() -> R {
    let three = R::from_f64(3.0);
    let gamma_two_thirds = R::two() * R::pi() / (three.sqrt() * gamma_one_third::<R>());
    R::one() / (three.powf(R::from_ratio(2, 3)) * gamma_two_thirds)
}

/// `Ai'(0) = −1/(3^{1/3} Γ(1/3))`.
pub fn airy_ai_prime_zero<R: Real>() -> R {
    -R::one() / (R::from_f64(3.0).cbrt() * gamma_one_third::<R>())
}

/// `Ai`, `Ai'`, `Bi`, `Bi'` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryValues<R> {
    pub ai: R,
    pub ai_prime: R,
    pub bi: R,
    pub bi_prime: R,
}

/// Largest `|t|` accepted by the Airy oracle.
pub const AIRY_T_MAX: f64 = 40.0;

/// Working digits used by the Airy series at `t` for a target of `digits`.
pub fn airy_working_digits(digits: u32, t: f64) -> u32 {
    let growth = libm::pow(t.abs(), 1.5) / core::f64::consts::LN_10;
    let extra = if t <= 0.0 { libm::ceil(0.8 * growth) } else { libm::ceil(4.0 / 3.0 * growth) };
    (digits + extra as u32 + 5).min(MAX_DIGITS)
}

fn airy_series<W: Real>(z: W) -> AiryValues<W> {
    let z3 = z * z * z;
    let eps = W::epsilon().mul_pow2(-16);
    let sum = |mut term: W, ratio: &dyn Fn(usize) -> W| -> W {
        let mut s = term;
        let mut peak = term.abs();
        let mut k = 0usize;
        loop {
            term = term * z3 / ratio(k);
            s += term;
            peak = peak.max(term.abs());
            k += 1;
            let shrinking = z3.abs() < ratio(k);
            if (shrinking && term.abs() <= eps * s.abs().max(eps * peak)) || term == W::zero() || k > 20000 {
                return s;
            }
        }
    };
    let n = |k: usize| W::from_usize(k);
    let f = sum(W::one(), &|k| n(3 * k + 2) * n(3 * k + 3));
    let g = sum(z, &|k| n(3 * k + 3) * n(3 * k + 4));
    let fp = if z == W::zero() { W::zero() } else { sum(z * z * W::half(), &|k| n(3 * k + 3) * n(3 * k + 5)) };
    let gp = sum(W::one(), &|k| n(3 * k + 1) * n(3 * k + 3));
    let c1 = airy_ai_zero::<W>();
    let c2 = -airy_ai_prime_zero::<W>();
    let s3 = W::from_f64(3.0).sqrt();
    AiryValues { ai: c1 * f - c2 * g, ai_prime: c1 * fp - c2 * gp, bi: s3 * (c1 * f + c2 * g), bi_prime: s3 * (c1 * fp + c2 * gp) }
}

struct AiryTask {
    t: Parts,
}

impl PrecisionTask for AiryTask {
    type Output = [Parts; 4];
    fn run<W: Real>(self) -> [Parts; 4] {
        let v = airy_series(W::from_parts(&self.t));
        [v.ai.parts(), v.ai_prime.parts(), v.bi.parts(), v.bi_prime.parts()]
    }
}

/// Airy functions at `t`, evaluated with enough working precision to absorb
/// the series cancellation (capped at the widest backend).
pub fn airy<R: Real>(t: R) -> Result<AiryValues<R>> {
    let tf = t.to_f64();
    if !(tf.abs() <= AIRY_T_MAX) {
        return Err(Error::OutOfRange { what: "Airy argument", value: tf });
    }
    let digits = airy_working_digits(R::DIGITS.max(16), tf);
    let [ai, aip, bi, bip] = with_digits(digits, AiryTask { t: t.parts() })?;
    Ok(AiryValues { ai: R::from_parts(&ai), ai_prime: R::from_parts(&aip), bi: R::from_parts(&bi), bi_prime: R::from_parts(&bip) })
}

pub fn airy_ai<R: Real>(t: R) -> Result<R> {
    airy(t).map(|v| v.ai)
}

pub fn airy_ai_prime<R: Real>(t: R) -> Result<R> {
    airy(t).map(|v| v.ai_prime)
}

/// `₀F₁(; n; z) = Σ z^j / ((n)_j j!)`.
pub fn hyp0f1<R: Real>(n: R, z: R) -> Result<R> {
    check_pochhammer(n)?;
    Ok(hyp0f1_unchecked(n, z))
}

fn check_pochhammer<R: Real>(n: R) -> Result<()> {
    if n <= R::zero() && n.floor() == n {
        Err(Error::Pole(n.to_f64()))
    } else {
        Ok(())
    }
}

fn hyp0f1_unchecked<R: Real>(n: R, z: R) -> R {
    let eps = R::epsilon().mul_pow2(-16);
    let mut term = R::one();
    let mut sum = R::one();
    let mut j = 0usize;
    loop {
        let jf = R::from_usize(j);
        term = term * z / ((n + jf) * (jf + R::one()));
        sum += term;
        j += 1;
        let past_peak = R::from_usize(j * j) > z.abs();
        if (past_peak && term.abs() <= eps * sum.abs()) || term == R::zero() || j > 100_000 {
            return sum;
        }
    }
}

/// `d^j/dz^j ₀F₁(; n; z)` for `j = 0..=order`, from `₀F₁(; n+j; z)/(n)_j`.
pub fn hyp0f1_derivatives<R: Real>(n: R, z: R, order: usize) -> Result<Vec<R>> {
    check_pochhammer(n)?;
    let mut out = Vec::with_capacity(order + 1);
    let mut poch = R::one();
    for j in 0..=order {
        let nj = n + R::from_usize(j);
        out.push(hyp0f1_unchecked(nj, z) / poch);
        poch *= nj;
    }
    Ok(out)
}

/// Gauss–Legendre rule on `[−1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

impl<R: Real> GaussLegendre<R> {
    pub fn new(m: usize) -> Self {
        let nodes: Vec<R> = legendre_roots(m);
        let weights = nodes
            .iter()
            .map(|&x| {
                let (_, dp) = legendre(m, x);
                R::two() / ((R::one() - x * x) * dp * dp)
            })
            .collect();
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, f: &mut impl FnMut(R) -> R, a: R, b: R) -> R {
        let half = (b - a) * R::half();
        let mid = (a + b) * R::half();
        let s = self.nodes.iter().zip(&self.weights).fold(R::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x));
        s * half
    }
}

/// Adaptive bisection with a 20-point Gauss–Legendre rule, to relative tolerance `rel_tol`.
pub fn integrate_adaptive<R: Real>(mut f: impl FnMut(R) -> R, a: R, b: R, rel_tol: R) -> Result<R> {
    let rule = GaussLegendre::<R>::new(20);
    let pieces = 8;
    let width = (b - a) / R::from_usize(pieces);
    let mut stack: Vec<(R, R, R, u32)> = Vec::new();
    let mut estimate = R::zero();
    for i in 0..pieces {
        let lo = a + R::from_usize(i) * width;
        let hi = if i + 1 == pieces { b } else { lo + width };
        let v = rule.integrate(&mut f, lo, hi);
        estimate += v;
        stack.push((lo, hi, v, 0));
    }
    let scale = estimate.abs();
    let total_width = (b - a).abs();
    let mut total = R::zero();
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = (lo + hi) * R::half();
        let left = rule.integrate(&mut f, lo, mid);
        let right = rule.integrate(&mut f, mid, hi);
        let diff = (whole - left - right).abs();
        let allowed = rel_tol * scale * ((hi - lo).abs() / total_width).max(R::from_f64(1e-3));
        if !diff.is_finite() {
            return Err(Error::QuadratureFailure);
        }
        if diff <= allowed || diff <= R::epsilon() * (left.abs() + right.abs()) {
            total += left + right;
        } else if depth >= 48 {
            return Err(Error::QuadratureFailure);
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}

/// `H^k_n(x, y) = ∫_0^x t^k e^{−t} ₀F₁(; n; y t) dt` and its first `order`
/// derivatives in `y`, by differentiating under the integral sign.
pub fn hkn_derivatives<R: Real>(k: u32, n: R, x: R, y: R, order: usize) -> Result<Vec<R>> {
    check_pochhammer(n)?;
    if !(x > R::zero()) {
        return Err(Error::InvalidArgument("H^k_n needs x > 0".into()));
    }
    let tol = R::tol(4).max(R::from_f64(1e-40));
    let mut out = Vec::with_capacity(order + 1);
    let mut poch = R::one();
    for j in 0..=order {
        let nj = n + R::from_usize(j);
        let p = k as i32 + j as i32;
        let integrand = |t: R| t.powi(p) * (-t).exp() * hyp0f1_unchecked(nj, y * t);
        out.push(integrate_adaptive(integrand, R::zero(), x, tol)? / poch);
        poch *= nj;
    }
    Ok(out)
}

pub fn hkn_value<R: Real>(k: u32, n: R, x: R, y: R) -> Result<R> {
    Ok(hkn_derivatives(k, n, x, y, 0)?[0])
}

/// Text of the rank-4 operator annihilating `H^k_n(x, ·)`, with parameters `k`, `n`, `x`.
pub const HKN_OPERATOR: &str = "t^2*d^4 + (-t+2*n+2)*t*d^3 + (-t*x+(-k-n-3)*t+n*(n+1))*d^2 + ((t-n)*x-n*(k+2))*d + (k+1)*x";

fn hkn_params<R: Real>(k: u32, n: R, x: R) -> alloc::collections::BTreeMap<String, R> {
    params(&[("k", R::from_i64(k as i64)), ("n", n), ("x", x)])
}

pub fn hkn_operator<R: Real>(k: u32, n: R, x: R) -> ScalarOperator<R> {
    ScalarOperator::parse(HKN_OPERATOR, None, &hkn_params(k, n, x)).expect("fixed operator text parses")
}

/// Gauge exponent `β = 1 − n + k` of the dominant solution `t^β e^t`.
pub fn hkn_beta<R: Real>(k: u32, n: R) -> R {
    R::one() - n + R::from_i64(k as i64)
}

/// Companion system of [`hkn_operator`] gauged by `exp(t)·t^{1−n+k}`.
pub fn hkn_gauged_system<R: Real>(k: u32, n: R, x: R) -> FirstOrderSystem<R> {
    gauge_transform(&companion_system(&hkn_operator(k, n, x)), R::one(), hkn_beta(k, n))
}

/// The same gauged system written out entry by entry.
pub fn hkn_gauged_entries<R: Real>(k: u32, n: R, x: R) -> FirstOrderSystem<R> {
    let p = hkn_params(k, n, x);
    let e = |s: &str| Expr::parse(s, &p).expect("fixed entry text parses");
    let diag = "(-t-k+n-1)/t";
    let z = || Expr::zero();
    let one = || Expr::Const(R::one());
    let entries = vec![
        e(diag), one(), z(), z(),
        z(), e(diag), one(), z(),
        z(), z(), e(diag), one(),
        e("(-k-1)*x/t^2"), e("((-t+n)*x+n*k+2*n)/t^2"), e("(t*x+(k+n+3)*t-n^2-n)/t^2"), e("(-k-n-3)/t"),
    ];
    FirstOrderSystem::from_entries(4, entries, None).expect("4x4 entries").with_singular_points(vec![R::zero()])
}

/// Initial vector of the gauged system at `y`: `e^{−y} y^{−β} (H, H', H'', H''')`.
pub fn hkn_gauged_initial<R: Real>(k: u32, n: R, x: R, y: R) -> Result<Vec<R>> {
    let d = hkn_derivatives(k, n, x, y, 3)?;
    let g_inv = (-y).exp() * y.powf(-hkn_beta(k, n));
    Ok(d.into_iter().map(|v| v * g_inv).collect())
}

/// `log10` of `H^k_n(x, y) / (y^{1−n+k} e^y)`.
pub fn dominance_ratio_log10<R: Real>(k: u32, n: R, x: R, y: R) -> Result<R> {
    let h = hkn_value(k, n, x, y)?;
    let ln10 = R::ln10();
    Ok(h.ln() / ln10 - hkn_beta(k, n) * y.ln() / ln10 - y / ln10)
}

/// `H^k_n(x, y) / (y^{1−n+k} e^y)`; may underflow in narrow backends, see [`dominance_ratio_log10`].
pub fn dominance_ratio<R: Real>(k: u32, n: R, x: R, y: R) -> Result<R> {
    Ok((dominance_ratio_log10(k, n, x, y)? * R::ln10()).exp())
}

/// The "easy" constant system whose solution basis is `(e^{−t},0,0)`, `(0,e^{−t},0)`-like and `(1,1,1)`.
pub fn easy_system<R: Real>() -> FirstOrderSystem<R> {
    let (z, o) = (R::zero(), R::one());
    FirstOrderSystem::constant(Matrix::from_rows(&[vec![-o, o, z], vec![z, -o, o], vec![z, z, z]])).expect("square")
}

pub fn airy_operator<R: Real>() -> ScalarOperator<R> {
    ScalarOperator::parse("d^2 - t", None, &Default::default()).expect("fixed text")
}

/// `(∂ − 1)(∂² − t)`, whose solutions include `e^t` besides the Airy functions.
pub fn exp_airy_operator<R: Real>() -> ScalarOperator<R> {
    ScalarOperator::parse("d^3 - d^2 - t*d + t - 1", None, &Default::default()).expect("fixed text")
}

pub fn airy_system<R: Real>() -> FirstOrderSystem<R> {
    companion_system(&airy_operator())
}

/// Leading behaviour of a formal solution at `t = ∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticTerm<R> {
    pub name: &'static str,
    pub leading: Expr<R>,
}

/// Leading terms of the four formal solutions `h1…h4` of [`hkn_operator`] at infinity.
pub fn hkn_asymptotic_terms<R: Real>(k: u32, n: R, x: R) -> Vec<AsymptoticTerm<R>> {
    let p = hkn_params(k, n, x);
    let e = |s: &str| Expr::parse(s, &p).expect("fixed text");
    vec![
        AsymptoticTerm { name: "h1", leading: e("exp(-(1/2+n)/2*log(x*t) - 2*sqrt(x*t))") },
        AsymptoticTerm { name: "h2", leading: e("exp(-(k+1)*log(t))") },
        AsymptoticTerm { name: "h3", leading: e("exp(-(1/2+n)/2*log(x*t) + 2*sqrt(x*t))") },
        AsymptoticTerm { name: "h4", leading: e("exp((1-n+k)*log(t) + t)") },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use crate::operator::apply_operator;
    use crate::{DoubleDouble, Wide};

    type D = DoubleDouble;

    fn lit<R: Real>(s: &str) -> R {
        R::parse_literal(s).unwrap()
    }

    fn rel(a: D, b: D) -> f64 {
        ((a - b) / b).abs().to_f64()
    }

    #[test]
    fn airy_at_zero_matches_reference_digits() {
        type W = Wide<4>;
        let v = airy::<W>(W::zero()).unwrap();
        let ai0 = lit::<W>("0.355028053887817239260063186004183176397979174199177240583327");
        let aip0 = lit::<W>("-0.258819403792806798405183560189203963479091138354934582210002");
        let tol = lit::<W>("1e-58");
        assert!(((v.ai - ai0) / ai0).abs() < tol);
        assert!(((v.ai_prime - aip0) / aip0).abs() < tol);
    }

    #[test]
    fn airy_matches_printed_constants() {
        let v = airy::<D>(D::from_f64(5.0)).unwrap();
        assert!(rel(v.ai, lit("0.000108344")) < 5e-6);
        assert!(rel(v.ai_prime, lit("-0.000247414")) < 5e-6);
        let v = airy::<D>(D::from_f64(-20.0)).unwrap();
        assert!(rel(v.ai, lit("-0.176406127077984690")) < 1e-17);
        assert!(rel(v.ai_prime, lit("0.892862856736471238")) < 1e-17);
        let v = airy::<D>(D::from_f64(-4.0)).unwrap();
        assert!(rel(v.ai, lit("-0.0702655329492895")) < 1e-14);
        assert!(airy::<D>(D::from_f64(41.0)).is_err());
    }

    #[test]
    fn wronskian_is_one_over_pi() {
        for &t in &[-20.0, -7.5, -1.0, 0.0, 2.5, 10.0] {
            let v = airy::<D>(D::from_f64(t)).unwrap();
            let w = v.ai * v.bi_prime - v.ai_prime * v.bi;
            assert!((w - D::one() / D::pi()).abs() < D::tol(8), "t = {t}");
        }
    }

    #[test]
    fn hyp0f1_values() {
        assert_eq!(hyp0f1(1.0, 0.0).unwrap(), 1.0);
        assert!((hyp0f1(1.0, 1.0).unwrap() - 2.279585302336067).abs() < 1e-15);
        assert_eq!(hyp0f1(-2.0, 1.0).unwrap_err(), Error::Pole(-2.0));
    }

    #[test]
    fn hyp0f1_satisfies_its_ode() {
        // θ(θ+n−1)w = z w  ⇔  z w'' + n w' − w = 0
        let (n, z) = (D::from_ratio(3, 2), D::from_f64(2.75));
        let d = hyp0f1_derivatives(n, z, 2).unwrap();
        let residual = z * d[2] + n * d[1] - d[0];
        assert!(residual.abs() < D::tol(6));
        let jet = Jet::new(d);
        assert_eq!(jet.order(), 2);
    }

    #[test]
    fn hkn_reference_values() {
        let one = D::one();
        let d = hkn_derivatives::<D>(10, one, one, one, 3).unwrap();
        let expect = ["0.07810139136088563", "0.05096276584900834", "0.02050273784371611", "0.005887855153702640"];
        for (v, e) in d.iter().zip(expect) {
            assert!(rel(*v, lit(e)) < 1e-15, "{} vs {e}", v.to_f64());
        }
        let h40 = hkn_value::<D>(10, one, one, D::from_f64(40.0)).unwrap();
        assert!(rel(h40, lit("815.010577358709653352735859432")) < 1e-28);
        let h20 = hkn_value::<D>(10, one, one, D::from_f64(20.0)).unwrap();
        assert!(rel(h20, lit("27.0217011600338590793496397308")) < 1e-28);
    }

    #[test]
    fn hkn_integrand_derivative_in_x() {
        let (k, n, y) = (10u32, 1.0, 3.0);
        let x = 0.8;
        let h = 1e-4;
        let fd = (hkn_value(k, n, x + h, y).unwrap() - hkn_value(k, n, x - h, y).unwrap()) / (2.0 * h);
        let exact = x.powi(k as i32) * (-x).exp() * hyp0f1(n, y * x).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn hkn_gauged_forms_agree() {
        let (one, ten) = (D::one(), 10u32);
        let a = hkn_gauged_system::<D>(ten, one, one);
        let b = hkn_gauged_entries::<D>(ten, one, one);
        for i in 0..20 {
            let y = D::from_f64(1.0 + 3.7 * i as f64);
            let (pa, pb) = (a.p(y).unwrap(), b.p(y).unwrap());
            assert!(pa.sub(&pb).max_abs() <= D::tol(10), "y = {}", y.to_f64());
        }
        let p = b.p(D::from_f64(10.0)).unwrap();
        assert!((p[(0, 0)] + D::two()).abs() < D::tol(2));
        assert!((p[(3, 3)] + D::from_ratio(14, 10)).abs() < D::tol(2));
    }

    #[test]
    fn hkn_operator_annihilates_the_integral() {
        let one = D::one();
        let y = D::from_f64(2.5);
        let d = hkn_derivatives::<D>(10, one, one, y, 4).unwrap();
        let l = hkn_operator::<D>(10, one, one);
        let r = apply_operator(&l, &Jet::new(d.clone()), y).unwrap();
        assert!(r.abs() < D::tol(8) * d[4].abs().max(one) * y * y);
    }

    #[test]
    fn dominance_ratio_table() {
        let v = dominance_ratio_log10::<f64>(10, 1.0, 0.5, 1000.0).unwrap();
        assert!((v - (-451.13274)).abs() < 0.01, "{v}");
        let w = dominance_ratio::<Wide<3>>(10, Wide::one(), Wide::half(), Wide::from_f64(1000.0)).unwrap();
        assert!((w.log10_abs() - v).abs() < 1e-9);
    }

    #[test]
    fn easy_system_matrix() {
        let p = easy_system::<f64>().p(0.0).unwrap();
        assert_eq!(p.as_slice(), &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(airy_system::<f64>().p(3.0).unwrap().as_slice(), &[0.0, 1.0, 3.0, 0.0]);
        let terms = hkn_asymptotic_terms::<f64>(10, 1.0, 1.0);
        let h2 = terms[1].leading.eval(7.0);
        assert!((h2 / 7f64.powi(-11) - 1.0).abs() < 1e-13);
    }
}
