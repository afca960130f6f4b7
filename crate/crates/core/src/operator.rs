//! Scalar differential operators, first-order systems, grids and data points.

use crate::expr::{parse_operator_coefficients, Expr};
use crate::jet::Jet;
use crate::linalg::Matrix;
use crate::{Error, Real, Result};
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// `L = Σ_{k=0}^{r} c_k(t) ∂^k` together with the inhomogeneous term `b(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarOperator<R> {
    coeffs: Vec<Expr<R>>,
    rhs: Expr<R>,
}

impl<R: Real> ScalarOperator<R> {
    pub fn new(coeffs: Vec<Expr<R>>, rhs: Expr<R>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::ZeroLeadingCoefficient),
            Some(c) if c.is_zero() || coeffs.len() < 2 => Err(Error::ZeroLeadingCoefficient),
            Some(_) => Ok(ScalarOperator { coeffs, rhs }),
        }
    }

    /// Parse operator text such as `"t^2*d^2 + t*d + (t^2 - n^2)"` and an optional right-hand side.
    pub fn parse(text: &str, rhs: Option<&str>, params: &BTreeMap<String, R>) -> Result<Self> {
        let coeffs = parse_operator_coefficients(text, params)?;
        let rhs = match rhs {
            Some(s) if !s.trim().is_empty() => Expr::parse(s, params)?,
            _ => Expr::zero(),
        };
        Self::new(coeffs, rhs)
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Expr<R>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &Expr<R> {
        &self.coeffs[k]
    }

    pub fn rhs(&self) -> &Expr<R> {
        &self.rhs
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rhs.is_zero()
    }

    pub fn coeff_values(&self, t: R) -> Vec<R> {
        self.coeffs.iter().map(|c| c.eval(t)).collect()
    }

    /// Normal-form text that [`ScalarOperator::parse`] maps back to this operator.
    pub fn serialize(&self) -> String {
        let mut parts = Vec::new();
        for k in (0..=self.rank()).rev() {
            let c = &self.coeffs[k];
            if c.is_zero() {
                continue;
            }
            parts.push(match k {
                0 => format!("({c})"),
                _ => format!("({c})*d^{k}"),
            });
        }
        parts.join(" + ")
    }

    pub fn serialize_rhs(&self) -> String {
        format!("{}", self.rhs)
    }

    pub fn convert<S: Real>(&self) -> ScalarOperator<S> {
        ScalarOperator { coeffs: self.coeffs.iter().map(|c| c.convert()).collect(), rhs: self.rhs.convert() }
    }
}

/// `(L f)(t) = Σ c_k(t) f^(k)(t)`, without subtracting `b(t)`.
pub fn apply_operator<R: Real>(l: &ScalarOperator<R>, f: &Jet<R>, t: R) -> Result<R> {
    if f.order() < l.rank() {
        return Err(Error::JetTooShort { have: f.order(), need: l.rank() });
    }
    Ok(l.coeffs.iter().enumerate().fold(R::zero(), |acc, (k, c)| acc + c.eval(t) * f.derivative(k)))
}

#[derive(Clone, Debug, PartialEq)]
enum SystemRepr<R> {
    Constant(Matrix<R>),
    Companion(ScalarOperator<R>),
    Entries { p: Vec<Expr<R>>, b: Option<Vec<Expr<R>>> },
    Gauged { inner: Box<FirstOrderSystem<R>>, alpha: R, beta: R },
}

/// `F' = P(t) F + B(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderSystem<R> {
    dim: usize,
    repr: SystemRepr<R>,
    singular_points: Vec<R>,
}

impl<R: Real> FirstOrderSystem<R> {
    pub fn constant(p: Matrix<R>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::Dimension(format!("P must be square, got {}x{}", p.rows(), p.cols())));
        }
        Ok(FirstOrderSystem { dim: p.rows(), repr: SystemRepr::Constant(p), singular_points: Vec::new() })
    }

    /// System given entrywise by expressions (row-major `r×r`), with an optional forcing vector.
    pub fn from_entries(dim: usize, p: Vec<Expr<R>>, b: Option<Vec<Expr<R>>>) -> Result<Self> {
        if p.len() != dim * dim || b.as_ref().is_some_and(|b| b.len() != dim) {
            return Err(Error::Dimension(format!("expected {} entries for a {dim}-dimensional system", dim * dim)));
        }
        Ok(FirstOrderSystem { dim, repr: SystemRepr::Entries { p, b }, singular_points: Vec::new() })
    }

    pub fn with_singular_points(mut self, points: Vec<R>) -> Self {
        self.singular_points = points;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_points(&self) -> Vec<R> {
        let mut out = self.singular_points.clone();
        if let SystemRepr::Gauged { inner, beta, .. } = &self.repr {
            out.extend(inner.singular_points());
            if *beta != R::zero() && !out.contains(&R::zero()) {
                out.push(R::zero());
            }
        }
        out
    }

    pub fn is_homogeneous(&self) -> bool {
        match &self.repr {
            SystemRepr::Constant(_) => true,
            SystemRepr::Companion(l) => l.is_homogeneous(),
            SystemRepr::Entries { b, .. } => b.as_ref().map_or(true, |b| b.iter().all(|e| e.is_zero())),
            SystemRepr::Gauged { inner, .. } => inner.is_homogeneous(),
        }
    }

    fn check_declared(&self, t: R) -> Result<()> {
        if self.singular_points.contains(&t) {
            Err(Error::SingularPoint(t.to_f64()))
        } else {
            Ok(())
        }
    }

    /// `P(t)`.
    pub fn p(&self, t: R) -> Result<Matrix<R>> {
        self.check_declared(t)?;
        let r = self.dim;
        let p = match &self.repr {
            SystemRepr::Constant(p) => p.clone(),
            SystemRepr::Companion(l) => {
                let c = l.coeff_values(t);
                let lead = c[r];
                if lead == R::zero() || !lead.is_finite() {
                    return Err(Error::SingularPoint(t.to_f64()));
                }
                let mut p = Matrix::zeros(r, r);
                for i in 0..r - 1 {
                    p[(i, i + 1)] = R::one();
                }
                for j in 0..r {
                    p[(r - 1, j)] = -c[j] / lead;
                }
                p
            }
            SystemRepr::Entries { p, .. } => Matrix::from_fn(r, r, |i, j| p[i * r + j].eval(t)),
            SystemRepr::Gauged { inner, alpha, beta } => {
                let shift = *alpha + gauge_beta_term(*beta, t)?;
                let mut p = inner.p(t)?;
                for i in 0..r {
                    p[(i, i)] -= shift;
                }
                p
            }
        };
        if !p.is_finite() {
            return Err(Error::SingularPoint(t.to_f64()));
        }
        Ok(p)
    }

    /// `B(t)`.
    pub fn b(&self, t: R) -> Result<Vec<R>> {
        let r = self.dim;
        match &self.repr {
            SystemRepr::Constant(_) => Ok(vec![R::zero(); r]),
            SystemRepr::Companion(l) => {
                let mut b = vec![R::zero(); r];
                if !l.is_homogeneous() {
                    let lead = l.coeff(r).eval(t);
                    if lead == R::zero() || !lead.is_finite() {
                        return Err(Error::SingularPoint(t.to_f64()));
                    }
                    b[r - 1] = l.rhs().eval(t) / lead;
                }
                Ok(b)
            }
            SystemRepr::Entries { b, .. } => Ok(match b {
                Some(b) => b.iter().map(|e| e.eval(t)).collect(),
                None => vec![R::zero(); r],
            }),
            SystemRepr::Gauged { inner, alpha, beta } => {
                let mut b = inner.b(t)?;
                if b.iter().any(|v| *v != R::zero()) {
                    gauge_beta_term(*beta, t)?;
                    let g_inv = (-*alpha * t).exp() * t.abs().powf(-*beta);
                    for v in &mut b {
                        *v *= g_inv;
                    }
                }
                Ok(b)
            }
        }
    }

    /// `P(t) F + B(t)`.
    pub fn rhs(&self, t: R, f: &[R]) -> Result<Vec<R>> {
        let mut out = self.p(t)?.matvec(f);
        if !self.is_homogeneous() {
            for (o, b) in out.iter_mut().zip(self.b(t)?) {
                *o += b;
            }
        }
        Ok(out)
    }
}

fn gauge_beta_term<R: Real>(beta: R, t: R) -> Result<R> {
    if beta == R::zero() {
        Ok(R::zero())
    } else if t == R::zero() {
        Err(Error::SingularPoint(0.0))
    } else {
        Ok(beta / t)
    }
}

/// First-order system for `U = (f, f', …, f^(r−1))`.
pub fn companion_system<R: Real>(l: &ScalarOperator<R>) -> FirstOrderSystem<R> {
    FirstOrderSystem { dim: l.rank(), repr: SystemRepr::Companion(l.clone()), singular_points: Vec::new() }
}

/// Substitute `F = g(t) G` with `g(t) = exp(α t) t^β`.
pub fn gauge_transform<R: Real>(s: &FirstOrderSystem<R>, alpha: R, beta: R) -> FirstOrderSystem<R> {
    if alpha == R::zero() && beta == R::zero() {
        return s.clone();
    }
    if let SystemRepr::Gauged { inner, alpha: a0, beta: b0 } = &s.repr {
        if s.singular_points.is_empty() {
            let (a, b) = (*a0 + alpha, *b0 + beta);
            return if a == R::zero() && b == R::zero() {
                (**inner).clone()
            } else {
                FirstOrderSystem { dim: s.dim, repr: SystemRepr::Gauged { inner: inner.clone(), alpha: a, beta: b }, singular_points: Vec::new() }
            };
        }
    }
    FirstOrderSystem { dim: s.dim, repr: SystemRepr::Gauged { inner: Box::new(s.clone()), alpha, beta }, singular_points: Vec::new() }
}

/// Uniform grid `t_i = t_start + i·h`, `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<R> {
    pub t_start: R,
    pub h: R,
    pub n: usize,
}

impl<R: Real> Grid<R> {
    pub fn new(t_start: R, h: R, n: usize) -> Result<Self> {
        if !(h > R::zero()) || n == 0 {
            return Err(Error::InvalidArgument(format!("grid needs h > 0 and N ≥ 1 (h = {}, N = {n})", h.to_f64())));
        }
        Ok(Grid { t_start, h, n })
    }

    /// Grid with `n` steps covering `[a, b]`.
    pub fn spanning(a: R, b: R, n: usize) -> Result<Self> {
        Self::new(a, (b - a) / R::from_usize(n.max(1)), n)
    }

    pub fn node(&self, i: usize) -> R {
        self.t_start + R::from_usize(i) * self.h
    }

    pub fn t_end(&self) -> R {
        self.node(self.n)
    }

    pub fn nodes(&self) -> Vec<R> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node equal to `t` within a relative tolerance of `10^(2−D)` of `h`.
    pub fn index_of(&self, t: R) -> Option<usize> {
        let x = ((t - self.t_start) / self.h).round();
        let xf = x.to_f64();
        if !(0.0..=self.n as f64).contains(&xf) {
            return None;
        }
        let i = xf as usize;
        if (self.node(i) - t).abs() <= R::tol(2) * self.h.max(t.abs()) {
            Some(i)
        } else {
            None
        }
    }

    pub fn convert<S: Real>(&self) -> Grid<S> {
        Grid { t_start: self.t_start.convert(), h: self.h.convert(), n: self.n }
    }
}

/// Observation `f^(deriv_order)(p) = q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataPoint<R> {
    pub p: R,
    pub q: R,
    pub deriv_order: usize,
}

impl<R: Real> DataPoint<R> {
    pub fn value(p: R, q: R) -> Self {
        DataPoint { p, q, deriv_order: 0 }
    }

    pub fn derivative(p: R, q: R, deriv_order: usize) -> Self {
        DataPoint { p, q, deriv_order }
    }

    pub fn convert<S: Real>(&self) -> DataPoint<S> {
        DataPoint { p: self.p.convert(), q: self.q.convert(), deriv_order: self.deriv_order }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::params;
    use crate::DoubleDouble;

    fn op(text: &str) -> ScalarOperator<f64> {
        ScalarOperator::parse(text, None, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn zero_leading_coefficient_is_rejected() {
        let e = ScalarOperator::<f64>::parse("0*d^1 + 1", None, &BTreeMap::new()).unwrap_err();
        assert_eq!(e, Error::ZeroLeadingCoefficient);
    }

    #[test]
    fn airy_companion() {
        let s = companion_system(&op("d^2 - t"));
        let p = s.p(1.75).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0, 1.75, 0.0]);
        let s = companion_system(&op("d - 1"));
        assert_eq!(s.p(0.3).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn singular_leading_coefficient_reports_t() {
        let s = companion_system(&op("t*d^2 + 1"));
        assert_eq!(s.p(0.0).unwrap_err(), Error::SingularPoint(0.0));
        let s = s.with_singular_points(vec![2.0]);
        assert_eq!(s.p(2.0).unwrap_err(), Error::SingularPoint(2.0));
    }

    #[test]
    fn serialization_roundtrips() {
        let p = params(&[("k", 10.0), ("n", 1.0), ("x", 1.0)]);
        for text in [
            "d^2 - t",
            "d^3 - d^2 - t*d + t - 1",
            "t^2*d^4 + (-t+2*n+2)*t*d^3 + (-t*x+(-k-n-3)*t+n*(n+1))*d^2 + ((t-n)*x-n*(k+2))*d + (k+1)*x",
            "exp(t/3)*d + sqrt(t) - log(2*t)/7",
        ] {
            let a = ScalarOperator::parse(text, None, &p).unwrap();
            let b = ScalarOperator::parse(&a.serialize(), None, &p).unwrap();
            assert_eq!(a, b, "{}", a.serialize());
        }
    }

    #[test]
    fn apply_operator_on_polynomial_jets() {
        let l = op("d^2 - t");
        let t = 2.0;
        let cube = Jet::variable(t, 2).powi(3);
        assert_eq!(apply_operator(&l, &cube, t).unwrap(), 12.0 - 16.0);
        assert_eq!(apply_operator(&l, &Jet::zero(2), t).unwrap(), 0.0);
        assert_eq!(apply_operator(&l, &Jet::zero(1), t).unwrap_err(), Error::JetTooShort { have: 1, need: 2 });
    }

    #[test]
    fn companion_residual_matches_operator() {
        type D = DoubleDouble;
        let p = params(&[("a", D::from_ratio(1, 3))]);
        let l = ScalarOperator::<D>::parse("(1+t^2)*d^3 + a*t*d - exp(t)", Some("t"), &p).unwrap();
        let s = companion_system(&l);
        let t = D::from_f64(0.6);
        let f = Expr::<D>::parse("sin_free", &BTreeMap::new());
        assert!(f.is_err());
        let f = Expr::<D>::parse("exp(t/2)*t^2 + log(1+t)", &BTreeMap::new()).unwrap();
        let jet = f.eval_jet(t, 3);
        let state: Vec<D> = (0..3).map(|k| jet.derivative(k)).collect();
        let rhs = s.rhs(t, &state).unwrap();
        let lf = apply_operator(&l, &jet, t).unwrap();
        let lead = l.coeff(3).eval(t);
        let last = jet.derivative(3) - rhs[2];
        assert!((last - (lf - l.rhs().eval(t)) / lead).abs() < D::tol(6));
        for k in 0..2 {
            assert_eq!(rhs[k], state[k + 1]);
        }
    }

    #[test]
    fn gauge_shifts_the_diagonal_and_inverts() {
        let s = companion_system(&op("d^2 - t"));
        assert_eq!(gauge_transform(&s, 0.0, 0.0), s);
        let g = gauge_transform(&s, 1.0, 2.0);
        let p = g.p(4.0).unwrap();
        assert_eq!(p.as_slice(), &[-1.5, 1.0, 4.0, -1.5]);
        assert_eq!(g.p(0.0).unwrap_err(), Error::SingularPoint(0.0));
        assert!(g.singular_points().contains(&0.0));
        let back = gauge_transform(&g, -1.0, -2.0);
        assert_eq!(back.p(0.7).unwrap(), s.p(0.7).unwrap());
    }

    #[test]
    fn grid_nodes_are_not_accumulated() {
        let g = Grid::new(0.0, 0.1, 10).unwrap();
        assert_eq!(g.t_end(), 10.0 * 0.1);
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.35), None);
        assert!(Grid::new(0.0, 0.0, 3).is_err());
    }
}
