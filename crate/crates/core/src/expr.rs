//! Coefficient expressions in `t` and the operator text parser.

use crate::jet::Jet;
use crate::{Error, Real, Result};
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Unary function applicable inside an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree over the independent variable `t`. Parameters are
/// substituted as constants when the text is parsed.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr<R> {
    Const(R),
    Var,
    Add(Box<Expr<R>>, Box<Expr<R>>),
    Sub(Box<Expr<R>>, Box<Expr<R>>),
    Mul(Box<Expr<R>>, Box<Expr<R>>),
    Div(Box<Expr<R>>, Box<Expr<R>>),
    Neg(Box<Expr<R>>),
    Pow(Box<Expr<R>>, i32),
    Apply(Func, Box<Expr<R>>),
}

impl<R: Real> Expr<R> {
    pub fn constant(c: R) -> Self {
        Expr::Const(c)
    }

    pub fn zero() -> Self {
        Expr::Const(R::zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == R::zero())
    }

    pub fn as_const(&self) -> Option<R> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    // Smart constructors fold constant subtrees so that structurally zero
    // coefficients are recognised.
    pub fn add(a: Self, b: Self) -> Self {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(*x + *y),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Self, b: Self) -> Self {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(*x - *y),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Self, b: Self) -> Self {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(*x * *y),
            _ if a.is_zero() || b.is_zero() => Expr::zero(),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Self, b: Self) -> Self {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) if *y != R::zero() => Expr::Const(*x / *y),
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Self) -> Self {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Self, n: i32) -> Self {
        match a {
            Expr::Const(x) if x != R::zero() || n > 0 => Expr::Const(x.powi(n)),
            other => Expr::Pow(Box::new(other), n),
        }
    }

    pub fn apply(f: Func, a: Self) -> Self {
        Expr::Apply(f, Box::new(a))
    }

    pub fn eval(&self, t: R) -> R {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => t,
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Neg(a) => -a.eval(t),
            Expr::Pow(a, n) => a.eval(t).powi(*n),
            Expr::Apply(f, a) => {
                let x = a.eval(t);
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    /// Value and first `order` derivatives with respect to `t`.
    pub fn eval_jet(&self, t: R, order: usize) -> Jet<R> {
        match self {
            Expr::Const(c) => Jet::constant(*c, order),
            Expr::Var => Jet::variable(t, order),
            Expr::Add(a, b) => a.eval_jet(t, order).add(&b.eval_jet(t, order)).expect("same order"),
            Expr::Sub(a, b) => a.eval_jet(t, order).sub(&b.eval_jet(t, order)).expect("same order"),
            Expr::Mul(a, b) => a.eval_jet(t, order).mul(&b.eval_jet(t, order)).expect("same order"),
            Expr::Div(a, b) => a.eval_jet(t, order).div(&b.eval_jet(t, order)).expect("same order"),
            Expr::Neg(a) => a.eval_jet(t, order).neg(),
            Expr::Pow(a, n) => a.eval_jet(t, order).powi(*n),
            Expr::Apply(f, a) => {
                let x = a.eval_jet(t, order);
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    /// Rebuild the tree at another precision.
    pub fn convert<S: Real>(&self) -> Expr<S> {
        match self {
            Expr::Const(c) => Expr::Const(c.convert()),
            Expr::Var => Expr::Var,
            Expr::Add(a, b) => Expr::Add(Box::new(a.convert()), Box::new(b.convert())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.convert()), Box::new(b.convert())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.convert()), Box::new(b.convert())),
            Expr::Div(a, b) => Expr::Div(Box::new(a.convert()), Box::new(b.convert())),
            Expr::Neg(a) => Expr::Neg(Box::new(a.convert())),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.convert()), *n),
            Expr::Apply(f, a) => Expr::Apply(*f, Box::new(a.convert())),
        }
    }

    /// Parse a coefficient expression (no `d`).
    pub fn parse(text: &str, params: &BTreeMap<String, R>) -> Result<Self> {
        let mut p = Parser::new(text, params)?;
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }
}

fn format_const<R: Real>(c: R) -> String {
    let f = c.to_f64();
    if f.abs() < 1e15 && libm::floor(f) == f && R::from_f64(f) == c {
        format!("{}", f as i64)
    } else {
        c.to_shortest_string()
    }
}

impl<R: Real> fmt::Display for Expr<R> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < R::zero() => write!(out, "(-{})", format_const(-*c)),
            Expr::Const(c) => write!(out, "{}", format_const(*c)),
            Expr::Var => write!(out, "t"),
            Expr::Add(a, b) => write!(out, "({a} + {b})"),
            Expr::Sub(a, b) => write!(out, "({a} - {b})"),
            Expr::Mul(a, b) => write!(out, "({a}*{b})"),
            Expr::Div(a, b) => write!(out, "({a}/{b})"),
            Expr::Neg(a) => write!(out, "(-{a})"),
            Expr::Pow(a, n) => write!(out, "({a})^{n}"),
            Expr::Apply(f, a) => write!(out, "{}({a})", f.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            Tok::Num(chars[start..i].iter().collect())
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if "+-*/^()".contains(c) {
            i += 1;
            Tok::Sym(c)
        } else {
            return Err(Error::Syntax { line: l0, column: c0, message: format!("unexpected character '{c}'") });
        };
        col += i - start;
        out.push(Token { tok, line: l0, column: c0 });
    }
    out.push(Token { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser<'a, R> {
    toks: Vec<Token>,
    pos: usize,
    params: &'a BTreeMap<String, R>,
}

/// A product term at the top level of an operator: `coef * d^k`.
struct Term<R> {
    coef: Expr<R>,
    order: usize,
}

impl<'a, R: Real> Parser<'a, R> {
    fn new(text: &str, params: &'a BTreeMap<String, R>) -> Result<Self> {
        Ok(Parser { toks: tokenize(text)?, pos: 0, params })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Syntax { line, column, message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            Tok::End => Ok(()),
            other => self.error(format!("unexpected {}", describe(other))),
        }
    }

    fn expr(&mut self) -> Result<Expr<R>> {
        let mut acc = self.signed_term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                acc = Expr::add(acc, rhs);
            } else if self.eat('-') {
                let rhs = self.term()?;
                acc = Expr::sub(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn signed_term(&mut self) -> Result<Expr<R>> {
        if self.eat('-') {
            Ok(Expr::neg(self.term()?))
        } else {
            self.eat('+');
            self.term()
        }
    }

    fn term(&mut self) -> Result<Expr<R>> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let rhs = self.factor()?;
                acc = Expr::mul(acc, rhs);
            } else if self.eat('/') {
                let rhs = self.factor()?;
                acc = Expr::div(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        let neg = self.eat('-');
        match self.bump() {
            Tok::Num(s) if s.bytes().all(|b| b.is_ascii_digit()) => match s.parse::<i32>() {
                Ok(n) => Ok(if neg { -n } else { n }),
                Err(_) => self.error("exponent too large"),
            },
            other => {
                self.pos -= usize::from(other != Tok::End);
                self.error("expected an integer exponent")
            }
        }
    }

    fn factor(&mut self) -> Result<Expr<R>> {
        let base = self.atom()?;
        if self.eat('^') {
            let n = self.exponent()?;
            Ok(Expr::pow(base, n))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr<R>> {
        let (line, column) = self.here();
        match self.bump() {
            Tok::Num(s) => match R::parse_literal(&s) {
                Some(v) => Ok(Expr::Const(v)),
                None => Err(Error::Syntax { line, column, message: format!("malformed number '{s}'") }),
            },
            Tok::Sym('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.error("expected ')'");
                }
                Ok(e)
            }
            Tok::Sym('-') => Ok(Expr::neg(self.factor()?)),
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::Var),
                "d" => Err(Error::Syntax {
                    line,
                    column,
                    message: "'d' may only appear as the rightmost factor of a top-level term".into(),
                }),
                "exp" | "log" | "sqrt" => {
                    let f = match name.as_str() {
                        "exp" => Func::Exp,
                        "log" => Func::Log,
                        _ => Func::Sqrt,
                    };
                    if !self.eat('(') {
                        return self.error(format!("expected '(' after {name}"));
                    }
                    let e = self.expr()?;
                    if !self.eat(')') {
                        return self.error("expected ')'");
                    }
                    Ok(Expr::apply(f, e))
                }
                _ => match self.params.get(&name) {
                    Some(v) => Ok(Expr::Const(*v)),
                    None => Err(Error::UnknownIdentifier(name)),
                },
            },
            other => Err(Error::Syntax { line, column, message: format!("unexpected {}", describe(&other)) }),
        }
    }

    fn is_d(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "d")
    }

    fn d_power(&mut self) -> Result<usize> {
        self.bump();
        if self.eat('^') {
            let n = self.exponent()?;
            if n < 0 {
                return self.error("negative power of d");
            }
            Ok(n as usize)
        } else {
            Ok(1)
        }
    }

    fn end_of_term(&self) -> bool {
        matches!(self.peek(), Tok::End | Tok::Sym('+') | Tok::Sym('-'))
    }

    /// `[coef '*'] d^k` or a plain coefficient (order 0).
    fn operator_term(&mut self) -> Result<Term<R>> {
        if self.is_d() {
            let order = self.d_power()?;
            if !self.end_of_term() {
                return self.error("'d' must be the rightmost factor of its term");
            }
            return Ok(Term { coef: Expr::Const(R::one()), order });
        }
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                if self.is_d() {
                    let order = self.d_power()?;
                    if !self.end_of_term() {
                        return self.error("'d' must be the rightmost factor of its term");
                    }
                    return Ok(Term { coef: acc, order });
                }
                let rhs = self.factor()?;
                acc = Expr::mul(acc, rhs);
            } else if self.eat('/') {
                if self.is_d() {
                    return self.error("division by 'd' is not allowed");
                }
                let rhs = self.factor()?;
                acc = Expr::div(acc, rhs);
            } else {
                return Ok(Term { coef: acc, order: 0 });
            }
        }
    }

    fn operator(&mut self) -> Result<Vec<Expr<R>>> {
        let mut coeffs: Vec<Option<Expr<R>>> = Vec::new();
        let mut negate = self.eat('-');
        if !negate {
            self.eat('+');
        }
        loop {
            let Term { coef, order } = self.operator_term()?;
            let coef = if negate { Expr::neg(coef) } else { coef };
            if coeffs.len() <= order {
                coeffs.resize(order + 1, None);
            }
            coeffs[order] = Some(match coeffs[order].take() {
                Some(prev) => Expr::add(prev, coef),
                None => coef,
            });
            if self.eat('+') {
                negate = false;
            } else if self.eat('-') {
                negate = true;
            } else {
                self.expect_end()?;
                break;
            }
        }
        Ok(coeffs.into_iter().map(|c| c.unwrap_or_else(Expr::zero)).collect())
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(s) => format!("number '{s}'"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::End => "end of input".to_string(),
    }
}

/// Parse `Σ c_k(t) * d^k` into the coefficient list `[c_0, …, c_r]`.
/// The leading coefficient may still be zero; callers decide whether that is an error.
pub fn parse_operator_coefficients<R: Real>(text: &str, params: &BTreeMap<String, R>) -> Result<Vec<Expr<R>>> {
    let mut p = Parser::new(text, params)?;
    if *p.peek() == Tok::End {
        return p.error("empty operator");
    }
    p.operator()
}

/// Build a parameter map from `(name, value)` pairs.
pub fn params<R: Real>(pairs: &[(&str, R)]) -> BTreeMap<String, R> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Deterministic pseudo-random expressions for property tests.
#[doc(hidden)]
pub fn sample_expr<R: Real>(seed: &mut u64, depth: u32) -> Expr<R> {
    fn next(seed: &mut u64) -> u64 {
        *seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *seed;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let pick = next(seed) % if depth == 0 { 2 } else { 9 };
    let sub = |seed: &mut u64| sample_expr::<R>(seed, depth.saturating_sub(1));
    match pick {
        0 => Expr::Var,
        1 => Expr::Const(R::from_ratio((next(seed) % 9) as i64 + 1, (next(seed) % 4) as i64 + 1)),
        2 => Expr::Add(Box::new(sub(seed)), Box::new(sub(seed))),
        3 => Expr::Sub(Box::new(sub(seed)), Box::new(sub(seed))),
        4 => Expr::Mul(Box::new(sub(seed)), Box::new(sub(seed))),
        5 => {
            // Denominators kept positive on t > 0.
            let den = Expr::Add(Box::new(Expr::Const(R::one())), Box::new(Expr::Pow(Box::new(sub(seed)), 2)));
            Expr::Div(Box::new(sub(seed)), Box::new(den))
        }
        6 => Expr::Pow(Box::new(sub(seed)), (next(seed) % 4) as i32),
        7 => {
            let inner = Expr::Mul(Box::new(Expr::Const(R::from_ratio(1, 4))), Box::new(sub(seed)));
            Expr::Apply(Func::Exp, Box::new(Expr::Apply(Func::Sqrt, Box::new(Expr::Add(Box::new(Expr::Const(R::one())), Box::new(Expr::Pow(Box::new(inner), 2)))))))
        }
        _ => Expr::Apply(Func::Log, Box::new(Expr::Add(Box::new(Expr::Const(R::two())), Box::new(Expr::Pow(Box::new(sub(seed)), 2))))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn airy_operator_coefficients() {
        let c = parse_operator_coefficients::<f64>("d^2 - t", &no_params()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[2], Expr::Const(1.0));
        assert!(c[1].is_zero());
        assert_eq!(c[0].eval(3.0), -3.0);
    }

    #[test]
    fn coefficients_are_collected_by_order() {
        let c = parse_operator_coefficients::<f64>("d^3 - d^2 - t*d + t - 1", &no_params()).unwrap();
        let t = 1.5;
        let vals: Vec<f64> = c.iter().map(|e| e.eval(t)).collect();
        assert_eq!(vals, vec![t - 1.0, -t, -1.0, 1.0]);
    }

    #[test]
    fn parameters_are_substituted() {
        let p = params(&[("k", 10.0), ("n", 1.0)]);
        let e = Expr::parse("(k+1)*t/n^2", &p).unwrap();
        assert_eq!(e.eval(2.0), 22.0);
        assert_eq!(Expr::parse("k*q", &p).unwrap_err(), Error::UnknownIdentifier("q".into()));
    }

    #[test]
    fn misplaced_d_is_rejected_with_position() {
        let e = parse_operator_coefficients::<f64>("d*t", &no_params()).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 1, column: 2, .. }), "{e:?}");
        let e = parse_operator_coefficients::<f64>("t*(d + 1)", &no_params()).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 1, column: 4, .. }), "{e:?}");
        let e = parse_operator_coefficients::<f64>("1 +\n  t*/2", &no_params()).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 2, column: 5, .. }), "{e:?}");
    }

    #[test]
    fn zero_product_folds_to_zero() {
        let c = parse_operator_coefficients::<f64>("0*d^1 + 1", &no_params()).unwrap();
        assert!(c[1].is_zero());
        let c = parse_operator_coefficients::<f64>("0*t*d^2 + d", &no_params()).unwrap();
        assert!(c[2].is_zero());
    }

    #[test]
    fn display_reparses_to_the_same_tree() {
        let mut seed = 3u64;
        for _ in 0..200 {
            let e = sample_expr::<f64>(&mut seed, 3);
            let folded = Expr::parse(&e.to_string(), &no_params()).unwrap();
            let again = Expr::parse(&folded.to_string(), &no_params()).unwrap();
            assert_eq!(folded, again, "{e}");
            let t = 1.3;
            let (a, b) = (e.eval(t), folded.eval(t));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{e}: {a} vs {b}");
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut seed = 11u64;
        for _ in 0..50 {
            let e = sample_expr::<f64>(&mut seed, 3);
            let t = 0.8;
            let h = 1e-6 * f64::max(1.0, t);
            let j = e.eval_jet(t, 2);
            let d1 = (e.eval(t + h) - e.eval(t - h)) / (2.0 * h);
            let scale = j.derivative(1).abs().max(j.value().abs()).max(1.0);
            assert!((j.derivative(1) - d1).abs() <= 1e-6 * scale, "{e}: {} vs {d1}", j.derivative(1));
            assert_eq!(j.value(), e.eval(t));
        }
    }
}
