//! One-step integrators for linear systems `F' = P(t) F + B(t)`.

use crate::linalg::{norm2, Lu, Matrix};
use crate::operator::{FirstOrderSystem, Grid};
use crate::{Error, Real, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepperKind {
    Euler,
    Rk4,
    /// Gauss–Legendre collocation with `s` stages (order `2s`).
    Gauss(usize),
    /// Dormand–Prince 5(4) with an adaptive step.
    Rk45 { rtol: f64, atol: f64 },
}

impl fmt::Display for StepperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepperKind::Euler => write!(f, "euler"),
            StepperKind::Rk4 => write!(f, "rk4"),
            StepperKind::Gauss(s) => write!(f, "gauss{s}"),
            StepperKind::Rk45 { rtol, atol } => write!(f, "rk45(rtol={rtol:e},atol={atol:e})"),
        }
    }
}

/// Something noteworthy that happened during a solve without aborting it.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// A component exceeded the representable range (or became non-finite) at node `index`.
    BlowUp { index: usize, t: f64 },
    /// The adaptive step fell below `10^(2−D)·|t|`; `t` is the last accepted time.
    StepUnderflow { t: f64 },
    Note(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::BlowUp { index, t } => write!(f, "blow-up at node {index} (t = {t})"),
            Diagnostic::StepUnderflow { t } => write!(f, "step size underflow after t = {t}"),
            Diagnostic::Note(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableMeta {
    pub stepper: String,
    pub digits: u32,
    pub diagnostics: Vec<Diagnostic>,
}

/// Trajectory `(t_i, F_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionTable<R> {
    pub times: Vec<R>,
    pub states: Vec<Vec<R>>,
    pub meta: TableMeta,
}

impl<R: Real> SolutionTable<R> {
    pub fn new(stepper: impl Into<String>) -> Self {
        SolutionTable { times: Vec::new(), states: Vec::new(), meta: TableMeta { stepper: stepper.into(), digits: R::DIGITS, diagnostics: Vec::new() } }
    }

    pub fn push(&mut self, t: R, state: Vec<R>) {
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(R, &[R])> {
        self.times.last().map(|&t| (t, self.states.last().unwrap().as_slice()))
    }

    /// Component `j` across all nodes.
    pub fn component(&self, j: usize) -> Vec<R> {
        self.states.iter().map(|s| s[j]).collect()
    }

    /// State at the node nearest to `t`.
    pub fn at(&self, t: R) -> Option<&[R]> {
        let i = self.nearest(t)?;
        Some(&self.states[i])
    }

    pub fn nearest(&self, t: R) -> Option<usize> {
        self.times.iter().enumerate().fold(None, |best: Option<(usize, R)>, (i, &ti)| {
            let d = (ti - t).abs();
            match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            }
        }).map(|(i, _)| i)
    }

    pub fn blow_up(&self) -> Option<&Diagnostic> {
        self.meta.diagnostics.iter().find(|d| matches!(d, Diagnostic::BlowUp { .. } | Diagnostic::StepUnderflow { .. }))
    }
}

/// `true` when any component is non-finite or beyond 90% of the exponent range.
pub fn is_blown_up<R: Real>(f: &[R]) -> bool {
    f.iter().any(|x| !x.is_finite() || x.log10_abs() > 0.9 * R::MAX_EXP10)
}

/// `F + h (P(t) F + B(t))`.
pub fn euler_step<R: Real>(s: &FirstOrderSystem<R>, t: R, h: R, f: &[R]) -> Result<Vec<R>> {
    let d = s.rhs(t, f)?;
    Ok(f.iter().zip(&d).map(|(&x, &dx)| x + h * dx).collect())
}

/// Classical four-stage Runge–Kutta step.
pub fn rk4_step<R: Real>(s: &FirstOrderSystem<R>, t: R, h: R, f: &[R]) -> Result<Vec<R>> {
    let half = h * R::half();
    let comb = |a: &[R], c: R, k: &[R]| -> Vec<R> { a.iter().zip(k).map(|(&x, &y)| x + c * y).collect() };
    let k1 = s.rhs(t, f)?;
    let k2 = s.rhs(t + half, &comb(f, half, &k1))?;
    let k3 = s.rhs(t + half, &comb(f, half, &k2))?;
    let k4 = s.rhs(t + h, &comb(f, h, &k3))?;
    let sixth = h / R::from_f64(6.0);
    Ok((0..f.len()).map(|i| f[i] + sixth * (k1[i] + R::two() * (k2[i] + k3[i]) + k4[i])).collect())
}

/// Butcher tableau of the `s`-stage Gauss–Legendre method.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussTableau<R> {
    pub c: Vec<R>,
    pub a: Matrix<R>,
    pub b: Vec<R>,
}

impl<R: Real> GaussTableau<R> {
    pub fn new(s: usize) -> Result<Self> {
        if s == 0 || s > 16 {
            return Err(Error::InvalidArgument(format!("Gauss method needs 1 ≤ s ≤ 16 stages, got {s}")));
        }
        let c: Vec<R> = legendre_roots::<R>(s).into_iter().map(|x| (x + R::one()) * R::half()).collect();
        // Collocation conditions Σ_j a_ij c_j^k = c_i^(k+1)/(k+1), k < s.
        let v = Matrix::from_fn(s, s, |k, j| c[j].powi(k as i32));
        let lu = Lu::factor(&v)?;
        let mut a = Matrix::zeros(s, s);
        for i in 0..s {
            let rhs: Vec<R> = (0..s).map(|k| c[i].powi(k as i32 + 1) / R::from_usize(k + 1)).collect();
            let row = lu.solve(&rhs);
            a.row_mut(i).copy_from_slice(&row);
        }
        let rhs: Vec<R> = (0..s).map(|k| R::one() / R::from_usize(k + 1)).collect();
        let b = lu.solve(&rhs);
        Ok(GaussTableau { c, a, b })
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }
}

/// Roots of the Legendre polynomial `P_s` on `[−1, 1]`, ascending.
pub(crate) fn legendre_roots<R: Real>(s: usize) -> Vec<R> {
    let mut roots = Vec::with_capacity(s);
    for i in 0..s {
        let guess = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (s as f64 + 0.5));
        let mut x = R::from_f64(guess);
        for _ in 0..100 {
            let (p, dp) = legendre(s, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= R::epsilon() * R::from_f64(0.01) {
                break;
            }
        }
        let (p, dp) = legendre(s, x);
        x -= p / dp;
        roots.push(x);
    }
    roots.reverse();
    roots
}

pub(crate) fn legendre<R: Real>(s: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    for k in 2..=s {
        let kf = R::from_usize(k);
        let p2 = (R::from_usize(2 * k - 1) * x * p1 - R::from_usize(k - 1) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if s == 0 {
        return (R::one(), R::zero());
    }
    let dp = R::from_usize(s) * (x * p1 - p0) / (x * x - R::one());
    (p1, dp)
}

/// Stage system of one Gauss step, factored once and applicable to many vectors.
struct GaussStep<'a, R> {
    tab: &'a GaussTableau<R>,
    h: R,
    lu: Lu<R>,
    p: Vec<Matrix<R>>,
    b: Option<Vec<Vec<R>>>,
}

impl<'a, R: Real> GaussStep<'a, R> {
    fn prepare(tab: &'a GaussTableau<R>, sys: &FirstOrderSystem<R>, t: R, h: R) -> Result<Self> {
        let s = tab.stages();
        let r = sys.dim();
        let mut p = Vec::with_capacity(s);
        for i in 0..s {
            p.push(sys.p(t + tab.c[i] * h)?);
        }
        let b = if sys.is_homogeneous() {
            None
        } else {
            let mut b = Vec::with_capacity(s);
            for i in 0..s {
                b.push(sys.b(t + tab.c[i] * h)?);
            }
            Some(b)
        };
        let m = Matrix::from_fn(s * r, s * r, |row, col| {
            let (i, a) = (row / r, row % r);
            let (j, bb) = (col / r, col % r);
            let delta = if row == col { R::one() } else { R::zero() };
            delta - h * tab.a[(i, j)] * p[i][(a, bb)]
        });
        let lu = Lu::factor(&m)?;
        Ok(GaussStep { tab, h, lu, p, b })
    }

    fn apply(&self, f: &[R]) -> Vec<R> {
        let s = self.tab.stages();
        let r = f.len();
        let mut rhs = Vec::with_capacity(s * r);
        for i in 0..s {
            let mut pi = self.p[i].matvec(f);
            if let Some(b) = &self.b {
                for (x, &bi) in pi.iter_mut().zip(&b[i]) {
                    *x += bi;
                }
            }
            rhs.extend(pi);
        }
        let k = self.lu.solve(&rhs);
        let mut out = f.to_vec();
        for i in 0..s {
            let w = self.h * self.tab.b[i];
            for a in 0..r {
                out[a] += w * k[i * r + a];
            }
        }
        out
    }
}

/// One step of the `s`-stage Gauss method; the stage equations are solved as one linear system.
pub fn gauss_irk_step<R: Real>(sys: &FirstOrderSystem<R>, t: R, h: R, f: &[R], s: usize) -> Result<Vec<R>> {
    let tab = GaussTableau::new(s)?;
    gauss_step_with(&tab, sys, t, h, f)
}

pub fn gauss_step_with<R: Real>(tab: &GaussTableau<R>, sys: &FirstOrderSystem<R>, t: R, h: R, f: &[R]) -> Result<Vec<R>> {
    if h == R::zero() {
        return Ok(f.to_vec());
    }
    Ok(GaussStep::prepare(tab, sys, t, h)?.apply(f))
}

/// A fixed-step scheme with any per-method setup already done.
#[derive(Clone, Debug)]
pub enum Stepper<R> {
    Euler,
    Rk4,
    Gauss(GaussTableau<R>),
}

impl<R: Real> Stepper<R> {
    pub fn new(kind: StepperKind) -> Result<Self> {
        match kind {
            StepperKind::Euler => Ok(Stepper::Euler),
            StepperKind::Rk4 => Ok(Stepper::Rk4),
            StepperKind::Gauss(s) => Ok(Stepper::Gauss(GaussTableau::new(s)?)),
            StepperKind::Rk45 { .. } => Err(Error::InvalidArgument("the adaptive RK45 scheme has no fixed-step propagator".into())),
        }
    }

    pub fn step(&self, sys: &FirstOrderSystem<R>, t: R, h: R, f: &[R]) -> Result<Vec<R>> {
        match self {
            Stepper::Euler => euler_step(sys, t, h, f),
            Stepper::Rk4 => rk4_step(sys, t, h, f),
            Stepper::Gauss(tab) => gauss_step_with(tab, sys, t, h, f),
        }
    }

    /// One-step propagator `Q(t, h)` of a homogeneous system: column `j` is the step applied to `e_j`.
    pub fn propagator(&self, sys: &FirstOrderSystem<R>, t: R, h: R) -> Result<Matrix<R>> {
        if !sys.is_homogeneous() {
            return Err(Error::Inhomogeneous);
        }
        let r = sys.dim();
        let mut q = Matrix::zeros(r, r);
        if let Stepper::Gauss(tab) = self {
            if h == R::zero() {
                return Ok(Matrix::identity(r));
            }
            let prep = GaussStep::prepare(tab, sys, t, h)?;
            for j in 0..r {
                let mut e = vec![R::zero(); r];
                e[j] = R::one();
                q.set_column(j, &prep.apply(&e));
            }
            return Ok(q);
        }
        for j in 0..r {
            let mut e = vec![R::zero(); r];
            e[j] = R::one();
            q.set_column(j, &self.step(sys, t, h, &e)?);
        }
        Ok(q)
    }
}

pub fn propagator_matrix<R: Real>(kind: StepperKind, sys: &FirstOrderSystem<R>, t: R, h: R) -> Result<Matrix<R>> {
    Stepper::new(kind)?.propagator(sys, t, h)
}

/// Fixed-step solve over `grid` (adaptive RK45 reports at the grid nodes).
pub fn solve_ivp<R: Real>(kind: StepperKind, sys: &FirstOrderSystem<R>, f0: &[R], grid: &Grid<R>) -> Result<SolutionTable<R>> {
    check_dim(sys, f0)?;
    if let StepperKind::Rk45 { rtol, atol } = kind {
        return rk45_solve(sys, f0, grid.t_start, grid.t_end(), rtol, atol, &grid.nodes());
    }
    let stepper = Stepper::new(kind)?;
    let mut table = SolutionTable::new(format!("{kind}"));
    table.push(grid.t_start, f0.to_vec());
    let mut f = f0.to_vec();
    for i in 0..grid.n {
        let t = grid.node(i);
        f = stepper.step(sys, t, grid.h, &f)?;
        let t_next = grid.node(i + 1);
        if is_blown_up(&f) {
            table.meta.diagnostics.push(Diagnostic::BlowUp { index: i + 1, t: t_next.to_f64() });
            if f.iter().all(|x| x.is_finite()) {
                table.push(t_next, f);
            }
            break;
        }
        table.push(t_next, f.clone());
    }
    Ok(table)
}

fn check_dim<R: Real>(sys: &FirstOrderSystem<R>, f0: &[R]) -> Result<()> {
    if f0.len() != sys.dim() {
        Err(Error::Dimension(format!("initial vector has {} entries, system dimension is {}", f0.len(), sys.dim())))
    } else {
        Ok(())
    }
}

struct DormandPrince<R> {
    c: [R; 7],
    a: [[R; 6]; 7],
    e: [R; 7],
    p: [[R; 4]; 7],
}

impl<R: Real> DormandPrince<R> {
    fn new() -> Self {
        let q = |n: i64, d: i64| R::from_ratio(n, d);
        let z = R::zero();
        DormandPrince {
            c: [z, q(1, 5), q(3, 10), q(4, 5), q(8, 9), R::one(), R::one()],
            a: [
                [z; 6],
                [q(1, 5), z, z, z, z, z],
                [q(3, 40), q(9, 40), z, z, z, z],
                [q(44, 45), q(-56, 15), q(32, 9), z, z, z],
                [q(19372, 6561), q(-25360, 2187), q(64448, 6561), q(-212, 729), z, z],
                [q(9017, 3168), q(-355, 33), q(46732, 5247), q(49, 176), q(-5103, 18656), z],
                [q(35, 384), z, q(500, 1113), q(125, 192), q(-2187, 6784), q(11, 84)],
            ],
            e: [q(-71, 57600), z, q(71, 16695), q(-71, 1920), q(17253, 339200), q(-22, 525), q(1, 40)],
            p: [
                [R::one(), q(-8048581381, 2820520608), q(8663915743, 2820520608), q(-12715105075, 11282082432)],
                [z; 4],
                [z, q(131558114200, 32700410799), q(-68118460800, 10900136933), q(87487479700, 32700410799)],
                [z, q(-1754552775, 470086768), q(14199869525, 1410260304), q(-10690763975, 1880347072)],
                [z, q(127303824393, 49829197408), q(-318862633887, 49829197408), q(701980252875, 199316789632)],
                [z, q(-282668133, 205662961), q(2019193451, 616988883), q(-1453857185, 822651844)],
                [z, q(40617522, 29380423), q(-110615467, 29380423), q(69997945, 29380423)],
            ],
        }
    }
}

fn rms_norm<R: Real>(v: &[R], y0: &[R], y1: &[R], rtol: R, atol: R) -> R {
    let n = R::from_usize(v.len().max(1));
    let tiny = R::from_f64(f64::MIN_POSITIVE);
    let s = v.iter().zip(y0.iter().zip(y1)).fold(R::zero(), |acc, (&e, (&a, &b))| {
        let scale = (atol + rtol * a.abs().max(b.abs())).max(tiny);
        let x = e / scale;
        acc + x * x
    });
    (s / n).sqrt()
}

/// Adaptive Dormand–Prince 5(4) solve from `t0` to `t1 ≥ t0`, reported at `outputs`
/// (or at every accepted step when `outputs` is empty) using the embedded dense output.
pub fn rk45_solve<R: Real>(sys: &FirstOrderSystem<R>, f0: &[R], t0: R, t1: R, rtol: f64, atol: f64, outputs: &[R]) -> Result<SolutionTable<R>> {
    check_dim(sys, f0)?;
    if !(rtol > 0.0) || atol < 0.0 || !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("rk45 needs rtol > 0, atol ≥ 0 and t1 ≥ t0 (rtol = {rtol}, atol = {atol})")));
    }
    let kind = StepperKind::Rk45 { rtol, atol };
    let mut table = SolutionTable::new(format!("{kind}"));
    let (rt, at) = (R::from_f64(rtol), R::from_f64(atol));
    let dense = !outputs.is_empty();
    let mut next_out = 0;
    if !dense {
        table.push(t0, f0.to_vec());
    }
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        table.push(outputs[next_out], f0.to_vec());
        next_out += 1;
    }
    if t1 == t0 {
        if table.is_empty() {
            table.push(t0, f0.to_vec());
        }
        return Ok(table);
    }
    let dp = DormandPrince::<R>::new();
    let r = f0.len();
    let mut t = t0;
    let mut y = f0.to_vec();
    let mut k0 = sys.rhs(t, &y)?;
    let mut h = initial_step(sys, t, &y, &k0, rt, at)?.min(t1 - t0);
    let safety = R::from_f64(0.9);
    let (min_factor, max_factor) = (R::from_f64(0.2), R::from_f64(5.0));
    let (alpha, beta) = (R::from_f64(0.7 / 5.0), R::from_f64(0.4 / 5.0));
    let mut err_prev = R::one();
    let floor = R::tol(2);
    loop {
        if h < floor * t.abs().max(R::one()) {
            table.meta.diagnostics.push(Diagnostic::StepUnderflow { t: t.to_f64() });
            break;
        }
        let mut k: Vec<Vec<R>> = Vec::with_capacity(7);
        k.push(k0.clone());
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = dp.a[i][j];
                if a != R::zero() {
                    for c in 0..r {
                        yi[c] += h * a * kj[c];
                    }
                }
            }
            k.push(sys.rhs(t + dp.c[i] * h, &yi)?);
        }
        let mut y_new = y.clone();
        for j in 0..6 {
            let a = dp.a[6][j];
            for c in 0..r {
                y_new[c] += h * a * k[j][c];
            }
        }
        // FSAL: k[6] was evaluated at y_new.
        let err: Vec<R> = (0..r).map(|c| h * (0..7).fold(R::zero(), |acc, j| acc + dp.e[j] * k[j][c])).collect();
        let en = rms_norm(&err, &y, &y_new, rt, at);
        if en <= R::one() {
            let t_new = if t1 - (t + h) <= floor * t1.abs() { t1 } else { t + h };
            while next_out < outputs.len() && outputs[next_out] <= t_new {
                let x = (outputs[next_out] - t) / h;
                let mut v = y.clone();
                let pw = [x, x * x, x * x * x, x * x * x * x];
                for c in 0..r {
                    let mut acc = R::zero();
                    for j in 0..7 {
                        let kj = k[j][c];
                        if kj == R::zero() {
                            continue;
                        }
                        let poly = (0..4).fold(R::zero(), |s, m| s + dp.p[j][m] * pw[m]);
                        acc += kj * poly;
                    }
                    v[c] += h * acc;
                }
                table.push(outputs[next_out], v);
                next_out += 1;
            }
            t = t_new;
            y = y_new;
            k0 = k.pop().unwrap();
            if !dense {
                table.push(t, y.clone());
            }
            if is_blown_up(&y) {
                let index = table.len().saturating_sub(1);
                table.meta.diagnostics.push(Diagnostic::BlowUp { index, t: t.to_f64() });
                break;
            }
            if t >= t1 {
                break;
            }
            let factor = if en == R::zero() {
                max_factor
            } else {
                (safety * en.powf(-alpha) * err_prev.powf(beta)).max(min_factor).min(max_factor)
            };
            err_prev = en.max(R::from_f64(1e-4));
            h = (h * factor).min(t1 - t);
        } else {
            let factor = if en.is_finite() { (safety * en.powf(-R::from_f64(0.2))).max(min_factor) } else { min_factor };
            h *= factor.min(R::one());
        }
    }
    Ok(table)
}

fn initial_step<R: Real>(sys: &FirstOrderSystem<R>, t: R, y: &[R], f0: &[R], rtol: R, atol: R) -> Result<R> {
    let zeros = vec![R::zero(); y.len()];
    let d0 = rms_norm(y, &zeros, y, rtol, atol);
    let d1 = rms_norm(f0, &zeros, y, rtol, atol);
    let small = R::from_f64(1e-5);
    let h0 = if d0 < small || d1 < small { R::from_f64(1e-6) } else { R::from_f64(0.01) * d0 / d1 };
    let y1: Vec<R> = y.iter().zip(f0).map(|(&a, &b)| a + h0 * b).collect();
    let f1 = sys.rhs(t + h0, &y1)?;
    let diff: Vec<R> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = rms_norm(&diff, &zeros, y, rtol, atol) / h0;
    let h1 = if d1.max(d2) <= R::from_f64(1e-15) {
        (h0 * R::from_f64(1e-3)).max(R::from_f64(1e-6))
    } else {
        (R::from_f64(0.01) / d1.max(d2)).powf(R::from_f64(0.2))
    };
    Ok((R::from_f64(100.0) * h0).min(h1))
}

/// `‖x‖₂` of a state, convenience for diagnostics.
pub fn state_norm<R: Real>(f: &[R]) -> R {
    norm2(f)
}

/// Solve `F' = P F` with a constant matrix exactly at step `h` via the Gauss
/// stability function; used to cross-check the tableau.
#[doc(hidden)]
pub fn gauss_scalar_growth<R: Real>(s: usize, z: R) -> Result<R> {
    let sys = FirstOrderSystem::constant(Matrix::from_rows(&[vec![z]]))?;
    let out = gauss_irk_step(&sys, R::zero(), R::one(), &[R::one()], s)?;
    Ok(out[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::operator::{companion_system, ScalarOperator};
    use crate::DoubleDouble;
    use alloc::collections::BTreeMap;

    fn scalar(p: f64) -> FirstOrderSystem<f64> {
        FirstOrderSystem::constant(Matrix::from_rows(&[vec![p]])).unwrap()
    }

    fn airy<R: Real>() -> FirstOrderSystem<R> {
        companion_system(&ScalarOperator::parse("d^2 - t", None, &BTreeMap::new()).unwrap())
    }

    #[test]
    fn euler_examples() {
        assert_eq!(euler_step(&scalar(-1.0), 0.0, 0.1, &[1.0]).unwrap(), vec![0.9]);
        assert_eq!(euler_step(&scalar(0.0), 0.0, 0.1, &[2.5]).unwrap(), vec![2.5]);
        let f = euler_step(&airy::<f64>(), 0.0, 1e-3, &[0.355, -0.259]).unwrap();
        assert!((f[0] - 0.354741).abs() < 1e-15 && f[1] == -0.259);
    }

    #[test]
    fn rk4_matches_quartic_taylor() {
        let f = rk4_step(&scalar(1.0), 0.0, 0.1, &[1.0]).unwrap();
        let expect = 1.0 + 0.1 + 0.005 + 0.1f64.powi(3) / 6.0 + 0.1f64.powi(4) / 24.0;
        assert!((f[0] - expect).abs() < 1e-15);
        assert_eq!(rk4_step(&airy::<f64>(), 0.3, 0.0, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn gauss_reproduces_pade_approximants() {
        type D = DoubleDouble;
        let z = D::from_ratio(1, 10);
        let one = D::one();
        let g1 = gauss_scalar_growth(1, z).unwrap();
        let p1 = (one + z * D::half()) / (one - z * D::half());
        assert!((g1 - p1).abs() < D::tol(8));
        let z2 = z * z / D::from_f64(12.0);
        let p2 = (one + z * D::half() + z2) / (one - z * D::half() + z2);
        let g2 = gauss_scalar_growth(2, z).unwrap();
        assert!((g2 - p2).abs() < D::tol(8));
        assert_eq!(gauss_irk_step(&scalar(1.0), 0.0, 0.0, &[3.0], 3).unwrap(), vec![3.0]);
    }

    #[test]
    fn gauss_tableau_satisfies_order_conditions() {
        type D = DoubleDouble;
        for s in [1, 2, 3, 5] {
            let tab = GaussTableau::<D>::new(s).unwrap();
            for k in 0..2 * s {
                let q = tab.b.iter().zip(&tab.c).fold(D::zero(), |acc, (&b, &c)| acc + b * c.powi(k as i32));
                assert!((q - D::one() / D::from_usize(k + 1)).abs() < D::tol(4), "s={s} k={k}");
            }
        }
    }

    #[test]
    fn propagator_of_euler_and_identity_at_zero_step() {
        let sys = airy::<f64>();
        let q = propagator_matrix(StepperKind::Euler, &sys, 2.0, 0.1).unwrap();
        assert_eq!(q.as_slice(), &[1.0, 0.1, 0.2, 1.0]);
        for kind in [StepperKind::Euler, StepperKind::Rk4, StepperKind::Gauss(2)] {
            assert_eq!(propagator_matrix(kind, &sys, 1.0, 0.0).unwrap(), Matrix::identity(2));
        }
        let inhom = companion_system(&ScalarOperator::<f64>::parse("d - 1", Some("t"), &BTreeMap::new()).unwrap());
        assert_eq!(propagator_matrix(StepperKind::Rk4, &inhom, 0.0, 0.1).unwrap_err(), Error::Inhomogeneous);
    }

    #[test]
    fn rk45_exponential_decay() {
        let table = rk45_solve(&scalar(-1.0), &[1.0], 0.0, 5.0, 1e-6, 1e-10, &[2.5, 5.0]).unwrap();
        assert_eq!(table.times, vec![2.5, 5.0]);
        assert!((table.states[1][0] - (-5.0f64).exp()).abs() <= 1e-5);
        assert!((table.states[0][0] - (-2.5f64).exp()).abs() <= 1e-5);
        let single = rk45_solve(&scalar(-1.0), &[1.0], 0.0, 0.0, 1e-6, 0.0, &[]).unwrap();
        assert_eq!(single.states, vec![vec![1.0]]);
    }

    #[test]
    fn zero_initial_value_stays_zero() {
        let grid = Grid::new(0.0, 0.01, 100).unwrap();
        let t = solve_ivp(StepperKind::Rk4, &airy::<f64>(), &[0.0, 0.0], &grid).unwrap();
        assert!(t.states.iter().all(|s| s.iter().all(|&x| x == 0.0)));
        assert_eq!(t.len(), 101);
    }

    #[test]
    fn blow_up_is_a_diagnostic() {
        let grid = Grid::new(0.0, 1.0, 1000).unwrap();
        let t = solve_ivp(StepperKind::Euler, &scalar(100.0), &[1.0], &grid).unwrap();
        assert!(matches!(t.blow_up(), Some(Diagnostic::BlowUp { .. })));
        assert!(t.len() < 1001);
    }

    #[test]
    fn entrywise_system_matches_companion() {
        let p = vec![Expr::zero(), Expr::Const(1.0), Expr::Var, Expr::zero()];
        let s = FirstOrderSystem::from_entries(2, p, None).unwrap();
        let a = rk4_step(&s, 0.5, 0.1, &[1.0, 0.0]).unwrap();
        let b = rk4_step(&airy::<f64>(), 0.5, 0.1, &[1.0, 0.0]).unwrap();
        assert_eq!(a, b);
    }
}
