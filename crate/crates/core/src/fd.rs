//! Method A: backward-difference collocation of `L f = b` on a uniform grid,
//! with data points entering as extra rows of one linear system.

use crate::linalg::{lu_solve, Lu, Matrix, Qr};
use crate::operator::{DataPoint, Grid, ScalarOperator};
use crate::steppers::{Diagnostic, SolutionTable};
use crate::{Error, Real, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Stencil shifts `s_k` (`0 ≤ s_k ≤ k`): the k-th derivative at `t_i` is
/// replaced by `∇^k f_{i+s_k} / h^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilPlan<R> {
    pub shifts: Vec<usize>,
    pub normalize_rows: bool,
    /// Unknowns are `u_i = f_i / unknown_scale`.
    pub unknown_scale: R,
    /// Place data points lying between nodes at the nearest node instead of rejecting them.
    pub snap_data: bool,
}

impl<R: Real> StencilPlan<R> {
    /// `s_k = ⌊k/2⌋`, row normalization on.
    pub fn centered(rank: usize) -> Self {
        StencilPlan { shifts: (0..=rank).map(|k| k / 2).collect(), normalize_rows: true, unknown_scale: R::one(), snap_data: false }
    }

    pub fn new(shifts: Vec<usize>, normalize_rows: bool) -> Result<Self> {
        if let Some((k, s)) = shifts.iter().enumerate().find(|(k, s)| **s > *k) {
            return Err(Error::InvalidArgument(format!("stencil shift s_{k} = {s} exceeds {k}")));
        }
        Ok(StencilPlan { shifts, normalize_rows, unknown_scale: R::one(), snap_data: false })
    }

    pub fn with_unknown_scale(mut self, scale: R) -> Self {
        self.unknown_scale = scale;
        self
    }

    pub fn with_snapping(mut self, snap: bool) -> Self {
        self.snap_data = snap;
        self
    }

    fn shift(&self, k: usize) -> Result<usize> {
        self.shifts.get(k).copied().ok_or_else(|| Error::InvalidArgument(format!("no stencil shift for order {k}")))
    }
}

/// Sparse row `Σ entries[j].1 · f_{entries[j].0} = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow<R> {
    pub entries: Vec<(usize, R)>,
    pub rhs: R,
}

impl<R: Real> SparseRow<R> {
    fn add(&mut self, col: usize, v: R) {
        match self.entries.iter_mut().find(|(c, _)| *c == col) {
            Some((_, e)) => *e += v,
            None => self.entries.push((col, v)),
        }
    }

    /// `Σ a_j f_j − rhs` for a full vector `f`.
    pub fn residual(&self, f: &[R]) -> R {
        self.entries.iter().fold(-self.rhs, |acc, &(c, a)| acc + a * f[c])
    }
}

/// Where a row of the assembled system came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOrigin {
    /// Difference equation at node `i`.
    Equation(usize),
    /// Data point number `j` (in input order).
    Constraint(usize),
}

#[derive(Clone, Debug)]
pub struct AssembledSystem<R> {
    pub a: Matrix<R>,
    pub b: Vec<R>,
    pub provenance: Vec<RowOrigin>,
    pub least_squares: bool,
    /// `None` when the matrix could not be factored.
    pub condition: Option<R>,
    pub grid: Grid<R>,
    pub unknown_scale: R,
}

impl<R: Real> AssembledSystem<R> {
    pub fn equation_rows(&self) -> usize {
        self.provenance.iter().filter(|o| matches!(o, RowOrigin::Equation(_))).count()
    }
}

fn binomial<R: Real>(k: usize, j: usize) -> R {
    let mut c = R::one();
    for i in 0..j {
        c = c * R::from_usize(k - i) / R::from_usize(i + 1);
    }
    c
}

fn add_difference<R: Real>(row: &mut SparseRow<R>, top: usize, k: usize, weight: R, h: R) {
    let hk = h.powi(k as i32);
    for j in 0..=k {
        let sign = if j % 2 == 0 { R::one() } else { -R::one() };
        row.add(top - j, weight * sign * binomial::<R>(k, j) / hk);
    }
}

/// The difference equation at node `i`.
pub fn difference_row<R: Real>(l: &ScalarOperator<R>, grid: &Grid<R>, i: usize, plan: &StencilPlan<R>) -> Result<SparseRow<R>> {
    let t = grid.node(i);
    let c = l.coeff_values(t);
    let mut row = SparseRow { entries: Vec::new(), rhs: l.rhs().eval(t) };
    for (k, &ck) in c.iter().enumerate() {
        if ck == R::zero() {
            continue;
        }
        if !ck.is_finite() {
            return Err(Error::SingularPoint(t.to_f64()));
        }
        let top = i + plan.shift(k)?;
        if top < k || top > grid.n {
            return Err(Error::StencilOutOfRange(i));
        }
        add_difference(&mut row, top, k, ck, grid.h);
    }
    Ok(row)
}

/// Constraint row for a data point; derivative data use the plan's stencil for that order.
fn constraint_row<R: Real>(d: &DataPoint<R>, node: usize, grid: &Grid<R>, plan: &StencilPlan<R>) -> Result<SparseRow<R>> {
    let mut row = SparseRow { entries: Vec::new(), rhs: d.q };
    if d.deriv_order == 0 {
        row.add(node, R::one());
        return Ok(row);
    }
    let k = d.deriv_order;
    let top = node + plan.shift(k)?;
    if top < k || top > grid.n {
        return Err(Error::StencilOutOfRange(node));
    }
    add_difference(&mut row, top, k, R::one(), grid.h);
    Ok(row)
}

fn locate<R: Real>(grid: &Grid<R>, p: R, snap: bool) -> Option<usize> {
    if !snap {
        return grid.index_of(p);
    }
    let x = ((p - grid.t_start) / grid.h).round().to_f64();
    (0.0..=grid.n as f64).contains(&x).then_some(x as usize)
}

/// Difference rows at every node whose stencil fits, followed by one row per data point.
pub fn assemble_method_a<R: Real>(l: &ScalarOperator<R>, grid: &Grid<R>, data: &[DataPoint<R>], plan: &StencilPlan<R>) -> Result<AssembledSystem<R>> {
    let unknowns = grid.n + 1;
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    for i in 0..=grid.n {
        match difference_row(l, grid, i, plan) {
            Ok(r) => {
                rows.push(r);
                provenance.push(RowOrigin::Equation(i));
            }
            Err(Error::StencilOutOfRange(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (j, d) in data.iter().enumerate() {
        let node = locate(grid, d.p, plan.snap_data).ok_or(Error::OffGrid(d.p.to_f64()))?;
        if seen.contains(&(node, d.deriv_order)) {
            return Err(Error::DuplicateConstraint(node));
        }
        seen.push((node, d.deriv_order));
        rows.push(constraint_row(d, node, grid, plan)?);
        provenance.push(RowOrigin::Constraint(j));
    }
    if rows.len() < unknowns {
        return Err(Error::Underdetermined { rows: rows.len(), unknowns });
    }
    let mut a = Matrix::zeros(rows.len(), unknowns);
    let mut b = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let scale = if plan.normalize_rows {
            row.entries.iter().fold(R::zero(), |m, &(_, v)| m.max((v * plan.unknown_scale).abs()))
        } else {
            R::one()
        };
        let scale = if scale == R::zero() { R::one() } else { scale };
        for &(c, v) in &row.entries {
            a[(i, c)] = v * plan.unknown_scale / scale;
        }
        b.push(row.rhs / scale);
    }
    let least_squares = rows.len() != unknowns;
    let condition = if least_squares {
        Qr::factor(&a).ok().map(|q| q.condition_estimate())
    } else {
        Lu::factor(&a).ok().map(|lu| lu.condition_estimate(&a))
    };
    Ok(AssembledSystem { a, b, provenance, least_squares, condition, grid: *grid, unknown_scale: plan.unknown_scale })
}

/// Solve the assembled system (LU when square, QR least squares otherwise).
pub fn solve_method_a<R: Real>(sys: &AssembledSystem<R>) -> Result<SolutionTable<R>> {
    let (u, residual) = if sys.least_squares {
        let (x, r) = Qr::factor(&sys.a)?.solve(&sys.b);
        (x, r)
    } else {
        let s = lu_solve(&sys.a, &sys.b)?;
        (s.x, s.residual)
    };
    let mut table = SolutionTable::new("method-a");
    for (i, ui) in u.iter().enumerate() {
        table.push(sys.grid.node(i), vec![*ui * sys.unknown_scale]);
    }
    table.meta.diagnostics.push(Diagnostic::Note(format!("residual = {:e}", residual.to_f64())));
    table.meta.diagnostics.push(Diagnostic::Note(format!("condition estimate = {:e}", sys.condition.map_or(f64::INFINITY, |c| c.to_f64()))));
    Ok(table)
}
