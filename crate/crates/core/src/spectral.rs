//! Chebyshev collocation: points of the second kind, barycentric
//! interpolation, rectangular differentiation matrices and the linear
//! boundary/data-value solver built from them.

use crate::linalg::{lu_solve, Matrix};
use crate::operator::{DataPoint, ScalarOperator};
use crate::{Error, Real, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// `n` Chebyshev points of the second kind, ascending, mapped onto `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebGrid<R> {
    /// Points on `[−1, 1]`.
    pub x: Vec<R>,
    pub a: R,
    pub b: R,
}

impl<R: Real> ChebGrid<R> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_t(&self, x: R) -> R {
        self.a + (self.b - self.a) * (x + R::one()) * R::half()
    }

    pub fn to_x(&self, t: R) -> R {
        (t - self.a) * R::two() / (self.b - self.a) - R::one()
    }

    pub fn t(&self, i: usize) -> R {
        self.to_t(self.x[i])
    }

    pub fn nodes(&self) -> Vec<R> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    fn weight(&self, j: usize) -> R {
        let w = if j % 2 == 0 { R::one() } else { -R::one() };
        if j == 0 || j + 1 == self.len() { w * R::half() } else { w }
    }

    /// Interpolation weights `ℓ_j(t)` for all `j`; a unit vector when `t` is a node.
    pub fn interpolation_row(&self, t: R) -> Vec<R> {
        self.interpolation_row_x(self.to_x(t))
    }

    /// As [`Self::interpolation_row`] with the point given on `[−1, 1]`.
    pub fn interpolation_row_x(&self, x: R) -> Vec<R> {
        let mut row = vec![R::zero(); self.len()];
        if let Some(j) = self.x.iter().position(|&xj| xj == x) {
            row[j] = R::one();
            return row;
        }
        let mut denom = R::zero();
        for (j, r) in row.iter_mut().enumerate() {
            *r = self.weight(j) / (x - self.x[j]);
            denom += *r;
        }
        row.iter_mut().for_each(|r| *r /= denom);
        row
    }
}

/// Chebyshev points `X_i = cos(π (n−i−1)/(n−1))` mapped affinely onto `[a, b]`.
pub fn cheb_points<R: Real>(n: usize, a: R, b: R) -> Result<ChebGrid<R>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 Chebyshev points, got {n}")));
    }
    if !(b > a) {
        return Err(Error::InvalidArgument("Chebyshev interval needs a < b".into()));
    }
    let m = R::from_usize(n - 1);
    let x = (0..n)
        .map(|i| match i {
            0 => -R::one(),
            _ if i == n - 1 => R::one(),
            // sin form of cos(π(n−i−1)/(n−1)), exactly antisymmetric about the centre
            _ => (R::pi() * (R::from_usize(2 * i) - m) / (R::two() * m)).sin(),
        })
        .collect();
    Ok(ChebGrid { x, a, b })
}

/// Barycentric interpolant of `values` at `t`.
pub fn barycentric_eval<R: Real>(grid: &ChebGrid<R>, values: &[R], t: R) -> R {
    let x = grid.to_x(t);
    let (mut num, mut den) = (R::zero(), R::zero());
    for (j, (&xj, &fj)) in grid.x.iter().zip(values).enumerate() {
        if x == xj {
            return fj;
        }
        let c = grid.weight(j) / (x - xj);
        num += c * fj;
        den += c;
    }
    num / den
}

/// First-derivative matrix on the grid (in `t`), diagonal by the negative-sum rule.
pub fn diff_matrix<R: Real>(grid: &ChebGrid<R>) -> Matrix<R> {
    let n = grid.len();
    let scale = R::two() / (grid.b - grid.a);
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        let mut diag = R::zero();
        for j in 0..n {
            if i != j {
                let v = grid.weight(j) / grid.weight(i) / (grid.x[i] - grid.x[j]) * scale;
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Resampling matrix from `from` to the points of `to` (row `k` interpolates at `to.t(k)`).
pub fn interpolation_matrix<R: Real>(from: &ChebGrid<R>, to: &ChebGrid<R>) -> Matrix<R> {
    let same = from.a == to.a && from.b == to.b;
    let rows: Vec<Vec<R>> = (0..to.len())
        .map(|k| if same { from.interpolation_row_x(to.x[k]) } else { from.interpolation_row(to.t(k)) })
        .collect();
    Matrix::from_rows(&rows)
}

fn diff_powers<R: Real>(grid: &ChebGrid<R>, max_order: usize) -> Vec<Matrix<R>> {
    let d = diff_matrix(grid);
    let mut out = vec![Matrix::identity(grid.len())];
    for s in 1..=max_order {
        let next = out[s - 1].matmul(&d);
        out.push(next);
    }
    out
}

/// `M(n_out, n; s) = E_{X→Y} · Dˢ`, with `X` the `n` points and `Y` the `n_out` points on `[a, b]`.
pub fn rect_diff_matrix<R: Real>(n_out: usize, n: usize, s: usize, a: R, b: R) -> Result<Matrix<R>> {
    if n_out > n {
        return Err(Error::Dimension(format!("down-sampling {n} points to {n_out}")));
    }
    let x = cheb_points(n, a, b)?;
    let y = cheb_points(n_out, a, b)?;
    let e = interpolation_matrix(&x, &y);
    Ok(e.matmul(&diff_powers(&x, s)[s]))
}

/// Collocation matrix and right-hand side; the last `r` rows carry the conditions.
pub fn assemble_spectral<R: Real>(l: &ScalarOperator<R>, grid: &ChebGrid<R>, conditions: &[DataPoint<R>]) -> Result<(Matrix<R>, Vec<R>)> {
    let (n, r) = (grid.len(), l.rank());
    if conditions.len() != r {
        return Err(Error::Dimension(format!("{} conditions for an operator of rank {r}", conditions.len())));
    }
    if n < r + 2 {
        return Err(Error::Dimension(format!("{n} points are too few for rank {r}")));
    }
    let max_deriv = conditions.iter().map(|c| c.deriv_order).max().unwrap_or(0).max(r);
    let powers = diff_powers(grid, max_deriv);
    let y = cheb_points(n - r, grid.a, grid.b)?;
    let e = interpolation_matrix(grid, &y);
    let mut a = Matrix::zeros(n, n);
    let mut rhs = Vec::with_capacity(n);
    for (s, dpow) in powers.iter().enumerate().take(r + 1) {
        let m = e.matmul(dpow);
        for k in 0..n - r {
            let c = l.coeff_values(y.t(k))[s];
            if c == R::zero() {
                continue;
            }
            for j in 0..n {
                a[(k, j)] += c * m[(k, j)];
            }
        }
    }
    for k in 0..n - r {
        rhs.push(l.rhs().eval(y.t(k)));
    }
    for (i, cond) in conditions.iter().enumerate() {
        let tol = R::tol(2) * (grid.b - grid.a);
        if cond.p < grid.a - tol || cond.p > grid.b + tol {
            return Err(Error::OutOfRange { what: "condition point", value: cond.p.to_f64() });
        }
        let interp = grid.interpolation_row(cond.p);
        let row: Vec<R> = if cond.deriv_order == 0 {
            interp
        } else {
            let dm = &powers[cond.deriv_order];
            (0..n).map(|j| (0..n).fold(R::zero(), |acc, k| acc + interp[k] * dm[(k, j)])).collect()
        };
        a.row_mut(n - r + i).copy_from_slice(&row);
        rhs.push(cond.q);
    }
    Ok((a, rhs))
}

/// Node values of the collocation solution with its barycentric evaluator.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSolution<R> {
    pub grid: ChebGrid<R>,
    pub values: Vec<R>,
    /// `‖A f − B‖₂` of the solved system.
    pub residual: R,
}

impl<R: Real> SpectralSolution<R> {
    pub fn eval(&self, t: R) -> R {
        barycentric_eval(&self.grid, &self.values, t)
    }

    /// Values of the `s`-th derivative at the nodes.
    pub fn derivative_values(&self, s: usize) -> Vec<R> {
        diff_powers(&self.grid, s)[s].matvec(&self.values)
    }
}

pub fn solve_spectral<R: Real>(l: &ScalarOperator<R>, a: R, b: R, n: usize, conditions: &[DataPoint<R>]) -> Result<SpectralSolution<R>> {
    let grid = cheb_points(n, a, b)?;
    let (m, rhs) = assemble_spectral(l, &grid, conditions)?;
    let sol = lu_solve(&m, &rhs)?;
    Ok(SpectralSolution { grid, values: sol.x, residual: sol.residual })
}
