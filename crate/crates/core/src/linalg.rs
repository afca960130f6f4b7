//! Dense linear algebra over [`Real`]: LU with partial pivoting, Householder
//! least squares, and real eigen decompositions.

use crate::{Error, Real, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Build from row vectors; panics on ragged input.
    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn diagonal(d: &[R]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [R] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[R]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == R::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn scale(&self, c: R) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * c).collect() }
    }

    pub fn frobenius_norm(&self) -> R {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> R {
        (0..self.cols).fold(R::zero(), |m, j| {
            let s = (0..self.rows).fold(R::zero(), |acc, i| acc + self[(i, j)].abs());
            m.max(s)
        })
    }

    /// Stack `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Copy of the rows selected by `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn convert<S: Real>(&self) -> Matrix<S> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.convert()).collect() }
    }
}

impl<R> Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Matrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm, scaled to avoid overflow.
pub fn norm2<R: Real>(v: &[R]) -> R {
    let m = v.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
    if m == R::zero() || !m.is_finite() {
        return m;
    }
    let s = v.iter().fold(R::zero(), |acc, &x| {
        let y = x / m;
        acc + y * y
    });
    m * s.sqrt()
}

pub fn axpy<R: Real>(a: R, x: &[R], y: &mut [R]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub_vec<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// LU factorization `P·A = L·U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<R> {
    lu: Matrix<R>,
    perm: Vec<usize>,
}

impl<R: Real> Lu<R> {
    pub fn factor(a: &Matrix<R>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() || best.is_nan() {
                return Err(Error::SingularMatrix(k));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[(k, k)];
            let (head, tail) = lu.data.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..(k + 1) * n];
            for row_i in tail.chunks_mut(n) {
                let l = row_i[k] / pivot;
                row_i[k] = l;
                if l == R::zero() {
                    continue;
                }
                for (x, &u) in row_i[k + 1..].iter_mut().zip(&row_k[k + 1..]) {
                    *x -= l * u;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[R]) -> Vec<R> {
        let n = self.dim();
        let mut x: Vec<R> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[R]) -> Vec<R> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![R::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    pub fn solve_matrix(&self, b: &Matrix<R>) -> Matrix<R> {
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            out.set_column(j, &self.solve(&b.column(j)));
        }
        out
    }

    pub fn inverse(&self) -> Matrix<R> {
        self.solve_matrix(&Matrix::identity(self.dim()))
    }

    /// Hager's estimate of `‖A‖₁·‖A⁻¹‖₁`.
    pub fn condition_estimate(&self, a: &Matrix<R>) -> R {
        let n = self.dim();
        let inv_n = R::one() / R::from_usize(n);
        let mut x = vec![inv_n; n];
        let mut est = R::zero();
        for _ in 0..5 {
            let y = self.solve(&x);
            let new_est = y.iter().fold(R::zero(), |s, &v| s + v.abs());
            let xi: Vec<R> = y.iter().map(|&v| v.signum()).collect();
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, R::zero()), |(bj, bv), (j, &v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
            let ztx = dot(&z, &x);
            if new_est <= est || zmax <= ztx {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            x = vec![R::zero(); n];
            x[jmax] = R::one();
        }
        a.norm_1() * est
    }
}

/// Solution of a square system with its residual diagnostics.
#[derive(Clone, Debug)]
pub struct LinearSolution<R> {
    pub x: Vec<R>,
    /// `‖A x − b‖₂`.
    pub residual: R,
    /// `‖A x − b‖₂ / (‖A‖_F ‖x‖₂)`, comparable against `tol_lin`.
    pub relative_residual: R,
}

pub fn lu_solve<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<LinearSolution<R>> {
    if b.len() != a.rows {
        return Err(Error::Dimension(format!("right-hand side has {} entries, matrix has {} rows", b.len(), a.rows)));
    }
    let lu = Lu::factor(a)?;
    let x = lu.solve(b);
    Ok(with_residual(a, b, x))
}

fn with_residual<R: Real>(a: &Matrix<R>, b: &[R], x: Vec<R>) -> LinearSolution<R> {
    let r = sub_vec(&a.matvec(&x), b);
    let residual = norm2(&r);
    let scale = a.frobenius_norm() * norm2(&x);
    let relative_residual = if scale == R::zero() { residual } else { residual / scale };
    LinearSolution { x, residual, relative_residual }
}

/// Householder QR of an `m×n` matrix, `m ≥ n`, stored compactly.
#[derive(Clone, Debug)]
pub struct Qr<R> {
    qr: Matrix<R>,
    betas: Vec<R>,
    diag: Vec<R>,
}

impl<R: Real> Qr<R> {
    pub fn factor(a: &Matrix<R>) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::Dimension(format!("least squares needs rows ≥ cols, got {m}x{n}")));
        }
        let col_norms: Vec<R> = (0..n).map(|j| norm2(&a.column(j))).collect();
        let mut qr = a.clone();
        let mut betas = vec![R::zero(); n];
        let mut diag = vec![R::zero(); n];
        let tol = R::tol(2);
        for k in 0..n {
            let x: Vec<R> = (k..m).map(|i| qr[(i, k)]).collect();
            let alpha = norm2(&x);
            if col_norms[k] == R::zero() || alpha <= tol * col_norms[k] {
                return Err(Error::RankDeficient(k));
            }
            let alpha = if x[0] > R::zero() { -alpha } else { alpha };
            let v0 = x[0] - alpha;
            // v = (v0, x[1..]); H = I − β v vᵀ with β = 1/(−alpha·v0)
            let beta = R::one() / (-alpha * v0);
            qr[(k, k)] = v0;
            for j in k + 1..n {
                let mut s = R::zero();
                for i in k..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                let f = s * beta;
                for i in k..m {
                    let vi = qr[(i, k)];
                    qr[(i, j)] -= f * vi;
                }
            }
            betas[k] = beta;
            diag[k] = alpha;
        }
        Ok(Qr { qr, betas, diag })
    }

    /// Apply `Qᵀ` to a vector of length `m`.
    pub fn apply_qt(&self, b: &[R]) -> Vec<R> {
        let (m, n) = (self.qr.rows, self.qr.cols);
        let mut y = b.to_vec();
        for k in 0..n {
            let mut s = R::zero();
            for i in k..m {
                s += self.qr[(i, k)] * y[i];
            }
            let f = s * self.betas[k];
            for i in k..m {
                y[i] -= f * self.qr[(i, k)];
            }
        }
        y
    }

    /// Minimizer of `‖A x − b‖₂` and the residual norm.
    pub fn solve(&self, b: &[R]) -> (Vec<R>, R) {
        let n = self.qr.cols;
        let y = self.apply_qt(b);
        let mut x = vec![R::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.qr[(i, j)] * x[j];
            }
            x[i] = s / self.diag[i];
        }
        let residual = norm2(&y[n..]);
        (x, residual)
    }

    /// Hager-style estimate of the 2-norm condition of `R` via explicit inversion of the triangle.
    pub fn condition_estimate(&self) -> R {
        let n = self.qr.cols;
        let mut r = Matrix::zeros(n, n);
        for i in 0..n {
            r[(i, i)] = self.diag[i];
            for j in i + 1..n {
                r[(i, j)] = self.qr[(i, j)];
            }
        }
        match Lu::factor(&r) {
            Ok(lu) => lu.condition_estimate(&r),
            Err(_) => R::from_f64(f64::INFINITY),
        }
    }
}

pub fn qr_least_squares<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<(Vec<R>, R)> {
    if b.len() != a.rows {
        return Err(Error::Dimension(format!("right-hand side has {} entries, matrix has {} rows", b.len(), a.rows)));
    }
    Ok(Qr::factor(a)?.solve(b))
}

/// Orthonormal basis of the null space of a full-row-rank `p×m` matrix (`p ≤ m`),
/// together with the minimum-norm solution of `C x = d`.
pub fn null_space_and_min_norm<R: Real>(c: &Matrix<R>, d: &[R]) -> Result<(Matrix<R>, Vec<R>)> {
    let (p, m) = (c.rows, c.cols);
    if p > m {
        return Err(Error::Dimension(format!("{p} constraints for {m} unknowns")));
    }
    let ct = c.transpose();
    let qr = Qr::factor(&ct)?;
    let mut q = Matrix::zeros(m, m);
    for j in 0..m {
        let mut e = vec![R::zero(); m];
        e[j] = R::one();
        // Q = H_1 ⋯ H_p; Qᵀ is symmetric-applied, so Q e_j = (Qᵀ)ᵀ e_j: apply reflectors in reverse.
        for k in (0..p).rev() {
            let mut s = R::zero();
            for i in k..m {
                s += qr.qr[(i, k)] * e[i];
            }
            let f = s * qr.betas[k];
            for i in k..m {
                e[i] -= f * qr.qr[(i, k)];
            }
        }
        q.set_column(j, &e);
    }
    // C x = d  ⇔  Rᵀ (Q₁ᵀ x) = d
    let mut z = vec![R::zero(); p];
    for i in 0..p {
        let mut s = d[i];
        for k in 0..i {
            s -= qr.qr[(k, i)] * z[k];
        }
        z[i] = s / qr.diag[i];
    }
    let mut x = vec![R::zero(); m];
    for k in 0..p {
        let col = q.column(k);
        axpy(z[k], &col, &mut x);
    }
    let null = Matrix::from_fn(m, m - p, |i, j| q[(i, p + j)]);
    Ok((null, x))
}

/// Cyclic Jacobi eigen decomposition of a symmetric matrix: `(values, vectors as columns)`.
pub fn symmetric_eigen<R: Real>(s: &Matrix<R>) -> (Vec<R>, Matrix<R>) {
    let n = s.rows;
    let mut a = s.clone();
    let mut v = Matrix::identity(n);
    let eps = R::epsilon();
    for _sweep in 0..100 {
        let mut off = R::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        let total = a.frobenius_norm();
        if off.sqrt() <= eps * total || off == R::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == R::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (R::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let c = R::one() / (t * t + R::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Real eigenvalues and eigenvectors of a matrix with real, distinct spectrum.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<R> {
    /// Sorted by decreasing magnitude.
    pub eigenvalues: Vec<R>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`, scaled so that its
    /// largest-magnitude entry is exactly `+1`.
    pub vectors: Matrix<R>,
    /// `max_i ‖Q v_i − λ_i v_i‖₂ / ‖Q‖_F`.
    pub residual: R,
}

impl<R: Real> EigenDecomposition<R> {
    pub fn vector(&self, i: usize) -> Vec<R> {
        self.vectors.column(i)
    }

    /// `V · diag(λ) · V⁻¹`.
    pub fn reconstruct(&self) -> Result<Matrix<R>> {
        let lu = Lu::factor(&self.vectors)?;
        let vinv = lu.inverse();
        let vd = Matrix::from_fn(self.vectors.rows, self.vectors.cols, |i, j| self.vectors[(i, j)] * self.eigenvalues[j]);
        Ok(vd.matmul(&vinv))
    }
}

/// Options for [`real_eigen_with`].
#[derive(Clone, Copy, Debug)]
pub struct EigenOptions<R> {
    /// Residual tolerance relative to `‖Q‖`; default `10^(4−D)`.
    pub tol: R,
    pub max_sweeps: usize,
}

impl<R: Real> EigenOptions<R> {
    pub fn for_dim(r: usize) -> Self {
        EigenOptions { tol: R::tol(4), max_sweeps: 100 * r * r }
    }
}

pub fn real_eigen<R: Real>(q: &Matrix<R>) -> Result<EigenDecomposition<R>> {
    real_eigen_with(q, EigenOptions::for_dim(q.rows))
}

pub fn real_eigen_with<R: Real>(q: &Matrix<R>, opts: EigenOptions<R>) -> Result<EigenDecomposition<R>> {
    let r = q.rows;
    if !q.is_square() || r == 0 {
        return Err(Error::Dimension(format!("eigen problem needs a nonempty square matrix, got {}x{}", q.rows, q.cols)));
    }
    if r > 64 {
        return Err(Error::Dimension(format!("eigen solver supports r ≤ 64, got {r}")));
    }
    if !q.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut values = hessenberg_qr_eigenvalues(q, opts.max_sweeps)?;
    values.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap_or(core::cmp::Ordering::Equal));
    for i in 0..r.saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        let scale = a.abs();
        if (a - b).abs() <= opts.tol * scale || (a.abs() - b.abs()).abs() <= opts.tol * scale {
            return Err(Error::RepeatedEigenvalue(i, i + 1));
        }
    }
    let qnorm = q.frobenius_norm();
    let mut vectors = Matrix::zeros(r, r);
    let mut residual = R::zero();
    for (i, &lambda) in values.iter().enumerate() {
        let v = inverse_iteration(q, lambda, qnorm)?;
        let qv = q.matvec(&v);
        let res: Vec<R> = qv.iter().zip(&v).map(|(&a, &b)| a - lambda * b).collect();
        let rel = if qnorm == R::zero() { norm2(&res) } else { norm2(&res) / qnorm };
        residual = residual.max(rel);
        vectors.set_column(i, &v);
    }
    if residual > opts.tol {
        return Err(Error::EigenResidual { residual: residual.to_f64(), tolerance: opts.tol.to_f64() });
    }
    Ok(EigenDecomposition { eigenvalues: values, vectors, residual })
}

fn inverse_iteration<R: Real>(q: &Matrix<R>, lambda: R, qnorm: R) -> Result<Vec<R>> {
    let r = q.rows;
    let shifted = |mu: R| {
        let mut m = q.clone();
        for i in 0..r {
            m[(i, i)] -= mu;
        }
        m
    };
    let lu = match Lu::factor(&shifted(lambda)) {
        Ok(lu) => lu,
        Err(_) => {
            let bump = R::epsilon() * qnorm.max(lambda.abs()).max(R::one());
            Lu::factor(&shifted(lambda + bump))?
        }
    };
    let mut x: Vec<R> = (0..r).map(|i| R::one() + R::from_ratio((i as i64 * 7919) % 101, 211)).collect();
    for _ in 0..4 {
        let y = lu.solve(&x);
        let n = y.iter().fold(R::zero(), |m, &v| m.max(v.abs()));
        if n == R::zero() || !n.is_finite() {
            break;
        }
        x = y.iter().map(|&v| v / n).collect();
    }
    let (imax, _) = x.iter().enumerate().fold((0, R::zero()), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let pivot = x[imax];
    let mut v: Vec<R> = x.iter().map(|&c| c / pivot).collect();
    v[imax] = R::one();
    Ok(v)
}

/// Balancing, Hessenberg reduction by stabilized elimination, then Francis
/// double-shift QR. Returns the eigenvalues or a complex-spectrum error.
fn hessenberg_qr_eigenvalues<R: Real>(q: &Matrix<R>, max_sweeps: usize) -> Result<Vec<R>> {
    let n = q.rows;
    if n == 1 {
        return Ok(vec![q[(0, 0)]]);
    }
    // 1-based working copy.
    let mut a = vec![vec![R::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = q[(i, j)];
        }
    }
    balance(&mut a, n);
    elmhes(&mut a, n);
    for i in 3..=n {
        for j in 1..i - 1 {
            a[i][j] = R::zero();
        }
    }
    hqr(&mut a, n, max_sweeps)
}

fn balance<R: Real>(a: &mut [Vec<R>], n: usize) {
    let radix = R::two();
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = R::zero();
            let mut c = R::zero();
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != R::zero() && r != R::zero() {
                let mut g = r / radix;
                let mut f = R::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < R::from_f64(0.95) * s {
                    done = false;
                    let g = R::one() / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn elmhes<R: Real>(a: &mut [Vec<R>], n: usize) {
    for m in 2..n {
        let mut x = R::zero();
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for j in 1..=n {
                let t = a[j][i];
                a[j][i] = a[j][m];
                a[j][m] = t;
            }
        }
        if x != R::zero() {
            for i in m + 1..=n {
                let mut y = a[i][m - 1];
                if y != R::zero() {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        let t = a[m][j];
                        a[i][j] -= y * t;
                    }
                    for j in 1..=n {
                        let t = a[j][i];
                        a[j][m] += y * t;
                    }
                }
            }
        }
    }
}

fn sign<R: Real>(a: R, b: R) -> R {
    if b >= R::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr<R: Real>(a: &mut [Vec<R>], n: usize, max_sweeps: usize) -> Result<Vec<R>> {
    let zero = R::zero();
    let mut wr = vec![zero; n + 1];
    let mut anorm = zero;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = zero;
    let mut sweeps = 0usize;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    while nn >= 1 {
        let mut its = 0usize;
        let mut l;
        loop {
            l = nn;
            while l >= 2 {
                s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == zero {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = zero;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = R::half() * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= zero {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != zero {
                            wr[nn] = x - w / z;
                        }
                    } else {
                        return Err(Error::ComplexSpectrum { re: (x + p).to_f64(), im: z.to_f64() });
                    }
                    nn -= 2;
                } else {
                    if sweeps >= max_sweeps {
                        return Err(Error::NoConvergence(sweeps));
                    }
                    if its > 0 && its % 10 == 0 {
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = R::from_f64(0.75) * s;
                        y = x;
                        w = R::from_f64(-0.4375) * s * s;
                    }
                    its += 1;
                    sweeps += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = zero;
                        if i != m + 2 {
                            a[i][i - 3] = zero;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = zero;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != zero {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != zero {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DoubleDouble;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn lu_small_systems() {
        let x = lu_solve(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap().x;
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let x = lu_solve(&m(&[&[2.0, 0.0], &[0.0, 4.0]]), &[2.0, 8.0]).unwrap().x;
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn singular_matrix_reports_the_column() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(lu_solve(&a, &[1.0, 1.0]).unwrap_err(), Error::SingularMatrix(1));
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = m(&[&[4.0, 1.0, 2.0], &[0.5, 3.0, -1.0], &[2.0, -2.0, 5.0]]);
        let lu = Lu::factor(&a).unwrap();
        let b = [1.0, -2.0, 0.25];
        let x = lu.solve_transpose(&b);
        let back = a.transpose().matvec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
        let cond = lu.condition_estimate(&a);
        let exact = a.norm_1() * lu.inverse().norm_1();
        assert!(cond <= exact * (1.0 + 1e-12) && cond >= exact / 3.0);
    }

    #[test]
    fn mean_as_least_squares() {
        let a = Matrix::from_fn(3, 1, |_, _| 1.0);
        let (x, res) = qr_least_squares(&a, &[0.0, 1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((res - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_names_the_column() {
        let a = m(&[&[1.0, 2.0, 0.0], &[1.0, 2.0, 1.0], &[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]]);
        assert_eq!(qr_least_squares(&a, &[0.0; 4]).unwrap_err(), Error::RankDeficient(1));
    }

    #[test]
    fn diagonal_and_companion_spectra() {
        let e = real_eigen(&Matrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
        for i in 0..3 {
            let v = e.vector(i);
            let expect_at = [0, 2, 1][i];
            for (j, c) in v.iter().enumerate() {
                if j == expect_at {
                    assert_eq!(*c, 1.0);
                } else {
                    assert!(c.abs() < 1e-14);
                }
            }
        }
        let c = m(&[&[0.0, 1.0], &[-6.0, 5.0]]);
        let e = real_eigen(&c).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-13);
        assert!((e.eigenvalues[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rotation_has_complex_spectrum() {
        let c = m(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(matches!(real_eigen(&c), Err(Error::ComplexSpectrum { .. })));
    }

    #[test]
    fn ties_are_rejected() {
        let c = Matrix::diagonal(&[2.0, 2.0, 1.0]);
        assert_eq!(real_eigen(&c).unwrap_err(), Error::RepeatedEigenvalue(0, 1));
    }

    #[test]
    fn larger_nonsymmetric_matrix_reconstructs() {
        type D = DoubleDouble;
        let n = 7;
        // Upper-triangular spectrum conjugated by a fixed well-conditioned matrix.
        let t = Matrix::<D>::from_fn(n, n, |i, j| {
            if i == j {
                D::from_f64((n - i) as f64 * 1.5)
            } else if j > i {
                D::from_ratio(((i * 3 + j * 5) % 7) as i64, 3)
            } else {
                D::zero()
            }
        });
        let s = Matrix::<D>::from_fn(n, n, |i, j| if i == j { D::from_f64(4.0) } else { D::from_ratio(((i + 2 * j) % 5) as i64 - 2, 4) });
        let sinv = Lu::factor(&s).unwrap().inverse();
        let a = s.matmul(&t).matmul(&sinv);
        let e = real_eigen(&a).unwrap();
        for (i, l) in e.eigenvalues.iter().enumerate() {
            assert!((*l - D::from_f64((n - i) as f64 * 1.5)).abs() < D::tol(6));
        }
        let back = e.reconstruct().unwrap();
        assert!(back.sub(&a).frobenius_norm() < D::tol(6) * a.frobenius_norm());
    }

    #[test]
    fn null_space_is_orthogonal_to_constraints() {
        let c = m(&[&[1.0, 1.0, 1.0, 1.0], &[0.0, 1.0, 2.0, 3.0]]);
        let (z, x) = null_space_and_min_norm(&c, &[1.0, 2.0]).unwrap();
        assert_eq!((z.rows(), z.cols()), (4, 2));
        let cz = c.matmul(&z);
        assert!(cz.max_abs() < 1e-14);
        let cx = c.matvec(&x);
        assert!((cx[0] - 1.0).abs() < 1e-14 && (cx[1] - 2.0).abs() < 1e-14);
        // minimum norm: x ⟂ null space
        for j in 0..2 {
            assert!(dot(&z.column(j), &x).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobi_diagonalizes_symmetric_matrices() {
        let s = m(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let (vals, vecs) = symmetric_eigen(&s);
        for i in 0..3 {
            let v = vecs.column(i);
            let sv = s.matvec(&v);
            for k in 0..3 {
                assert!((sv[k] - vals[i] * v[k]).abs() < 1e-13);
            }
        }
    }
}
