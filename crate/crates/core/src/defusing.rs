//! The defusing (filter) method: eigen-filter the initial vector through the
//! matrix factorial so that fast-growing modes are never excited.

use crate::linalg::{lu_solve, norm2, real_eigen, EigenDecomposition, Matrix};
use crate::operator::{FirstOrderSystem, Grid};
use crate::steppers::{is_blown_up, solve_ivp, SolutionTable, Stepper, StepperKind};
use crate::{Error, Real, Result};
use alloc::vec::Vec;

/// Ordered product `Q = Q(N−1,h) ⋯ Q(0,h)` of one-step propagators.
#[derive(Clone, Debug)]
pub struct MatrixFactorial<R> {
    pub q: Matrix<R>,
    pub grid: Grid<R>,
    pub stepper: StepperKind,
    pub eigen: EigenDecomposition<R>,
    /// `(k, Q(k−1,h) ⋯ Q(0,h))` for every `k` divisible by the checkpoint stride, plus `k = N`.
    pub checkpoints: Vec<(usize, Matrix<R>)>,
}

/// Checkpoint stride `max(1, N/1000)`.
pub fn checkpoint_stride(n: usize) -> usize {
    (n / 1000).max(1)
}

/// The product alone, with checkpoints; no eigen decomposition.
pub fn propagator_product<R: Real>(kind: StepperKind, sys: &FirstOrderSystem<R>, grid: &Grid<R>) -> Result<(Matrix<R>, Vec<(usize, Matrix<R>)>)> {
    let stepper = Stepper::new(kind)?;
    let r = sys.dim();
    let stride = checkpoint_stride(grid.n);
    let mut q = Matrix::identity(r);
    let mut checkpoints = alloc::vec![(0, q.clone())];
    for k in 0..grid.n {
        let step = stepper.propagator(sys, grid.node(k), grid.h)?;
        q = step.matmul(&q);
        if is_blown_up(q.as_slice()) {
            return Err(Error::Overflow(k + 1));
        }
        if (k + 1) % stride == 0 || k + 1 == grid.n {
            checkpoints.push((k + 1, q.clone()));
        }
    }
    Ok((q, checkpoints))
}

pub fn matrix_factorial<R: Real>(kind: StepperKind, sys: &FirstOrderSystem<R>, grid: &Grid<R>) -> Result<MatrixFactorial<R>> {
    let (q, checkpoints) = propagator_product(kind, sys, grid)?;
    let eigen = real_eigen(&q)?;
    Ok(MatrixFactorial { q, grid: *grid, stepper: kind, eigen, checkpoints })
}

impl<R: Real> MatrixFactorial<R> {
    /// States `Q_k F0` at the checkpoint nodes.
    pub fn checkpoint_states(&self, f0: &[R]) -> Vec<(R, Vec<R>)> {
        self.checkpoints.iter().map(|(k, m)| (self.grid.node(*k), m.matvec(f0))).collect()
    }
}

/// Where to cut the spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cut<R> {
    /// Cut at the smallest ratio `|λ_{i+1}| / |λ_i|`.
    SpectralGap,
    /// Retain eigenvalues with `|λ| ≤ τ`.
    Threshold(R),
    /// Retain from this (0-based) index on.
    Fixed(usize),
}

/// How to scale the filtered vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scaling {
    /// Make component `j` (0-based) equal to that of the original initial vector.
    MatchComponent(usize),
    /// Keep the projection as is (`c = 1`).
    UnitProjection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefusePolicy<R> {
    pub cut: Cut<R>,
    pub scaling: Scaling,
}

impl<R: Real> Default for DefusePolicy<R> {
    fn default() -> Self {
        DefusePolicy { cut: Cut::SpectralGap, scaling: Scaling::MatchComponent(0) }
    }
}

/// Result of filtering an initial vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DefusedInitial<R> {
    pub f0: Vec<R>,
    /// 0-based index of the first retained eigenvalue.
    pub m: usize,
    pub c: R,
    /// Expansion coefficients `f = V⁻¹ F0`.
    pub coefficients: Vec<R>,
}

fn cut_index<R: Real>(eigen: &EigenDecomposition<R>, cut: Cut<R>) -> Result<usize> {
    let lambda = &eigen.eigenvalues;
    let r = lambda.len();
    match cut {
        Cut::Fixed(m) => Ok(m),
        Cut::Threshold(tau) => {
            if !(tau > R::zero()) {
                return Err(Error::InvalidArgument("threshold must be positive".into()));
            }
            Ok(lambda.iter().position(|l| l.abs() <= tau).unwrap_or(r))
        }
        Cut::SpectralGap => {
            if r < 2 {
                return Ok(0);
            }
            let mut best = 0;
            let mut best_ratio = f64::INFINITY;
            for i in 0..r - 1 {
                let ratio = lambda[i + 1].abs().log10_abs() - lambda[i].abs().log10_abs();
                if ratio < best_ratio {
                    best_ratio = ratio;
                    best = i;
                }
            }
            Ok(best + 1)
        }
    }
}

pub fn defuse_initial_value<R: Real>(mf: &MatrixFactorial<R>, f0: &[R], policy: DefusePolicy<R>) -> Result<DefusedInitial<R>> {
    let eigen = &mf.eigen;
    let r = eigen.eigenvalues.len();
    if f0.len() != r {
        return Err(Error::Dimension(alloc::format!("initial vector has {} entries, factorial is {r}x{r}", f0.len())));
    }
    let m = cut_index(eigen, policy.cut)?;
    if m >= r {
        return Err(Error::NothingRetained { m, r });
    }
    let coefficients = lu_solve(&eigen.vectors, f0)?.x;
    let mut retained = alloc::vec![R::zero(); r];
    for i in m..r {
        let v = eigen.vector(i);
        for (x, vi) in retained.iter_mut().zip(v) {
            *x += coefficients[i] * vi;
        }
    }
    let f0_norm = norm2(f0);
    let floor = R::tol(4) * f0_norm;
    let c = match policy.scaling {
        Scaling::MatchComponent(j) => {
            if j >= r {
                return Err(Error::InvalidArgument(alloc::format!("component {j} out of range")));
            }
            if retained[j].abs() <= floor {
                return Err(Error::DegenerateScaling);
            }
            f0[j] / retained[j]
        }
        Scaling::UnitProjection => {
            if norm2(&retained) <= floor {
                return Err(Error::NothingRetained { m, r });
            }
            R::one()
        }
    };
    let f0 = retained.iter().map(|&x| c * x).collect();
    Ok(DefusedInitial { f0, m, c, coefficients })
}

/// Filtered solve: the factorial, the filtered initial vector and the repropagated trajectory.
#[derive(Clone, Debug)]
pub struct DefusedSolution<R> {
    pub factorial: MatrixFactorial<R>,
    pub initial: DefusedInitial<R>,
    pub table: SolutionTable<R>,
}

pub fn defused_solve<R: Real>(kind: StepperKind, sys: &FirstOrderSystem<R>, grid: &Grid<R>, f0: &[R], policy: DefusePolicy<R>) -> Result<DefusedSolution<R>> {
    let factorial = matrix_factorial(kind, sys, grid)?;
    let initial = defuse_initial_value(&factorial, f0, policy)?;
    let mut table = solve_ivp(kind, sys, &initial.f0, grid)?;
    table.meta.stepper = alloc::format!("defused {}", table.meta.stepper);
    Ok(DefusedSolution { factorial, initial, table })
}

/// `‖Q F0'‖ + ‖F_true‖ + 2δ`, an upper bound on `‖Q F0' − F_true(Nh)‖`.
pub fn error_bound<R: Real>(mf: &MatrixFactorial<R>, f0_defused: &[R], true_norm_estimate: R, delta: R) -> R {
    norm2(&mf.q.matvec(f0_defused)) + true_norm_estimate + R::two() * delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{companion_system, ScalarOperator};
    use crate::DoubleDouble;
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn airy<R: Real>() -> FirstOrderSystem<R> {
        companion_system(&ScalarOperator::parse("d^2 - t", None, &BTreeMap::new()).unwrap())
    }

    #[test]
    fn euler_factorial_of_constant_system_is_a_power() {
        let p = Matrix::from_rows(&[vec![-1.0, 2.0], vec![0.5, 0.25]]);
        let sys = FirstOrderSystem::constant(p.clone()).unwrap();
        let grid = Grid::new(0.0, 0.1, 2).unwrap();
        let (q, cps) = propagator_product(StepperKind::Euler, &sys, &grid).unwrap();
        let step = Matrix::identity(2).add(&p.scale(0.1));
        assert_eq!(q, step.matmul(&step));
        assert_eq!(cps.len(), 3);
    }

    #[test]
    fn easy_system_has_a_tie() {
        let p = Matrix::from_rows(&[vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 0.0, 0.0]]);
        let sys = FirstOrderSystem::constant(p).unwrap();
        let grid = Grid::new(0.0, 0.01, 200).unwrap();
        assert!(matches!(matrix_factorial(StepperKind::Rk4, &sys, &grid), Err(Error::RepeatedEigenvalue(..))));
    }

    #[test]
    fn airy_filter_removes_growth_and_is_idempotent() {
        type D = DoubleDouble;
        let sys = airy::<D>();
        let grid = Grid::new(D::zero(), D::from_ratio(1, 100), 500).unwrap();
        let mf = matrix_factorial(StepperKind::Rk4, &sys, &grid).unwrap();
        let f0 = [D::from_f64(0.355), D::from_f64(-0.259)];
        let policy = DefusePolicy::default();
        let d = defuse_initial_value(&mf, &f0, policy).unwrap();
        assert_eq!(d.m, 1);
        assert_eq!(d.f0[0], f0[0]);
        let v2 = mf.eigen.vector(1);
        let ratio = v2[1] / v2[0];
        assert!((d.f0[1] - D::from_f64(0.355) * ratio).abs() < D::tol(6));
        let again = defuse_initial_value(&mf, &d.f0, policy).unwrap();
        for (a, b) in again.f0.iter().zip(&d.f0) {
            assert!((*a - *b).abs() < D::tol(6));
        }
        let grown = norm2(&mf.q.matvec(&f0));
        let filtered = norm2(&mf.q.matvec(&d.f0));
        assert!(filtered < grown);
        let v1 = mf.eigen.vector(0);
        assert_eq!(defuse_initial_value(&mf, &v1, policy).unwrap_err(), Error::DegenerateScaling);
        let unit = DefusePolicy { cut: Cut::SpectralGap, scaling: Scaling::UnitProjection };
        assert!(matches!(defuse_initial_value(&mf, &v1, unit), Err(Error::NothingRetained { .. })));
        let bound = error_bound(&mf, &vec![D::zero(); 2], D::from_f64(3.0), D::from_f64(0.5));
        assert_eq!(bound, D::from_f64(4.0));
    }

    #[test]
    fn checkpoints_follow_the_trajectory() {
        type D = DoubleDouble;
        let sys = airy::<D>();
        let grid = Grid::new(D::zero(), D::from_ratio(1, 100), 3000).unwrap();
        let mf = matrix_factorial(StepperKind::Rk4, &sys, &grid).unwrap();
        assert_eq!(checkpoint_stride(3000), 3);
        let f0 = [D::from_f64(0.3), D::from_f64(-0.2)];
        let table = solve_ivp(StepperKind::Rk4, &sys, &f0, &grid).unwrap();
        for (k, m) in &mf.checkpoints {
            let a = m.matvec(&f0);
            let b = &table.states[*k];
            let scale = norm2(b);
            assert!(norm2(&[a[0] - b[0], a[1] - b[1]]) <= D::tol(5) * scale);
        }
    }

    #[test]
    fn threshold_cut_retains_small_modes() {
        let q = Matrix::diagonal(&[100.0, 0.5, 0.01]);
        let grid = Grid::new(0.0, 1.0, 1).unwrap();
        let eigen = real_eigen(&q).unwrap();
        let mf = MatrixFactorial { q, grid, stepper: StepperKind::Euler, eigen, checkpoints: vec![] };
        let unit = |cut| DefusePolicy { cut, scaling: Scaling::UnitProjection };
        let d = defuse_initial_value(&mf, &[1.0, 1.0, 1.0], unit(Cut::Threshold(1.0))).unwrap();
        assert_eq!(d.m, 1);
        assert!(d.f0[0].abs() < 1e-14 && d.f0[1] == 1.0 && d.f0[2] == 1.0);
        let d = defuse_initial_value(&mf, &[1.0, 1.0, 1.0], unit(Cut::SpectralGap)).unwrap();
        assert_eq!(d.m, 1);
        assert!(matches!(defuse_initial_value(&mf, &[1.0, 1.0, 1.0], unit(Cut::Threshold(1e-3))), Err(Error::NothingRetained { m: 3, r: 3 })));
    }
}
