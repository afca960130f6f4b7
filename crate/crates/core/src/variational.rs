//! Methods B and C: expand `f = Σ f_k e_k` in a basis and minimise the
//! quadrature-discretised `∫ |L f − b|² dμ` subject to (or penalised by) data.

use crate::expr::{Expr, Func};
use crate::jet::Jet;
use crate::linalg::{dot, lu_solve, null_space_and_min_norm, symmetric_eigen, Matrix, Qr};
use crate::operator::{apply_operator, DataPoint, ScalarOperator};
use crate::{Error, Real, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Basis functions `e_0 … e_M`.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisFamily<R> {
    /// `(t − center)^j`.
    Monomial { center: R, count: usize },
    /// `T_j` composed with the affine map `[a, b] → [−1, 1]`.
    ChebyshevOn { a: R, b: R, count: usize },
    /// `t^γ · exp(κ t^σ) · t^(−j/2)`.
    AsymptoticPower { gamma: R, kappa: R, sigma: R, count: usize },
    UserExpr(Vec<Expr<R>>),
}

impl<R: Real> BasisFamily<R> {
    pub fn len(&self) -> usize {
        match self {
            BasisFamily::Monomial { count, .. } | BasisFamily::ChebyshevOn { count, .. } | BasisFamily::AsymptoticPower { count, .. } => *count,
            BasisFamily::UserExpr(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `j`-th asymptotic member as an expression tree.
    fn asymptotic_member(gamma: R, kappa: R, sigma: R, j: usize) -> Expr<R> {
        let log_t = Expr::apply(Func::Log, Expr::Var);
        let power = Expr::mul(Expr::Const(gamma - R::from_usize(j) * R::half()), log_t.clone());
        let growth = Expr::mul(Expr::Const(kappa), Expr::apply(Func::Exp, Expr::mul(Expr::Const(sigma), log_t)));
        Expr::apply(Func::Exp, Expr::add(power, growth))
    }

    /// Jets of every member at `t` up to `order`.
    pub fn jets(&self, t: R, order: usize) -> Result<Vec<Jet<R>>> {
        let jets = match self {
            BasisFamily::Monomial { center, count } => {
                let x = t - *center;
                (0..*count)
                    .map(|j| {
                        let coeffs = (0..=order)
                            .map(|d| {
                                if d > j {
                                    return R::zero();
                                }
                                let falling = (j - d + 1..=j).fold(R::one(), |acc, m| acc * R::from_usize(m));
                                falling * x.powi((j - d) as i32)
                            })
                            .collect();
                        Jet::new(coeffs)
                    })
                    .collect::<Vec<_>>()
            }
            BasisFamily::ChebyshevOn { a, b, count } => {
                let scale = R::two() / (*b - *a);
                let x = Jet::variable((t - *a) * scale - R::one(), order);
                let x = if order >= 1 { Jet::new(x.coeffs().iter().enumerate().map(|(i, &v)| if i == 1 { scale } else { v }).collect()) } else { x };
                let mut out: Vec<Jet<R>> = Vec::with_capacity(*count);
                for j in 0..*count {
                    let next = match j {
                        0 => Jet::constant(R::one(), order),
                        1 => x.clone(),
                        _ => x.scale(R::two()).mul(&out[j - 1])?.sub(&out[j - 2])?,
                    };
                    out.push(next);
                }
                out
            }
            BasisFamily::AsymptoticPower { gamma, kappa, sigma, count } => {
                (0..*count).map(|j| Self::asymptotic_member(*gamma, *kappa, *sigma, j).eval_jet(t, order)).collect()
            }
            BasisFamily::UserExpr(v) => v.iter().map(|e| e.eval_jet(t, order)).collect(),
        };
        if let Some(index) = jets.iter().position(|j| !j.is_finite()) {
            return Err(Error::BasisNotSmooth { index, t: t.to_f64() });
        }
        Ok(jets)
    }

    /// `Σ f_k e_k^{(d)}(t)`.
    pub fn evaluate(&self, coeffs: &[R], t: R, deriv_order: usize) -> Result<R> {
        let jets = self.jets(t, deriv_order)?;
        Ok(jets.iter().zip(coeffs).fold(R::zero(), |acc, (j, &c)| acc + c * j.derivative(deriv_order)))
    }
}

/// Which family of quadrature weights a rule came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureKind {
    Trapezoid(usize),
    ChebyshevWeight(usize),
    Custom,
}

/// `I(g) = Σ T_j g(t_j)` on `[t_s, t_e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
    pub kind: QuadratureKind,
    /// `[t_s, t_e]`.
    pub interval: (R, R),
}

impl<R: Real> QuadratureRule<R> {
    /// `n` trapezoid panels.
    pub fn trapezoid(ts: R, te: R, n: usize) -> Result<Self> {
        if n == 0 || !(te > ts) {
            return Err(Error::InvalidArgument(format!("trapezoid rule needs N ≥ 1 and t_e > t_s (N = {n})")));
        }
        let h = (te - ts) / R::from_usize(n);
        let nodes = (0..=n).map(|i| ts + R::from_usize(i) * h).collect();
        let weights = (0..=n).map(|i| if i == 0 || i == n { h * R::half() } else { h }).collect();
        Ok(QuadratureRule { nodes, weights, kind: QuadratureKind::Trapezoid(n), interval: (ts, te) })
    }

    /// Trapezoid rule with step closest to `h` that divides the interval.
    pub fn trapezoid_with_step(ts: R, te: R, h: R) -> Result<Self> {
        let n = ((te - ts) / h).round().to_f64().max(1.0) as usize;
        Self::trapezoid(ts, te, n)
    }

    /// Interior nodes `cos(iπ/k)` with weights `(π/k) sin²(iπ/k)`, `i = 1 … k−1`,
    /// integrating against `√(1 − x²)` on the mapped interval.
    pub fn chebyshev_weight(ts: R, te: R, k: usize) -> Result<Self> {
        if k < 2 || !(te > ts) {
            return Err(Error::InvalidArgument(format!("Chebyshev rule needs k ≥ 2 and t_e > t_s (k = {k})")));
        }
        let half = (te - ts) * R::half();
        let pi_k = R::pi() / R::from_usize(k);
        let mut nodes = Vec::with_capacity(k - 1);
        let mut weights = Vec::with_capacity(k - 1);
        for i in (1..k).rev() {
            let theta = pi_k * R::from_usize(i);
            let s = theta.sin();
            nodes.push(ts + half * (theta.cos() + R::one()));
            weights.push(half * pi_k * s * s);
        }
        Ok(QuadratureRule { nodes, weights, kind: QuadratureKind::ChebyshevWeight(k), interval: (ts, te) })
    }

    pub fn custom(nodes: Vec<R>, weights: Vec<R>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::Dimension(format!("{} nodes, {} weights", nodes.len(), weights.len())));
        }
        if weights.iter().any(|w| !(*w >= R::zero())) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("weights must be ≥ 0 and nodes strictly increasing".into()));
        }
        let interval = (nodes[0], nodes[nodes.len() - 1]);
        Ok(QuadratureRule { nodes, weights, kind: QuadratureKind::Custom, interval })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A rule of the same kind with `factor` times as many panels.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let (ts, te) = self.interval;
        match self.kind {
            QuadratureKind::Trapezoid(n) => Self::trapezoid(ts, te, n * factor),
            QuadratureKind::ChebyshevWeight(k) => Self::chebyshev_weight(ts, te, k * factor),
            QuadratureKind::Custom => Err(Error::InvalidArgument("custom quadrature cannot be refined".into())),
        }
    }
}

/// `G[j][k] = √T_j (L e_k)(t_j)` and `g[j] = √T_j b(t_j)`, so that `ℓ = ‖G F − g‖²`.
pub fn design_matrix<R: Real>(l: &ScalarOperator<R>, basis: &BasisFamily<R>, quad: &QuadratureRule<R>) -> Result<(Matrix<R>, Vec<R>)> {
    let m = basis.len();
    let mut g_mat = Matrix::zeros(quad.len(), m);
    let mut g = Vec::with_capacity(quad.len());
    for (j, (&t, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        let sw = w.sqrt();
        for (k, jet) in basis.jets(t, l.rank())?.iter().enumerate() {
            g_mat[(j, k)] = sw * apply_operator(l, jet, t)?;
        }
        g.push(sw * l.rhs().eval(t));
    }
    Ok((g_mat, g))
}

/// `C[i][k] = e_k^{(d_i)}(p_i)` and `q`.
pub fn constraint_matrix<R: Real>(basis: &BasisFamily<R>, data: &[DataPoint<R>]) -> Result<(Matrix<R>, Vec<R>)> {
    let mut c = Matrix::zeros(data.len(), basis.len());
    for (i, d) in data.iter().enumerate() {
        for (k, jet) in basis.jets(d.p, d.deriv_order)?.iter().enumerate() {
            c[(i, k)] = jet.derivative(d.deriv_order);
        }
    }
    Ok((c, data.iter().map(|d| d.q).collect()))
}

/// Basis coefficients and the diagnostics of a fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<R> {
    pub coefficients: Vec<R>,
    /// Quadrature loss `ℓ = Σ T_j |(L f)(t_j) − b(t_j)|²`.
    pub loss: R,
    /// `f^{(d_i)}(p_i) − q_i` per data point.
    pub constraint_residuals: Vec<R>,
    /// `Fᵀ S F` when the fit was driven by a Gram matrix.
    pub gram_objective: Option<R>,
    /// Value of the minimised objective (penalised fits include the data and ridge terms).
    pub objective: R,
}

impl<R: Real> FitResult<R> {
    pub fn evaluate(&self, basis: &BasisFamily<R>, t: R) -> Result<R> {
        basis.evaluate(&self.coefficients, t, 0)
    }

    pub fn max_constraint_residual(&self) -> R {
        self.constraint_residuals.iter().fold(R::zero(), |m, r| m.max(r.abs()))
    }
}

fn residual_sq<R: Real>(a: &Matrix<R>, x: &[R], b: &[R]) -> R {
    a.matvec(x).iter().zip(b).fold(R::zero(), |acc, (ax, bi)| acc + (*ax - *bi) * (*ax - *bi))
}

/// Quadrature loss of given coefficients (used for refined-quadrature checks).
pub fn loss_of<R: Real>(l: &ScalarOperator<R>, basis: &BasisFamily<R>, quad: &QuadratureRule<R>, coeffs: &[R]) -> Result<R> {
    let (g_mat, g) = design_matrix(l, basis, quad)?;
    Ok(residual_sq(&g_mat, coeffs, &g))
}

fn finish<R: Real>(coefficients: Vec<R>, g_mat: &Matrix<R>, g: &[R], c: &Matrix<R>, q: &[R]) -> FitResult<R> {
    let loss = residual_sq(g_mat, &coefficients, g);
    let constraint_residuals = c.matvec(&coefficients).iter().zip(q).map(|(a, b)| *a - *b).collect();
    FitResult { coefficients, loss, constraint_residuals, gram_objective: None, objective: loss }
}

/// Column scales making the largest entry of each column of the stacked matrices one.
fn column_scales<R: Real>(mats: &[&Matrix<R>]) -> Vec<R> {
    let m = mats[0].cols();
    (0..m)
        .map(|k| {
            let s = mats.iter().fold(R::zero(), |acc, a| (0..a.rows()).fold(acc, |acc, i| acc.max(a[(i, k)].abs())));
            if s == R::zero() { R::one() } else { R::one() / s }
        })
        .collect()
}

fn scale_columns<R: Real>(a: &Matrix<R>, s: &[R]) -> Matrix<R> {
    Matrix::from_fn(a.rows(), a.cols(), |i, k| a[(i, k)] * s[k])
}

/// How the equality-constrained least-squares problem is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConstrainedSolver {
    /// `[[GᵀG, Cᵀ], [C, 0]]` by LU.
    #[default]
    Kkt,
    /// Parametrise the feasible set by an orthonormal null-space basis and solve by QR.
    NullSpace,
}

/// Method B with exact data constraints.
pub fn fit_method_b_constrained<R: Real>(
    l: &ScalarOperator<R>,
    basis: &BasisFamily<R>,
    quad: &QuadratureRule<R>,
    data: &[DataPoint<R>],
    solver: ConstrainedSolver,
) -> Result<FitResult<R>> {
    let (g_mat, g) = design_matrix(l, basis, quad)?;
    fit_method_b_constrained_with(&g_mat, &g, basis, data, solver)
}

/// [`fit_method_b_constrained`] on a precomputed [`design_matrix`], for repeated fits with changing data.
pub fn fit_method_b_constrained_with<R: Real>(g_mat: &Matrix<R>, g: &[R], basis: &BasisFamily<R>, data: &[DataPoint<R>], solver: ConstrainedSolver) -> Result<FitResult<R>> {
    let m = basis.len();
    if data.len() > m {
        return Err(Error::Dimension(format!("{} data points for {m} basis functions", data.len())));
    }
    if g_mat.cols() != m || g_mat.rows() != g.len() {
        return Err(Error::Dimension(format!("design matrix is {}×{} with {} right-hand entries, basis has {m} members", g_mat.rows(), g_mat.cols(), g.len())));
    }
    let (c, q) = constraint_matrix(basis, data)?;
    let s = column_scales(&[g_mat, &c]);
    let (gs, cs) = (scale_columns(g_mat, &s), scale_columns(&c, &s));
    let y = match solver {
        ConstrainedSolver::Kkt => {
            let p = data.len();
            let gtg = gs.transpose().matmul(&gs);
            let gtb = gs.transpose().matvec(g);
            let kkt = Matrix::from_fn(m + p, m + p, |i, j| match (i < m, j < m) {
                (true, true) => gtg[(i, j)],
                (true, false) => cs[(j - m, i)],
                (false, true) => cs[(i - m, j)],
                (false, false) => R::zero(),
            });
            let rhs: Vec<R> = gtb.into_iter().chain(q.iter().copied()).collect();
            lu_solve(&kkt, &rhs)?.x.into_iter().take(m).collect::<Vec<_>>()
        }
        ConstrainedSolver::NullSpace => {
            let (z, x0) = null_space_and_min_norm(&cs, &q)?;
            if z.cols() == 0 {
                x0
            } else {
                let gz = gs.matmul(&z);
                let r: Vec<R> = g.iter().zip(gs.matvec(&x0)).map(|(a, b)| *a - b).collect();
                let (w, _) = Qr::factor(&gz)?.solve(&r);
                let zw = z.matvec(&w);
                x0.iter().zip(zw).map(|(a, b)| *a + b).collect()
            }
        }
    };
    let coeffs = y.iter().zip(&s).map(|(a, b)| *a * *b).collect();
    Ok(finish(coeffs, g_mat, g, &c, &q))
}

/// Weights of the penalised objective `α ℓ + β Σ (f(p_i) − q_i)² + γ Σ f_k²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty<R> {
    pub alpha: R,
    pub beta: R,
    pub gamma: R,
}

impl<R: Real> Default for Penalty<R> {
    fn default() -> Self {
        Penalty { alpha: R::one(), beta: R::one(), gamma: R::zero() }
    }
}

/// Method B with the data as a penalty: one least-squares solve of the stacked weighted system.
pub fn fit_method_b_penalized<R: Real>(
    l: &ScalarOperator<R>,
    basis: &BasisFamily<R>,
    quad: &QuadratureRule<R>,
    data: &[DataPoint<R>],
    penalty: Penalty<R>,
) -> Result<FitResult<R>> {
    let (g_mat, g) = design_matrix(l, basis, quad)?;
    fit_method_b_penalized_with(&g_mat, &g, basis, data, penalty)
}

/// [`fit_method_b_penalized`] on a precomputed [`design_matrix`].
pub fn fit_method_b_penalized_with<R: Real>(g_mat: &Matrix<R>, g: &[R], basis: &BasisFamily<R>, data: &[DataPoint<R>], penalty: Penalty<R>) -> Result<FitResult<R>> {
    let Penalty { alpha, beta, gamma } = penalty;
    if !(alpha >= R::zero() && beta >= R::zero() && gamma >= R::zero()) || !(alpha + beta > R::zero()) {
        return Err(Error::InvalidArgument("penalty weights need α, β, γ ≥ 0 and α + β > 0".into()));
    }
    let m = basis.len();
    if g_mat.cols() != m || g_mat.rows() != g.len() {
        return Err(Error::Dimension(format!("design matrix is {}×{} with {} right-hand entries, basis has {m} members", g_mat.rows(), g_mat.cols(), g.len())));
    }
    let (c, q) = constraint_matrix(basis, data)?;
    let (sa, sb, sc) = (alpha.sqrt(), beta.sqrt(), gamma.sqrt());
    let ridge = Matrix::identity(m).scale(sc);
    let stacked = g_mat.scale(sa).vstack(&c.scale(sb)).vstack(&ridge);
    if stacked.max_abs() == R::zero() {
        return Err(Error::InvalidArgument("stacked least-squares matrix is identically zero".into()));
    }
    let rhs: Vec<R> = g.iter().map(|v| *v * sa).chain(q.iter().map(|v| *v * sb)).chain((0..m).map(|_| R::zero())).collect();
    let s = if gamma == R::zero() { column_scales(&[&stacked]) } else { vec![R::one(); m] };
    let (y, _) = Qr::factor(&scale_columns(&stacked, &s))?.solve(&rhs);
    let coeffs: Vec<R> = y.iter().zip(&s).map(|(a, b)| *a * *b).collect();
    let mut fit = finish(coeffs, g_mat, g, &c, &q);
    let data_sq = fit.constraint_residuals.iter().fold(R::zero(), |acc, r| acc + *r * *r);
    fit.objective = alpha * fit.loss + beta * data_sq + gamma * dot(&fit.coefficients, &fit.coefficients);
    Ok(fit)
}

/// `S = Gᵀ G`, the quadrature Gram matrix of `(L e_i, L e_j)`.
pub fn gram_matrix<R: Real>(l: &ScalarOperator<R>, basis: &BasisFamily<R>, quad: &QuadratureRule<R>) -> Result<Matrix<R>> {
    let (g_mat, _) = design_matrix(l, basis, quad)?;
    Ok(g_mat.transpose().matmul(&g_mat))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodCMode {
    /// `min Fᵀ S F + ‖P_e F − Q‖²`.
    Penalized,
    /// `min Fᵀ S F` subject to `P_e F = Q`; the minimum-norm minimiser is returned.
    Constrained,
}

/// Method C: quadratic form of the Gram matrix with data rows `P_e F = Q`.
pub fn fit_method_c<R: Real>(s: &Matrix<R>, basis: &BasisFamily<R>, data: &[DataPoint<R>], mode: MethodCMode) -> Result<FitResult<R>> {
    let m = basis.len();
    if s.rows() != m || s.cols() != m {
        return Err(Error::Dimension(format!("Gram matrix is {}×{}, basis has {m} members", s.rows(), s.cols())));
    }
    let (pe, q) = constraint_matrix(basis, data)?;
    let coeffs = match mode {
        MethodCMode::Penalized => {
            let a = s.add(&pe.transpose().matmul(&pe));
            lu_solve(&a, &pe.transpose().matvec(&q))?.x
        }
        MethodCMode::Constrained => {
            let (z, x0) = null_space_and_min_norm(&pe, &q)?;
            if z.cols() == 0 {
                x0
            } else {
                // Reduced problem (Zᵀ S Z) w = −Zᵀ S x₀, solved by pseudo-inverse for the minimum-norm w.
                let zt = z.transpose();
                let reduced = zt.matmul(s).matmul(&z);
                let rhs: Vec<R> = zt.matvec(&s.matvec(&x0)).into_iter().map(|v| -v).collect();
                let (vals, vecs) = symmetric_eigen(&reduced);
                let top = vals.iter().fold(R::zero(), |a, v| a.max(v.abs()));
                let cut = top * R::tol(4).max(R::epsilon() * R::from_usize(m * 64));
                let mut w = vec![R::zero(); z.cols()];
                for (i, &lam) in vals.iter().enumerate() {
                    if lam.abs() > cut {
                        let v = vecs.column(i);
                        let c = dot(&v, &rhs) / lam;
                        for (wk, vk) in w.iter_mut().zip(&v) {
                            *wk += c * *vk;
                        }
                    }
                }
                let zw = z.matvec(&w);
                x0.iter().zip(zw).map(|(a, b)| *a + b).collect()
            }
        }
    };
    let gram = dot(&coeffs, &s.matvec(&coeffs));
    let constraint_residuals: Vec<R> = pe.matvec(&coeffs).iter().zip(&q).map(|(a, b)| *a - *b).collect();
    let data_sq = constraint_residuals.iter().fold(R::zero(), |acc, r| acc + *r * *r);
    let objective = if mode == MethodCMode::Penalized { gram + data_sq } else { gram };
    Ok(FitResult { coefficients: coeffs, loss: gram, constraint_residuals, gram_objective: Some(gram), objective })
}

/// Computable surrogate `ℓ + |ℓ_refined − ℓ|` for the bound `∫ |L f − b|² dμ ≤ ℓ + e_N`.
pub fn lemma2_bound<R: Real>(fit: &FitResult<R>, refined_quad_loss: R) -> R {
    fit.loss + (refined_quad_loss - fit.loss).abs()
}
