//! Precision-generic property checks, run once per backend.

use super::{check, Check};
use hgm::oracle::airy_jet;
use hgm_core::defusing::{defused_solve, error_bound, DefusePolicy};
use hgm_core::expr::{params, Expr};
use hgm_core::linalg::{norm2, sub_vec};
use hgm_core::operator::{companion_system, DataPoint, FirstOrderSystem, Grid, ScalarOperator};
use hgm_core::reference::{airy, airy_ai, airy_system, exp_airy_operator, hkn_derivatives, hkn_gauged_initial, hkn_gauged_system, hkn_operator};
use hgm_core::spectral::{cheb_points, diff_matrix, rect_diff_matrix};
use hgm_core::steppers::{gauss_scalar_growth, propagator_matrix, StepperKind, Stepper};
use hgm_core::variational::{
    design_matrix, fit_method_b_constrained_with, fit_method_b_penalized_with, fit_method_c, lemma2_bound, loss_of, BasisFamily, ConstrainedSolver, FitResult, MethodCMode, Penalty,
    QuadratureRule,
};
use hgm_core::Real;

type Outcome = Result<Check, String>;

fn r<R: Real>(x: f64) -> R {
    R::from_f64(x)
}

fn lit<R: Real>(s: &str) -> R {
    R::parse_literal(s).expect("literal parses")
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn sci<R: Real>(x: R) -> String {
    format!("{:.2e}", x.to_f64())
}

fn max_abs_diff<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

fn max_abs<R: Real>(a: &[R]) -> R {
    a.iter().fold(R::zero(), |m, x| m.max(x.abs()))
}

/// Jet derivatives against central differences with step `10^(−D/3)`.
fn jet_vs_differences<R: Real>() -> Outcome {
    let f: Expr<R> = Expr::parse("exp(t/3)*sqrt(1+t^2) + log(2+t)/(1+t^2) - t^5/7", &params(&[])).map_err(e)?;
    let delta = R::pow10(-(R::DIGITS as i32) / 3);
    let tol = R::pow10(-(R::DIGITS as i32) / 2);
    let mut worst = R::zero();
    for t in [-0.75, 0.0, 0.5, 1.25, 3.0] {
        let t = r::<R>(t);
        let jet = f.eval_jet(t, 3);
        let fd1 = (f.eval(t + delta) - f.eval(t - delta)) / (R::two() * delta);
        let d1 = jet.derivative(1);
        let d2 = jet.derivative(2);
        worst = worst.max((fd1 - d1).abs() / R::one().max(d1.abs()));
        let g1 = (f.eval_jet(t + delta, 1).derivative(1) - f.eval_jet(t - delta, 1).derivative(1)) / (R::two() * delta);
        worst = worst.max((g1 - d2).abs() / R::one().max(d2.abs()));
    }
    Ok(check("jet vs central differences", worst <= tol, format!("{} <= {}", sci(worst), sci(tol))))
}

/// `step(αa + βb) = α step(a) + β step(b)` and `step(f) = Q f` for RK4 and Gauss s=2.
fn propagator_linearity<R: Real>() -> Outcome {
    let sys: FirstOrderSystem<R> = airy_system();
    let (t, h) = (r::<R>(1.0), lit::<R>("1/10"));
    let a = [r::<R>(0.3), r::<R>(-1.2)];
    let b = [r::<R>(-2.0), r::<R>(0.7)];
    let (al, be) = (lit::<R>("3/7"), lit::<R>("-5/3"));
    let mut worst = R::zero();
    for kind in [StepperKind::Rk4, StepperKind::Gauss(2)] {
        let stepper = Stepper::new(kind).map_err(e)?;
        let combo: Vec<R> = a.iter().zip(&b).map(|(x, y)| al * *x + be * *y).collect();
        let lhs = stepper.step(&sys, t, h, &combo).map_err(e)?;
        let sa = stepper.step(&sys, t, h, &a).map_err(e)?;
        let sb = stepper.step(&sys, t, h, &b).map_err(e)?;
        let rhs: Vec<R> = sa.iter().zip(&sb).map(|(x, y)| al * *x + be * *y).collect();
        worst = worst.max(max_abs_diff(&lhs, &rhs));
        let q = propagator_matrix(kind, &sys, t, h).map_err(e)?;
        worst = worst.max(max_abs_diff(&q.matvec(&a), &sa));
    }
    let tol = R::tol(3);
    Ok(check("propagator linearity (rk4, gauss2)", worst <= tol, format!("{} <= {}", sci(worst), sci(tol))))
}

/// Gauss s=1 and s=2 growth factors are the diagonal Padé approximants of `e^z`.
fn pade_growth<R: Real>() -> Outcome {
    let mut worst = R::zero();
    for z in [-3.0, -0.5, 0.25, 0.7, 1.5] {
        let z = r::<R>(z);
        let half = z * R::half();
        let z2 = z * z / r::<R>(12.0);
        let p1 = (R::one() + half) / (R::one() - half);
        let p2 = (R::one() + half + z2) / (R::one() - half + z2);
        worst = worst.max((gauss_scalar_growth(1, z).map_err(e)? - p1).abs() / p1.abs());
        worst = worst.max((gauss_scalar_growth(2, z).map_err(e)? - p2).abs() / p2.abs());
    }
    let tol = R::tol(3);
    Ok(check("Gauss growth = Pade (s=1,2)", worst <= tol, format!("{} <= {}", sci(worst), sci(tol))))
}

/// `D` differentiates degree < n polynomials exactly; so does `M(n_out, n; 2)` for the second derivative.
fn spectral_exactness<R: Real>() -> Outcome {
    let (a, b, n) = (r::<R>(-2.0), r::<R>(3.0), 12);
    let grid = cheb_points(n, a, b).map_err(e)?;
    let d = diff_matrix(&grid);
    let out = cheb_points(9, a, b).map_err(e)?;
    let m = rect_diff_matrix(9, n, 2, a, b).map_err(e)?;
    let mut worst = R::zero();
    for k in 0..n {
        let p = |t: R| t.powi(k as i32);
        let dp = |t: R| if k == 0 { R::zero() } else { R::from_usize(k) * t.powi(k as i32 - 1) };
        let ddp = |t: R| if k < 2 { R::zero() } else { R::from_usize(k * (k - 1)) * t.powi(k as i32 - 2) };
        let vals: Vec<R> = grid.nodes().into_iter().map(p).collect();
        let scale = R::one().max(max_abs(&vals));
        let want: Vec<R> = grid.nodes().into_iter().map(dp).collect();
        worst = worst.max(max_abs_diff(&d.matvec(&vals), &want) / (scale * R::from_usize(n * n)));
        let want2: Vec<R> = out.nodes().into_iter().map(ddp).collect();
        worst = worst.max(max_abs_diff(&m.matvec(&vals), &want2) / (scale * R::from_usize(n.pow(4))));
    }
    let tol = R::tol(3);
    Ok(check("D and M(9,12;2) polynomial exactness", worst <= tol, format!("{} <= {} (scaled)", sci(worst), sci(tol))))
}

fn chebyshev_weight_sum<R: Real>() -> Outcome {
    let mut worst = R::zero();
    for k in [2, 7, 40, 200] {
        let q = QuadratureRule::chebyshev_weight(-R::one(), R::one(), k).map_err(e)?;
        let s = q.weights.iter().fold(R::zero(), |acc, w| acc + *w);
        worst = worst.max((s - R::pi() * R::half()).abs());
    }
    let tol = R::tol(2);
    Ok(check("Chebyshev weight sum = pi/2", worst <= tol, format!("{} <= {}", sci(worst), sci(tol))))
}

/// Method B and method C minimise the same quadratic form when `b ≡ 0`.
fn b_c_equivalence<R: Real>() -> Vec<Outcome> {
    let run = || -> Result<Vec<Check>, String> {
        let l: ScalarOperator<R> = ScalarOperator::parse("d^2 - t", None, &params(&[])).map_err(e)?;
        let (a, b) = (r::<R>(-4.0), R::zero());
        let basis = BasisFamily::ChebyshevOn { a, b, count: 10 };
        let quad = QuadratureRule::trapezoid(a, b, 400).map_err(e)?;
        let data: Vec<DataPoint<R>> = [-4.0, -2.0, 0.0].iter().map(|&p| Ok(DataPoint::value(r(p), airy_ai(r::<R>(p))?))).collect::<hgm_core::Result<_>>().map_err(e)?;
        let (g_mat, g) = design_matrix(&l, &basis, &quad).map_err(e)?;
        let s = g_mat.transpose().matmul(&g_mat);
        let fb = fit_method_b_constrained_with(&g_mat, &g, &basis, &data, ConstrainedSolver::Kkt).map_err(e)?;
        let fb_null = fit_method_b_constrained_with(&g_mat, &g, &basis, &data, ConstrainedSolver::NullSpace).map_err(e)?;
        let fc = fit_method_c(&s, &basis, &data, MethodCMode::Constrained).map_err(e)?;
        let pb = fit_method_b_penalized_with(&g_mat, &g, &basis, &data, Penalty::default()).map_err(e)?;
        let pc = fit_method_c(&s, &basis, &data, MethodCMode::Penalized).map_err(e)?;
        let rel = |x: &FitResult<R>, y: &FitResult<R>| max_abs_diff(&x.coefficients, &y.coefficients) / max_abs(&x.coefficients);
        let tol = R::tol(6);
        let constrained = rel(&fb, &fc);
        let penalized = rel(&pb, &pc);
        let kkt_tol = R::tol(8);
        let kkt = fb.max_constraint_residual().max(fb_null.max_constraint_residual());
        Ok(vec![
            check("B/C constrained minimiser", constrained <= tol, format!("{} <= {}", sci(constrained), sci(tol))),
            check("B/C penalized minimiser", penalized <= tol, format!("{} <= {}", sci(penalized), sci(tol))),
            check("KKT and null-space constraint residuals", kkt <= kkt_tol, format!("{} <= {}", sci(kkt), sci(kkt_tol))),
        ])
    };
    match run() {
        Ok(v) => v.into_iter().map(Ok).collect(),
        Err(err) => vec![Err(err)],
    }
}

/// `‖Q F0' − F(Nh)‖ ≤ ‖Q F0'‖ + ‖F(Nh)‖ + 2δ`, with `δ` the propagation error of the exact initial vector.
fn lemma1_case<R: Real>(name: &str, sys: &FirstOrderSystem<R>, grid: Grid<R>, f0: &[R], exact0: &[R], exact_end: &[R]) -> Outcome {
    let sol = defused_solve(StepperKind::Rk4, sys, &grid, f0, DefusePolicy::default()).map_err(e)?;
    let mf = &sol.factorial;
    let delta = norm2(&sub_vec(&mf.q.matvec(exact0), exact_end));
    let lhs = norm2(&sub_vec(&mf.q.matvec(&sol.initial.f0), exact_end));
    let bound = error_bound(mf, &sol.initial.f0, norm2(exact_end), delta);
    Ok(check(&format!("Lemma-1 bound on {name}"), lhs <= bound, format!("{} <= {}", sci(lhs), sci(bound))))
}

fn lemma1<R: Real>() -> Vec<Outcome> {
    let mut out = Vec::new();
    let airy_state = |t: R| -> hgm_core::Result<Vec<R>> {
        let v = airy(t)?;
        Ok(vec![v.ai, v.ai_prime])
    };
    out.push((|| {
        let grid = Grid::new(R::zero(), lit("1/100"), 500).map_err(e)?;
        let f0 = [lit::<R>("0.355"), lit::<R>("-0.259")];
        lemma1_case("airy [0,5]", &airy_system(), grid, &f0, &airy_state(R::zero()).map_err(e)?, &airy_state(r(5.0)).map_err(e)?)
    })());
    out.push((|| {
        let l: ScalarOperator<R> = exp_airy_operator();
        let grid = Grid::new(r(-4.0), lit("1/100"), 400).map_err(e)?;
        let jet = |t: R| -> hgm_core::Result<Vec<R>> {
            let v = airy(t)?;
            Ok(airy_jet(t, v.ai, v.ai_prime, 2))
        };
        let exact0 = jet(r(-4.0)).map_err(e)?;
        let f0: Vec<R> = exact0.iter().map(|x| *x * (R::one() + lit::<R>("1/1000"))).collect();
        lemma1_case("Airy-factor companion [-4,0]", &companion_system(&l), grid, &f0, &exact0, &jet(R::zero()).map_err(e)?)
    })());
    out.push((|| {
        let (n, x) = (R::one(), R::one());
        let grid = Grid::new(R::one(), lit("1/100"), 200).map_err(e)?;
        let exact0 = hkn_gauged_initial(10, n, x, R::one()).map_err(e)?;
        let f0: Vec<R> = exact0.iter().map(|v| *v * (R::one() - lit::<R>("1/1000"))).collect();
        let exact_end = hkn_gauged_initial(10, n, x, r(3.0)).map_err(e)?;
        lemma1_case("gauged H^10_1 [1,3]", &hkn_gauged_system(10, n, x), grid, &f0, &exact0, &exact_end)
    })());
    out
}

/// `∫|L f − b|²` (estimated on a 64× refined rule) against `ℓ + |ℓ_refined − ℓ|` with a 2× refined rule.
fn lemma2_case<R: Real>(name: &str, l: &ScalarOperator<R>, basis: &BasisFamily<R>, quad: &QuadratureRule<R>, data: &[DataPoint<R>]) -> Outcome {
    let (g_mat, g) = design_matrix(l, basis, quad).map_err(e)?;
    let fit = fit_method_b_constrained_with(&g_mat, &g, basis, data, ConstrainedSolver::Kkt).map_err(e)?;
    let refined = loss_of(l, basis, &quad.refined(2).map_err(e)?, &fit.coefficients).map_err(e)?;
    let integral = loss_of(l, basis, &quad.refined(64).map_err(e)?, &fit.coefficients).map_err(e)?;
    let bound = lemma2_bound(&fit, refined);
    let ok = integral <= bound * (R::one() + R::tol(4)) && bound >= fit.loss;
    Ok(check(&format!("Lemma-2 bound on {name}"), ok, format!("{} <= {}", sci(integral), sci(bound))))
}

fn lemma2<R: Real>() -> Vec<Outcome> {
    let mut out = Vec::new();
    let ai_data = |ps: &[f64]| -> Result<Vec<DataPoint<R>>, String> { ps.iter().map(|&p| Ok(DataPoint::value(r(p), airy_ai(r::<R>(p)).map_err(e)?))).collect() };
    out.push((|| {
        let l: ScalarOperator<R> = ScalarOperator::parse("d^2 - t", None, &params(&[])).map_err(e)?;
        let basis = BasisFamily::Monomial { center: r(-2.0), count: 7 };
        let quad = QuadratureRule::trapezoid(r(-4.0), R::zero(), 200).map_err(e)?;
        lemma2_case("Airy, monomial basis", &l, &basis, &quad, &ai_data(&[-4.0, -2.0, 0.0])?)
    })());
    out.push((|| {
        let l: ScalarOperator<R> = exp_airy_operator();
        let basis = BasisFamily::ChebyshevOn { a: r(-4.0), b: R::zero(), count: 10 };
        let quad = QuadratureRule::trapezoid(r(-4.0), R::zero(), 400).map_err(e)?;
        lemma2_case("Airy-factor, Chebyshev basis", &l, &basis, &quad, &ai_data(&[-4.0, -2.0, 0.0])?)
    })());
    out.push((|| {
        let (n, x) = (R::one(), R::one());
        let l = hkn_operator(10, n, x);
        let basis = BasisFamily::AsymptoticPower { gamma: lit("-3/4"), kappa: r(2.0), sigma: R::half(), count: 4 };
        let quad = QuadratureRule::trapezoid(r(20.0), r(60.0), 800).map_err(e)?;
        let data = [20.0, 25.0, 59.0]
            .iter()
            .map(|&p| Ok(DataPoint::value(r(p), hkn_derivatives(10, n, x, r::<R>(p), 0).map_err(e)?[0])))
            .collect::<Result<Vec<_>, String>>()?;
        lemma2_case("H^10_1 on [20,60], asymptotic basis", &l, &basis, &quad, &data)
    })());
    out
}

fn wronskian<R: Real>() -> Outcome {
    let mut worst = R::zero();
    for t in [-20.0, -7.5, -1.0, 0.0, 2.5, 10.0] {
        let v = airy(r::<R>(t)).map_err(e)?;
        worst = worst.max((v.ai * v.bi_prime - v.ai_prime * v.bi - R::one() / R::pi()).abs());
    }
    let tol = R::tol(8);
    Ok(check("Airy Wronskian = 1/pi", worst <= tol, format!("{} <= {}", sci(worst), sci(tol))))
}

/// Every property at the precision of `R`; names carry the backend.
pub fn suite<R: Real>() -> Vec<Check> {
    let mut outcomes = vec![jet_vs_differences::<R>(), propagator_linearity::<R>(), pade_growth::<R>(), spectral_exactness::<R>(), chebyshev_weight_sum::<R>()];
    outcomes.extend(b_c_equivalence::<R>());
    outcomes.extend(lemma1::<R>());
    outcomes.extend(lemma2::<R>());
    outcomes.push(wronskian::<R>());
    outcomes
        .into_iter()
        .map(|o| match o {
            Ok(c) => Check { name: format!("{} D={}: {}", R::NAME, R::DIGITS, c.name), ..c },
            Err(err) => check(&format!("{} D={}", R::NAME, R::DIGITS), false, err),
        })
        .collect()
}
