//! Cross-module invariants and frozen reference values.

use hgm_core::defusing::{defuse_initial_value, matrix_factorial, Cut, DefusePolicy, Scaling};
use hgm_core::linalg::Matrix;
use hgm_core::operator::{FirstOrderSystem, Grid};
use hgm_core::reference::airy;
use hgm_core::spectral::{barycentric_eval, cheb_points};
use hgm_core::steppers::{gauss_scalar_growth, propagator_matrix, StepperKind};
use hgm_core::{DoubleDouble, Real};
use proptest::prelude::*;

type D = DoubleDouble;

fn lit(s: &str) -> D {
    D::parse_literal(s).unwrap()
}

#[test]
fn airy_values_at_thirty_digits() {
    let cases = [
        ("-7.5", "0.32177571638064787526732854367975", "0.31880950669855459621006290607937", "-0.11246348507649080638432081505444"),
        ("3.3", "0.0037872884268267533131206402171445", "-0.0071424877858847379084098318562727", "23.248303262941579479350499596946"),
        ("-15.25", "0.099222459681395835366355574407438", "1.0470656050576835876114120174092", "-0.26769782481385351512796641751173"),
    ];
    for (t, ai, aip, bi) in cases {
        let v = airy(lit(t)).unwrap();
        for (got, want) in [(v.ai, ai), (v.ai_prime, aip), (v.bi, bi)] {
            let want = lit(want);
            assert!(((got - want) / want).abs() < D::tol(2), "t = {t}: {} vs {}", got.to_shortest_string(), want.to_shortest_string());
        }
    }
}

fn matrix2() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-2.0f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rk4_propagator_is_the_quartic_taylor_polynomial(p in matrix2(), h in 0.01f64..0.5) {
        let m = Matrix::from_rows(&[vec![p[0], p[1]], vec![p[2], p[3]]]);
        let sys = FirstOrderSystem::constant(m.clone()).unwrap();
        let q = propagator_matrix(StepperKind::Rk4, &sys, 0.0, h).unwrap();
        let hp = m.scale(h);
        let mut term = Matrix::identity(2);
        let mut taylor = Matrix::identity(2);
        for k in 1..=4 {
            term = term.matmul(&hp).scale(1.0 / k as f64);
            taylor = taylor.add(&term);
        }
        prop_assert!(q.sub(&taylor).max_abs() < 1e-13);
    }

    #[test]
    fn gauss_methods_are_a_stable(s in 1usize..5, z in -50.0f64..-1e-3) {
        let g = gauss_scalar_growth(s, z).unwrap();
        prop_assert!(g.abs() < 1.0, "s = {s}, z = {z}: {g}");
    }

    #[test]
    fn gauss_growth_on_the_imaginary_axis_limit_is_unimodular(s in 1usize..4, z in 1e-3f64..2.0) {
        let forward = gauss_scalar_growth(s, z).unwrap();
        let backward = gauss_scalar_growth(s, -z).unwrap();
        prop_assert!((forward * backward - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_interpolation_reproduces_polynomials(coeffs in prop::collection::vec(-3.0f64..3.0, 1..9), t in -1.0f64..4.0) {
        let grid = cheb_points(coeffs.len() + 1, -1.0, 4.0).unwrap();
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let values: Vec<f64> = grid.nodes().into_iter().map(poly).collect();
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((barycentric_eval(&grid, &values, t) - poly(t)).abs() < 1e-11 * scale * 4f64.powi(coeffs.len() as i32));
    }

    #[test]
    fn retaining_the_whole_spectrum_keeps_the_initial_vector(f0 in prop::array::uniform2(-1.0f64..1.0), n in 10usize..60) {
        prop_assume!(f0[0].abs() > 1e-3);
        let sys = FirstOrderSystem::constant(Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]])).unwrap();
        let grid = Grid::new(0.0, 0.05, n).unwrap();
        let mf = matrix_factorial(StepperKind::Rk4, &sys, &grid).unwrap();
        let out = defuse_initial_value(&mf, &f0, DefusePolicy { cut: Cut::Fixed(0), scaling: Scaling::UnitProjection }).unwrap();
        prop_assert!((out.f0[0] - f0[0]).abs() < 1e-12 && (out.f0[1] - f0[1]).abs() < 1e-12);
        let matched = defuse_initial_value(&mf, &f0, DefusePolicy { cut: Cut::Fixed(1), scaling: Scaling::MatchComponent(0) }).unwrap();
        prop_assert!((matched.f0[0] - f0[0]).abs() < 1e-12);
        prop_assert!((matched.f0[1] / matched.f0[0] + 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn shortest_strings_round_trip(x in -1e6f64..1e6, y in 1e-3f64..1e3, e in -300i32..300) {
        prop_assume!(x != 0.0);
        let v = D::from_f64(x) / D::from_f64(y) * D::pow10(e);
        prop_assert_eq!(D::parse_literal(&v.to_shortest_string()).unwrap(), v);
    }
}
