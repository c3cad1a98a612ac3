use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use reilly_core::geometry::FieldRole;
use reilly_core::identities::structure_check;
use reilly_core::sampling::chart_points;
use reilly_core::zoo::{self, analytic_lambda1, BoundaryCondition};
use reilly_core::{ChartFn, PointFrame, ScalarJetField};

fn x() -> ChartFn {
    ChartFn::coord(0)
}
fn y() -> ChartFn {
    ChartFn::coord(1)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn jet_of_rational_function_matches_sixth_order_differences() {
    let f = ChartFn::constant(1.0) / (ChartFn::constant(1.0) + x() * x());
    let p = 0.5;
    let j = f.jet(&[p]).unwrap();
    let h = 1e-2;
    let g = |t: f64| f.eval(&[t]).unwrap();
    // sixth-order central stencils
    let d1 = (g(p + 3.0 * h) - 9.0 * g(p + 2.0 * h) + 45.0 * g(p + h) - 45.0 * g(p - h) + 9.0 * g(p - 2.0 * h)
        - g(p - 3.0 * h))
        / (60.0 * h);
    let d2 = (2.0 * g(p + 3.0 * h) - 27.0 * g(p + 2.0 * h) + 270.0 * g(p + h) - 490.0 * g(p) + 270.0 * g(p - h)
        - 27.0 * g(p - 2.0 * h)
        + 2.0 * g(p - 3.0 * h))
        / (180.0 * h * h);
    assert!(close(j.d1(0), d1, 1e-8), "{} vs {}", j.d1(0), d1);
    assert!(close(j.d2(0, 0), d2, 1e-8), "{} vs {}", j.d2(0, 0), d2);
}

#[test]
fn flat_torus_has_no_christoffels_or_curvature() {
    let e = zoo::instantiate("torus_2pi").unwrap();
    let pf = PointFrame::new(&e.manifold, &[1.0, 2.5]).unwrap();
    assert!(pf.christoffel_array().iter().flatten().flatten().all(|g| *g == 0.0));
    assert!(pf.riemann().values().iter().all(|r| *r == 0.0));
}

#[test]
fn sphere_christoffels_at_quarter_and_equator() {
    let e = zoo::instantiate("sphere_unit").unwrap();
    let pf = PointFrame::new(&e.manifold, &[PI / 4.0, 0.3]).unwrap();
    assert!(close(pf.christoffel(0, 1, 1), -0.5, 1e-14));
    let eq = PointFrame::new(&e.manifold, &[PI / 2.0, 0.3]).unwrap();
    assert!(eq.christoffel(0, 1, 1).abs() < 1e-15);
    assert!(eq.christoffel(1, 0, 1).abs() < 1e-15);
}

#[test]
fn space_form_sectional_curvatures() {
    for (id, k) in [("sphere_unit", 1.0), ("sphere_r", 0.25), ("torus_2pi", 0.0)] {
        let e = zoo::instantiate(id).unwrap();
        for p in chart_points(e.manifold.primary(), 20, 3) {
            let pf = PointFrame::new(&e.manifold, &p).unwrap();
            let sec = pf.sectional(&pf.frame_vector(0), &pf.frame_vector(1));
            assert!((sec - k).abs() < 1e-9, "{id} at {p:?}: {sec}");
        }
    }
}

#[test]
fn curvature_symmetries_hold_on_the_sphere() {
    let e = zoo::instantiate("sphere_unit").unwrap();
    let pf = PointFrame::new(&e.manifold, &[1.1, 4.0]).unwrap();
    let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
    let (a, b, c, d) = (v(0.3, -1.2), v(0.7, 0.4), v(-0.5, 2.0), v(1.0, 0.1));
    let r1 = pf.curvature(&a, &b, &c);
    let r2 = pf.curvature(&b, &a, &c);
    assert!((r1 + r2).norm() < 1e-10);
    let s1 = pf.inner(&pf.curvature(&a, &b, &c), &d);
    let s2 = pf.inner(&pf.curvature(&a, &b, &d), &c);
    assert!((s1 + s2).abs() < 1e-10);
}

#[test]
fn ric_a_on_unit_sphere_with_diag_field() {
    let (e, i) = zoo::resolve_case("sphere_unit/A=diag(2,1)").unwrap();
    let p = [0.9, 1.7];
    let pf = PointFrame::new(&e.manifold, &p).unwrap();
    let a = pf.endomorphism(&e.fields[i].field).unwrap().matrix();
    let a_frame = pf.endomorphism_in_frame(&a);
    assert!((a_frame - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]))).abs().max() < 1e-12);
    let ric = pf.ric_a_frame(&a);
    assert!((ric - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).abs().max() < 1e-10);
    let id = DMatrix::identity(2, 2);
    assert!((pf.ric_a_frame(&id) - DMatrix::identity(2, 2)).abs().max() < 1e-10);
}

#[test]
fn ric_a_of_identity_equals_ricci_everywhere() {
    for id in zoo::ENTRY_IDS {
        let e = zoo::instantiate(id).unwrap();
        let id2 = DMatrix::identity(2, 2);
        for p in chart_points(e.manifold.primary(), 10, 1) {
            let pf = PointFrame::new(&e.manifold, &p).unwrap();
            let ric = pf.frame_form(|a, b| pf.ricci(a, b));
            assert!((pf.ric_a_frame(&id2) - ric).abs().max() < 1e-10, "{id}");
        }
    }
}

#[test]
fn plane_hessian_and_operators() {
    let e = zoo::instantiate("plane").unwrap();
    let p = [0.4, -0.3];
    let pf = PointFrame::new(&e.manifold, &p).unwrap();
    let u = pf.scalar(&(x() * x())).unwrap();
    assert_eq!(pf.gradient(&u).vector_values().as_slice(), &[0.8, 0.0]);
    assert_eq!(pf.hessian(&u).matrix(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));

    let a = pf.endomorphism(&e.field("A=diag(2,1)").unwrap().field).unwrap();
    let r2 = pf.scalar(&(x() * x() + y() * y())).unwrap();
    assert!((pf.op_l_a(&a, &r2).at(&[]) - 6.0).abs() < 1e-14);
    assert!((pf.op_delta_a(&a, &r2).at(&[]) - 6.0).abs() < 1e-14);

    let h = pf.endomorphism(&e.field("A=Hess(x^3)").unwrap().field).unwrap();
    assert!((pf.op_delta_a(&h, &u).at(&[]) - 12.0 * p[0]).abs() < 1e-13);
    assert!((pf.op_l_a(&h, &u).at(&[]) - 24.0 * p[0]).abs() < 1e-13);
}

#[test]
fn sphere_height_function_hessian_and_laplacian() {
    let e = zoo::instantiate("sphere_unit").unwrap();
    let z = e.function("z").unwrap();
    let id = e.field("A=Id").unwrap();
    for p in chart_points(e.manifold.primary(), 10, 5) {
        let pf = PointFrame::new(&e.manifold, &p).unwrap();
        let u = pf.scalar(&z.u).unwrap();
        let cos = p[0].cos();
        let expected = pf.metric() * -cos;
        assert!((pf.hessian(&u).matrix() - expected).abs().max() < 1e-12);
        let a = pf.endomorphism(&id.field).unwrap();
        assert!((pf.op_l_a(&a, &u).at(&[]) + 2.0 * cos).abs() < 1e-12);
    }
}

#[test]
fn constant_function_has_zero_gradient_and_hessian() {
    let e = zoo::instantiate("sphere_unit").unwrap();
    let c = ScalarJetField::new("c", ChartFn::constant(3.0), FieldRole::TestFunction);
    let pf = PointFrame::new(&e.manifold, &[1.0, 1.0]).unwrap();
    let u = pf.scalar(&c.u).unwrap();
    assert!(pf.gradient(&u).values().iter().all(|v| *v == 0.0));
    assert!(pf.hessian(&u).values().iter().all(|v| *v == 0.0));
}

#[test]
fn tensor_derivatives_of_catalog_fields() {
    let (e, i) = zoo::resolve_case("plane/A=[[y,0],[0,0]]").unwrap();
    let pf = PointFrame::new(&e.manifold, &[0.2, 0.5]).unwrap();
    let d = pf.tensor_derivatives(&pf.endomorphism(&e.fields[i].field).unwrap());
    let ex = DVector::from_vec(vec![1.0, 0.0]);
    let ey = DVector::from_vec(vec![0.0, 1.0]);
    let t = d.t_at(&ex, &ey);
    assert!((t - DVector::from_vec(vec![-1.0, 0.0])).norm() < 1e-14);

    let (e, i) = zoo::resolve_case("plane/A=Hess(x^3-3xy^2)").unwrap();
    for p in chart_points(e.manifold.primary(), 10, 2) {
        let pf = PointFrame::new(&e.manifold, &p).unwrap();
        let d = pf.tensor_derivatives(&pf.endomorphism(&e.fields[i].field).unwrap());
        assert!(pf.tensor_norm(&d.t) < 1e-12);
        assert!(pf.tensor_norm(&d.divergence) < 1e-12);
    }

    let (e, i) = zoo::resolve_case("torus_2pi/A=[[2,0.5],[0.5,1]]").unwrap();
    let pf = PointFrame::new(&e.manifold, &[0.5, 0.5]).unwrap();
    let d = pf.tensor_derivatives(&pf.endomorphism(&e.fields[i].field).unwrap());
    for t in [&d.nabla, &d.t, &d.laplacian, &d.divergence] {
        assert_eq!(pf.tensor_norm(t), 0.0);
    }
}

#[test]
fn catalog_examples() {
    let (e, i) = zoo::resolve_case("sphere_unit/A=1.5I").unwrap();
    assert!(e.fields[i].field.declared.parallel);
    assert_eq!(analytic_lambda1(&e, "A=1.5I", BoundaryCondition::Closed), Some(3.0));
    let pf = PointFrame::new(&e.manifold, &[0.7, 0.2]).unwrap();
    let a = pf.endomorphism(&e.fields[i].field).unwrap().matrix();
    assert!((pf.ric_a_frame(&a) - DMatrix::identity(2, 2) * 1.5).abs().max() < 1e-10);

    let (e, i) = zoo::resolve_case("torus_2pi/A=diag(2,1)").unwrap();
    assert!(e.fields[i].field.declared.parallel);
    assert_eq!(analytic_lambda1(&e, "A=diag(2,1)", BoundaryCondition::Closed), Some(1.0));

    let (e, i) = zoo::resolve_case("disk_unit/A=Hess(x^3-3xy^2)").unwrap();
    let pts = chart_points(e.manifold.primary(), 50, 0);
    let s = structure_check(&e.manifold, &e.fields[i].field, &pts).unwrap();
    assert!(s.flags.codazzi && s.flags.divergence_free && s.flags.trace_constant);
    assert!(!s.flags.positive_semidefinite);

    for alpha in [0.5, 1.0, 1.5] {
        let (e, i) = zoo::resolve_case(&format!("hemisphere_unit/A={alpha}I")).unwrap();
        let name = e.fields[i].field.name.clone();
        assert_eq!(analytic_lambda1(&e, &name, BoundaryCondition::Dirichlet), Some(2.0 * alpha));
    }
}

#[test]
fn space_form_ric_a_matches_closed_form() {
    for case in ["sphere_unit/A=diag(2,1)", "sphere_r/A=Hess(phi)+phi*g", "sphere_unit/A=Hess(phi)+phi*g"] {
        let (e, i) = zoo::resolve_case(case).unwrap();
        let c = e.manifold.curvature_constant.unwrap();
        for p in chart_points(e.manifold.primary(), 25, 9) {
            let pf = PointFrame::new(&e.manifold, &p).unwrap();
            let a = pf.endomorphism(&e.fields[i].field).unwrap().matrix();
            let hat = pf.endomorphism_in_frame(&a);
            let expected = (DMatrix::identity(2, 2) * hat.trace() - &hat) * c;
            assert!((pf.ric_a_frame(&a) - expected).abs().max() < 1e-9, "{case}");
        }
    }
}

fn poly(c: &[f64; 10]) -> ChartFn {
    // dense cubic in two variables
    let mono = [
        ChartFn::constant(1.0),
        x(),
        y(),
        x() * x(),
        x() * y(),
        y() * y(),
        x() * x() * x(),
        x() * x() * y(),
        x() * y() * y(),
        y() * y() * y(),
    ];
    mono.iter().zip(c).fold(ChartFn::constant(0.0), |acc, (m, k)| acc + *k * m.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubic_partials_are_exact(c in prop::array::uniform10(-3.0f64..3.0), px in -2.0f64..2.0, py in -2.0f64..2.0) {
        let j = poly(&c).jet(&[px, py]).unwrap();
        let fx = c[1] + 2.0 * c[3] * px + c[4] * py + 3.0 * c[6] * px * px + 2.0 * c[7] * px * py + c[8] * py * py;
        let fxy = c[4] + 2.0 * c[7] * px + 2.0 * c[8] * py;
        let fxxy = 2.0 * c[7];
        let fyyy = 6.0 * c[9];
        prop_assert!(close(j.d1(0), fx, 1e-14));
        prop_assert!(close(j.d2(0, 1), fxy, 1e-14));
        prop_assert!(close(j.derivative(&[2, 1]), fxxy, 1e-14));
        prop_assert!(close(j.derivative(&[0, 3]), fyyy, 1e-14));
    }

    #[test]
    fn jets_are_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, px in -1.0f64..1.0, py in -1.0f64..1.0) {
        let f = x().sin() * y().exp();
        let g = (x() * y()).cos() + y() * y();
        let lhs = (a * f.clone() + b * g.clone()).jet(&[px, py]).unwrap();
        let rhs = f.jet(&[px, py]).unwrap() * a + g.jet(&[px, py]).unwrap() * b;
        for (l, r) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((l - r).abs() <= 1e-13 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn composition_matches_chain_rule(px in -1.0f64..1.0, py in -1.0f64..1.0) {
        // f(s, t) = exp(s)·sin(t) composed with g = (x·y, x + y²)
        let f = x().exp() * y().sin();
        let g = [x() * y(), x() + y() * y()];
        let composed = f.compose(&g).jet(&[px, py]).unwrap();
        let direct = ((x() * y()).exp() * (x() + y() * y()).sin()).jet(&[px, py]).unwrap();
        for (l, r) in composed.coeffs().iter().zip(direct.coeffs()) {
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }
}
