use std::f64::consts::PI;

use reilly_core::boundary::{boundary_geometry, pin_sigma, reilly_codazzi, reilly_parallel, Sigma};
use reilly_core::zoo;

fn eval_parallel(case: &str, u: &str, q: usize, sigma: Sigma) -> f64 {
    let (e, i) = zoo::resolve_case(case).unwrap();
    reilly_parallel(&e.manifold, &e.fields[i].field, e.function(u).unwrap(), q, sigma).unwrap().defect
}

fn eval_codazzi(case: &str, u: &str, q: usize, sigma: Sigma) -> f64 {
    let (e, i) = zoo::resolve_case(case).unwrap();
    reilly_codazzi(&e.manifold, &e.fields[i].field, e.function(u).unwrap(), q, sigma).unwrap().defect
}

#[test]
fn exactly_one_sign_closes_classical_reilly() {
    let pin = pin_sigma(8).unwrap();
    assert_eq!(pin.sigma, Sigma::Minus);
    assert!(pin.defect_minus <= 1e-8);
    assert!(pin.defect_plus > 1e-2);
    for q in [12, 16, 24] {
        assert_eq!(pin_sigma(q).unwrap().sigma, pin.sigma);
    }
}

#[test]
fn parallel_formula_examples() {
    let s = pin_sigma(8).unwrap().sigma;
    assert!(eval_parallel("disk_unit/A=Id", "x^2", 8, s) <= 1e-8);
    assert!(eval_parallel("hemisphere_unit/A=1.5I", "z", 16, s) <= 1e-6);
    assert!(eval_parallel("hemisphere_unit/A=Id", "x*y+z", 16, s) <= 1e-6);
    assert!(eval_parallel("disk_unit/A=diag(2,1)", "x*y+y", 12, s) <= 1e-8);
}

#[test]
fn codazzi_formula_examples() {
    let s = pin_sigma(12).unwrap().sigma;
    for u in ["x", "x^2+y^2", "x^2", "x*y+y"] {
        let d = eval_codazzi("disk_unit/A=Hess(x^3-3xy^2)", u, 12, s);
        assert!(d <= 1e-6, "{u}: {d}");
    }
}

#[test]
fn codazzi_form_reduces_to_parallel_form_for_identity() {
    let s = pin_sigma(12).unwrap().sigma;
    let (e, i) = zoo::resolve_case("disk_unit/A=Id").unwrap();
    let u = e.function("x*y+y").unwrap();
    let p = reilly_parallel(&e.manifold, &e.fields[i].field, u, 12, s).unwrap();
    let c = reilly_codazzi(&e.manifold, &e.fields[i].field, u, 12, s).unwrap();
    assert!((p.b - c.b).abs() < 1e-12 && (p.c - c.c).abs() < 1e-12);
}

#[test]
fn parallel_form_rejects_non_parallel_fields() {
    let (e, i) = zoo::resolve_case("disk_unit/A=Hess(x^3-3xy^2)").unwrap();
    assert!(reilly_parallel(&e.manifold, &e.fields[i].field, e.function("x").unwrap(), 8, Sigma::Minus).is_err());
}

#[test]
fn closed_torus_has_no_boundary_term() {
    let (e, i) = zoo::resolve_case("torus_2pi/A=diag(2,1)").unwrap();
    for u in ["cos(x)", "sin(x)*cos(2y)", "exp(sin(x))*cos(y)"] {
        let r = reilly_parallel(&e.manifold, &e.fields[i].field, e.function(u).unwrap(), 16, Sigma::Minus).unwrap();
        assert_eq!(r.b, 0.0);
        assert!(r.c.abs() <= 1e-8, "{u}: {}", r.c);
    }
}

#[test]
fn extended_mean_curvature_examples() {
    let (e, i) = zoo::resolve_case("hemisphere_unit/A=Id").unwrap();
    for s in [0.0, 1.0, 4.0] {
        let b = boundary_geometry(&e.manifold, &e.fields[i].field, s, Sigma::Minus).unwrap();
        assert!(b.h_a.abs() < 1e-12);
    }
    let (e, i) = zoo::resolve_case("disk_unit/A=Id").unwrap();
    let minus = boundary_geometry(&e.manifold, &e.fields[i].field, 0.7, Sigma::Minus).unwrap();
    let plus = boundary_geometry(&e.manifold, &e.fields[i].field, 0.7, Sigma::Plus).unwrap();
    assert!((minus.h_a + 1.0).abs() < 1e-12);
    assert!((plus.h_a - 1.0).abs() < 1e-12);
    assert!((minus.measure - 1.0).abs() < 1e-12);

    let (e, i) = zoo::resolve_case("disk_unit/A=diag(2,1)").unwrap();
    for sigma in [Sigma::Plus, Sigma::Minus] {
        let b = boundary_geometry(&e.manifold, &e.fields[i].field, 0.0, sigma).unwrap();
        assert!((b.h_a - sigma.value()).abs() < 1e-12);
    }
    let top = boundary_geometry(&e.manifold, &e.fields[i].field, PI / 2.0, Sigma::Plus).unwrap();
    assert!((top.h_a - 2.0).abs() < 1e-12);
}

#[test]
fn defect_decreases_with_quadrature_order() {
    let s = pin_sigma(8).unwrap().sigma;
    let cases = [
        ("hemisphere_unit/A=1.5I", "x*y+z", true),
        ("disk_unit/A=Hess(x^3-3xy^2)", "x^2+y^2", false),
        ("disk_unit/A=Id", "x*y+y", true),
    ];
    for (case, u, parallel) in cases {
        let d: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|q| if parallel { eval_parallel(case, u, *q, s) } else { eval_codazzi(case, u, *q, s) })
            .collect();
        for w in d.windows(2) {
            assert!(w[1] <= 1.1 * w[0] || w[1] <= 1e-12, "{case} {u}: {d:?}");
        }
    }
}
