use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use reilly_core::geometry::FieldRole;
use reilly_core::identities::{
    bochner_parallel_residual, bochner_residual, delta_a_identity_residual, nabla_nabla_u_residual, run_case,
    structure_check, trace_inequality_slack, trace_inequality_sweep, Identity, TRACE_SLACK_TOL,
};
use reilly_core::sampling::chart_points;
use reilly_core::zoo::{self, CatalogEntry};
use reilly_core::{ChartFn, ScalarJetField};

fn case(id: &str) -> (CatalogEntry, usize) {
    zoo::resolve_case(id).unwrap()
}

#[test]
fn classical_bochner_on_flat_torus_is_exact() {
    let (e, i) = case("torus_2pi/A=Id");
    let u = e.function("cos(x)").unwrap();
    for p in chart_points(e.manifold.primary(), 100, 0) {
        let s = bochner_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap();
        assert!(s.relative() <= 1e-12, "{p:?}: {}", s.relative());
    }
}

#[test]
fn bochner_on_scaled_sphere_with_height_function() {
    let (e, i) = case("sphere_unit/A=1.5I");
    let u = e.function("z").unwrap();
    for p in chart_points(e.manifold.primary(), 50, 1) {
        let a = &e.fields[i].field;
        assert!(bochner_residual(&e.manifold, a, u, &p).unwrap().relative() <= 1e-8);
        assert!(bochner_parallel_residual(&e.manifold, a, u, &p).unwrap().relative() <= 1e-8);
    }
}

#[test]
fn bochner_parallel_on_anisotropic_torus() {
    let (e, i) = case("torus_2pi/A=diag(2,1)");
    let u = e.function("cos(x)").unwrap();
    for p in chart_points(e.manifold.primary(), 50, 2) {
        assert!(bochner_parallel_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap().relative() <= 1e-10);
    }
}

#[test]
fn constant_function_gives_zero_residual_everywhere() {
    for c in zoo::all_cases() {
        let (e, i) = case(&c);
        let u = e.function("const").unwrap();
        for p in chart_points(e.manifold.primary(), 5, 3) {
            assert_eq!(bochner_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap().residual, 0.0, "{c}");
        }
    }
}

#[test]
fn parallel_form_agrees_with_general_form_for_identity() {
    let (e, i) = case("sphere_unit/A=Id");
    let u = e.function("exp(x/2)+y*z^2").unwrap();
    for p in chart_points(e.manifold.primary(), 10, 4) {
        let a = bochner_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap();
        let b = bochner_parallel_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap();
        assert!((a.relative() - b.relative()).abs() < 1e-12);
    }
}

#[test]
fn delta_a_identity_on_codazzi_fields() {
    let x = DVector::from_vec(vec![0.6, -0.8]);
    for id in ["sphere_unit/A=Hess(phi)+phi*g", "disk_unit/A=Hess(x^3-3xy^2)", "torus_2pi/A=diag(2,1)"] {
        let (e, i) = case(id);
        for p in chart_points(e.manifold.primary(), 30, 5) {
            let s = delta_a_identity_residual(&e.manifold, &e.fields[i].field, &p, &x).unwrap();
            assert!(s.relative() <= 1e-7, "{id}: {}", s.relative());
        }
    }
}

#[test]
fn delta_a_identity_refuses_non_codazzi_fields() {
    let (e, i) = case("plane/A=[[y,0],[0,0]]");
    let x = DVector::from_vec(vec![1.0, 0.0]);
    assert!(delta_a_identity_residual(&e.manifold, &e.fields[i].field, &[0.1, 0.2], &x).is_err());
}

#[test]
fn nabla_nabla_u_examples() {
    let (e, i) = case("plane/A=Hess(x^3)");
    let u = e.function("x^2").unwrap();
    for p in chart_points(e.manifold.primary(), 20, 6) {
        let s = nabla_nabla_u_residual(&e.manifold, &e.fields[i].field, u, &p).unwrap();
        assert!(s.relative() <= 1e-9);
    }
    let (e, i) = case("plane/A=diag(2,1)");
    let u = e.function("sin(x)*exp(y)").unwrap();
    let s = nabla_nabla_u_residual(&e.manifold, &e.fields[i].field, u, &[0.3, 0.1]).unwrap();
    assert_eq!(s.residual, 0.0);
    assert_eq!(s.scale, 0.0);
}

#[test]
fn every_catalog_case_satisfies_its_identities() {
    for c in zoo::all_cases() {
        let (e, i) = case(&c);
        let records = run_case(&e, i, 100, 0, None).unwrap();
        let kinds: Vec<Identity> = Identity::applicable(&e.fields[i].field.declared);
        assert!(kinds.contains(&Identity::LemmaA) && kinds.contains(&Identity::LemmaB));
        for r in &records {
            assert!(r.pass(), "{c} {:?} {:?}: {}", r.identity, r.function, r.relative_residual);
        }
    }
}

#[test]
fn run_case_is_deterministic_across_thread_counts() {
    let (e, i) = case("sphere_unit/A=Hess(phi)+phi*g");
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = one.install(|| run_case(&e, i, 40, 7, None).unwrap());
    let b = run_case(&e, i, 40, 7, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trace_inequality_examples() {
    let id = DMatrix::<f64>::identity(2, 2);
    let f = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    assert!((trace_inequality_slack(&id, &f).unwrap() - 0.5).abs() < 1e-15);
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
    let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!((trace_inequality_slack(&a, &f).unwrap() - 2.0).abs() < 1e-15);
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5]);
    let f = DMatrix::<f64>::identity(3, 3) * 3.0;
    assert!(trace_inequality_slack(&a, &f).unwrap().abs() < 1e-13);
}

#[test]
fn trace_inequality_rejects_indefinite_a() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(trace_inequality_slack(&a, &DMatrix::identity(2, 2)).is_err());
}

#[test]
fn trace_inequality_sweep_has_no_violations() {
    let s = trace_inequality_sweep(1000, 0);
    assert_eq!(s.pairs, 1000);
    assert_eq!(s.violations, 0);
    assert!(s.scalar_max_relative <= TRACE_SLACK_TOL);
}

#[test]
fn structure_flags_match_examples() {
    let (e, i) = case("torus_2pi/A=diag(2,1)");
    let pts = chart_points(e.manifold.primary(), 20, 0);
    let s = structure_check(&e.manifold, &e.fields[i].field, &pts).unwrap();
    let f = s.flags;
    assert!(f.self_adjoint && f.positive_semidefinite && f.parallel && f.codazzi && f.divergence_free);
    assert!(f.trace_constant);

    let (e, i) = case("plane/A=[[y,0],[0,0]]");
    let pts = chart_points(e.manifold.primary(), 20, 0);
    let s = structure_check(&e.manifold, &e.fields[i].field, &pts).unwrap();
    assert!(!s.flags.codazzi);
    assert!((s.worst.codazzi - 2f64.sqrt()).abs() < 1e-12, "‖T‖ counts both orderings: {}", s.worst.codazzi);
    assert!(s.flags.divergence_free);
}

#[test]
fn declared_flags_are_never_contradicted() {
    for c in zoo::all_cases() {
        let (e, i) = case(&c);
        let pts = chart_points(e.manifold.primary(), 50, 11);
        let s = structure_check(&e.manifold, &e.fields[i].field, &pts).unwrap();
        assert!(s.contradicted(&e.fields[i].field.declared).is_empty(), "{c}");
    }
}

fn spd(seed: &[f64], n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
    &g * g.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_inequality_slack_is_nonnegative(
        n in 2usize..=6,
        gs in prop::collection::vec(-2.0f64..2.0, 36),
        fs in prop::collection::vec(-3.0f64..3.0, 36),
    ) {
        let a = spd(&gs, n);
        prop_assume!(a.trace() > 1e-6);
        let h = DMatrix::from_fn(n, n, |i, j| fs[i * n + j]);
        let f = (&h + h.transpose()) * 0.5;
        let af2 = (&a * &f * &f).trace();
        let slack = trace_inequality_slack(&a, &f).unwrap();
        prop_assert!(slack >= -TRACE_SLACK_TOL * (1.0 + af2.abs()));
        let scalar = trace_inequality_slack(&a, &(DMatrix::identity(n, n) * fs[0])).unwrap();
        prop_assert!(scalar.abs() <= TRACE_SLACK_TOL * (1.0 + (a.trace() * fs[0] * fs[0]).abs()));
    }

    #[test]
    fn bochner_holds_for_random_trigonometric_functions(
        a in -1.0f64..1.0, b in -1.0f64..1.0, k in 1i32..4, px in 0.1f64..6.2, py in 0.1f64..6.2,
    ) {
        let (e, i) = case("torus_2pi/A=diag(2+sin(y),1)");
        let (x, y) = (ChartFn::coord(0), ChartFn::coord(1));
        let u = a * (k as f64 * x.clone()).sin() * y.cos() + b * (x + y).exp().sin();
        let u = ScalarJetField::new("u", u, FieldRole::TestFunction);
        let s = bochner_residual(&e.manifold, &e.fields[i].field, &u, &[px, py]).unwrap();
        prop_assert!(s.relative() <= 1e-7);
    }
}
