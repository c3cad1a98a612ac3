//! Boundary geometry and the two sides of the Reilly-type formulas.
//!
//! The boundary is the zero set of the defining function `ρ` of the
//! manifold's [`BoundarySpec`](crate::geometry::BoundarySpec); the outward
//! normal field `n = ∇ρ/|∇ρ|` is extended to a neighborhood by the level sets
//! of `ρ`, which only tangential derivatives ever see.
//!
//! The shape operator is `shape(X) = σ ∇_X n` with `σ = ±1` pinned
//! empirically by [`pin_sigma`].

pub mod quadrature;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{ChartManifold, EndomorphismField, GeometryError, PointFrame, ScalarJetField, TensorJet};
use crate::identities::{self, IdentityError};
use crate::jets::DomainError;
use crate::sampling;
use crate::zoo::{self, CatalogEntry};
use quadrature::{pairwise_sum, rule, tensor_rule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("parameter {s} is not on the boundary (ρ = {rho:e})")]
    NotOnBoundary { s: f64, rho: f64 },
    #[error("manifold `{0}` has no boundary")]
    NoBoundary(String),
    #[error("degenerate boundary data: {0}")]
    Degenerate(#[from] DomainError),
    #[error("shape sign could not be pinned: defects {plus:e} (σ=+1) and {minus:e} (σ=−1)")]
    SigmaAmbiguous { plus: f64, minus: f64 },
}

/// Sign in `shape(X) = σ ∇_X n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sigma {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sigma {
    pub fn value(&self) -> f64 {
        match self {
            Sigma::Plus => 1.0,
            Sigma::Minus => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Sigma> {
        match s {
            "+1" | "1" | "+" => Some(Sigma::Plus),
            "-1" | "−1" | "-" => Some(Sigma::Minus),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Sigma::Plus => "+1",
            Sigma::Minus => "-1",
        }
    }
}

/// Geometry of the boundary at one parameter value. Vectors are chart components.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub s: f64,
    pub point: Vec<f64>,
    pub normal: DVector<f64>,
    /// Orthonormal basis of the boundary tangent space.
    pub tangents: Vec<DVector<f64>>,
    /// `⟨shape(t_i), t_j⟩`.
    pub shape: DMatrix<f64>,
    pub h_a: f64,
    /// `|p'(s)|_g`, the boundary measure density.
    pub measure: f64,
}

struct BoundaryJets {
    pf: PointFrame,
    point: Vec<f64>,
    normal: TensorJet,
    tangents: Vec<DVector<f64>>,
    measure: f64,
}

fn boundary_jets(m: &ChartManifold, s: f64) -> Result<BoundaryJets, BoundaryError> {
    let spec = m.boundary.as_ref().ok_or_else(|| BoundaryError::NoBoundary(m.name.clone()))?;
    let (lo, hi) = spec.s_range;
    if !spec.periodic && !(lo..=hi).contains(&s) {
        return Err(BoundaryError::NotOnBoundary { s, rho: f64::NAN });
    }
    let point: Vec<f64> =
        spec.parametrization.iter().map(|c| c.eval(&[s])).collect::<Result<_, _>>().map_err(GeometryError::from)?;
    let rho = spec.defining.eval(&point).map_err(GeometryError::from)?;
    if rho.abs() > 1e-10 {
        return Err(BoundaryError::NotOnBoundary { s, rho });
    }
    let pf = PointFrame::new(m, &point)?;
    let grad = pf.gradient(&pf.scalar(&spec.defining)?);
    let inv = pf.dot(&grad, &grad).get(&[]).sqrt()?.recip()?;
    let normal = grad.map(|c| c * inv);

    let nv = normal.vector_values();
    let mut tangents: Vec<DVector<f64>> = Vec::new();
    for i in 0..pf.dim() {
        let mut v = pf.frame_vector(i);
        v -= &nv * pf.inner(&nv, &v);
        for t in &tangents {
            v -= t * pf.inner(t, &v);
        }
        let len = pf.norm(&v);
        if len > 1e-8 && tangents.len() + 1 < pf.dim() {
            tangents.push(v / len);
        }
    }
    let velocity = DVector::from_iterator(
        pf.dim(),
        spec.parametrization.iter().map(|c| c.diff(0).eval(&[s])).collect::<Result<Vec<_>, _>>().map_err(GeometryError::from)?,
    );
    let measure = pf.norm(&velocity);
    Ok(BoundaryJets { pf, point, normal, tangents, measure })
}

fn apply_vals(a: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    a * v
}

/// `∇_X V` for a vector jet field `V` with `nabla_v[k, a]`.
fn directional(nabla_v: &TensorJet, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(n, |a, _| (0..n).map(|k| x[k] * nabla_v.at(&[k, a])).sum())
}

/// Normal, tangent frame, shape operator and `H_A = Trace(A ∘ shape)` at parameter `s`.
pub fn boundary_geometry(
    m: &ChartManifold,
    a: &EndomorphismField,
    s: f64,
    sigma: Sigma,
) -> Result<BoundaryPoint, BoundaryError> {
    let bj = boundary_jets(m, s)?;
    let pf = &bj.pf;
    let a_vals = pf.endomorphism(a)?.matrix();
    let dn = pf.nabla(&bj.normal);
    let shape_of = |x: &DVector<f64>| directional(&dn, x) * sigma.value();
    let k = bj.tangents.len();
    let shape = DMatrix::from_fn(k, k, |i, j| pf.inner(&shape_of(&bj.tangents[i]), &bj.tangents[j]));
    let h_a = bj.tangents.iter().map(|t| pf.inner(&apply_vals(&a_vals, &shape_of(t)), t)).sum();
    Ok(BoundaryPoint {
        s,
        point: bj.point.clone(),
        normal: bj.normal.vector_values(),
        tangents: bj.tangents.clone(),
        shape,
        h_a,
        measure: bj.measure,
    })
}

/// Which Reilly-type formula is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReillyForm {
    /// `A` parallel.
    Parallel,
    /// `A` Codazzi and divergence free.
    Codazzi,
}

/// Boundary operator inside `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryOperator {
    /// `Σ_{i<n} ⟨∇^∂_{e_i}∇^∂u, A e_i⟩`.
    Trace,
    /// `div^∂(P A P ∇^∂u)` with `P` the tangential projection.
    Divergence,
}

/// Named integral with its value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReillyEvaluation {
    pub form: ReillyForm,
    pub function: String,
    pub q: usize,
    pub sigma: Sigma,
    pub b: f64,
    pub c: f64,
    pub defect: f64,
    pub b_terms: Vec<Term>,
    pub c_terms: Vec<Term>,
    /// `B` recomputed with [`BoundaryOperator::Divergence`].
    pub b_divergence_operator: f64,
    pub defect_divergence_operator: f64,
}

fn relative_defect(b: f64, c: f64) -> f64 {
    (b - c).abs() / b.abs().max(c.abs()).max(1.0)
}

const B_NAMES: [&str; 9] = [
    "grad_grad_a_n",
    "shape_a_n",
    "mean_curvature",
    "a_n_grad_u_n",
    "tangential_u_n",
    "boundary_operator",
    "nabla_n_a_tangential",
    "nabla_n_a_normal",
    "nabla_n_a_mixed",
];

const C_NAMES_PARALLEL: [&str; 3] = ["trace_a_hess2", "l_a_u_laplacian_u", "ric_a"];
const C_NAMES_CODAZZI: [&str; 4] = ["trace_a_hess2", "delta_a_u_laplacian_u", "ric_a", "half_laplacian_a"];

/// Boundary integrands at parameter `s`: the nine `B` terms (the last three
/// vanish for the parallel form) and the divergence-variant boundary operator term.
fn boundary_integrands(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    s: f64,
    sigma: Sigma,
    form: ReillyForm,
) -> Result<([f64; 9], f64, f64), BoundaryError> {
    let bj = boundary_jets(m, s)?;
    let pf = &bj.pf;
    let aj = pf.endomorphism(a)?;
    let a_vals = aj.matrix();
    let n = &bj.normal;
    let nv = n.vector_values();
    let an = apply_vals(&a_vals, &nv);

    let uj = pf.scalar(&u.u)?;
    let grad = pf.gradient(&uj);
    let un_jet = pf.dot(&grad, n).get(&[]);
    let un = un_jet.value();
    let gb = grad.minus(&n.map(|c| c * un_jet));
    let gbv = gb.vector_values();
    let d_gb = pf.nabla(&gb);
    let dn = pf.nabla(n);
    let shape_of = |x: &DVector<f64>| directional(&dn, x) * sigma.value();

    let grad_un = pf.gradient(&TensorJet::scalar(un_jet)).vector_values();
    let grad_b_un = &grad_un - &nv * pf.inner(&grad_un, &nv);

    let h_a: f64 = bj.tangents.iter().map(|t| pf.inner(&apply_vals(&a_vals, &shape_of(t)), t)).sum();
    let proj = |v: &DVector<f64>| v - &nv * pf.inner(&nv, v);
    let trace_op: f64 =
        bj.tangents.iter().map(|t| pf.inner(&directional(&d_gb, t), &proj(&apply_vals(&a_vals, t)))).sum();

    let w = pf.apply(&aj, &gb);
    let wn = pf.dot(&w, n).get(&[]);
    let v = w.minus(&n.map(|c| c * wn));
    let dv = pf.nabla(&v);
    let div_op: f64 = bj.tangents.iter().map(|t| pf.inner(&directional(&dv, t), t)).sum();

    let mut terms = [0.0; 9];
    terms[0] = pf.inner(&directional(&d_gb, &gbv), &an);
    terms[1] = -2.0 * un * pf.inner(&shape_of(&gbv), &an);
    terms[2] = un * un * h_a;
    terms[3] = -un * pf.inner(&an, &grad_b_un);
    terms[4] = pf.inner(&gbv, &grad_un) * pf.inner(&nv, &an);
    terms[5] = -un * trace_op;
    if form == ReillyForm::Codazzi {
        let d = pf.tensor_derivatives(&aj);
        let nabla_n = |x: &DVector<f64>| d.nabla_at(&nv, x);
        terms[6] = 0.5 * pf.inner(&gbv, &nabla_n(&gbv));
        terms[7] = 0.5 * un * un * pf.inner(&nv, &nabla_n(&nv));
        terms[8] = un * pf.inner(&gbv, &nabla_n(&nv));
    }
    Ok((terms, -un * div_op, bj.measure))
}

fn interior_integrands(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
    form: ReillyForm,
) -> Result<(Vec<f64>, f64), BoundaryError> {
    let pf = PointFrame::new(m, p)?;
    let aj = pf.endomorphism(a)?;
    let a_vals = aj.matrix();
    let uj = pf.scalar(&u.u)?;
    let gv = pf.gradient(&uj).vector_values();
    let hmix = pf.inverse_metric() * pf.hessian(&uj).matrix();
    let lap = pf.laplacian(&uj).at(&[]);
    let trace_hess2 = (&a_vals * &hmix * &hmix).trace();
    let ric = pf.ric_a(&a_vals, &gv, &gv);
    let vals = match form {
        ReillyForm::Parallel => vec![trace_hess2, -pf.op_l_a(&aj, &uj).at(&[]) * lap, ric],
        ReillyForm::Codazzi => {
            let d = pf.tensor_derivatives(&aj);
            vec![
                trace_hess2,
                -pf.op_delta_a(&aj, &uj).at(&[]) * lap,
                ric,
                0.5 * pf.inner(&gv, &(d.laplacian.matrix() * &gv)),
            ]
        }
    };
    Ok((vals, pf.volume_density()))
}

fn integrate_columns(rows: &[(Vec<f64>, f64)], weights: &[f64], width: usize) -> Vec<f64> {
    (0..width)
        .map(|k| {
            let col: Vec<f64> = rows.iter().zip(weights).map(|((v, dens), w)| v[k] * dens * w).collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// Evaluates both sides of a Reilly-type formula with order-`q` quadrature.
/// Hypotheses are not checked here; see [`reilly_parallel`] and [`reilly_codazzi`].
pub fn evaluate_reilly(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    q: usize,
    sigma: Sigma,
    form: ReillyForm,
) -> Result<ReillyEvaluation, BoundaryError> {
    let chart = m.primary();
    let rules: Vec<_> = (0..chart.dim()).map(|i| rule(chart.lower[i], chart.upper[i], chart.periodic[i], q)).collect();
    let (nodes, weights) = tensor_rule(&rules);
    let rows: Vec<(Vec<f64>, f64)> =
        nodes.par_iter().map(|p| interior_integrands(m, a, u, p, form)).collect::<Result<_, _>>()?;
    let c_names: &[&'static str] = match form {
        ReillyForm::Parallel => &C_NAMES_PARALLEL,
        ReillyForm::Codazzi => &C_NAMES_CODAZZI,
    };
    let c_vals = integrate_columns(&rows, &weights, c_names.len());

    let mut b_vals = vec![0.0; B_NAMES.len()];
    let mut div_operator_term = 0.0;
    if let Some(spec) = &m.boundary {
        let r = rule(spec.s_range.0, spec.s_range.1, spec.periodic, q);
        let rows: Vec<([f64; 9], f64, f64)> = r
            .nodes
            .par_iter()
            .map(|s| boundary_integrands(m, a, u, *s, sigma, form))
            .collect::<Result<_, _>>()?;
        for (k, slot) in b_vals.iter_mut().enumerate() {
            let col: Vec<f64> = rows.iter().zip(&r.weights).map(|((t, _, mu), w)| t[k] * mu * w).collect();
            *slot = pairwise_sum(&col);
        }
        let col: Vec<f64> = rows.iter().zip(&r.weights).map(|((_, d, mu), w)| d * mu * w).collect();
        div_operator_term = pairwise_sum(&col);
    }
    let b = pairwise_sum(&b_vals);
    let c = pairwise_sum(&c_vals);
    let b_div = b - b_vals[5] + div_operator_term;
    let b_terms = B_NAMES
        .iter()
        .zip(&b_vals)
        .filter(|(name, _)| form == ReillyForm::Codazzi || !name.starts_with("nabla_n"))
        .map(|(name, v)| Term { name, value: *v })
        .collect();
    let c_terms = c_names.iter().zip(&c_vals).map(|(name, v)| Term { name, value: *v }).collect();
    Ok(ReillyEvaluation {
        form,
        function: u.name.clone(),
        q,
        sigma,
        b,
        c,
        defect: relative_defect(b, c),
        b_terms,
        c_terms,
        b_divergence_operator: b_div,
        defect_divergence_operator: relative_defect(b_div, c),
    })
}

const HYPOTHESIS_SAMPLES: usize = 64;
const HYPOTHESIS_SEED: u64 = 0x5eed;

fn check_hypotheses(m: &ChartManifold, a: &EndomorphismField, form: ReillyForm) -> Result<(), BoundaryError> {
    let samples = sampling::chart_points(m.primary(), HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED);
    let report = identities::structure_check(m, a, &samples)?;
    let fail = |hypothesis: &'static str, violation: f64| {
        Err(BoundaryError::Identity(IdentityError::Hypothesis { hypothesis, point: Vec::new(), violation }))
    };
    match form {
        ReillyForm::Parallel if !report.flags.parallel => fail("parallel", report.worst.parallel),
        ReillyForm::Codazzi if !report.flags.codazzi => fail("codazzi", report.worst.codazzi),
        ReillyForm::Codazzi if !report.flags.divergence_free => {
            fail("divergence_free", report.worst.divergence_free)
        }
        _ => Ok(()),
    }
}

/// Reilly-type formula for parallel `A`.
pub fn reilly_parallel(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    q: usize,
    sigma: Sigma,
) -> Result<ReillyEvaluation, BoundaryError> {
    check_hypotheses(m, a, ReillyForm::Parallel)?;
    evaluate_reilly(m, a, u, q, sigma, ReillyForm::Parallel)
}

/// Extended Reilly formula for Codazzi, divergence-free `A`.
pub fn reilly_codazzi(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    q: usize,
    sigma: Sigma,
) -> Result<ReillyEvaluation, BoundaryError> {
    check_hypotheses(m, a, ReillyForm::Codazzi)?;
    evaluate_reilly(m, a, u, q, sigma, ReillyForm::Codazzi)
}

/// Defect below which a sign is accepted by [`pin_sigma`].
pub const SIGMA_ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaPin {
    pub sigma: Sigma,
    pub defect_plus: f64,
    pub defect_minus: f64,
}

/// Chooses the shape-operator sign with the classical Reilly formula on the
/// unit disk (`A = Id`, `u = x²`): exactly one sign must close the formula.
pub fn pin_sigma(q: usize) -> Result<SigmaPin, BoundaryError> {
    let entry: CatalogEntry = zoo::instantiate("disk_unit").expect("registered entry");
    let a = &entry.field("A=Id").expect("registered field").field;
    let u = entry.function("x^2").expect("registered function");
    let plus = reilly_parallel(&entry.manifold, a, u, q, Sigma::Plus)?.defect;
    let minus = reilly_parallel(&entry.manifold, a, u, q, Sigma::Minus)?.defect;
    match (plus < SIGMA_ORACLE_TOL, minus < SIGMA_ORACLE_TOL) {
        (true, false) => Ok(SigmaPin { sigma: Sigma::Plus, defect_plus: plus, defect_minus: minus }),
        (false, true) => Ok(SigmaPin { sigma: Sigma::Minus, defect_plus: plus, defect_minus: minus }),
        _ => Err(BoundaryError::SigmaAmbiguous { plus, minus }),
    }
}
