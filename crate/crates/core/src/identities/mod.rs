//! Pointwise residuals of the Bochner-type identities, the lemmas on second
//! covariant derivatives of `A`, the matrix trace inequality, and numerical
//! checks of the structural hypotheses (parallel, Codazzi, …).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    ChartManifold, EndomorphismField, GeometryError, PointFrame, ScalarJetField, StructureFlags, TensorDerivatives,
    TensorJet,
};
use crate::sampling;
use crate::zoo::CatalogEntry;

/// Threshold for every structural flag.
pub const STRUCTURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("hypothesis `{hypothesis}` fails at {point:?} (violation {violation:e})")]
    Hypothesis { hypothesis: &'static str, point: Vec<f64>, violation: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// One evaluated identity at one point. The reported quantity is
/// `residual / max(scale, 1)`, with `scale` the largest constituent term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSample {
    pub point: Vec<f64>,
    pub residual: f64,
    pub scale: f64,
}

impl ResidualSample {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale.max(1.0)
    }

    fn scalar(point: &[f64], lhs: f64, terms: &[f64]) -> ResidualSample {
        let rhs: f64 = terms.iter().sum();
        let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
        ResidualSample { point: point.to_vec(), residual: (lhs - rhs).abs(), scale }
    }
}

struct Local {
    pf: PointFrame,
    a: TensorJet,
    a_vals: DMatrix<f64>,
    d: TensorDerivatives,
}

impl Local {
    fn new(m: &ChartManifold, a: &EndomorphismField, p: &[f64]) -> Result<Local, IdentityError> {
        let pf = PointFrame::new(m, p)?;
        let a = pf.endomorphism(a)?;
        let a_vals = a.matrix();
        let d = pf.tensor_derivatives(&a);
        Ok(Local { pf, a, a_vals, d })
    }

    fn require(&self, hypothesis: &'static str, violation: f64) -> Result<(), IdentityError> {
        if violation > STRUCTURE_TOL {
            return Err(IdentityError::Hypothesis { hypothesis, point: self.pf.point().to_vec(), violation });
        }
        Ok(())
    }
}

/// The terms of the extended Bochner formula at a point:
/// `½L_A|∇u|² = ½⟨∇|∇u|², div A⟩ + Trace(A∘hess²u) + ⟨∇u, ∇Δ_A u⟩ − Δ_{∇_{∇u}A} u + Ric_A(∇u, ∇u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BochnerTerms {
    pub lhs: f64,
    pub div_term: f64,
    pub trace_hess2: f64,
    pub grad_delta_a: f64,
    pub delta_nabla_a: f64,
    pub ric_a: f64,
}

impl BochnerTerms {
    pub fn rhs(&self) -> f64 {
        self.div_term + self.trace_hess2 + self.grad_delta_a - self.delta_nabla_a + self.ric_a
    }
}

pub fn bochner_terms(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
) -> Result<BochnerTerms, IdentityError> {
    let l = Local::new(m, a, p)?;
    let pf = &l.pf;
    let uj = pf.scalar(&u.u)?;
    let grad = pf.gradient(&uj);
    let sq = pf.dot(&grad, &grad);
    let lhs = 0.5 * pf.op_l_a(&l.a, &sq).at(&[]);

    let grad_sq = pf.gradient(&sq).vector_values();
    let div_a = l.d.divergence.vector_values();
    let div_term = 0.5 * pf.inner(&grad_sq, &div_a);

    let hmix = pf.inverse_metric() * pf.hessian(&uj).matrix();
    let trace_hess2 = (&l.a_vals * &hmix * &hmix).trace();

    let gv = grad.vector_values();
    let grad_delta_a = pf.inner(&gv, &pf.gradient(&pf.op_delta_a(&l.a, &uj)).vector_values());

    let c = grad.outer(&l.d.nabla).contract(0, 1);
    let delta_nabla_a = pf.op_delta_a(&c, &uj).at(&[]);

    let ric_a = pf.ric_a(&l.a_vals, &gv, &gv);
    Ok(BochnerTerms { lhs, div_term, trace_hess2, grad_delta_a, delta_nabla_a, ric_a })
}

pub fn bochner_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
) -> Result<ResidualSample, IdentityError> {
    let t = bochner_terms(m, a, u, p)?;
    Ok(ResidualSample::scalar(p, t.lhs, &[t.div_term, t.trace_hess2, t.grad_delta_a, -t.delta_nabla_a, t.ric_a]))
}

/// Parallel reduction `½L_A|∇u|² = Trace(A∘hess²u) + ⟨∇u, ∇Δ_A u⟩ + Ric_A(∇u, ∇u)`.
pub fn bochner_parallel_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
) -> Result<ResidualSample, IdentityError> {
    let l = Local::new(m, a, p)?;
    l.require("parallel", l.pf.tensor_norm(&l.d.nabla))?;
    let t = bochner_terms(m, a, u, p)?;
    Ok(ResidualSample::scalar(p, t.lhs, &[t.trace_hess2, t.grad_delta_a, t.ric_a]))
}

/// `L_A u = Δ_A u + ⟨div A, ∇u⟩`.
pub fn l_a_split_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
) -> Result<ResidualSample, IdentityError> {
    let l = Local::new(m, a, p)?;
    let pf = &l.pf;
    let uj = pf.scalar(&u.u)?;
    let lhs = pf.op_l_a(&l.a, &uj).at(&[]);
    let delta_a = pf.op_delta_a(&l.a, &uj).at(&[]);
    let div = pf.inner(&l.d.divergence.vector_values(), &pf.gradient(&uj).vector_values());
    Ok(ResidualSample::scalar(p, lhs, &[delta_a, div]))
}

/// `⟨(ΔA)X, X⟩ = Hess(Trace A)(X, X) − Ric_A(X, X) + Ric(X, AX)` for Codazzi `A`.
pub fn delta_a_identity_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    p: &[f64],
    x: &DVector<f64>,
) -> Result<ResidualSample, IdentityError> {
    let l = Local::new(m, a, p)?;
    l.require("codazzi", l.pf.tensor_norm(&l.d.t))?;
    let pf = &l.pf;
    let lhs = pf.inner(&(l.d.laplacian.matrix() * x), x);
    let trace = l.a.contract(0, 1);
    let hess_tr = (x.transpose() * pf.hessian(&trace).matrix() * x)[(0, 0)];
    let ric_a = pf.ric_a(&l.a_vals, x, x);
    let ric = pf.ricci(x, &(&l.a_vals * x));
    Ok(ResidualSample::scalar(p, lhs, &[hess_tr, -ric_a, ric]))
}

/// Orientation of the `T^{∇_{∇u}B}` term in the expansion of `Δ_{∇_{∇u}B} u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TOrientation {
    /// `Σ_i ⟨T^C(e_i, ∇u), e_i⟩`, the orientation that makes the identity hold.
    FrameFirst,
    /// `Σ_i ⟨T^C(∇u, e_i), e_i⟩`.
    GradientFirst,
}

/// Terms of `Δ_{∇_{∇u}B} u = ∇u.∇u.Trace B − ⟨∇u, (ΔB)∇u⟩ + Σ⟨T^C(·,·), e_i⟩ + Σ e_i.⟨∇u, T^B(e_i, ∇u)⟩`
/// with `C = ∇_{∇u}B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NablaNablaTerms {
    pub lhs: f64,
    pub second_trace: f64,
    pub laplacian_b: f64,
    pub t_c: f64,
    pub div_t_b: f64,
}

pub fn nabla_nabla_u_terms(
    m: &ChartManifold,
    b: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
    orientation: TOrientation,
) -> Result<NablaNablaTerms, IdentityError> {
    let l = Local::new(m, b, p)?;
    let pf = &l.pf;
    let uj = pf.scalar(&u.u)?;
    let grad = pf.gradient(&uj);
    let gv = grad.vector_values();

    let c = grad.outer(&l.d.nabla).contract(0, 1);
    let lhs = pf.op_delta_a(&c, &uj).at(&[]);

    let trace = l.a.contract(0, 1);
    let du_tr = grad.outer(&trace.partials()).contract(0, 1);
    let second_trace = grad.outer(&du_tr.partials()).contract(0, 1).at(&[]);

    let laplacian_b = pf.inner(&gv, &(l.d.laplacian.matrix() * &gv));

    let tc = pf.tensor_derivatives(&c).t;
    let traced = match orientation {
        TOrientation::FrameFirst => tc.contract(0, 2),
        TOrientation::GradientFirst => tc.contract(1, 2),
    };
    let t_c = traced.outer(&grad).contract(0, 1).at(&[]);

    // ω(Y) = ⟨∇u, T^B(Y, ∇u)⟩, summed derivative = div ω
    let tb_u = l.d.t.outer(&grad).contract(1, 3);
    let omega = pf.lower(&tb_u, 1).outer(&grad).contract(1, 2);
    let div_t_b = pf.raise(&pf.nabla(&omega), 0).contract(0, 1).at(&[]);

    Ok(NablaNablaTerms { lhs, second_trace, laplacian_b, t_c, div_t_b })
}

pub fn nabla_nabla_u_residual(
    m: &ChartManifold,
    b: &EndomorphismField,
    u: &ScalarJetField,
    p: &[f64],
) -> Result<ResidualSample, IdentityError> {
    let t = nabla_nabla_u_terms(m, b, u, p, TOrientation::FrameFirst)?;
    Ok(ResidualSample::scalar(p, t.lhs, &[t.second_trace, -t.laplacian_b, t.t_c, t.div_t_b]))
}

fn vector_sample(pf: &PointFrame, lhs: &DVector<f64>, rhs: &DVector<f64>, parts: &[&DVector<f64>]) -> ResidualSample {
    let scale = parts.iter().fold(0.0f64, |m, v| m.max(pf.norm(v)));
    ResidualSample { point: pf.point().to_vec(), residual: pf.norm(&(lhs - rhs)), scale }
}

/// `∇²A(X,Y,Z) − ∇²A(X,Z,Y) = R(Z,Y)(AX) − A(R(Z,Y)X)`.
pub fn lemma_a_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    p: &[f64],
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<ResidualSample, IdentityError> {
    let l = Local::new(m, a, p)?;
    let pf = &l.pf;
    let xyz = l.d.second(x, y, z);
    let xzy = l.d.second(x, z, y);
    let r_ax = pf.curvature(z, y, &(&l.a_vals * x));
    let a_rx = &l.a_vals * pf.curvature(z, y, x);
    Ok(vector_sample(pf, &(&xyz - &xzy), &(&r_ax - &a_rx), &[&xyz, &xzy, &r_ax, &a_rx]))
}

/// `∇²A(X,Y,Z) − ∇²A(Y,X,Z) = (∇_Z T^A)(Y, X)`, the sign forced by
/// `T^A(X,Y) = (∇_X A)Y − (∇_Y A)X` and `∇²A(X,Y,Z) = (∇_Z∇_Y A)X`.
pub fn lemma_b_residual(
    m: &ChartManifold,
    a: &EndomorphismField,
    p: &[f64],
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<ResidualSample, IdentityError> {
    let l = Local::new(m, a, p)?;
    let pf = &l.pf;
    let xyz = l.d.second(x, y, z);
    let yxz = l.d.second(y, x, z);
    let nt = pf.nabla(&l.d.t);
    let n = pf.dim();
    let rhs = DVector::from_fn(n, |c, _| {
        let mut s = 0.0;
        for zi in 0..n {
            for i in 0..n {
                for j in 0..n {
                    s += z[zi] * y[i] * x[j] * nt.at(&[zi, i, j, c]);
                }
            }
        }
        s
    });
    Ok(vector_sample(pf, &(&xyz - &yxz), &rhs, &[&xyz, &yxz, &rhs]))
}

/// `Trace(AF²) − Trace(AF)²/Trace(A)` for symmetric PSD `A` and symmetric `F`.
pub fn trace_inequality_slack(a: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<f64, IdentityError> {
    if !a.is_square() || a.shape() != f.shape() {
        return Err(IdentityError::Input("A and F must be square matrices of equal size".into()));
    }
    let scale = a.abs().max().max(1.0);
    if (a - a.transpose()).abs().max() > 1e-12 * scale || (f - f.transpose()).abs().max() > 1e-12 * f.abs().max().max(1.0)
    {
        return Err(IdentityError::Input("A and F must be symmetric".into()));
    }
    let min_eig = SymmetricEigen::new(a.clone()).eigenvalues.min();
    if min_eig < -1e-12 * scale {
        return Err(IdentityError::Input(format!("A is not positive semi-definite (min eigenvalue {min_eig:e})")));
    }
    let tr = a.trace();
    if tr <= 0.0 {
        return Err(IdentityError::Input("Trace(A) must be positive".into()));
    }
    let af = a * f;
    Ok((&af * f).trace() - af.trace().powi(2) / tr)
}

/// Relative tolerance of the trace inequality.
pub const TRACE_SLACK_TOL: f64 = 1e-12;

/// Outcome of [`trace_inequality_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSweep {
    pub pairs: usize,
    /// Pairs with `slack < −TRACE_SLACK_TOL·(1 + |Trace(AF²)|)`.
    pub violations: usize,
    /// Smallest `slack / (1 + |Trace(AF²)|)` seen.
    pub worst_relative_slack: f64,
    /// Largest `|slack| / (1 + |Trace(AF²)|)` with `F` a multiple of the identity.
    pub scalar_max_relative: f64,
}

/// Seeded random pairs `A = G Gᵀ`, `F = (H + Hᵀ)/2` with `G`, `H` uniform in
/// `[−1, 1]`, dimensions cycling through 2–6.
pub fn trace_inequality_sweep(pairs: usize, seed: u64) -> TraceSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TraceSweep { pairs, violations: 0, worst_relative_slack: f64::INFINITY, scalar_max_relative: 0.0 };
    for k in 0..pairs {
        let n = 2 + k % 5;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &g * g.transpose();
        let f = (&h + h.transpose()) * 0.5;
        let scale = |f: &DMatrix<f64>| 1.0 + (&a * f * f).trace().abs();
        let Ok(slack) = trace_inequality_slack(&a, &f) else { continue };
        let rel = slack / scale(&f);
        out.worst_relative_slack = out.worst_relative_slack.min(rel);
        if rel < -TRACE_SLACK_TOL {
            out.violations += 1;
        }
        let scalar = DMatrix::identity(n, n) * rng.random_range(-3.0..3.0);
        if let Ok(s) = trace_inequality_slack(&a, &scalar) {
            out.scalar_max_relative = out.scalar_max_relative.max(s.abs() / scale(&scalar));
        }
    }
    out
}

/// Worst observed violation of each structural property over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureResiduals {
    pub self_adjoint: f64,
    pub min_eigenvalue: f64,
    pub parallel: f64,
    pub codazzi: f64,
    pub divergence_free: f64,
    pub trace_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureReport {
    pub flags: StructureFlags,
    pub worst: StructureResiduals,
    pub samples: usize,
}

impl StructureReport {
    /// Declared flags that the samples contradict.
    pub fn contradicted(&self, declared: &StructureFlags) -> Vec<&'static str> {
        let f = &self.flags;
        let pairs = [
            (declared.self_adjoint && !f.self_adjoint, "self_adjoint"),
            (declared.positive_semidefinite && !f.positive_semidefinite, "psd"),
            (declared.parallel && !f.parallel, "parallel"),
            (declared.codazzi && !f.codazzi, "codazzi"),
            (declared.divergence_free && !f.divergence_free, "divergence_free"),
            (declared.trace_constant && !f.trace_constant, "trace_constant"),
        ];
        pairs.iter().filter(|(bad, _)| *bad).map(|(_, n)| *n).collect()
    }
}

struct PointStructure {
    asym: f64,
    min_eig: f64,
    nabla: f64,
    t: f64,
    div: f64,
    trace: f64,
}

pub fn structure_check(
    m: &ChartManifold,
    a: &EndomorphismField,
    samples: &[Vec<f64>],
) -> Result<StructureReport, IdentityError> {
    if samples.is_empty() {
        return Err(IdentityError::Input("structure check needs at least one sample point".into()));
    }
    let per_point: Vec<PointStructure> = samples
        .par_iter()
        .map(|p| {
            let l = Local::new(m, a, p)?;
            let hat = l.pf.endomorphism_in_frame(&l.a_vals);
            let asym = (&hat - hat.transpose()).abs().max();
            let sym = (&hat + hat.transpose()) * 0.5;
            let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
            Ok(PointStructure {
                asym,
                min_eig,
                nabla: l.pf.tensor_norm(&l.d.nabla),
                t: l.pf.tensor_norm(&l.d.t),
                div: l.pf.tensor_norm(&l.d.divergence),
                trace: l.a_vals.trace(),
            })
        })
        .collect::<Result<_, IdentityError>>()?;
    let max = |f: fn(&PointStructure) -> f64| per_point.iter().map(f).fold(0.0f64, f64::max);
    let min_eig = per_point.iter().map(|s| s.min_eig).fold(f64::INFINITY, f64::min);
    let tmax = per_point.iter().map(|s| s.trace).fold(f64::NEG_INFINITY, f64::max);
    let tmin = per_point.iter().map(|s| s.trace).fold(f64::INFINITY, f64::min);
    let worst = StructureResiduals {
        self_adjoint: max(|s| s.asym),
        min_eigenvalue: min_eig,
        parallel: max(|s| s.nabla),
        codazzi: max(|s| s.t),
        divergence_free: max(|s| s.div),
        trace_spread: tmax - tmin,
    };
    let flags = StructureFlags {
        self_adjoint: worst.self_adjoint <= STRUCTURE_TOL,
        positive_semidefinite: worst.min_eigenvalue >= -STRUCTURE_TOL,
        parallel: worst.parallel <= STRUCTURE_TOL,
        codazzi: worst.codazzi <= STRUCTURE_TOL,
        divergence_free: worst.divergence_free <= STRUCTURE_TOL,
        trace_constant: worst.trace_spread <= STRUCTURE_TOL,
    };
    Ok(StructureReport { flags, worst, samples: samples.len() })
}

/// Identities evaluated by [`run_case`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Bochner,
    BochnerParallel,
    LaSplit,
    LemmaA,
    LemmaB,
    DeltaA,
    NablaNablaU,
}

impl Identity {
    pub fn id(&self) -> &'static str {
        match self {
            Identity::Bochner => "bochner",
            Identity::BochnerParallel => "bochner_parallel",
            Identity::LaSplit => "l_a_split",
            Identity::LemmaA => "lemma_a",
            Identity::LemmaB => "lemma_b",
            Identity::DeltaA => "delta_a",
            Identity::NablaNablaU => "nabla_nabla_u",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Identity::LaSplit => 1e-9,
            _ => 1e-7,
        }
    }

    fn uses_function(&self) -> bool {
        matches!(self, Identity::Bochner | Identity::BochnerParallel | Identity::LaSplit | Identity::NablaNablaU)
    }

    /// Identities whose hypotheses the declared structure of a field satisfies.
    pub fn applicable(declared: &StructureFlags) -> Vec<Identity> {
        let mut out = vec![Identity::Bochner];
        if declared.parallel {
            out.push(Identity::BochnerParallel);
        }
        out.extend([Identity::LaSplit, Identity::LemmaA, Identity::LemmaB]);
        if declared.codazzi {
            out.extend([Identity::DeltaA, Identity::NablaNablaU]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub identity: Identity,
    pub function: Option<String>,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub relative_residual: f64,
    pub tolerance: f64,
}

impl IdentityRecord {
    pub fn pass(&self) -> bool {
        self.relative_residual <= self.tolerance
    }
}

/// A random unit vector at the point, as chart components.
fn random_unit(pf: &PointFrame, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let coeffs = DVector::from_fn(pf.dim(), |_, _| rng.random_range(-1.0..1.0));
        let norm = coeffs.norm();
        if norm > 0.1 {
            return pf.frame() * (coeffs / norm);
        }
    }
}

/// Evaluates every applicable identity for one catalog field at `points`
/// seeded sample points. `tolerance` overrides the per-identity defaults.
pub fn run_case(
    entry: &CatalogEntry,
    field_index: usize,
    points: usize,
    seed: u64,
    tolerance: Option<f64>,
) -> Result<Vec<IdentityRecord>, IdentityError> {
    let m = &entry.manifold;
    let a = &entry.fields[field_index].field;
    let samples = sampling::chart_points(m.primary(), points, seed);
    let identities = Identity::applicable(&a.declared);
    let per_point: Vec<Vec<IdentityRecord>> = samples
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let pf = PointFrame::new(m, p)?;
            let mut rng = sampling::point_rng(seed, k);
            let (x, y, z) = (random_unit(&pf, &mut rng), random_unit(&pf, &mut rng), random_unit(&pf, &mut rng));
            let mut out = Vec::new();
            for id in &identities {
                let tol = tolerance.unwrap_or(id.default_tolerance());
                let mut push = |function: Option<&str>, s: ResidualSample| {
                    out.push(IdentityRecord {
                        identity: *id,
                        function: function.map(str::to_string),
                        point_index: k,
                        point: p.clone(),
                        relative_residual: s.relative(),
                        tolerance: tol,
                    })
                };
                if id.uses_function() {
                    for u in &entry.functions {
                        let s = match id {
                            Identity::Bochner => bochner_residual(m, a, u, p)?,
                            Identity::BochnerParallel => bochner_parallel_residual(m, a, u, p)?,
                            Identity::LaSplit => l_a_split_residual(m, a, u, p)?,
                            _ => nabla_nabla_u_residual(m, a, u, p)?,
                        };
                        push(Some(&u.name), s);
                    }
                } else {
                    let s = match id {
                        Identity::LemmaA => lemma_a_residual(m, a, p, &x, &y, &z)?,
                        Identity::LemmaB => lemma_b_residual(m, a, p, &x, &y, &z)?,
                        _ => delta_a_identity_residual(m, a, p, &x)?,
                    };
                    push(None, s);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, IdentityError>>()?;
    Ok(per_point.into_iter().flatten().collect())
}
