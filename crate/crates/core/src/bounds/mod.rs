//! Theorem constants estimated from samples, the six lower bounds for the
//! first eigenvalue of `L_A`, and their verdicts against computed spectra.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boundary::{self, BoundaryError, Sigma};
use crate::geometry::{ChartManifold, EndomorphismField, GeometryError, PointFrame, StructureFlags};
use crate::identities::{self, IdentityError, StructureReport, STRUCTURE_TOL};
use crate::sampling;
use crate::spectral::{mesh_diameter, Discretization, EigenOptions, EigenResult, SpectralError};
use crate::zoo::{self, BoundaryCondition, CatalogEntry, Topology, ZooError};

/// Relative safety margin applied to every sampled constant.
pub const SAFETY_MARGIN: f64 = 0.01;
/// Fewest interior samples accepted for constant estimation.
pub const MIN_SAMPLES: usize = 100;
/// Verdict tolerance of the soundness sweep.
pub const DEFAULT_TOLERANCE: f64 = 0.02;
/// `margin ≤ NEAR_EQUALITY·λ₁` flags the equality regime.
pub const NEAR_EQUALITY: f64 = 0.02;
/// Largest admissible eigensolver residual.
pub const MAX_RESIDUAL: f64 = 1e-8;
const BOUNDARY_SAMPLES: usize = 64;
const DIRECTION_SAMPLES: usize = 720;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("constant estimation needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("field `{0}` is not self-adjoint")]
    NotSelfAdjoint(String),
    #[error("unknown theorem `{0}`")]
    UnknownTheorem(String),
    #[error("{theorem}: denominator {value:e} is not positive")]
    Denominator { theorem: Theorem, value: f64 },
    #[error("eigenvalue residual {0:e} exceeds {MAX_RESIDUAL:e}")]
    Residual(f64),
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Theorem {
    #[serde(rename = "thm11a")]
    Thm11a,
    #[serde(rename = "thm11b")]
    Thm11b,
    #[serde(rename = "thm12")]
    Thm12,
    #[serde(rename = "thm14")]
    Thm14,
    #[serde(rename = "thm15")]
    Thm15,
    #[serde(rename = "thm16")]
    Thm16,
    #[serde(rename = "corollaryDN")]
    CorollaryDn,
}

impl Theorem {
    pub const ALL: [Theorem; 7] = [
        Theorem::Thm11a,
        Theorem::Thm11b,
        Theorem::Thm12,
        Theorem::Thm14,
        Theorem::Thm15,
        Theorem::Thm16,
        Theorem::CorollaryDn,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Theorem::Thm11a => "thm11a",
            Theorem::Thm11b => "thm11b",
            Theorem::Thm12 => "thm12",
            Theorem::Thm14 => "thm14",
            Theorem::Thm15 => "thm15",
            Theorem::Thm16 => "thm16",
            Theorem::CorollaryDn => "corollaryDN",
        }
    }

    pub fn parse(s: &str) -> Result<Theorem, BoundsError> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BoundsError::UnknownTheorem(s.to_string()))
    }

    pub fn needs_boundary(&self) -> bool {
        matches!(self, Theorem::CorollaryDn)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A sampled constant and its value after the safety margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub raw: f64,
    pub conservative: f64,
}

impl Estimate {
    /// Lower-bound type constant: the margin moves it down.
    fn lower(raw: f64) -> Estimate {
        Estimate { raw, conservative: raw - SAFETY_MARGIN * raw.abs() }
    }

    /// Upper-bound type constant: the margin moves it up.
    fn upper(raw: f64) -> Estimate {
        Estimate { raw, conservative: raw + SAFETY_MARGIN * raw.abs() }
    }

    fn pick(&self, conservative: bool) -> f64 {
        if conservative {
            self.conservative
        } else {
            self.raw
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diameter {
    pub closed_form: Option<f64>,
    pub mesh: Option<f64>,
    /// The value used in bounds: the closed form when known.
    pub used: Estimate,
}

/// Sampled constants of a field. Min-type constants are infima over the
/// samples, max-type constants suprema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremConstants {
    pub n: usize,
    pub samples: usize,
    pub trace_a: Estimate,
    pub trace_spread: f64,
    pub delta1: Estimate,
    pub deltan: Estimate,
    /// Largest `K` with `Ric_A ≥ K g`.
    pub k_g: Estimate,
    /// Largest `K` with `Ric_A ≥ K ⟨A·,·⟩`; absent unless `A` is positive definite.
    pub k_a: Option<Estimate>,
    /// Smallest `K ≥ 0` with `Ric_A ≥ −K`.
    pub k_neg_ric_a: Estimate,
    /// Smallest `K ≥ 0` with `Ric(X, AX) ≥ −K|X|²`.
    pub k_neg_ric_x_ax: Estimate,
    /// Largest `K` with `Ric_A(X,X) + Ric(X,AX) ≥ 2K|X|²`.
    pub k_mixed: Estimate,
    /// Largest `K` with `Ric(X, AX) ≥ K|X|²`.
    pub k_b: Estimate,
    /// Supremum of the Frobenius norm of `∇²A`.
    pub k_prime: Estimate,
    /// Supremum of `⟨X, (∇_X A)X⟩` over unit `X`.
    pub delta_grad: Estimate,
    /// Supremum of the norm of `Hess(Trace A)`.
    pub hess_trace: f64,
    pub diameter: Option<Diameter>,
}

struct PointConstants {
    trace: f64,
    eig_min: f64,
    eig_max: f64,
    k_g: f64,
    k_a: Option<f64>,
    k_ric_x_ax: f64,
    k_mixed: f64,
    k_prime: f64,
    delta_grad: f64,
    hess_trace: f64,
    asym: f64,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym(m)).eigenvalues.min()
}

fn unit_directions(n: usize) -> Vec<DVector<f64>> {
    if n == 2 {
        return (0..DIRECTION_SAMPLES)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / DIRECTION_SAMPLES as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ec);
    let mut out: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| f64::from(i == j))).collect();
    while out.len() < DIRECTION_SAMPLES {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 {
            out.push(v.normalize());
        }
    }
    out
}

fn point_constants(m: &ChartManifold, a: &EndomorphismField, p: &[f64]) -> Result<PointConstants, BoundsError> {
    let pf = PointFrame::new(m, p)?;
    let aj = pf.endomorphism(a)?;
    let a_vals = aj.matrix();
    let d = pf.tensor_derivatives(&aj);
    let hat = pf.endomorphism_in_frame(&a_vals);
    let asym = (&hat - hat.transpose()).abs().max();
    let hat = sym(&hat);
    let eig = SymmetricEigen::new(hat.clone());
    let (eig_min, eig_max) = (eig.eigenvalues.min(), eig.eigenvalues.max());

    let ric_a = sym(&pf.ric_a_frame(&a_vals));
    let ric = sym(&pf.frame_form(|x, y| pf.ricci(x, y)));
    let ric_x_ax = sym(&(&ric * &hat));
    let k_a = (eig_min > STRUCTURE_TOL).then(|| {
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * eig.eigenvectors.transpose();
        min_eig(&(&inv_sqrt * &ric_a * &inv_sqrt))
    });

    let frame = pf.frame();
    let delta_grad = unit_directions(pf.dim())
        .iter()
        .map(|c| {
            let x = frame * c;
            pf.inner(&x, &d.nabla_at(&x, &x))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let trace = pf.scalar(&a.trace_fn())?;
    Ok(PointConstants {
        trace: a_vals.trace(),
        eig_min,
        eig_max,
        k_g: min_eig(&ric_a),
        k_a,
        k_ric_x_ax: min_eig(&ric_x_ax),
        k_mixed: 0.5 * min_eig(&(&ric_a + &ric_x_ax)),
        k_prime: pf.tensor_norm(&d.nabla2),
        delta_grad,
        hess_trace: pf.tensor_norm(&pf.hessian(&trace)),
        asym,
    })
}

/// Samples `points` interior points of the primary chart and aggregates every theorem constant.
pub fn estimate_constants(
    m: &ChartManifold,
    a: &EndomorphismField,
    points: usize,
    seed: u64,
) -> Result<TheoremConstants, BoundsError> {
    if points < MIN_SAMPLES {
        return Err(BoundsError::TooFewSamples(points));
    }
    let samples = sampling::chart_points(m.primary(), points, seed);
    let per: Vec<PointConstants> =
        samples.par_iter().map(|p| point_constants(m, a, p)).collect::<Result<_, BoundsError>>()?;
    if per.iter().any(|c| c.asym > STRUCTURE_TOL) {
        return Err(BoundsError::NotSelfAdjoint(a.name.clone()));
    }
    let min = |f: fn(&PointConstants) -> f64| per.iter().map(f).fold(f64::INFINITY, f64::min);
    let max = |f: fn(&PointConstants) -> f64| per.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let k_a = per.iter().map(|c| c.k_a).try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)));
    Ok(TheoremConstants {
        n: m.dim(),
        samples: points,
        trace_a: Estimate::upper(max(|c| c.trace)),
        trace_spread: max(|c| c.trace) - min(|c| c.trace),
        delta1: Estimate::lower(min(|c| c.eig_min)),
        deltan: Estimate::upper(max(|c| c.eig_max)),
        k_g: Estimate::lower(min(|c| c.k_g)),
        k_a: k_a.map(Estimate::lower),
        k_neg_ric_a: Estimate::upper((-min(|c| c.k_g)).max(0.0)),
        k_neg_ric_x_ax: Estimate::upper((-min(|c| c.k_ric_x_ax)).max(0.0)),
        k_mixed: Estimate::lower(min(|c| c.k_mixed)),
        k_b: Estimate::lower(min(|c| c.k_ric_x_ax)),
        k_prime: Estimate::upper(max(|c| c.k_prime)),
        delta_grad: Estimate::upper(max(|c| c.delta_grad).max(0.0)),
        hess_trace: max(|c| c.hess_trace),
        diameter: None,
    })
}

/// Attaches the diameter: the catalog closed form when known, otherwise the mesh estimate.
pub fn with_diameter(mut c: TheoremConstants, closed_form: Option<f64>, mesh: Option<f64>) -> TheoremConstants {
    c.diameter = closed_form.or(mesh).map(|d| Diameter { closed_form, mesh, used: Estimate::upper(d) });
    c
}

/// Boundary facts needed by the Dirichlet/Neumann corollary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFacts {
    /// Smallest eigenvalue of `⟨∇_T n, T⟩` over boundary samples (convex iff ≥ 0).
    pub min_shape: f64,
    /// Largest `|An − ⟨An, n⟩n|`.
    pub normal_eigen_defect: f64,
}

pub fn boundary_facts(m: &ChartManifold, a: &EndomorphismField) -> Result<BoundaryFacts, BoundsError> {
    let spec = m.boundary.as_ref().ok_or_else(|| BoundaryError::NoBoundary(m.name.clone()))?;
    let (s0, s1) = spec.s_range;
    let mut min_shape = f64::INFINITY;
    let mut defect = 0.0f64;
    for k in 0..BOUNDARY_SAMPLES {
        let s = s0 + (s1 - s0) * (k as f64 + 0.5) / BOUNDARY_SAMPLES as f64;
        let bp = boundary::boundary_geometry(m, a, s, Sigma::Plus)?;
        min_shape = min_shape.min(min_eig(&bp.shape));
        let pf = PointFrame::new(m, &bp.point)?;
        let an = pf.endomorphism(a)?.matrix() * &bp.normal;
        let along = pf.inner(&an, &bp.normal);
        defect = defect.max(pf.norm(&(an - &bp.normal * along)));
    }
    Ok(BoundaryFacts { min_shape, normal_eigen_defect: defect })
}

/// Everything a bound evaluation may consult.
#[derive(Debug, Clone)]
pub struct BoundInputs<'a> {
    pub constants: &'a TheoremConstants,
    pub structure: &'a StructureFlags,
    /// Compact without boundary.
    pub closed: bool,
    pub boundary: Option<BoundaryFacts>,
}

/// Outcome of evaluating one bound formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoundValue {
    Value { raw: f64, conservative: f64 },
    HypothesisNotMet { reason: String },
}

fn not_met(reason: impl Into<String>) -> Result<BoundValue, BoundsError> {
    Ok(BoundValue::HypothesisNotMet { reason: reason.into() })
}

fn li_yau(delta1: f64, d: f64, trace: f64, k: f64) -> f64 {
    let alpha = delta1 * delta1 / (d * d * trace);
    2.0 * (alpha + (alpha * alpha + k * alpha).sqrt()) * (-1.0 - (1.0 + k / alpha).sqrt()).exp()
}

fn lichnerowicz(theorem: Theorem, trace: f64, delta1: f64, k: f64) -> Result<f64, BoundsError> {
    let den = trace - delta1;
    if den <= 0.0 {
        return Err(BoundsError::Denominator { theorem, value: den });
    }
    Ok(trace * k / den)
}

/// Value of the lower bound of `theorem`, or the first hypothesis that fails.
pub fn bound_value(theorem: Theorem, inp: &BoundInputs) -> Result<BoundValue, BoundsError> {
    let c = inp.constants;
    let s = inp.structure;
    if theorem.needs_boundary() {
        if inp.boundary.is_none() {
            return not_met("manifold has no boundary");
        }
    } else if !inp.closed {
        return not_met("manifold is not closed");
    }
    if !s.positive_semidefinite {
        return not_met("A is not positive semi-definite");
    }
    let eval = |f: &dyn Fn(bool) -> Result<f64, BoundsError>| -> Result<BoundValue, BoundsError> {
        Ok(BoundValue::Value { raw: f(false)?, conservative: f(true)? })
    };
    let positive = |name: &str, k: f64| (k <= 0.0).then(|| format!("{name} = {k:e} is not positive"));
    match theorem {
        Theorem::Thm11a | Theorem::Thm11b | Theorem::CorollaryDn => {
            if !s.parallel {
                return not_met("A is not parallel");
            }
            if theorem == Theorem::CorollaryDn {
                let Some(b) = inp.boundary else { return not_met("manifold has no boundary") };
                if b.normal_eigen_defect > STRUCTURE_TOL {
                    return not_met("outward normal is not an eigenvector of A");
                }
                if b.min_shape < -STRUCTURE_TOL {
                    return not_met("boundary is not convex");
                }
            }
            if theorem == Theorem::Thm11b {
                let Some(k_a) = c.k_a else { return not_met("A is not positive definite") };
                if let Some(r) = positive("K_A", k_a.raw) {
                    return not_met(r);
                }
                eval(&|cons| {
                    let d1 = c.delta1.pick(cons);
                    lichnerowicz(theorem, c.trace_a.pick(cons), d1, d1 * k_a.pick(cons))
                })
            } else {
                if let Some(r) = positive("K_g", c.k_g.raw) {
                    return not_met(r);
                }
                eval(&|cons| lichnerowicz(theorem, c.trace_a.pick(cons), c.delta1.pick(cons), c.k_g.pick(cons)))
            }
        }
        Theorem::Thm12 | Theorem::Thm15 => {
            if theorem == Theorem::Thm12 && !s.parallel {
                return not_met("A is not parallel");
            }
            if theorem == Theorem::Thm15 && !(s.codazzi && s.trace_constant) {
                return not_met("A is not a Codazzi tensor with constant trace");
            }
            if let Some(r) = positive("delta_1", c.delta1.raw) {
                return not_met(r);
            }
            let Some(d) = c.diameter else { return not_met("diameter unavailable") };
            eval(&|cons| {
                let k = if theorem == Theorem::Thm12 {
                    c.k_neg_ric_a.pick(cons)
                } else {
                    c.k_neg_ric_x_ax.pick(cons) + 2.0 * c.k_prime.pick(cons) + c.delta_grad.pick(cons)
                };
                Ok(li_yau(c.delta1.pick(cons), d.used.pick(cons), c.trace_a.pick(cons), k))
            })
        }
        Theorem::Thm14 => {
            if !(s.codazzi && s.trace_constant) {
                return not_met("A is not a Codazzi tensor with constant trace");
            }
            if let Some(r) = positive("K", c.k_mixed.raw) {
                return not_met(r);
            }
            eval(&|cons| lichnerowicz(theorem, c.trace_a.pick(cons), c.delta1.pick(cons), c.k_mixed.pick(cons)))
        }
        Theorem::Thm16 => {
            if !s.divergence_free {
                return not_met("A is not divergence free");
            }
            if c.hess_trace > STRUCTURE_TOL {
                return not_met("gradient of Trace(A) is not parallel");
            }
            if c.k_b.raw < -STRUCTURE_TOL {
                return not_met(format!("K = {:e} is negative", c.k_b.raw));
            }
            let n = c.n as f64;
            eval(&|cons| {
                let dn = c.deltan.pick(cons);
                let den = n * dn - c.delta1.pick(cons);
                if den <= 0.0 {
                    return Err(BoundsError::Denominator { theorem, value: den });
                }
                Ok(n * dn * (c.k_b.pick(cons) + 2.0 * n * c.k_prime.pick(cons)) / den)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "hypothesis not met")]
    HypothesisNotMet,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::HypothesisNotMet => "hypothesis not met",
        }
    }
}

/// Verdict of `λ₁ ≥ bound·(1 − tolerance)` for a raw bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub verdict: Verdict,
    pub margin: f64,
    pub near_equality: bool,
}

pub fn verify_bound(lambda1: f64, bound: f64, tolerance: f64) -> Check {
    let margin = lambda1 - bound;
    Check {
        verdict: if lambda1 >= bound * (1.0 - tolerance) { Verdict::Pass } else { Verdict::Fail },
        margin,
        near_equality: margin <= NEAR_EQUALITY * lambda1,
    }
}

/// A computed first eigenvalue and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda1 {
    pub value: f64,
    pub bc: BoundaryCondition,
    pub refine: usize,
    pub unknowns: usize,
    pub max_residual: f64,
    pub multiplicity: usize,
    pub mesh_diameter: f64,
}

/// Relative width of an eigenvalue cluster.
pub const CLUSTER_TOL: f64 = 1e-3;

/// `λ₁` and the mesh diameter from a solved discretization.
pub fn lambda1_from(disc: &Discretization, res: &EigenResult, refine: usize) -> Result<Lambda1, BoundsError> {
    let value = res.lambda1().ok_or(SpectralError::NoPositiveEigenvalue(res.eigenvalues.len()))?;
    if res.max_residual() > MAX_RESIDUAL {
        return Err(BoundsError::Residual(res.max_residual()));
    }
    Ok(Lambda1 {
        value,
        bc: res.bc,
        refine,
        unknowns: res.unknowns,
        max_residual: res.max_residual(),
        multiplicity: res.cluster_multiplicity(CLUSTER_TOL),
        mesh_diameter: mesh_diameter(&disc.mesh)?,
    })
}

/// Eigenpairs requested for `λ₁`: enough to see past the zero mode and a threefold cluster.
pub const LAMBDA1_COUNT: usize = 6;

/// `λ₁` of `L_A` on the catalog mesh at `refine`.
pub fn compute_lambda1(
    entry: &CatalogEntry,
    field_index: usize,
    bc: BoundaryCondition,
    refine: usize,
    seed: u64,
) -> Result<Lambda1, BoundsError> {
    let disc = Discretization::new(&entry.manifold, entry.topology, &entry.fields[field_index].field, refine)?;
    let res = disc.eigen(bc, &EigenOptions { count: LAMBDA1_COUNT, dense: false, seed })?;
    lambda1_from(&disc, &res, refine)
}

/// The boundary condition a theorem is checked under by default.
pub fn default_bc(entry: &CatalogEntry) -> BoundaryCondition {
    if entry.topology.has_boundary() {
        BoundaryCondition::Dirichlet
    } else {
        BoundaryCondition::Closed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub refine: usize,
    pub points: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub bc: Option<BoundaryCondition>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { refine: 4, points: 200, seed: 0, tolerance: DEFAULT_TOLERANCE, bc: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub case: String,
    pub theorem: Theorem,
    pub bc: BoundaryCondition,
    pub refine: usize,
    pub points: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub structure: StructureFlags,
    pub constants: TheoremConstants,
    pub boundary: Option<BoundaryFacts>,
    pub bound: Option<f64>,
    pub bound_conservative: Option<f64>,
    pub lambda1: Option<Lambda1>,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub margin: Option<f64>,
    pub near_equality: Option<bool>,
}

impl BoundReport {
    pub fn skipped(&self) -> bool {
        self.verdict == Verdict::HypothesisNotMet
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Shared per-case work for several theorems: structure flags and constants.
#[derive(Clone)]
pub struct CaseAnalysis {
    pub case: String,
    pub entry: CatalogEntry,
    pub field_index: usize,
    pub structure: StructureReport,
    pub constants: TheoremConstants,
    pub boundary: Option<BoundaryFacts>,
}

impl CaseAnalysis {
    pub fn new(case: &str, points: usize, seed: u64) -> Result<CaseAnalysis, BoundsError> {
        let (entry, field_index) = zoo::resolve_case(case)?;
        let m = &entry.manifold;
        let a = &entry.fields[field_index].field;
        let constants = with_diameter(estimate_constants(m, a, points, seed)?, m.known_diameter, None);
        let samples = sampling::chart_points(m.primary(), points, seed);
        let structure = identities::structure_check(m, a, &samples)?;
        let boundary = if m.boundary.is_some() { Some(boundary_facts(m, a)?) } else { None };
        Ok(CaseAnalysis { case: case.to_string(), entry, field_index, structure, constants, boundary })
    }

    pub fn inputs(&self) -> BoundInputs<'_> {
        BoundInputs {
            constants: &self.constants,
            structure: &self.structure.flags,
            closed: matches!(self.entry.topology, Topology::Sphere { .. } | Topology::Torus),
            boundary: self.boundary,
        }
    }

    /// Evaluates `theorem`; `lambda1` is only requested when the hypotheses hold.
    pub fn report(
        &self,
        theorem: Theorem,
        opts: &BoundOptions,
        lambda1: impl FnOnce(BoundaryCondition) -> Result<Lambda1, BoundsError>,
    ) -> Result<BoundReport, BoundsError> {
        let bc = opts.bc.unwrap_or_else(|| default_bc(&self.entry));
        let value = bound_value(theorem, &self.inputs())?;
        let mut constants = self.constants.clone();
        let mut report = BoundReport {
            case: self.case.clone(),
            theorem,
            bc,
            refine: opts.refine,
            points: opts.points,
            seed: opts.seed,
            tolerance: opts.tolerance,
            structure: self.structure.flags,
            constants: constants.clone(),
            boundary: self.boundary,
            bound: None,
            bound_conservative: None,
            lambda1: None,
            verdict: Verdict::HypothesisNotMet,
            reason: None,
            margin: None,
            near_equality: None,
        };
        match value {
            BoundValue::HypothesisNotMet { reason } => report.reason = Some(reason),
            BoundValue::Value { raw, conservative } => {
                let l = lambda1(bc)?;
                constants = with_diameter(constants, self.entry.manifold.known_diameter, Some(l.mesh_diameter));
                let check = verify_bound(l.value, raw, opts.tolerance);
                report.constants = constants;
                report.bound = Some(raw);
                report.bound_conservative = Some(conservative);
                report.lambda1 = Some(l);
                report.verdict = check.verdict;
                report.margin = Some(check.margin);
                report.near_equality = Some(check.near_equality);
            }
        }
        Ok(report)
    }
}

/// Structure, constants, bound and verdict for one `(case, theorem)` pair.
pub fn run_bound(case: &str, theorem: Theorem, opts: &BoundOptions) -> Result<BoundReport, BoundsError> {
    let analysis = CaseAnalysis::new(case, opts.points, opts.seed)?;
    analysis.report(theorem, opts, |bc| {
        compute_lambda1(&analysis.entry, analysis.field_index, bc, opts.refine, opts.seed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn li_yau_flat_torus_value() {
        let d = PI * 2f64.sqrt();
        let v = li_yau(1.0, d, 3.0, 0.0);
        assert!((v - 4.0 / (6.0 * PI * PI) * (-2f64).exp()).abs() < 1e-15);
        assert!((v - 9.1419e-3).abs() < 1e-6);
    }

    #[test]
    fn li_yau_decreases_in_k() {
        let vals: Vec<f64> = [0.0, 0.1, 1.0, 10.0].iter().map(|k| li_yau(1.0, 2.0, 2.0, *k)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn verdict_rules() {
        let c = verify_bound(3.004, 3.0, 0.02);
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(c.near_equality);
        let c = verify_bound(1.0, 9.1419e-3, 0.02);
        assert!(!c.near_equality && (c.margin - 0.9908581).abs() < 1e-6);
        assert_eq!(verify_bound(2.95, 3.0, 0.02).verdict, Verdict::Pass);
        assert_eq!(verify_bound(2.9, 3.0, 0.01).verdict, Verdict::Fail);
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(Theorem::parse(t.id()).unwrap(), t);
        }
        assert!(Theorem::parse("thm13").is_err());
    }
}
