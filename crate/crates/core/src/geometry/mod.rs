//! Chart-based Riemannian calculus.
//!
//! Curvature convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, so
//! that `Ric(X,X) = Σ_i ⟨R(X,e_i)e_i, X⟩` and the unit sphere has
//! `Ric = (n−1)g`. The extended Ricci form is
//! `Ric_A(X,Y) = Σ_i ⟨R(X, A e_i) e_i, Y⟩`, positive on spheres for positive `A`.
//!
//! All pointwise work happens in a [`PointFrame`]: metric, inverse metric and
//! Christoffel symbols are expanded as jets at the point, tensor fields are
//! differentiated covariantly through those jets, and results are reported
//! in an orthonormal frame obtained by Gram–Schmidt from the coordinate
//! vectors (in coordinate order).

mod frame;
mod tensor;

pub use frame::{PointFrame, TensorDerivatives};
pub use tensor::{Slot, TensorJet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{ChartFn, EvalError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is singular at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMetric { point: Vec<f64>, min_eigenvalue: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("chart {chart} does not exist")]
    NoSuchChart { chart: usize },
}

/// Inverse of the embedding map: ambient point to chart coordinates.
pub type LocateFn = fn(&[f64; 3]) -> Option<Vec<f64>>;

/// One coordinate chart: a box domain, metric entries, and optionally an
/// isometric embedding into Euclidean 3-space with its inverse.
#[derive(Clone)]
pub struct Chart {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
    pub metric: Vec<Vec<ChartFn>>,
    pub embedding: Option<[ChartFn; 3]>,
    pub locate: Option<LocateFn>,
}

impl Chart {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    /// Chart point at fractional position `t ∈ [0,1]^n` of the box shrunk by `margin` on every side.
    pub fn interior_point(&self, t: &[f64], margin: f64) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                if self.periodic[i] {
                    lo + t[i] * (hi - lo)
                } else {
                    let w = hi - lo;
                    lo + margin * w + t[i] * w * (1.0 - 2.0 * margin)
                }
            })
            .collect()
    }

    pub fn embed(&self, p: &[f64]) -> Option<Result<[f64; 3], EvalError>> {
        self.embedding.as_ref().map(|e| Ok([e[0].eval(p)?, e[1].eval(p)?, e[2].eval(p)?]))
    }
}

/// The boundary of a chart-0 domain, given by a defining function `ρ`
/// (zero on the boundary, increasing outward) and a parametrization
/// `s ↦ p(s)` whose components are chart functions of the single variable `s`.
#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub defining: ChartFn,
    pub parametrization: Vec<ChartFn>,
    pub s_range: (f64, f64),
    pub periodic: bool,
}

/// A Riemannian manifold described by coordinate charts. Tensor fields and
/// scalar functions are expressed on chart 0.
#[derive(Clone)]
pub struct ChartManifold {
    pub name: String,
    pub charts: Vec<Chart>,
    pub known_diameter: Option<f64>,
    pub curvature_constant: Option<f64>,
    pub boundary: Option<BoundarySpec>,
}

impl ChartManifold {
    pub fn dim(&self) -> usize {
        self.charts[0].dim()
    }

    pub fn primary(&self) -> &Chart {
        &self.charts[0]
    }

    /// Metric entries of chart 0 evaluated at `p`.
    pub fn metric_at(&self, chart: usize, p: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
        let c = self.charts.get(chart).ok_or(GeometryError::NoSuchChart { chart })?;
        c.metric
            .iter()
            .map(|row| row.iter().map(|g| g.eval(p).map_err(GeometryError::from)).collect())
            .collect()
    }

    /// Symbolic inverse metric of chart 0.
    pub fn inverse_metric(&self) -> Vec<Vec<ChartFn>> {
        symbolic_inverse(&self.primary().metric)
    }

    /// Symbolic Christoffel symbols `Γ^k_ij` of chart 0, indexed `[k][i][j]`.
    pub fn christoffel_symbolic(&self) -> Vec<Vec<Vec<ChartFn>>> {
        let g = &self.primary().metric;
        let ginv = self.inverse_metric();
        let n = self.dim();
        let dg: Vec<Vec<Vec<ChartFn>>> =
            (0..n).map(|l| (0..n).map(|i| (0..n).map(|j| g[i][j].diff(l)).collect()).collect()).collect();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut s = ChartFn::constant(0.0);
                                for l in 0..n {
                                    let t = dg[i][j][l].clone() + dg[j][i][l].clone() - dg[l][i][j].clone();
                                    s = s + ginv[k][l].clone() * t;
                                }
                                0.5 * s
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks that the metric of every embedded chart equals the pullback of
    /// the Euclidean metric at `p`; returns the worst relative mismatch.
    pub fn embedding_mismatch(&self, chart: usize, p: &[f64]) -> Result<f64, GeometryError> {
        let c = self.charts.get(chart).ok_or(GeometryError::NoSuchChart { chart })?;
        let Some(emb) = &c.embedding else { return Ok(0.0) };
        let n = c.dim();
        let jac: Vec<Vec<f64>> = emb
            .iter()
            .map(|x| {
                let j = x.jet(p)?;
                Ok((0..n).map(|k| j.d1(k)).collect())
            })
            .collect::<Result<_, GeometryError>>()?;
        let g = self.metric_at(chart, p)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let pull: f64 = (0..3).map(|a| jac[a][i] * jac[a][j]).sum();
                worst = worst.max((pull - g[i][j]).abs() / g[i][j].abs().max(1.0));
            }
        }
        Ok(worst)
    }

    /// Where chart `a` and chart `b` overlap at the image of `p` (a point of
    /// chart `a`), compares `g_a` with the pullback of `g_b` through the
    /// transition map. `None` when `p` does not land inside chart `b`.
    pub fn overlap_mismatch(&self, a: usize, b: usize, p: &[f64]) -> Result<Option<f64>, GeometryError> {
        let ca = self.charts.get(a).ok_or(GeometryError::NoSuchChart { chart: a })?;
        let cb = self.charts.get(b).ok_or(GeometryError::NoSuchChart { chart: b })?;
        let (Some(ea), Some(eb), Some(locate)) = (&ca.embedding, &cb.embedding, cb.locate) else {
            return Ok(None);
        };
        let x = [ea[0].eval(p)?, ea[1].eval(p)?, ea[2].eval(p)?];
        let Some(q) = locate(&x) else { return Ok(None) };
        if !cb.contains(&q) {
            return Ok(None);
        }
        let n = ca.dim();
        let jac = |e: &[ChartFn; 3], at: &[f64]| -> Result<nalgebra::DMatrix<f64>, GeometryError> {
            let mut m = nalgebra::DMatrix::zeros(3, n);
            for (r, f) in e.iter().enumerate() {
                let j = f.jet(at)?;
                for k in 0..n {
                    m[(r, k)] = j.d1(k);
                }
            }
            Ok(m)
        };
        let ja = jac(ea, p)?;
        let jb = jac(eb, &q)?;
        // transition Jacobian ∂q/∂p = (Jbᵀ Jb)⁻¹ Jbᵀ Ja
        let jtj = jb.transpose() * &jb;
        let Some(inv) = jtj.try_inverse() else { return Ok(None) };
        let t = inv * jb.transpose() * ja;
        let gb = to_matrix(&self.metric_at(b, &q)?);
        let ga = to_matrix(&self.metric_at(a, p)?);
        let pulled = t.transpose() * gb * t;
        let worst = (pulled - &ga).abs().max() / ga.abs().max().max(1.0);
        Ok(Some(worst))
    }
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let n = rows.len();
    nalgebra::DMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| rows[i][j])
        .resize(n, rows.first().map_or(0, |r| r.len()), 0.0)
}

/// Inverse of a symmetric matrix of chart functions (dimension 1 to 3) by cofactors.
pub fn symbolic_inverse(m: &[Vec<ChartFn>]) -> Vec<Vec<ChartFn>> {
    let n = m.len();
    let c = |i: usize, j: usize| m[i][j].clone();
    match n {
        1 => vec![vec![1.0 / c(0, 0)]],
        2 => {
            let det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
            vec![
                vec![c(1, 1) / det.clone(), -(c(0, 1) / det.clone())],
                vec![-(c(1, 0) / det.clone()), c(0, 0) / det],
            ]
        }
        3 => {
            let cof = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (k0, k1) = ((j + 1) % 3, (j + 2) % 3);
                c(r0, k0) * c(r1, k1) - c(r0, k1) * c(r1, k0)
            };
            let det = c(0, 0) * cof(0, 0) + c(0, 1) * cof(0, 1) + c(0, 2) * cof(0, 2);
            (0..3).map(|i| (0..3).map(|j| cof(j, i) / det.clone()).collect()).collect()
        }
        _ => panic!("symbolic inverse supports dimensions 1..=3, got {n}"),
    }
}

/// Properties a catalog asserts about an endomorphism field. Each is
/// re-verified numerically by the identities module.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    pub self_adjoint: bool,
    pub positive_semidefinite: bool,
    pub parallel: bool,
    pub codazzi: bool,
    pub divergence_free: bool,
    pub trace_constant: bool,
}

impl StructureFlags {
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let pairs = [
            (self.self_adjoint, "self_adjoint"),
            (self.positive_semidefinite, "psd"),
            (self.parallel, "parallel"),
            (self.codazzi, "codazzi"),
            (self.divergence_free, "divergence_free"),
            (self.trace_constant, "trace_constant"),
        ];
        for (on, name) in pairs {
            if on {
                out.push(name);
            }
        }
        out
    }
}

/// A (1,1)-tensor field `A` given by mixed chart components `A^i_j` on chart 0.
#[derive(Clone, Debug)]
pub struct EndomorphismField {
    pub name: String,
    pub entries: Vec<Vec<ChartFn>>,
    pub declared: StructureFlags,
}

impl EndomorphismField {
    pub fn new(name: impl Into<String>, entries: Vec<Vec<ChartFn>>, declared: StructureFlags) -> Self {
        EndomorphismField { name: name.into(), entries, declared }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `α·Id`.
    pub fn scalar(dim: usize, alpha: f64, declared: StructureFlags) -> Self {
        let entries = (0..dim)
            .map(|i| (0..dim).map(|j| ChartFn::constant(if i == j { alpha } else { 0.0 })).collect())
            .collect();
        EndomorphismField::new(format!("A={alpha}I"), entries, declared)
    }

    /// The self-adjoint field `g⁻¹ Eᵀ M E` induced by a constant symmetric
    /// ambient bilinear form `M` through the chart map Jacobian `E`
    /// (`E[a][j] = ∂X^a/∂x^j`).
    pub fn from_ambient_form(
        m: &ChartManifold,
        ambient: &[ChartFn],
        form: &[Vec<f64>],
        name: impl Into<String>,
        declared: StructureFlags,
    ) -> Self {
        let n = m.dim();
        let k = ambient.len();
        let e: Vec<Vec<ChartFn>> = ambient.iter().map(|x| (0..n).map(|j| x.diff(j)).collect()).collect();
        let ginv = m.inverse_metric();
        let mut lowered = vec![vec![ChartFn::constant(0.0); n]; n];
        for (i, row) in lowered.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut s = ChartFn::constant(0.0);
                for a in 0..k {
                    for b in 0..k {
                        if form[a][b] != 0.0 {
                            s = s + form[a][b] * (e[a][i].clone() * e[b][j].clone());
                        }
                    }
                }
                *slot = s;
            }
        }
        EndomorphismField::new(name, raise(&ginv, &lowered), declared)
    }

    /// `Hess f + c·f·Id`, the Codazzi construction on a space form of curvature `c`.
    pub fn hessian_plus(m: &ChartManifold, f: &ChartFn, c: f64, name: impl Into<String>, declared: StructureFlags) -> Self {
        let n = m.dim();
        let gamma = m.christoffel_symbolic();
        let ginv = m.inverse_metric();
        let mut hess = vec![vec![ChartFn::constant(0.0); n]; n];
        for (i, row) in hess.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut s = f.diff(i).diff(j);
                for (k, gk) in gamma.iter().enumerate() {
                    s = s - gk[i][j].clone() * f.diff(k);
                }
                *slot = s;
            }
        }
        let mut entries = raise(&ginv, &hess);
        if c != 0.0 {
            for (i, row) in entries.iter_mut().enumerate() {
                row[i] = row[i].clone() + c * f.clone();
            }
        }
        EndomorphismField::new(name, entries, declared)
    }

    /// Symbolic trace `A^i_i`.
    pub fn trace_fn(&self) -> ChartFn {
        (0..self.dim()).fold(ChartFn::constant(0.0), |s, i| s + self.entries[i][i].clone())
    }
}

fn raise(ginv: &[Vec<ChartFn>], lowered: &[Vec<ChartFn>]) -> Vec<Vec<ChartFn>> {
    let n = ginv.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(ChartFn::constant(0.0), |s, k| s + ginv[i][k].clone() * lowered[k][j].clone())
                })
                .collect()
        })
        .collect()
}

/// Whether a scalar field is a test function or an eigenfunction candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldRole {
    TestFunction,
    EigenfunctionCandidate,
}

/// A scalar function `u` on chart 0.
#[derive(Clone, Debug)]
pub struct ScalarJetField {
    pub name: String,
    pub u: ChartFn,
    pub role: FieldRole,
}

impl ScalarJetField {
    pub fn new(name: impl Into<String>, u: ChartFn, role: FieldRole) -> Self {
        ScalarJetField { name: name.into(), u, role }
    }
}
