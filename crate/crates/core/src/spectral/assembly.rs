//! P1 stiffness and mass matrices.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::geometry::{ChartManifold, EndomorphismField};
use crate::jets::ChartFn;

use super::mesh::TriMesh;
use super::SpectralError;

/// Allowed asymmetry of a per-triangle coefficient matrix.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Orthonormal basis `(t1, t2)` of the plane of triangle `t` and the local
/// 2-D coordinates of its edge vectors (columns).
fn local_frame(mesh: &TriMesh, t: usize) -> ([[f64; 3]; 2], Matrix2<f64>) {
    let (e1, e2) = mesh.edge_vectors(t);
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let t1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let p = e2[0] * t1[0] + e2[1] * t1[1] + e2[2] * t1[2];
    let w = [e2[0] - p * t1[0], e2[1] - p * t1[1], e2[2] - p * t1[2]];
    let nw = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let t2 = [w[0] / nw, w[1] / nw, w[2] / nw];
    ([t1, t2], Matrix2::new(n1, p, 0.0, nw))
}

/// Coefficient matrices `Â_T` of `A` at triangle centroids, expressed in
/// each triangle's orthonormal in-plane basis: `Â = Tᵀ J A g⁻¹ Jᵀ T` with `J`
/// the embedding Jacobian of chart 0 and `T` the triangle basis.
pub fn triangle_coefficients(
    mesh: &TriMesh,
    m: &ChartManifold,
    a: &EndomorphismField,
) -> Result<Vec<Matrix2<f64>>, SpectralError> {
    let chart = m.primary();
    let emb = chart.embedding.as_ref().ok_or_else(|| SpectralError::NoEmbedding(m.name.clone()))?;
    let locate = chart.locate.ok_or_else(|| SpectralError::NoEmbedding(m.name.clone()))?;
    let n = chart.dim();
    let demb: Vec<Vec<ChartFn>> = emb.iter().map(|e| (0..n).map(|k| e.diff(k)).collect()).collect();
    (0..mesh.triangle_count())
        .into_par_iter()
        .map(|t| {
            let c = mesh.centroid(t);
            let p = locate(&c).ok_or(SpectralError::Unlocatable { triangle: t })?;
            let mut jac = DMatrix::zeros(3, n);
            for r in 0..3 {
                for k in 0..n {
                    jac[(r, k)] = demb[r][k].eval(&p)?;
                }
            }
            let mut av = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    av[(i, j)] = a.entries[i][j].eval(&p)?;
                }
            }
            let g = jac.transpose() * &jac;
            let ginv = g.try_inverse().ok_or(SpectralError::Unlocatable { triangle: t })?;
            let ambient = &jac * av * ginv * jac.transpose();
            let (basis, _) = local_frame(mesh, t);
            let tm = DMatrix::from_fn(3, 2, |r, k| basis[k][r]);
            let ah = tm.transpose() * ambient * tm;
            let asym = (ah[(0, 1)] - ah[(1, 0)]).abs();
            if asym > SYMMETRY_TOL * ah.amax().max(1.0) {
                return Err(SpectralError::NonSymmetricCoefficient { triangle: t, asymmetry: asym });
            }
            let off = 0.5 * (ah[(0, 1)] + ah[(1, 0)]);
            Ok(Matrix2::new(ah[(0, 0)], off, off, ah[(1, 1)]))
        })
        .collect()
}

/// Identity coefficients (the Laplace–Beltrami stiffness).
pub fn identity_coefficients(mesh: &TriMesh) -> Vec<Matrix2<f64>> {
    vec![Matrix2::identity(); mesh.triangle_count()]
}

/// Element stiffness `area · ∇φ_iᵀ Â ∇φ_j` for the three hat functions.
pub fn element_stiffness(mesh: &TriMesh, t: usize, coeff: &Matrix2<f64>) -> Result<Matrix3<f64>, SpectralError> {
    let (_, p) = local_frame(mesh, t);
    let area = 0.5 * p.determinant().abs();
    if area.is_nan() || area <= super::mesh::MIN_TRIANGLE_AREA {
        return Err(SpectralError::DegenerateTriangle { triangle: t, area });
    }
    // gradients of the barycentric coordinates 1 and 2 are the rows of P⁻¹
    let pinv = p.try_inverse().ok_or(SpectralError::DegenerateTriangle { triangle: t, area })?;
    let g1 = Vector2::new(pinv[(0, 0)], pinv[(0, 1)]);
    let g2 = Vector2::new(pinv[(1, 0)], pinv[(1, 1)]);
    let grads = [-g1 - g2, g1, g2];
    Ok(Matrix3::from_fn(|i, j| area * grads[i].dot(&(coeff * grads[j]))))
}

/// Consistent P1 element mass matrix.
pub fn element_mass(mesh: &TriMesh, t: usize) -> Matrix3<f64> {
    let area = mesh.triangle_area(t);
    Matrix3::from_fn(|i, j| if i == j { area / 6.0 } else { area / 12.0 })
}

fn scatter(mesh: &TriMesh, elements: &[Matrix3<f64>]) -> CsrMatrix<f64> {
    let n = mesh.vertex_count();
    let mut coo = CooMatrix::new(n, n);
    for (tri, e) in mesh.triangles.iter().zip(elements) {
        for i in 0..3 {
            for j in 0..3 {
                coo.push(tri[i], tri[j], e[(i, j)]);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn assemble_stiffness(mesh: &TriMesh, coeffs: &[Matrix2<f64>]) -> Result<CsrMatrix<f64>, SpectralError> {
    assert_eq!(coeffs.len(), mesh.triangle_count(), "one coefficient per triangle");
    let elements: Vec<Matrix3<f64>> = (0..mesh.triangle_count())
        .into_par_iter()
        .map(|t| element_stiffness(mesh, t, &coeffs[t]))
        .collect::<Result<_, _>>()?;
    Ok(scatter(mesh, &elements))
}

pub fn assemble_mass(mesh: &TriMesh) -> CsrMatrix<f64> {
    let elements: Vec<Matrix3<f64>> = (0..mesh.triangle_count()).map(|t| element_mass(mesh, t)).collect();
    scatter(mesh, &elements)
}

/// Stiffness, mass and per-triangle coefficients.
pub type Assembled = (CsrMatrix<f64>, CsrMatrix<f64>, Vec<Matrix2<f64>>);

/// Stiffness and mass matrices of `L_A` on `mesh`.
pub fn assemble(
    mesh: &TriMesh,
    m: &ChartManifold,
    a: &EndomorphismField,
) -> Result<Assembled, SpectralError> {
    let coeffs = triangle_coefficients(mesh, m, a)?;
    let k = assemble_stiffness(mesh, &coeffs)?;
    Ok((k, assemble_mass(mesh), coeffs))
}
