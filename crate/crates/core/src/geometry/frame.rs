use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::tensor::{Slot, TensorJet};
use super::{ChartManifold, EndomorphismField, GeometryError};
use crate::jets::{ChartFn, DomainError, Jet3};

const MIN_METRIC_EIGENVALUE: f64 = 1e-10;

/// Everything needed for pointwise tensor calculus at one chart point.
/// Built once; immutable afterwards.
#[derive(Debug, Clone)]
pub struct PointFrame {
    point: Vec<f64>,
    g: TensorJet,
    ginv: TensorJet,
    /// `Γ^k_ij` stored at index `[k, i, j]` (a container, not a tensor).
    gamma: TensorJet,
    /// `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l` stored at `[i, j, k, l]`.
    riemann: TensorJet,
    frame: DMatrix<f64>,
    volume: f64,
}

/// Covariant derivatives of a (1,1)-tensor field `A` at a point.
///
/// Index layout: `nabla[k, a, b] = (∇_k A)^a_b`,
/// `nabla2[z, y, a, b] = (∇²A)(·, ∂_y, ∂_z)^a_b`, `t[x, y, a] = T^A(∂_x, ∂_y)^a`.
#[derive(Debug, Clone)]
pub struct TensorDerivatives {
    pub nabla: TensorJet,
    pub nabla2: TensorJet,
    pub laplacian: TensorJet,
    pub divergence: TensorJet,
    pub t: TensorJet,
}

impl TensorDerivatives {
    /// `(∇_X A)Y`.
    pub fn nabla_at(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |a, _| {
            let mut s = 0.0;
            for k in 0..n {
                for b in 0..n {
                    s += x[k] * y[b] * self.nabla.at(&[k, a, b]);
                }
            }
            s
        })
    }

    /// `∇²A(X, Y, Z) = (∇_Z ∇_Y A)X − (∇_{∇_Z Y} A)X`.
    pub fn second(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |a, _| {
            let mut s = 0.0;
            for zi in 0..n {
                for yi in 0..n {
                    for b in 0..n {
                        s += z[zi] * y[yi] * x[b] * self.nabla2.at(&[zi, yi, a, b]);
                    }
                }
            }
            s
        })
    }

    /// `T^A(X, Y)`.
    pub fn t_at(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |a, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += x[i] * y[j] * self.t.at(&[i, j, a]);
                }
            }
            s
        })
    }
}

fn singular(point: &[f64], _: DomainError) -> GeometryError {
    GeometryError::SingularMetric { point: point.to_vec(), min_eigenvalue: 0.0 }
}

fn jet_inverse(m: &[Vec<Jet3>]) -> Result<Vec<Vec<Jet3>>, DomainError> {
    let n = m.len();
    match n {
        1 => Ok(vec![vec![m[0][0].recip()?]]),
        2 => {
            let r = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).recip()?;
            Ok(vec![vec![m[1][1] * r, -(m[0][1] * r)], vec![-(m[1][0] * r), m[0][0] * r]])
        }
        3 => {
            let cof = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (k0, k1) = ((j + 1) % 3, (j + 2) % 3);
                m[r0][k0] * m[r1][k1] - m[r0][k1] * m[r1][k0]
            };
            let r = (m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2)).recip()?;
            Ok((0..3).map(|i| (0..3).map(|j| cof(j, i) * r).collect()).collect())
        }
        _ => panic!("unsupported chart dimension {n}"),
    }
}

impl PointFrame {
    pub fn new(m: &ChartManifold, p: &[f64]) -> Result<PointFrame, GeometryError> {
        let n = m.dim();
        assert_eq!(p.len(), n, "point dimension mismatch");
        let metric = &m.primary().metric;
        let mut gj = vec![vec![Jet3::zero(n); n]; n];
        for i in 0..n {
            for j in 0..n {
                gj[i][j] = metric[i][j].jet(p)?;
            }
        }
        let gv = DMatrix::from_fn(n, n, |i, j| 0.5 * (gj[i][j].value() + gj[j][i].value()));
        let min_eig = SymmetricEigen::new(gv.clone()).eigenvalues.min();
        if min_eig.is_nan() || min_eig <= MIN_METRIC_EIGENVALUE {
            return Err(GeometryError::SingularMetric { point: p.to_vec(), min_eigenvalue: min_eig });
        }
        let gi = jet_inverse(&gj).map_err(|e| singular(p, e))?;

        let mut g = TensorJet::zeros(n, &[Slot::Down, Slot::Down]);
        let mut ginv = TensorJet::zeros(n, &[Slot::Up, Slot::Up]);
        for i in 0..n {
            for j in 0..n {
                g.set(&[i, j], gj[i][j]);
                ginv.set(&[i, j], gi[i][j]);
            }
        }

        // ∂_l g_ij at [l, i, j]
        let dg = g.partials();
        let mut gamma = TensorJet::zeros(n, &[Slot::Up, Slot::Down, Slot::Down]);
        for (k, gik) in gi.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let mut s = Jet3::zero(n);
                    for (l, gikl) in gik.iter().enumerate() {
                        s += *gikl * (dg.get(&[i, j, l]) + dg.get(&[j, i, l]) - dg.get(&[l, i, j]));
                    }
                    gamma.set(&[k, i, j], s.scale(0.5));
                }
            }
        }

        // ∂_i Γ^l_jk at [i, l, j, k]
        let dgamma = gamma.partials();
        let mut riemann = TensorJet::zeros(n, &[Slot::Down, Slot::Down, Slot::Down, Slot::Up]);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = dgamma.get(&[i, l, j, k]) - dgamma.get(&[j, l, i, k]);
                        for q in 0..n {
                            s += gamma.get(&[q, j, k]) * gamma.get(&[l, i, q]);
                            s -= gamma.get(&[q, i, k]) * gamma.get(&[l, j, q]);
                        }
                        riemann.set(&[i, j, k, l], s);
                    }
                }
            }
        }

        let frame = gram_schmidt(&gv);
        let volume = gv.determinant().sqrt();
        Ok(PointFrame { point: p.to_vec(), g, ginv, gamma, riemann, frame, volume })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn metric(&self) -> DMatrix<f64> {
        self.g.matrix()
    }

    pub fn inverse_metric(&self) -> DMatrix<f64> {
        self.ginv.matrix()
    }

    pub fn metric_jets(&self) -> &TensorJet {
        &self.g
    }

    /// `Γ^k_ij` at the point.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma.at(&[k, i, j])
    }

    pub fn christoffel_array(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| self.christoffel(k, i, j)).collect()).collect()).collect()
    }

    /// Riemann components `R^l_ijk` at `[i, j, k, l]`.
    pub fn riemann(&self) -> &TensorJet {
        &self.riemann
    }

    /// Orthonormal frame; column `i` holds the chart components of `e_i`.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn frame_vector(&self, i: usize) -> DVector<f64> {
        self.frame.column(i).into_owned()
    }

    /// `√det g`, the Riemannian volume density of the chart.
    pub fn volume_density(&self) -> f64 {
        self.volume
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * self.metric() * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// `R(X, Y)Z`.
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        out[l] += xy * z[k] * self.riemann.at(&[i, j, k, l]);
                    }
                }
            }
        }
        out
    }

    /// Sectional curvature of the plane spanned by `x` and `y`.
    pub fn sectional(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let num = self.inner(&self.curvature(x, y, y), x);
        let den = self.inner(x, x) * self.inner(y, y) - self.inner(x, y).powi(2);
        num / den
    }

    /// `Ric(X, Y) = Σ_i ⟨R(X, e_i)e_i, Y⟩`.
    pub fn ricci(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|i| {
                let e = self.frame_vector(i);
                self.inner(&self.curvature(x, &e, &e), y)
            })
            .sum()
    }

    /// `Ric_A(X, Y) = Σ_i ⟨R(X, A e_i)e_i, Y⟩` for chart-component matrix `a` of `A`.
    pub fn ric_a(&self, a: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|i| {
                let e = self.frame_vector(i);
                let ae = a * &e;
                self.inner(&self.curvature(x, &ae, &e), y)
            })
            .sum()
    }

    /// Matrix of a bilinear form `b(X, Y)` in the orthonormal frame.
    pub fn frame_form(&self, b: impl Fn(&DVector<f64>, &DVector<f64>) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| b(&self.frame_vector(i), &self.frame_vector(j)))
    }

    /// `Ric_A` in the orthonormal frame.
    pub fn ric_a_frame(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.frame_form(|x, y| self.ric_a(a, x, y))
    }

    /// Chart components of a (1,1) tensor expressed in the orthonormal frame: `⟨e_i, A e_j⟩`.
    pub fn endomorphism_in_frame(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.frame.transpose() * self.metric() * a * &self.frame
    }

    /// Component values of `t` in the orthonormal frame, storage order as in `t`.
    pub fn frame_components(&self, t: &TensorJet) -> Vec<f64> {
        let n = self.dim();
        // coefficient of e_i in a vector v is e_iᵀ g v
        let up = self.frame.transpose() * self.metric();
        let mut vals = t.values();
        let rank = t.rank();
        let stride = |s: usize| n.pow((rank - 1 - s) as u32);
        for (s, slot) in t.slots().iter().enumerate() {
            let mat = match slot {
                Slot::Up => up.clone(),
                Slot::Down => self.frame.transpose(),
            };
            let st = stride(s);
            let mut next = vec![0.0; vals.len()];
            for (flat, out) in next.iter_mut().enumerate() {
                let i = (flat / st) % n;
                let base = flat - i * st;
                *out = (0..n).map(|m| mat[(i, m)] * vals[base + m * st]).sum();
            }
            vals = next;
        }
        vals
    }

    /// Norm of a tensor at the point, `|T|² = Σ T(e_i, …)²`.
    pub fn tensor_norm(&self, t: &TensorJet) -> f64 {
        self.frame_components(t).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Jet of a chart function at the point.
    pub fn scalar(&self, f: &ChartFn) -> Result<TensorJet, GeometryError> {
        Ok(TensorJet::scalar(f.jet(&self.point)?))
    }

    /// Jets of `A^a_b` at the point, slots `[Up, Down]`.
    pub fn endomorphism(&self, a: &EndomorphismField) -> Result<TensorJet, GeometryError> {
        let n = self.dim();
        let mut t = TensorJet::zeros(n, &[Slot::Up, Slot::Down]);
        for i in 0..n {
            for j in 0..n {
                t.set(&[i, j], a.entries[i][j].jet(&self.point)?);
            }
        }
        Ok(t)
    }

    /// Covariant derivative; the derivative slot is prepended.
    pub fn nabla(&self, t: &TensorJet) -> TensorJet {
        let n = self.dim();
        let mut out = t.partials();
        let slots = t.slots().to_vec();
        for idx in out.indices().collect::<Vec<_>>() {
            let k = idx[0];
            let rest = &idx[1..];
            let mut acc = Jet3::zero(n);
            let mut moved = rest.to_vec();
            for (s, slot) in slots.iter().enumerate() {
                let fixed = rest[s];
                for m in 0..n {
                    moved[s] = m;
                    let comp = t.get(&moved);
                    match slot {
                        Slot::Up => acc += self.gamma.get(&[fixed, k, m]) * comp,
                        Slot::Down => acc -= self.gamma.get(&[m, k, fixed]) * comp,
                    }
                }
                moved[s] = fixed;
            }
            out.add_at(&idx, acc);
        }
        out
    }

    /// Raises slot `s` (which must be `Down`) with `g⁻¹`.
    pub fn raise(&self, t: &TensorJet, s: usize) -> TensorJet {
        assert_eq!(t.slots()[s], Slot::Down);
        self.move_index(t, s, &self.ginv)
    }

    /// Lowers slot `s` (which must be `Up`) with `g`.
    pub fn lower(&self, t: &TensorJet, s: usize) -> TensorJet {
        assert_eq!(t.slots()[s], Slot::Up);
        self.move_index(t, s, &self.g)
    }

    fn move_index(&self, t: &TensorJet, s: usize, by: &TensorJet) -> TensorJet {
        let n = self.dim();
        let mut slots = t.slots().to_vec();
        slots[s] = by.slots()[0];
        let mut out = TensorJet::zeros(n, &slots);
        for idx in out.indices().collect::<Vec<_>>() {
            let mut src = idx.clone();
            let mut acc = Jet3::zero(n);
            for m in 0..n {
                src[s] = m;
                acc += by.get(&[idx[s], m]) * t.get(&src);
            }
            out.set(&idx, acc);
        }
        out
    }

    /// `∇u` as a vector (slot `Up`).
    pub fn gradient(&self, u: &TensorJet) -> TensorJet {
        self.raise(&u.partials(), 0)
    }

    /// `Hess u` with slots `[Down, Down]`.
    pub fn hessian(&self, u: &TensorJet) -> TensorJet {
        self.nabla(&u.partials())
    }

    /// `Δu = Trace Hess u`.
    pub fn laplacian(&self, u: &TensorJet) -> TensorJet {
        self.raise(&self.hessian(u), 0).contract(0, 1)
    }

    /// Divergence of a vector field.
    pub fn divergence(&self, v: &TensorJet) -> TensorJet {
        self.nabla(v).contract(0, 1)
    }

    /// `A V` for `A` with slots `[Up, Down]` and a vector `V`.
    pub fn apply(&self, a: &TensorJet, v: &TensorJet) -> TensorJet {
        a.outer(v).contract(1, 2)
    }

    /// `⟨X, Y⟩` of two vector fields, as a scalar jet.
    pub fn dot(&self, x: &TensorJet, y: &TensorJet) -> TensorJet {
        self.lower(x, 0).outer(y).contract(0, 1)
    }

    /// `L_A u = div(A∇u)`.
    pub fn op_l_a(&self, a: &TensorJet, u: &TensorJet) -> TensorJet {
        self.divergence(&self.apply(a, &self.gradient(u)))
    }

    /// `Δ_A u = Σ_i ⟨∇_{e_i}∇u, A e_i⟩`.
    pub fn op_delta_a(&self, a: &TensorJet, u: &TensorJet) -> TensorJet {
        // Hess_{kb} A^b_c g^{ck}
        let ha = self.hessian(u).outer(a).contract(1, 2);
        self.raise(&ha, 0).contract(0, 1)
    }

    pub fn tensor_derivatives(&self, a: &TensorJet) -> TensorDerivatives {
        let nabla = self.nabla(a);
        let nabla2 = self.nabla(&nabla);
        let laplacian = self.raise(&nabla2, 0).contract(0, 1);
        // (div A)^a = g^{kb} (∇_k A)^a_b
        let divergence = self.raise(&nabla, 0).contract(0, 2);
        // T[x, y, a] = (∇_x A)^a_y − (∇_y A)^a_x
        let t = nabla.swap(1, 2).minus(&nabla.swap(1, 2).swap(0, 1));
        TensorDerivatives { nabla, nabla2, laplacian, divergence, t }
    }
}

/// Gram–Schmidt on the coordinate vectors `∂_1, …, ∂_n` in order.
fn gram_schmidt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut e = DMatrix::<f64>::identity(n, n);
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[(0, 0)];
    for i in 0..n {
        let mut v = e.column(i).into_owned();
        for j in 0..i {
            let u = e.column(j).into_owned();
            v -= &u * ip(&u, &v);
        }
        // second pass for stability
        for j in 0..i {
            let u = e.column(j).into_owned();
            v -= &u * ip(&u, &v);
        }
        let nv = ip(&v, &v).sqrt();
        e.set_column(i, &(v / nv));
    }
    e
}
