//! Generalized symmetric eigensolvers for `K x = λ M x`.
//!
//! The sparse path factors `K − σM` (σ slightly negative, so the factor
//! exists on singular closed/Neumann pencils) with an envelope Cholesky
//! after reverse Cuthill–McKee reordering, and runs shift-invert block
//! subspace iteration with Rayleigh–Ritz projection. The dense path
//! reduces to a standard symmetric problem through the Cholesky factor of `M`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SpectralError;

/// Relative residual at which subspace iteration stops.
pub const CONVERGENCE_TOL: f64 = 1e-11;
pub const MAX_ITERATIONS: usize = 2000;
/// Factor applied to `tr(K)/tr(M)` for the default shift.
pub const SHIFT_FACTOR: f64 = -1e-4;
/// Multiplier for the single retry after a failed factorization.
pub const SHIFT_RETRY: f64 = 1.01;

/// Eigenpairs in ascending order with `M`-orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub shift: Option<f64>,
    pub iterations: usize,
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

pub fn mul(a: &CsrMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.nrows(), x.ncols());
    for c in 0..x.ncols() {
        for (i, row) in a.row_iter().enumerate() {
            let mut s = 0.0;
            for (j, v) in row.col_indices().iter().zip(row.values()) {
                s += v * x[(*j, c)];
            }
            y[(i, c)] = s;
        }
    }
    y
}

pub fn mul_vec(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.nrows(),
        a.row_iter().map(|row| row.col_indices().iter().zip(row.values()).map(|(j, v)| v * x[*j]).sum::<f64>()),
    )
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &CsrMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn trace(a: &CsrMatrix<f64>) -> f64 {
    a.triplet_iter().filter(|(i, j, _)| i == j).map(|(_, _, v)| *v).sum()
}

/// `‖Kx − λMx‖ / ‖Mx‖` for every column.
pub fn residual_norms(k: &CsrMatrix<f64>, m: &CsrMatrix<f64>, values: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let kx = mul(k, vectors);
    let mx = mul(m, vectors);
    (0..values.len())
        .map(|c| {
            let r = kx.column(c) - mx.column(c) * values[c];
            r.norm() / mx.column(c).norm()
        })
        .collect()
}

/// Solves the generalized problem for small dense matrices; `M` must be positive definite.
pub fn dense_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    let chol = m.clone().cholesky().ok_or(SpectralError::MassNotPositiveDefinite)?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(SpectralError::MassNotPositiveDefinite)?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(k.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let x = linv.transpose() * y;
    Ok((values, x))
}

/// Lowest `count` eigenpairs by dense reduction.
pub fn dense_eigenpairs(k: &CsrMatrix<f64>, m: &CsrMatrix<f64>, count: usize) -> Result<Eigenpairs, SpectralError> {
    let (values, vectors) = dense_generalized(&to_dense(k), &to_dense(m))?;
    let count = count.min(values.len());
    Ok(Eigenpairs { values: values[..count].to_vec(), vectors: vectors.columns(0, count).into_owned(), shift: None, iterations: 0 })
}

/// Reverse Cuthill–McKee ordering of the sparsity graph; `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix<f64>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = a
        .row_iter()
        .enumerate()
        .map(|(i, r)| r.col_indices().iter().copied().filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(|v| v.len()).collect();
    let bfs = |start: usize, visited: &mut Vec<bool>, order: &mut Vec<usize>| -> usize {
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            last = v;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
        last
    };
    let mut visited = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: the last vertex reached from a min-degree vertex of the component
        let mut probe_visited = visited.clone();
        let mut component = Vec::new();
        bfs(seed, &mut probe_visited, &mut component);
        let start0 = *component.iter().min_by_key(|&&v| (degree[v], v)).expect("non-empty component");
        let mut probe_visited = visited.clone();
        let start = bfs(start0, &mut probe_visited, &mut Vec::new());
        bfs(start, &mut visited, &mut perm);
    }
    perm.reverse();
    perm
}

/// Envelope (skyline) Cholesky factor `L` stored by rows from the first nonzero column.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors the symmetric matrix `a` (lower triangle used). `None` on a nonpositive pivot.
    pub fn factor(a: &CsrMatrix<f64>) -> Option<SkylineCholesky> {
        let n = a.nrows();
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.triplet_iter() {
            if j < i {
                first[i] = first[i].min(j);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (i, j, v) in a.triplet_iter() {
            if j <= i {
                values[offset[i] + j - first[i]] += *v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (offset[i] + lo - fi, offset[j] + lo - fj);
                let len = j - lo;
                let mut s = values[offset[i] + j - fi];
                for t in 0..len {
                    s -= values[ri + t] * values[rj + t];
                }
                if j < i {
                    values[offset[i] + j - fi] = s / values[offset[j + 1] - 1];
                } else {
                    if s.is_nan() || s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    values[offset[i + 1] - 1] = s.sqrt();
                }
            }
        }
        Some(SkylineCholesky { first, offset, values })
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.first.len();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let mut s = b[i];
            for (t, l) in row[..i - fi].iter().enumerate() {
                s -= l * b[fi + t];
            }
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (t, l) in row[..i - fi].iter().enumerate() {
                b[fi + t] -= l * xi;
            }
        }
    }
}

fn permute(a: &CsrMatrix<f64>, perm: &[usize]) -> CsrMatrix<f64> {
    let n = a.nrows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut coo = nalgebra_sparse::CooMatrix::new(n, n);
    for (i, j, v) in a.triplet_iter() {
        coo.push(inv[i], inv[j], *v);
    }
    CsrMatrix::from(&coo)
}

fn combine(k: &CsrMatrix<f64>, m: &CsrMatrix<f64>, sigma: f64) -> CsrMatrix<f64> {
    let mut coo = nalgebra_sparse::CooMatrix::new(k.nrows(), k.ncols());
    for (i, j, v) in k.triplet_iter() {
        coo.push(i, j, *v);
    }
    for (i, j, v) in m.triplet_iter() {
        coo.push(i, j, -sigma * v);
    }
    CsrMatrix::from(&coo)
}

/// `M`-orthonormalizes the columns of `x` (two passes of modified Gram–Schmidt).
fn m_orthonormalize(m: &CsrMatrix<f64>, x: &mut DMatrix<f64>) {
    for _ in 0..2 {
        for c in 0..x.ncols() {
            for p in 0..c {
                let mp = mul_vec(m, &x.column(p).into_owned());
                let h = mp.dot(&x.column(c));
                let col = x.column(p).into_owned();
                x.column_mut(c).axpy(-h, &col, 1.0);
            }
            let mc = mul_vec(m, &x.column(c).into_owned());
            let nrm = mc.dot(&x.column(c)).max(f64::MIN_POSITIVE).sqrt();
            x.column_mut(c).scale_mut(1.0 / nrm);
        }
    }
}

/// Lowest `count` eigenpairs by shift-invert subspace iteration.
pub fn sparse_eigenpairs(
    k: &CsrMatrix<f64>,
    m: &CsrMatrix<f64>,
    count: usize,
    seed: u64,
) -> Result<Eigenpairs, SpectralError> {
    let n = k.nrows();
    let count = count.min(n);
    let block = (2 * count).max(count + 8).min(n);
    let perm = rcm_ordering(k);
    let kp = permute(k, &perm);
    let mp = permute(m, &perm);
    if (0..n).any(|i| mp.get_entry(i, i).map(|e| e.into_value()).unwrap_or(0.0) <= 0.0) {
        return Err(SpectralError::MassNotPositiveDefinite);
    }

    let heuristic = SHIFT_FACTOR * trace(&kp) / trace(&mp);
    let (sigma, factor) = match SkylineCholesky::factor(&combine(&kp, &mp, heuristic)) {
        Some(f) => (heuristic, f),
        None => {
            let retry = heuristic * SHIFT_RETRY;
            let f = SkylineCholesky::factor(&combine(&kp, &mp, retry))
                .ok_or(SpectralError::FactorizationFailed { shift: retry })?;
            (retry, f)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.random::<f64>() - 0.5);
    m_orthonormalize(&mp, &mut x);
    let mut values = vec![0.0; block];
    let mut iterations = 0;
    let mut worst = f64::INFINITY;
    // leading Ritz vectors that have converged are kept as they are
    let mut locked = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut y = x.clone();
        for c in locked..block {
            let mut col: Vec<f64> = mul_vec(&mp, &x.column(c).into_owned()).iter().copied().collect();
            factor.solve_in_place(&mut col);
            y.column_mut(c).copy_from_slice(&col);
        }
        m_orthonormalize(&mp, &mut y);
        let ky = mul(&kp, &y);
        let my = mul(&mp, &y);
        let kr = y.transpose() * &ky;
        let mr = y.transpose() * &my;
        let (theta, v) = dense_generalized(&(&kr + kr.transpose()).scale(0.5), &(&mr + mr.transpose()).scale(0.5))?;
        x = &y * &v;
        values = theta;
        let res = residual_norms(&kp, &mp, &values[..count], &x.columns(0, count).into_owned());
        let scale = values[..count].iter().fold(1.0f64, |s, v| s.max(v.abs()));
        worst = res.iter().fold(0.0f64, |a, r| a.max(*r)) / scale;
        locked = res.iter().take_while(|r| **r / scale <= CONVERGENCE_TOL).count();
        if worst <= CONVERGENCE_TOL {
            break;
        }
    }
    if worst > CONVERGENCE_TOL * 1e3 {
        return Err(SpectralError::NotConverged { iterations, residual: worst });
    }
    let mut vectors = DMatrix::zeros(n, count);
    for (new, &old) in perm.iter().enumerate() {
        for c in 0..count {
            vectors[(old, c)] = x[(new, c)];
        }
    }
    Ok(Eigenpairs { values: values[..count].to_vec(), vectors, shift: Some(sigma), iterations })
}
