//! Finite-element spectra of `L_A` on catalog meshes.
//!
//! Eigenvalues follow the convention `L_A u = −λu`, so they are nonnegative.
//! The weak form is `∫⟨A∇u, ∇v⟩ = λ∫uv`, discretized with P1 elements and
//! one centroid evaluation of `A` per triangle.

pub mod assembly;
pub mod diameter;
pub mod mesh;
pub mod solver;

use nalgebra::{DMatrix, DVector, Matrix2};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{ChartManifold, EndomorphismField, GeometryError};
use crate::jets::EvalError;
use crate::zoo::{BoundaryCondition, Topology};

pub use assembly::{assemble, assemble_mass, assemble_stiffness, identity_coefficients, triangle_coefficients};
pub use diameter::mesh_diameter;
pub use mesh::{build_mesh, TriMesh};

/// Largest system the solver switches to the dense path for on its own.
pub const DENSE_AUTO_LIMIT: usize = 300;
/// Eigenvalues at most this multiple of `‖K‖∞` count as zero modes.
pub const ZERO_MODE_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("coefficient of triangle {triangle} is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetricCoefficient { triangle: usize, asymmetry: f64 },
    #[error("chart 0 of `{0}` has no embedding to mesh against")]
    NoEmbedding(String),
    #[error("centroid of triangle {triangle} could not be located in chart 0")]
    Unlocatable { triangle: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("mass matrix is not positive definite")]
    MassNotPositiveDefinite,
    #[error("factorization of K − σM failed at shift {shift:e} (after one retry)")]
    FactorizationFailed { shift: f64 },
    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("mesh is disconnected: reached {reached} of {vertices} vertices")]
    DisconnectedMesh { reached: usize, vertices: usize },
    #[error("boundary condition {bc} does not apply to this topology")]
    BoundaryConditionMismatch { bc: BoundaryCondition },
    #[error("no positive eigenvalue among the {0} computed")]
    NoPositiveEigenvalue(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenOptions {
    pub count: usize,
    pub dense: bool,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { count: 6, dense: false, seed: 0 }
    }
}

/// Lowest eigenpairs of an assembled pencil.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub bc: BoundaryCondition,
    /// Ascending, including any zero modes.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors over all mesh vertices (zero on Dirichlet nodes).
    pub eigenvectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub zero_threshold: f64,
    pub unknowns: usize,
    pub solver: SolverKind,
    pub shift: Option<f64>,
    pub iterations: usize,
}

impl EigenResult {
    /// Index of the first eigenvalue counted as `λ₁`.
    pub fn lambda1_index(&self) -> Option<usize> {
        match self.bc {
            BoundaryCondition::Dirichlet => (!self.eigenvalues.is_empty()).then_some(0),
            _ => self.eigenvalues.iter().position(|v| *v > self.zero_threshold),
        }
    }

    pub fn lambda1(&self) -> Option<f64> {
        self.lambda1_index().map(|i| self.eigenvalues[i])
    }

    pub fn zero_modes(&self) -> usize {
        self.lambda1_index().unwrap_or(self.eigenvalues.len())
    }

    /// Number of computed eigenvalues within relative distance `rel_tol` of `λ₁`.
    pub fn cluster_multiplicity(&self, rel_tol: f64) -> usize {
        let Some(i) = self.lambda1_index() else { return 0 };
        let l1 = self.eigenvalues[i];
        self.eigenvalues[i..].iter().filter(|v| (*v - l1).abs() <= rel_tol * l1).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(*r))
    }
}

fn restrict(a: &CsrMatrix<f64>, keep: &[usize]) -> CsrMatrix<f64> {
    let mut map = vec![usize::MAX; a.nrows()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let mut coo = CooMatrix::new(keep.len(), keep.len());
    for (i, j, v) in a.triplet_iter() {
        if map[i] != usize::MAX && map[j] != usize::MAX {
            coo.push(map[i], map[j], *v);
        }
    }
    CsrMatrix::from(&coo)
}

/// Lowest `opts.count` eigenpairs of `K x = λ M x`; Dirichlet nodes (marked
/// in `boundary`) are eliminated when `bc` is Dirichlet.
pub fn lowest_eigenpairs(
    k: &CsrMatrix<f64>,
    m: &CsrMatrix<f64>,
    boundary: &[bool],
    bc: BoundaryCondition,
    opts: &EigenOptions,
) -> Result<EigenResult, SpectralError> {
    let n = k.nrows();
    let free: Vec<usize> = match bc {
        BoundaryCondition::Dirichlet => (0..n).filter(|&i| !boundary[i]).collect(),
        _ => (0..n).collect(),
    };
    let (kr, mr) = if free.len() == n { (k.clone(), m.clone()) } else { (restrict(k, &free), restrict(m, &free)) };
    let unknowns = free.len();
    let (pairs, solver) = if opts.dense || unknowns <= DENSE_AUTO_LIMIT {
        (solver::dense_eigenpairs(&kr, &mr, opts.count)?, SolverKind::Dense)
    } else {
        (solver::sparse_eigenpairs(&kr, &mr, opts.count, opts.seed)?, SolverKind::ShiftInvert)
    };
    let residuals = solver::residual_norms(&kr, &mr, &pairs.values, &pairs.vectors);
    let mut vectors = DMatrix::zeros(n, pairs.values.len());
    for (r, &i) in free.iter().enumerate() {
        for c in 0..pairs.values.len() {
            vectors[(i, c)] = pairs.vectors[(r, c)];
        }
    }
    // fix the sign of each eigenvector so that its largest-magnitude entry is positive
    for mut col in vectors.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(EigenResult {
        bc,
        eigenvalues: pairs.values,
        eigenvectors: vectors,
        residuals,
        zero_threshold: ZERO_MODE_FACTOR * solver::inf_norm(&kr),
        unknowns,
        solver,
        shift: pairs.shift,
        iterations: pairs.iterations,
    })
}

/// A mesh with the assembled pencil of `L_A`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: TriMesh,
    pub coefficients: Vec<Matrix2<f64>>,
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
}

impl Discretization {
    pub fn new(
        m: &ChartManifold,
        topology: Topology,
        a: &EndomorphismField,
        level: usize,
    ) -> Result<Discretization, SpectralError> {
        let mesh = build_mesh(topology, level);
        mesh.validate()?;
        let (stiffness, mass, coefficients) = assemble(&mesh, m, a)?;
        Ok(Discretization { mesh, coefficients, stiffness, mass })
    }

    pub fn check_bc(&self, bc: BoundaryCondition) -> Result<(), SpectralError> {
        let has_boundary = self.mesh.boundary.iter().any(|b| *b);
        match (bc, has_boundary) {
            (BoundaryCondition::Closed, false) | (BoundaryCondition::Dirichlet | BoundaryCondition::Neumann, true) => {
                Ok(())
            }
            _ => Err(SpectralError::BoundaryConditionMismatch { bc }),
        }
    }

    pub fn eigen(&self, bc: BoundaryCondition, opts: &EigenOptions) -> Result<EigenResult, SpectralError> {
        self.check_bc(bc)?;
        lowest_eigenpairs(&self.stiffness, &self.mass, &self.mesh.boundary, bc, opts)
    }

    /// Smallest and largest eigenvalue of the per-triangle coefficients.
    pub fn coefficient_bounds(&self) -> (f64, f64) {
        self.coefficients.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let e = c.symmetric_eigenvalues();
            (lo.min(e.min()), hi.max(e.max()))
        })
    }

    /// Discrete form of `λ/δₙ ≤ ∫|∇u|² ≤ λ/δ₁` for every computed positive eigenpair.
    pub fn sandwich(&self, result: &EigenResult) -> Result<Vec<SandwichCheck>, SpectralError> {
        let k_id = assemble_stiffness(&self.mesh, &identity_coefficients(&self.mesh))?;
        let (d1, dn) = self.coefficient_bounds();
        let ones = DVector::from_element(self.mesh.vertex_count(), 1.0);
        let m_ones = solver::mul_vec(&self.mass, &ones);
        let start = result.lambda1_index().unwrap_or(result.eigenvalues.len());
        Ok((start..result.eigenvalues.len())
            .map(|c| {
                let mut u = result.eigenvectors.column(c).into_owned();
                if result.bc != BoundaryCondition::Dirichlet {
                    let mean = m_ones.dot(&u) / m_ones.dot(&ones);
                    u -= &ones * mean;
                }
                let norm2 = solver::mul_vec(&self.mass, &u).dot(&u);
                let grad = solver::mul_vec(&k_id, &u).dot(&u) / norm2;
                let energy = solver::mul_vec(&self.stiffness, &u).dot(&u) / norm2;
                SandwichCheck::new(result.eigenvalues[c], energy, grad, d1, dn)
            })
            .collect())
    }
}

/// One instance of `δ₁∫|∇u|² ≤ λ ≤ δₙ∫|∇u|²`, with `λ` the computed eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub lambda: f64,
    /// `uᵀK_A u` of the normalized eigenvector (equals `λ` up to solver error).
    pub energy: f64,
    pub gradient_energy: f64,
    pub delta1: f64,
    pub deltan: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
}

impl SandwichCheck {
    fn new(lambda: f64, energy: f64, gradient_energy: f64, delta1: f64, deltan: f64) -> SandwichCheck {
        let scale = lambda.abs().max(f64::MIN_POSITIVE);
        SandwichCheck {
            lambda,
            energy,
            gradient_energy,
            delta1,
            deltan,
            lower_slack: (lambda - delta1 * gradient_energy) / scale,
            upper_slack: (deltan * gradient_energy - lambda) / scale,
        }
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lower_slack >= -rel_tol && self.upper_slack >= -rel_tol
    }
}

/// `|λ(L−1) − λ*| / |λ(L) − λ*|` for consecutive levels.
pub fn convergence_ratios(values: &[f64], exact: f64) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] - exact).abs() / (w[1] - exact).abs()).collect()
}
