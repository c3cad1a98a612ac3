//! Catalog of manifolds, tensor fields and test functions with closed-form
//! ground truth.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    BoundarySpec, Chart, ChartManifold, EndomorphismField, FieldRole, ScalarJetField, StructureFlags,
};
use crate::jets::ChartFn;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZooError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("entry `{entry}` has no field `{field}`")]
    UnknownField { entry: String, field: String },
    #[error("entry `{entry}` has no test function `{function}`")]
    UnknownFunction { entry: String, function: String },
    #[error("invalid parameter in `{0}`")]
    BadParameter(String),
}

/// Boundary condition of an eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Closed,
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCondition::Closed => "closed",
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }

    pub fn parse(s: &str) -> Option<BoundaryCondition> {
        match s {
            "closed" => Some(BoundaryCondition::Closed),
            "dirichlet" => Some(BoundaryCondition::Dirichlet),
            "neumann" => Some(BoundaryCondition::Neumann),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape of the underlying space, used by the mesher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    Sphere { radius: f64 },
    Torus,
    Disk,
    Hemisphere { radius: f64 },
    Plane,
}

impl Topology {
    pub fn has_boundary(&self) -> bool {
        matches!(self, Topology::Disk | Topology::Hemisphere { .. })
    }

    pub fn euler_characteristic(&self) -> i64 {
        match self {
            Topology::Sphere { .. } => 2,
            Topology::Torus => 0,
            Topology::Disk | Topology::Hemisphere { .. } | Topology::Plane => 1,
        }
    }
}

/// A known first positive eigenvalue of `L_A` (convention `L_A u = −λu`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFact {
    pub bc: BoundaryCondition,
    pub lambda1: f64,
    pub multiplicity: usize,
    pub provenance: &'static str,
}

/// Closed forms for `Ric_A` available on an entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RicClosedForm {
    /// `Ric_A(X, Y) = c (Trace(A) ⟨X, Y⟩ − ⟨AX, Y⟩)`.
    SpaceForm { c: f64 },
}

#[derive(Debug, Clone)]
pub struct FieldEntry {
    pub field: EndomorphismField,
    pub spectra: Vec<SpectralFact>,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub manifold: ChartManifold,
    pub topology: Topology,
    pub fields: Vec<FieldEntry>,
    pub functions: Vec<ScalarJetField>,
    pub ric_closed_form: Option<RicClosedForm>,
    pub diameter_provenance: &'static str,
}

impl CatalogEntry {
    pub fn field(&self, name: &str) -> Result<&FieldEntry, ZooError> {
        let key = normalize(name);
        self.fields.iter().find(|f| normalize(&f.field.name) == key).ok_or_else(|| ZooError::UnknownField {
            entry: self.id.clone(),
            field: name.to_string(),
        })
    }

    pub fn function(&self, name: &str) -> Result<&ScalarJetField, ZooError> {
        let key = normalize(name);
        self.functions.iter().find(|u| normalize(&u.name) == key).ok_or_else(|| ZooError::UnknownFunction {
            entry: self.id.clone(),
            function: name.to_string(),
        })
    }

    /// Adds `A = αI` on demand so that any positive scalar multiple is addressable.
    fn ensure_scalar_field(&mut self, alpha: f64) {
        let name = scalar_name(alpha);
        if self.fields.iter().any(|f| f.field.name == name) {
            return;
        }
        let field = scalar_field(self.manifold.dim(), alpha);
        let spectra = scalar_spectra(&self.topology, alpha);
        self.fields.push(FieldEntry { field, spectra });
    }
}

/// Known first positive eigenvalue of `L_A` for a field and boundary condition.
pub fn analytic_lambda1(entry: &CatalogEntry, field: &str, bc: BoundaryCondition) -> Option<f64> {
    entry.field(field).ok()?.spectra.iter().find(|s| s.bc == bc).map(|s| s.lambda1)
}

/// Ids of all registered base entries.
pub const ENTRY_IDS: [&str; 6] = ["sphere_unit", "sphere_r", "torus_2pi", "disk_unit", "hemisphere_unit", "plane"];

const SPHERE_R_DEFAULT: f64 = 2.0;

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .replace('³', "^3")
        .replace('²', "^2")
        .replace('−', "-")
        .replace('·', "*")
        .replace('θ', "theta")
}

fn scalar_name(alpha: f64) -> String {
    if alpha == 1.0 {
        "A=Id".into()
    } else {
        format!("A={alpha}I")
    }
}

fn parse_scalar(name: &str) -> Option<f64> {
    let n = normalize(name);
    let body = n.strip_prefix("A=")?;
    if body == "Id" || body == "I" {
        return Some(1.0);
    }
    let a: f64 = body.strip_suffix('I')?.parse().ok()?;
    (a > 0.0 && a.is_finite()).then_some(a)
}

/// Builds a registered entry. Accepts `sphere_r=<radius>` for a parametric sphere.
pub fn instantiate(id: &str) -> Result<CatalogEntry, ZooError> {
    let id = id.trim();
    if let Some(r) = id.strip_prefix("sphere_r=") {
        let r: f64 = r.parse().map_err(|_| ZooError::BadParameter(id.to_string()))?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(ZooError::BadParameter(id.to_string()));
        }
        return Ok(sphere(id, r));
    }
    match id {
        "sphere_unit" => Ok(sphere(id, 1.0)),
        "sphere_r" => Ok(sphere(id, SPHERE_R_DEFAULT)),
        "torus_2pi" => Ok(torus()),
        "disk_unit" => Ok(disk()),
        "hemisphere_unit" => Ok(hemisphere()),
        "plane" => Ok(plane()),
        _ => Err(ZooError::UnknownEntry(id.to_string())),
    }
}

/// Resolves a case id `<entry>/<field>` into the entry and the index of the field.
pub fn resolve_case(case: &str) -> Result<(CatalogEntry, usize), ZooError> {
    let (entry_id, field) = case.split_once('/').ok_or_else(|| ZooError::UnknownEntry(case.to_string()))?;
    let mut entry = instantiate(entry_id)?;
    if entry.field(field).is_err() {
        if let Some(alpha) = parse_scalar(field) {
            entry.ensure_scalar_field(alpha);
        }
    }
    let key = normalize(field);
    let idx = entry
        .fields
        .iter()
        .position(|f| normalize(&f.field.name) == key)
        .or_else(|| {
            let alpha = parse_scalar(field)?;
            entry.fields.iter().position(|f| f.field.name == scalar_name(alpha))
        })
        .ok_or_else(|| ZooError::UnknownField { entry: entry_id.to_string(), field: field.to_string() })?;
    Ok((entry, idx))
}

/// Every registered `(entry, field)` case id.
pub fn all_cases() -> Vec<String> {
    ENTRY_IDS
        .iter()
        .flat_map(|id| {
            let e = instantiate(id).expect("registered entry");
            e.fields.iter().map(|f| format!("{}/{}", id, f.field.name)).collect::<Vec<_>>()
        })
        .collect()
}

/// One tab-separated line per case: id, dim, declared flags, known λ₁ per boundary condition.
pub fn list_lines() -> Vec<String> {
    let mut out = Vec::new();
    for id in ENTRY_IDS {
        let e = instantiate(id).expect("registered entry");
        for f in &e.fields {
            let flags = f.field.declared.names().join(",");
            let lambda = if f.spectra.is_empty() {
                "unknown".to_string()
            } else {
                f.spectra.iter().map(|s| format!("{}:{}", s.bc, s.lambda1)).collect::<Vec<_>>().join(",")
            };
            out.push(format!("{}/{}\t{}\t{}\t{}", id, f.field.name, e.manifold.dim(), flags, lambda));
        }
    }
    out
}

const PARALLEL: StructureFlags = StructureFlags {
    self_adjoint: true,
    positive_semidefinite: true,
    parallel: true,
    codazzi: true,
    divergence_free: true,
    trace_constant: true,
};

const SELF_ADJOINT_ONLY: StructureFlags = StructureFlags {
    self_adjoint: true,
    positive_semidefinite: false,
    parallel: false,
    codazzi: false,
    divergence_free: false,
    trace_constant: false,
};

fn scalar_field(dim: usize, alpha: f64) -> EndomorphismField {
    let mut f = EndomorphismField::scalar(dim, alpha, PARALLEL);
    f.name = scalar_name(alpha);
    f
}

fn scalar_spectra(top: &Topology, alpha: f64) -> Vec<SpectralFact> {
    match *top {
        Topology::Sphere { radius } => vec![SpectralFact {
            bc: BoundaryCondition::Closed,
            lambda1: 2.0 * alpha / (radius * radius),
            multiplicity: 3,
            provenance: "degree-1 spherical harmonics: Δ = −l(l+1)/r², scaled by α",
        }],
        Topology::Hemisphere { radius } => vec![
            SpectralFact {
                bc: BoundaryCondition::Dirichlet,
                lambda1: 2.0 * alpha / (radius * radius),
                multiplicity: 1,
                provenance: "height z vanishes on the equator and Δz = −2z/r²",
            },
            SpectralFact {
                bc: BoundaryCondition::Neumann,
                lambda1: 2.0 * alpha / (radius * radius),
                multiplicity: 2,
                provenance: "x and y have zero normal derivative on the equator",
            },
        ],
        Topology::Torus => vec![constant_torus_fact(&[[alpha, 0.0], [0.0, alpha]])],
        Topology::Disk => vec![
            SpectralFact {
                bc: BoundaryCondition::Dirichlet,
                lambda1: alpha * J0_FIRST_ZERO * J0_FIRST_ZERO,
                multiplicity: 1,
                provenance: "first zero of the Bessel function J0",
            },
            SpectralFact {
                bc: BoundaryCondition::Neumann,
                lambda1: alpha * J1_PRIME_FIRST_ZERO * J1_PRIME_FIRST_ZERO,
                multiplicity: 2,
                provenance: "first zero of J1'",
            },
        ],
        Topology::Plane => Vec::new(),
    }
}

const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
const J1_PRIME_FIRST_ZERO: f64 = 1.841_183_781_340_659_3;

/// Smallest `kᵀ A k` over nonzero integer vectors `k`: the first eigenvalue
/// of `L_A` for constant `A` on the `2π`-periodic torus (Fourier modes).
pub fn torus_constant_lambda1(a: &[[f64; 2]; 2]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut mult = 0;
    for m in -12i32..=12 {
        for n in -12i32..=12 {
            if m == 0 && n == 0 {
                continue;
            }
            let (mf, nf) = (m as f64, n as f64);
            let v = a[0][0] * mf * mf + (a[0][1] + a[1][0]) * mf * nf + a[1][1] * nf * nf;
            if v < best - 1e-12 {
                best = v;
                mult = 1;
            } else if (v - best).abs() <= 1e-12 {
                mult += 1;
            }
        }
    }
    (best, mult)
}

fn constant_torus_fact(a: &[[f64; 2]; 2]) -> SpectralFact {
    let (lambda1, multiplicity) = torus_constant_lambda1(a);
    SpectralFact {
        bc: BoundaryCondition::Closed,
        lambda1,
        multiplicity,
        provenance: "Fourier modes exp(i k·x): λ = kᵀAk minimized over nonzero integer k",
    }
}

fn c(v: f64) -> ChartFn {
    ChartFn::constant(v)
}

fn x0() -> ChartFn {
    ChartFn::coord(0)
}

fn x1() -> ChartFn {
    ChartFn::coord(1)
}

fn diag(a: ChartFn, b: ChartFn) -> Vec<Vec<ChartFn>> {
    vec![vec![a, c(0.0)], vec![c(0.0), b]]
}

fn constant_matrix(m: [[f64; 2]; 2]) -> Vec<Vec<ChartFn>> {
    m.iter().map(|r| r.iter().map(|v| c(*v)).collect()).collect()
}

fn locate_polar_z(x: &[f64; 3]) -> Option<Vec<f64>> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return None;
    }
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
    Some(vec![theta, phi])
}

fn locate_polar_x(x: &[f64; 3]) -> Option<Vec<f64>> {
    locate_polar_z(&[x[1], x[2], x[0]])
}

fn locate_disk_polar(x: &[f64; 3]) -> Option<Vec<f64>> {
    let r = x[0].hypot(x[1]);
    Some(vec![r, x[1].atan2(x[0]).rem_euclid(2.0 * PI)])
}

fn locate_plane(x: &[f64; 3]) -> Option<Vec<f64>> {
    Some(vec![x[0], x[1]])
}

fn locate_torus(x: &[f64; 3]) -> Option<Vec<f64>> {
    Some(vec![x[0].rem_euclid(2.0 * PI), x[1].rem_euclid(2.0 * PI)])
}

/// Unit-sphere coordinate functions `(x, y, z)` of the `(θ, φ)` chart.
fn sphere_xyz() -> [ChartFn; 3] {
    let (th, ph) = (x0(), x1());
    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
}

fn sphere_charts(r: f64, theta_max: f64) -> Vec<Chart> {
    let th = x0();
    let metric = diag(c(r * r), (r * r) * (th.sin() * th.sin()));
    let [x, y, z] = sphere_xyz();
    let primary = Chart {
        lower: vec![0.0, 0.0],
        upper: vec![theta_max, 2.0 * PI],
        periodic: vec![false, true],
        metric: metric.clone(),
        embedding: Some([r * x.clone(), r * y.clone(), r * z.clone()]),
        locate: Some(locate_polar_z),
    };
    // the same spherical coordinates with the pole on the x axis
    let secondary = Chart {
        lower: vec![0.0, 0.0],
        upper: vec![PI, 2.0 * PI],
        periodic: vec![false, true],
        metric,
        embedding: Some([r * z, r * x, r * y]),
        locate: Some(locate_polar_x),
    };
    vec![primary, secondary]
}

fn sphere_functions() -> Vec<ScalarJetField> {
    let [x, y, z] = sphere_xyz();
    vec![
        ScalarJetField::new("z", z.clone(), FieldRole::EigenfunctionCandidate),
        ScalarJetField::new("x*y+z", x.clone() * y.clone() + z.clone(), FieldRole::TestFunction),
        ScalarJetField::new("exp(x/2)+y*z^2", (0.5 * x).exp() + y * z.clone() * z, FieldRole::TestFunction),
        ScalarJetField::new("const", c(0.7), FieldRole::TestFunction),
    ]
}

fn sphere(id: &str, r: f64) -> CatalogEntry {
    let curvature = 1.0 / (r * r);
    let manifold = ChartManifold {
        name: id.to_string(),
        charts: sphere_charts(r, PI),
        known_diameter: Some(PI * r),
        curvature_constant: Some(curvature),
        boundary: None,
    };
    let top = Topology::Sphere { radius: r };
    let mut fields = vec![
        FieldEntry { field: scalar_field(2, 1.0), spectra: scalar_spectra(&top, 1.0) },
        FieldEntry { field: scalar_field(2, 1.5), spectra: scalar_spectra(&top, 1.5) },
        FieldEntry {
            field: EndomorphismField::new(
                "A=diag(2,1)",
                constant_matrix([[2.0, 0.0], [0.0, 1.0]]),
                StructureFlags { positive_semidefinite: true, ..SELF_ADJOINT_ONLY },
            ),
            spectra: Vec::new(),
        },
    ];
    // Hess φ + c φ g is Codazzi on a space form of curvature c
    let [x, _, z] = sphere_xyz();
    let phi = 2.0 + x * z.clone() + 0.25 * (3.0 * z.clone() * z - 1.0);
    let codazzi = EndomorphismField::hessian_plus(
        &manifold,
        &phi,
        curvature,
        "A=Hess(phi)+phi*g",
        StructureFlags { codazzi: true, ..SELF_ADJOINT_ONLY },
    );
    fields.push(FieldEntry { field: codazzi, spectra: Vec::new() });
    CatalogEntry {
        id: id.to_string(),
        manifold,
        topology: top,
        fields,
        functions: sphere_functions(),
        ric_closed_form: Some(RicClosedForm::SpaceForm { c: curvature }),
        diameter_provenance: "antipodal great-circle arc π r",
    }
}

fn hemisphere() -> CatalogEntry {
    let theta_max = PI / 2.0;
    let mut charts = sphere_charts(1.0, theta_max);
    charts.truncate(1);
    let manifold = ChartManifold {
        name: "hemisphere_unit".into(),
        charts,
        known_diameter: Some(PI),
        curvature_constant: Some(1.0),
        boundary: Some(BoundarySpec {
            defining: x0() - theta_max,
            parametrization: vec![c(theta_max), x0()],
            s_range: (0.0, 2.0 * PI),
            periodic: true,
        }),
    };
    let top = Topology::Hemisphere { radius: 1.0 };
    let fields = vec![
        FieldEntry { field: scalar_field(2, 1.0), spectra: scalar_spectra(&top, 1.0) },
        FieldEntry { field: scalar_field(2, 1.5), spectra: scalar_spectra(&top, 1.5) },
    ];
    let [x, y, z] = sphere_xyz();
    let functions = vec![
        ScalarJetField::new("z", z.clone(), FieldRole::EigenfunctionCandidate),
        ScalarJetField::new("x", x.clone(), FieldRole::EigenfunctionCandidate),
        ScalarJetField::new("x*y+z", x * y + z, FieldRole::TestFunction),
        ScalarJetField::new("const", c(0.7), FieldRole::TestFunction),
    ];
    CatalogEntry {
        id: "hemisphere_unit".into(),
        manifold,
        topology: top,
        fields,
        functions,
        ric_closed_form: Some(RicClosedForm::SpaceForm { c: 1.0 }),
        diameter_provenance: "two antipodal equator points are π apart",
    }
}

fn torus() -> CatalogEntry {
    let chart = Chart {
        lower: vec![0.0, 0.0],
        upper: vec![2.0 * PI, 2.0 * PI],
        periodic: vec![true, true],
        metric: constant_matrix([[1.0, 0.0], [0.0, 1.0]]),
        // developing map of the fundamental domain into the plane z = 0
        embedding: Some([x0(), x1(), c(0.0)]),
        locate: Some(locate_torus),
    };
    let manifold = ChartManifold {
        name: "torus_2pi".into(),
        charts: vec![chart],
        known_diameter: Some(PI * 2f64.sqrt()),
        curvature_constant: Some(0.0),
        boundary: None,
    };
    let top = Topology::Torus;
    let constant = |name: &str, m: [[f64; 2]; 2]| FieldEntry {
        field: EndomorphismField::new(name, constant_matrix(m), PARALLEL),
        spectra: vec![constant_torus_fact(&m)],
    };
    let fields = vec![
        FieldEntry { field: scalar_field(2, 1.0), spectra: scalar_spectra(&top, 1.0) },
        constant("A=diag(2,1)", [[2.0, 0.0], [0.0, 1.0]]),
        constant("A=[[2,0.5],[0.5,1]]", [[2.0, 0.5], [0.5, 1.0]]),
        FieldEntry {
            field: EndomorphismField::new(
                "A=diag(2+sin(y),1)",
                diag(2.0 + x1().sin(), c(1.0)),
                StructureFlags { positive_semidefinite: true, divergence_free: true, ..SELF_ADJOINT_ONLY },
            ),
            spectra: Vec::new(),
        },
    ];
    let (x, y) = (x0(), x1());
    let functions = vec![
        ScalarJetField::new("cos(x)", x.cos(), FieldRole::EigenfunctionCandidate),
        ScalarJetField::new("cos(y)", y.cos(), FieldRole::EigenfunctionCandidate),
        ScalarJetField::new("sin(x)*cos(2y)", x.sin() * (2.0 * y.clone()).cos(), FieldRole::TestFunction),
        ScalarJetField::new("exp(sin(x))*cos(y)", x.sin().exp() * y.cos(), FieldRole::TestFunction),
        ScalarJetField::new("const", c(0.7), FieldRole::TestFunction),
    ];
    CatalogEntry {
        id: "torus_2pi".into(),
        manifold,
        topology: top,
        fields,
        functions,
        ric_closed_form: Some(RicClosedForm::SpaceForm { c: 0.0 }),
        diameter_provenance: "farthest point (π, π) from the origin in the flat metric",
    }
}

fn cartesian_chart(half: f64) -> Chart {
    Chart {
        lower: vec![-half, -half],
        upper: vec![half, half],
        periodic: vec![false, false],
        metric: constant_matrix([[1.0, 0.0], [0.0, 1.0]]),
        embedding: Some([x0(), x1(), c(0.0)]),
        locate: Some(locate_plane),
    }
}

fn disk() -> CatalogEntry {
    let (r, ph) = (x0(), x1());
    let polar = Chart {
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 2.0 * PI],
        periodic: vec![false, true],
        metric: diag(c(1.0), r.clone() * r.clone()),
        embedding: Some([r.clone() * ph.cos(), r.clone() * ph.sin(), c(0.0)]),
        locate: Some(locate_disk_polar),
    };
    let manifold = ChartManifold {
        name: "disk_unit".into(),
        charts: vec![polar, cartesian_chart(1.0)],
        known_diameter: Some(2.0),
        curvature_constant: Some(0.0),
        boundary: Some(BoundarySpec {
            defining: x0() - 1.0,
            parametrization: vec![c(1.0), x0()],
            s_range: (0.0, 2.0 * PI),
            periodic: true,
        }),
    };
    let top = Topology::Disk;
    let x = r.clone() * ph.cos();
    let y = r.clone() * ph.sin();
    let harmonic = x.clone() * x.clone() * x.clone() - 3.0 * x.clone() * y.clone() * y.clone();
    let fields = vec![
        FieldEntry { field: scalar_field(2, 1.0), spectra: scalar_spectra(&top, 1.0) },
        FieldEntry {
            field: EndomorphismField::from_ambient_form(
                &manifold,
                &[x.clone(), y.clone()],
                &[vec![2.0, 0.0], vec![0.0, 1.0]],
                "A=diag(2,1)",
                PARALLEL,
            ),
            spectra: Vec::new(),
        },
        FieldEntry {
            field: EndomorphismField::hessian_plus(
                &manifold,
                &harmonic,
                0.0,
                "A=Hess(x^3-3xy^2)",
                StructureFlags { codazzi: true, divergence_free: true, trace_constant: true, ..SELF_ADJOINT_ONLY },
            ),
            spectra: Vec::new(),
        },
    ];
    let functions = vec![
        ScalarJetField::new("x", x.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x^2", x.clone() * x.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x^2+y^2", r.clone() * r.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x*y+y", x.clone() * y.clone() + y.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x^3-3xy^2", harmonic, FieldRole::TestFunction),
        ScalarJetField::new("const", c(0.7), FieldRole::TestFunction),
    ];
    CatalogEntry {
        id: "disk_unit".into(),
        manifold,
        topology: top,
        fields,
        functions,
        ric_closed_form: Some(RicClosedForm::SpaceForm { c: 0.0 }),
        diameter_provenance: "Euclidean diameter of the unit disk",
    }
}

fn plane() -> CatalogEntry {
    let manifold = ChartManifold {
        name: "plane".into(),
        charts: vec![cartesian_chart(1.0)],
        known_diameter: Some(2.0 * 2f64.sqrt()),
        curvature_constant: Some(0.0),
        boundary: None,
    };
    let (x, y) = (x0(), x1());
    let hess = |f: ChartFn, name: &str, flags| EndomorphismField::hessian_plus(&manifold, &f, 0.0, name, flags);
    let fields = vec![
        FieldEntry { field: scalar_field(2, 1.0), spectra: Vec::new() },
        FieldEntry {
            field: EndomorphismField::new("A=diag(2,1)", constant_matrix([[2.0, 0.0], [0.0, 1.0]]), PARALLEL),
            spectra: Vec::new(),
        },
        FieldEntry {
            field: hess(x.clone() * x.clone() * x.clone(), "A=Hess(x^3)", StructureFlags {
                codazzi: true,
                ..SELF_ADJOINT_ONLY
            }),
            spectra: Vec::new(),
        },
        FieldEntry {
            field: hess(
                x.clone() * x.clone() * x.clone() - 3.0 * x.clone() * y.clone() * y.clone(),
                "A=Hess(x^3-3xy^2)",
                StructureFlags { codazzi: true, divergence_free: true, trace_constant: true, ..SELF_ADJOINT_ONLY },
            ),
            spectra: Vec::new(),
        },
        FieldEntry {
            field: EndomorphismField::new("A=[[y,0],[0,0]]", diag(y.clone(), c(0.0)), SELF_ADJOINT_ONLY),
            spectra: Vec::new(),
        },
    ];
    let functions = vec![
        ScalarJetField::new("x", x.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x^2", x.clone() * x.clone(), FieldRole::TestFunction),
        ScalarJetField::new("x^2+y^2", x.clone() * x.clone() + y.clone() * y.clone(), FieldRole::TestFunction),
        ScalarJetField::new("sin(x)*exp(y)", x.sin() * y.exp(), FieldRole::TestFunction),
        ScalarJetField::new("x^3*y", x.clone() * x.clone() * x * y, FieldRole::TestFunction),
        ScalarJetField::new("const", c(0.7), FieldRole::TestFunction),
    ];
    CatalogEntry {
        id: "plane".into(),
        manifold,
        topology: Topology::Plane,
        fields,
        functions,
        ric_closed_form: Some(RicClosedForm::SpaceForm { c: 0.0 }),
        diameter_provenance: "diagonal of the square [-1,1]²",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases_resolve() {
        let (e, i) = resolve_case("sphere_unit/A=1.5I").unwrap();
        assert_eq!(e.fields[i].field.name, "A=1.5I");
        assert_eq!(analytic_lambda1(&e, "A=1.5I", BoundaryCondition::Closed), Some(3.0));
        let (e, i) = resolve_case("sphere_unit/A=0.5I").unwrap();
        assert_eq!(e.fields[i].field.name, "A=0.5I");
        let (e, i) = resolve_case("disk_unit/A=Hess(x³−3xy²)").unwrap();
        assert_eq!(e.fields[i].field.name, "A=Hess(x^3-3xy^2)");
        assert!(resolve_case("klein_bottle/A=Id").is_err());
        assert!(resolve_case("sphere_unit/A=diag(5,1)").is_err());
    }

    #[test]
    fn torus_fourier_oracle() {
        assert_eq!(torus_constant_lambda1(&[[2.0, 0.0], [0.0, 1.0]]), (1.0, 2));
        let (e, _) = resolve_case("torus_2pi/A=diag(2,1)").unwrap();
        assert_eq!(analytic_lambda1(&e, "A=diag(2,1)", BoundaryCondition::Closed), Some(1.0));
    }

    #[test]
    fn hemisphere_dirichlet_is_two_alpha() {
        let (e, _) = resolve_case("hemisphere_unit/A=1.5I").unwrap();
        assert_eq!(analytic_lambda1(&e, "A=1.5I", BoundaryCondition::Dirichlet), Some(3.0));
    }

    #[test]
    fn parametric_sphere() {
        let e = instantiate("sphere_r=3").unwrap();
        assert_eq!(e.manifold.known_diameter, Some(3.0 * PI));
        assert!(instantiate("sphere_r=-1").is_err());
    }

    #[test]
    fn listing_has_one_line_per_case() {
        let lines = list_lines();
        assert_eq!(lines.len(), all_cases().len());
        assert!(lines.iter().all(|l| l.split('\t').count() == 4));
    }
}
