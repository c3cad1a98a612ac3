//! Triangle meshes for the catalog topologies.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use crate::zoo::Topology;

use super::SpectralError;

/// Smallest admissible triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// A triangulated surface. On the flat torus, positions are chart
/// coordinates and displacements are taken modulo `period`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub topology: Topology,
    pub level: usize,
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub period: Option<[f64; 2]>,
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scaled(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

impl TriMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// `positions[j] − positions[i]`, using the shortest periodic image.
    pub fn displacement(&self, i: usize, j: usize) -> [f64; 3] {
        let mut d = sub(&self.positions[j], &self.positions[i]);
        if let Some(p) = self.period {
            d[0] = wrap(d[0], p[0]);
            d[1] = wrap(d[1], p[1]);
        }
        d
    }

    /// Edge vectors `(p1 − p0, p2 − p0)` of triangle `t`.
    pub fn edge_vectors(&self, t: usize) -> ([f64; 3], [f64; 3]) {
        let [a, b, c] = self.triangles[t];
        (self.displacement(a, b), self.displacement(a, c))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let (e1, e2) = self.edge_vectors(t);
        let n = cross(&e1, &e2);
        0.5 * dot(&n, &n).sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges().len() as i64 + self.triangle_count() as i64
    }

    /// Edges that belong to exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect()
    }

    /// Number of closed boundary loops, or `None` when the boundary edges do
    /// not form disjoint closed loops matching the boundary marks.
    pub fn boundary_loops(&self) -> Option<usize> {
        let edges = self.boundary_edges();
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for (a, b) in &edges {
            adj.entry(*a).or_default().push(*b);
            adj.entry(*b).or_default().push(*a);
        }
        if adj.values().any(|v| v.len() != 2) {
            return None;
        }
        let marked: BTreeSet<usize> = (0..self.vertex_count()).filter(|&v| self.boundary[v]).collect();
        let on_edges: BTreeSet<usize> = adj.keys().copied().collect();
        if marked != on_edges {
            return None;
        }
        let mut seen = BTreeSet::new();
        let mut loops = 0;
        for &start in &on_edges {
            if !seen.insert(start) {
                continue;
            }
            loops += 1;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[&v] {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
        }
        Some(loops)
    }

    /// Centroid of triangle `t`, moved onto the smooth surface.
    pub fn centroid(&self, t: usize) -> [f64; 3] {
        let [a, _, _] = self.triangles[t];
        let (e1, e2) = self.edge_vectors(t);
        let p = self.positions[a];
        let c = [p[0] + (e1[0] + e2[0]) / 3.0, p[1] + (e1[1] + e2[1]) / 3.0, p[2] + (e1[2] + e2[2]) / 3.0];
        self.project(&c)
    }

    /// Nearest point of the smooth surface (radial projection on spheres).
    pub fn project(&self, x: &[f64; 3]) -> [f64; 3] {
        match self.topology {
            Topology::Sphere { radius } | Topology::Hemisphere { radius } => {
                scaled(x, radius / dot(x, x).sqrt())
            }
            _ => *x,
        }
    }

    /// Length of the surface geodesic segment between two nearby vertices.
    pub fn segment_length(&self, i: usize, j: usize) -> f64 {
        match self.topology {
            Topology::Sphere { radius } | Topology::Hemisphere { radius } => {
                let (a, b) = (&self.positions[i], &self.positions[j]);
                let c = (dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())).clamp(-1.0, 1.0);
                radius * c.acos()
            }
            _ => {
                let d = self.displacement(i, j);
                dot(&d, &d).sqrt()
            }
        }
    }

    /// Checks the mesh invariants: triangle areas, Euler characteristic and boundary loops.
    pub fn validate(&self) -> Result<(), SpectralError> {
        for t in 0..self.triangle_count() {
            let area = self.triangle_area(t);
            if area.is_nan() || area <= MIN_TRIANGLE_AREA {
                return Err(SpectralError::DegenerateTriangle { triangle: t, area });
            }
        }
        let chi = self.euler_characteristic();
        if chi != self.topology.euler_characteristic() {
            return Err(SpectralError::InvalidMesh(format!(
                "Euler characteristic {chi}, expected {}",
                self.topology.euler_characteristic()
            )));
        }
        let loops = self.boundary_loops();
        let expected = if self.topology.has_boundary() || self.topology == Topology::Plane { 1 } else { 0 };
        if loops != Some(expected) {
            return Err(SpectralError::InvalidMesh(format!("boundary loops {loops:?}, expected {expected}")));
        }
        Ok(())
    }
}

/// Builds the mesh of a catalog topology at refinement level `level`.
pub fn build_mesh(topology: Topology, level: usize) -> TriMesh {
    match topology {
        Topology::Sphere { radius } => icosphere(radius, level),
        Topology::Torus => torus_grid(level),
        Topology::Disk => polar_rings(topology, level, |k, nr| (k as f64 / nr as f64, 0.0)),
        Topology::Hemisphere { radius } => polar_rings(topology, level, move |k, nr| {
            let th = 0.5 * PI * k as f64 / nr as f64;
            (radius * th.sin(), radius * th.cos())
        }),
        Topology::Plane => square_grid(level),
    }
}

/// Icosahedron refined `level` times by edge midpoints, projected to radius `r`.
fn icosphere(r: f64, level: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |p: [f64; 3]| scaled(&p, 1.0 / dot(&p, &p).sqrt());
    pos = pos.into_iter().map(unit).collect();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for tri in &tris {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let (pa, pb) = (pos[a], pos[b]);
                    pos.push(unit([pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]]));
                    pos.len() - 1
                });
            }
            next.push([tri[0], m[0], m[2]]);
            next.push([tri[1], m[1], m[0]]);
            next.push([tri[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        tris = next;
    }
    let n = pos.len();
    TriMesh {
        topology: Topology::Sphere { radius: r },
        level,
        positions: pos.into_iter().map(|p| scaled(&p, r)).collect(),
        triangles: tris,
        boundary: vec![false; n],
        period: None,
    }
}

/// Periodic `2^(L+3) × 2^(L+3)` grid on `[0, 2π)²`, each cell split along its main diagonal.
fn torus_grid(level: usize) -> TriMesh {
    let n = 1usize << (level + 3);
    let h = 2.0 * PI / n as f64;
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut positions = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            positions.push([h * i as f64, h * j as f64, 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh {
        topology: Topology::Torus,
        level,
        positions,
        triangles,
        boundary: vec![false; n * n],
        period: Some([2.0 * PI, 2.0 * PI]),
    }
}

/// Concentric rings around a center vertex: ring `k` (of `N = 2^(L+2)`) has
/// `6k` vertices; `profile(k, N)` gives its radius in the xy-plane and height.
fn polar_rings(topology: Topology, level: usize, profile: impl Fn(usize, usize) -> (f64, f64)) -> TriMesh {
    let nr = 1usize << (level + 2);
    let (_, z0) = profile(0, nr);
    let mut positions = vec![[0.0, 0.0, z0]];
    let mut start = vec![0usize];
    for k in 1..=nr {
        start.push(positions.len());
        let (rho, z) = profile(k, nr);
        for m in 0..6 * k {
            let a = 2.0 * PI * m as f64 / (6 * k) as f64;
            positions.push([rho * a.cos(), rho * a.sin(), z]);
        }
    }
    let mut triangles = Vec::new();
    for m in 0..6 {
        triangles.push([0, 1 + m, 1 + (m + 1) % 6]);
    }
    for k in 1..nr {
        let (ni, no) = (6 * k, 6 * (k + 1));
        let inner = |i: usize| start[k] + i % ni;
        let outer = |o: usize| start[k + 1] + o % no;
        let (mut i, mut o) = (0, 0);
        while i < ni || o < no {
            // advance whichever ring has the smaller next angle
            if o == no || (i < ni && (i + 1) * no < (o + 1) * ni) {
                triangles.push([inner(i), outer(o), inner(i + 1)]);
                i += 1;
            } else {
                triangles.push([inner(i), outer(o), outer(o + 1)]);
                o += 1;
            }
        }
    }
    let n = positions.len();
    let mut boundary = vec![false; n];
    boundary[start[nr]..].iter_mut().for_each(|b| *b = true);
    TriMesh { topology, level, positions, triangles, boundary, period: None }
}

/// `[-1, 1]²` split into `2^(L+3)` cells per side.
fn square_grid(level: usize) -> TriMesh {
    let n = 1usize << (level + 3);
    let h = 2.0 / n as f64;
    let id = |i: usize, j: usize| i * (n + 1) + j;
    let mut positions = Vec::new();
    let mut boundary = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            positions.push([-1.0 + h * i as f64, -1.0 + h * j as f64, 0.0]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n {
        for j in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh { topology: Topology::Plane, level, positions, triangles, boundary, period: None }
}
