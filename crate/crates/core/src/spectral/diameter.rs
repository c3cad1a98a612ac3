//! Graph-metric diameter estimates.

use std::collections::BTreeSet;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::mesh::TriMesh;
use super::SpectralError;

/// Number of farthest-point seeds.
pub const DIAMETER_SEEDS: usize = 8;
/// Neighborhood depth of the shortcut edges.
pub const SHORTCUT_RINGS: usize = 3;

/// Graph on the mesh vertices in which every vertex is joined to its
/// `rings`-ring neighborhood by an edge of surface-geodesic length, so path
/// lengths never undershoot the geodesic distance.
pub fn shortcut_graph(mesh: &TriMesh, rings: usize) -> UnGraph<(), f64> {
    let n = mesh.vertex_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in mesh.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut g = UnGraph::<(), f64>::with_capacity(n, n * 20);
    for _ in 0..n {
        g.add_node(());
    }
    for v in 0..n {
        let mut seen = BTreeSet::from([v]);
        let mut frontier = vec![v];
        for _ in 0..rings.max(1) {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &adj[u] {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        for &w in seen.iter().filter(|&&w| w > v) {
            g.add_edge(NodeIndex::new(v), NodeIndex::new(w), mesh.segment_length(v, w));
        }
    }
    g
}

/// Largest graph distance found from `DIAMETER_SEEDS` farthest-point seeds.
pub fn mesh_diameter(mesh: &TriMesh) -> Result<f64, SpectralError> {
    let n = mesh.vertex_count();
    let g = shortcut_graph(mesh, SHORTCUT_RINGS);
    let mut nearest_seed = vec![f64::INFINITY; n];
    let mut seed = 0usize;
    let mut best = 0.0f64;
    for _ in 0..DIAMETER_SEEDS.min(n) {
        let dist = dijkstra(&g, NodeIndex::new(seed), None, |e| *e.weight());
        if dist.len() != n {
            return Err(SpectralError::DisconnectedMesh { reached: dist.len(), vertices: n });
        }
        for (node, d) in &dist {
            let i = node.index();
            best = best.max(*d);
            nearest_seed[i] = nearest_seed[i].min(*d);
        }
        seed = (0..n).max_by(|&a, &b| nearest_seed[a].total_cmp(&nearest_seed[b]).then(b.cmp(&a))).unwrap_or(0);
    }
    Ok(best)
}
