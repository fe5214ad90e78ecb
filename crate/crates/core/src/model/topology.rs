//! Lattice topologies: chains, hypercubes, and general graphs.
//!
//! Vertices are indexed `0..vertex_count`. Undirected edges are stored with
//! the lower vertex first; that stored orientation is what energies,
//! gradients, and flows use for the pair-difference `q_a − q_b`, so odd pair
//! potentials stay consistent across all observables.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    Chain,
    Hypercube { n_side: usize, dim: usize },
    General,
}

/// One reservoir attachment: `vertex` feels the bath `reservoir` (an index
/// into the config's reservoir list). A vertex may carry several attachments;
/// the single-site chain has both of its baths on vertex 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BathAttachment {
    pub vertex: usize,
    pub reservoir: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeTopology {
    pub vertex_count: usize,
    /// Undirected edges, lower vertex first, sorted and deduplicated.
    pub edges: Vec<(usize, usize)>,
    /// Boundary: which vertices feel which reservoir.
    pub boundary: Vec<BathAttachment>,
    pub kind: TopologyKind,
    /// Whether the interaction graph is connected. Disconnected graphs are
    /// accepted (each component evolves independently) but flagged.
    pub connected: bool,
}

impl LatticeTopology {
    /// Chain of `n` vertices with edges `(i, i+1)` and boundary `{0, n−1}`.
    /// For `n = 1` both reservoirs attach to the single vertex.
    pub fn chain(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidTopology(
                "chain needs at least one vertex".into(),
            ));
        }
        let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        let boundary = vec![
            BathAttachment { vertex: 0, reservoir: 0 },
            BathAttachment { vertex: n - 1, reservoir: 1 },
        ];
        Ok(Self {
            vertex_count: n,
            edges,
            boundary,
            kind: TopologyKind::Chain,
            connected: true,
        })
    }

    /// Hypercube `{i ∈ Z^dim : |i|_∞ ≤ n_side}` with nearest-neighbor edges.
    /// Reservoir 0 attaches to every vertex on the face `i_1 = −n_side` and
    /// reservoir 1 to the face `i_1 = +n_side`.
    pub fn hypercube(n_side: usize, dim: usize, vertex_cap: usize) -> Result<Self, ModelError> {
        if n_side == 0 || dim == 0 {
            return Err(ModelError::InvalidTopology(
                "hypercube needs n_side >= 1 and dim >= 1".into(),
            ));
        }
        let side = 2 * n_side + 1;
        let mut count: usize = 1;
        for _ in 0..dim {
            count = count
                .checked_mul(side)
                .filter(|&c| c <= vertex_cap)
                .ok_or(ModelError::VertexCountCap { cap: vertex_cap })?;
        }

        let mut edges = Vec::new();
        for v in 0..count {
            let coords = hypercube_coords(v, side, dim);
            for axis in 0..dim {
                if coords[axis] + 1 < side as i64 {
                    let mut neigh = coords.clone();
                    neigh[axis] += 1;
                    let w = hypercube_index(&neigh, side);
                    edges.push((v.min(w), v.max(w)));
                }
            }
        }
        edges.sort_unstable();

        let mut boundary = Vec::new();
        for v in 0..count {
            let coords = hypercube_coords(v, side, dim);
            if coords[0] == 0 {
                boundary.push(BathAttachment { vertex: v, reservoir: 0 });
            } else if coords[0] == side as i64 - 1 {
                boundary.push(BathAttachment { vertex: v, reservoir: 1 });
            }
        }

        Ok(Self {
            vertex_count: count,
            edges,
            boundary,
            kind: TopologyKind::Hypercube { n_side, dim },
            connected: true,
        })
    }

    /// General graph from an explicit edge list. `boundary` lists the
    /// reservoir attachments; connectivity is computed, not required.
    pub fn general(
        vertex_count: usize,
        edges: &[(usize, usize)],
        boundary: Vec<BathAttachment>,
    ) -> Result<Self, ModelError> {
        if vertex_count == 0 {
            return Err(ModelError::InvalidTopology("empty vertex set".into()));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(ModelError::InvalidTopology(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if a == b {
                return Err(ModelError::InvalidTopology(format!("self-loop at vertex {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(ModelError::InvalidTopology("duplicate edges".into()));
        }
        if boundary.is_empty() {
            return Err(ModelError::InvalidTopology(
                "at least one reservoir attachment is required".into(),
            ));
        }
        for att in &boundary {
            if att.vertex >= vertex_count {
                return Err(ModelError::InvalidTopology(format!(
                    "boundary vertex {} outside 0..{vertex_count}",
                    att.vertex
                )));
            }
        }
        let connected = is_connected(vertex_count, &norm);
        Ok(Self {
            vertex_count,
            edges: norm,
            boundary,
            kind: TopologyKind::General,
            connected,
        })
    }

    /// Coordinates of a hypercube vertex, each in `[-n_side, n_side]`;
    /// errors for non-hypercube topologies.
    pub fn hypercube_coordinates(&self, vertex: usize) -> Result<Vec<i64>, ModelError> {
        match self.kind {
            TopologyKind::Hypercube { n_side, dim } => {
                let side = 2 * n_side + 1;
                Ok(hypercube_coords(vertex, side, dim)
                    .into_iter()
                    .map(|c| c - n_side as i64)
                    .collect())
            }
            _ => Err(ModelError::UnsupportedTopology(
                "hypercube coordinates requested for a non-hypercube topology".into(),
            )),
        }
    }
}

/// Row-major decode with axis 0 most significant, so the index increases
/// with the first coordinate and stored edge orientation points from the
/// `i_1 = k` plane toward `i_1 = k+1`.
fn hypercube_coords(index: usize, side: usize, dim: usize) -> Vec<i64> {
    let mut rem = index;
    let mut coords = vec![0i64; dim];
    for axis in (0..dim).rev() {
        coords[axis] = (rem % side) as i64;
        rem /= side;
    }
    coords
}

fn hypercube_index(coords: &[i64], side: usize) -> usize {
    let mut idx = 0usize;
    for &c in coords {
        idx = idx * side + c as usize;
    }
    idx
}

fn is_connected(vertex_count: usize, edges: &[(usize, usize)]) -> bool {
    if vertex_count <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); vertex_count];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; vertex_count];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 1usize;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                visited += 1;
                stack.push(w);
            }
        }
    }
    visited == vertex_count
}
