//! Weighted multigraph kernels used by the big-M strategies.
//!
//! Vertices are bus ids and edges carry line ids; parallel edges are
//! distinct. Every path or bound routine accepts an optional excluded edge,
//! which is how a line's own edge is kept out of its own bound.

mod bounds;
mod decompose;
mod paths;

pub use bounds::{greedy_bound_moulin, top_k_weight_sum};
pub use decompose::{prune_leaf_edges, split_at_cut_vertices, Decomposition};
pub use paths::{longest_simple_path_bruteforce, shortest_path_weight, DEFAULT_BRUTEFORCE_BUDGET};

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::{OtsError, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(rename = "edge_id")]
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    /// Nonnegative weight, radians when built from a network.
    pub weight: f64,
}

impl Edge {
    pub fn new(id: EdgeId, u: VertexId, v: VertexId, weight: f64) -> Self {
        Edge { id, u, v, weight }
    }

    /// The endpoint opposite to `x`.
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMultigraph {
    vertices: BTreeSet<VertexId>,
    edges: Vec<Edge>,
    edge_pos: BTreeMap<EdgeId, usize>,
}

impl WeightedMultigraph {
    pub fn new(vertices: impl IntoIterator<Item = VertexId>, edges: Vec<Edge>) -> Result<Self> {
        let vertices: BTreeSet<_> = vertices.into_iter().collect();
        let mut edge_pos = BTreeMap::new();
        for (pos, e) in edges.iter().enumerate() {
            let name = format!("edge {}", e.id);
            if edge_pos.insert(e.id, pos).is_some() {
                return Err(OtsError::invalid(name, "duplicate edge id"));
            }
            if e.u == e.v {
                return Err(OtsError::invalid(name, "self-loop"));
            }
            for x in [e.u, e.v] {
                if !vertices.contains(&x) {
                    return Err(OtsError::invalid(name, format!("endpoint {x} is not a vertex")));
                }
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(OtsError::invalid(name, format!("weight must be finite and nonnegative, got {}", e.weight)));
            }
        }
        Ok(WeightedMultigraph {
            vertices,
            edges,
            edge_pos,
        })
    }

    /// Graph whose vertex set is exactly the edge endpoints.
    pub fn from_edges(edges: Vec<Edge>) -> Result<Self> {
        let vertices: Vec<_> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        Self::new(vertices, edges)
    }

    pub fn vertices(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edge_pos.get(&id).map(|&p| &self.edges[p])
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().map(|e| e.id)
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Subgraph on the given edges; its vertices are their endpoints.
    pub fn edge_subgraph(&self, ids: impl IntoIterator<Item = EdgeId>) -> WeightedMultigraph {
        let edges: Vec<Edge> = ids.into_iter().filter_map(|id| self.edge(id).copied()).collect();
        Self::from_edges(edges).expect("subgraph of a valid graph is valid")
    }

    /// True when every vertex is reachable from every other one.
    pub fn is_connected(&self) -> bool {
        spans(&self.vertices, self.edges.iter())
    }

    /// Minimum-weight spanning forest (ties broken by edge id).
    pub fn minimum_spanning_tree(&self) -> BTreeSet<EdgeId> {
        let index: BTreeMap<VertexId, usize> = self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut order: Vec<&Edge> = self.edges.iter().collect();
        order.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.id.cmp(&b.id)));
        let mut uf = UnionFind::new(self.vertices.len());
        order
            .into_iter()
            .filter(|e| uf.union(index[&e.u], index[&e.v]))
            .map(|e| e.id)
            .collect()
    }

    pub(crate) fn indexed(&self) -> Indexed {
        Indexed::new(self)
    }

    /// Writes the `edge_id,u,v,weight` debug dump.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        for e in &self.edges {
            csv.serialize(e)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Reads an `edge_id,u,v,weight` dump; vertices are the endpoints.
    pub fn read_edge_list<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::Reader::from_reader(reader);
        let edges = csv.deserialize().collect::<std::result::Result<Vec<Edge>, _>>()?;
        Self::from_edges(edges)
    }
}

/// True when `edges` connect all of `vertices` (edges leaving the set are ignored).
pub fn spans<'a>(vertices: &BTreeSet<VertexId>, edges: impl IntoIterator<Item = &'a Edge>) -> bool {
    if vertices.len() <= 1 {
        return true;
    }
    let index: BTreeMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(vertices.len());
    let mut merges = 0;
    for e in edges {
        if let (Some(&a), Some(&b)) = (index.get(&e.u), index.get(&e.v)) {
            if uf.union(a, b) {
                merges += 1;
            }
        }
    }
    merges + 1 == vertices.len()
}

/// Dense re-indexing used by the traversal routines.
pub(crate) struct Indexed {
    pub ids: Vec<VertexId>,
    pub pos: BTreeMap<VertexId, usize>,
    /// Per vertex: (edge position, neighbour index).
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl Indexed {
    fn new(g: &WeightedMultigraph) -> Self {
        let ids: Vec<VertexId> = g.vertices.iter().copied().collect();
        let pos: BTreeMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (p, e) in g.edges.iter().enumerate() {
            let (a, b) = (pos[&e.u], pos[&e.v]);
            adj[a].push((p, b));
            adj[b].push((p, a));
        }
        Indexed { ids, pos, adj }
    }

    pub fn index_of(&self, v: VertexId) -> Result<usize> {
        self.pos.get(&v).copied().ok_or(OtsError::UnknownVertex(v))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Counterexample graph for the greedy bound (5 vertices, 6 edges).
    pub fn counterexample() -> WeightedMultigraph {
        WeightedMultigraph::from_edges(vec![
            Edge::new(1, 4, 5, 10.0),
            Edge::new(2, 5, 2, 50.0),
            Edge::new(3, 3, 2, 30.0),
            Edge::new(4, 3, 1, 32.0),
            Edge::new(5, 4, 1, 50.0),
            Edge::new(6, 1, 2, 20.0),
        ])
        .unwrap()
    }

    /// 12-vertex, 17-edge graph with leaves, a cut vertex and parallel edges.
    pub fn twelve_vertex() -> WeightedMultigraph {
        WeightedMultigraph::from_edges(twelve_vertex_edges()).unwrap()
    }

    pub fn twelve_vertex_edges() -> Vec<Edge> {
        vec![
            Edge::new(1, 1, 2, 16.0),
            Edge::new(2, 4, 1, 32.0),
            Edge::new(3, 3, 1, 17.0),
            Edge::new(4, 4, 2, 16.0),
            Edge::new(5, 4, 5, 25.0),
            Edge::new(6, 4, 6, 25.0),
            Edge::new(7, 5, 6, 19.0),
            Edge::new(8, 3, 5, 17.0),
            Edge::new(9, 3, 6, 26.0),
            Edge::new(10, 4, 7, 60.0),
            Edge::new(11, 3, 10, 16.0),
            Edge::new(12, 10, 9, 10.0),
            Edge::new(13, 8, 9, 35.0),
            Edge::new(14, 3, 8, 50.0),
            Edge::new(15, 5, 11, 9.0),
            Edge::new(16, 11, 12, 12.0),
            Edge::new(17, 8, 9, 17.0),
        ]
    }

    /// Left block of the pruned twelve-vertex graph (edges 1..=9 on n1..n6).
    pub fn left_block() -> WeightedMultigraph {
        WeightedMultigraph::from_edges(twelve_vertex_edges().into_iter().filter(|e| e.id <= 9).collect()).unwrap()
    }
}
