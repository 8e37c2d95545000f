use std::collections::{BTreeMap, BTreeSet};

use super::{EdgeId, VertexId, WeightedMultigraph};
use crate::{OtsError, Result};

/// Iteratively removes edges incident to a degree-1 vertex until none is left.
///
/// Degree counts incident edges, so a vertex joined to a single neighbour by
/// two parallel lines is not a leaf. Returns the remaining graph (isolated
/// vertices dropped) and the removed edge ids in removal order.
pub fn prune_leaf_edges(g: &WeightedMultigraph) -> (WeightedMultigraph, Vec<EdgeId>) {
    let idx = g.indexed();
    let mut degree: Vec<usize> = idx.adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; g.edge_count()];
    let mut queue: Vec<usize> = (0..degree.len()).filter(|&v| degree[v] == 1).collect();
    let mut removed = Vec::new();

    while let Some(v) = queue.pop() {
        if degree[v] != 1 {
            continue;
        }
        let Some(&(edge, other)) = idx.adj[v].iter().find(|(e, _)| alive[*e]) else {
            continue;
        };
        alive[edge] = false;
        removed.push(g.edges()[edge].id);
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            queue.push(other);
        }
    }

    let pruned = g.edge_subgraph(g.edges().iter().enumerate().filter(|(p, _)| alive[*p]).map(|(_, e)| e.id));
    (pruned, removed)
}

/// Biconnected blocks of a connected multigraph.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub blocks: Vec<WeightedMultigraph>,
    pub cut_vertices: BTreeSet<VertexId>,
    pub edge_to_block: BTreeMap<EdgeId, usize>,
}

impl Decomposition {
    /// The block holding `edge`.
    pub fn block_of(&self, edge: EdgeId) -> Option<&WeightedMultigraph> {
        self.edge_to_block.get(&edge).map(|&b| &self.blocks[b])
    }
}

/// Splits a connected graph into biconnected components (lowpoint method).
///
/// Each biconnected component is its own block; a bridge is a 2-vertex
/// block. A simple path between two vertices of a block never leaves it.
/// Blocks are ordered by their smallest edge id.
pub fn split_at_cut_vertices(g: &WeightedMultigraph) -> Result<Decomposition> {
    if !g.is_connected() {
        return Err(OtsError::Disconnected);
    }
    let idx = g.indexed();
    let n = idx.ids.len();
    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut edge_stack: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();

    struct Frame {
        v: usize,
        parent_edge: Option<usize>,
        next: usize,
    }

    for root in 0..n {
        if disc[root] != UNSEEN {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut stack = vec![Frame {
            v: root,
            parent_edge: None,
            next: 0,
        }];
        while let Some(frame) = stack.last_mut() {
            let v = frame.v;
            if frame.next < idx.adj[v].len() {
                let (e, w) = idx.adj[v][frame.next];
                frame.next += 1;
                if Some(e) == frame.parent_edge {
                    continue;
                }
                if disc[w] == UNSEEN {
                    edge_stack.push(e);
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push(Frame {
                        v: w,
                        parent_edge: Some(e),
                        next: 0,
                    });
                } else if disc[w] < disc[v] {
                    edge_stack.push(e);
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                let done = stack.pop().expect("frame exists");
                if let Some(parent) = stack.last() {
                    let p = parent.v;
                    low[p] = low[p].min(low[done.v]);
                    if low[done.v] >= disc[p] {
                        let tree_edge = done.parent_edge.expect("non-root frame has a parent edge");
                        let mut group = Vec::new();
                        while let Some(e) = edge_stack.pop() {
                            group.push(e);
                            if e == tree_edge {
                                break;
                            }
                        }
                        groups.push(group);
                    }
                }
            }
        }
    }

    let mut blocks: Vec<WeightedMultigraph> = groups
        .into_iter()
        .map(|group| g.edge_subgraph(group.into_iter().map(|p| g.edges()[p].id).collect::<BTreeSet<_>>()))
        .collect();
    blocks.sort_by_key(|b| b.edge_ids().min());

    let mut edge_to_block = BTreeMap::new();
    let mut membership: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (b, block) in blocks.iter().enumerate() {
        for id in block.edge_ids() {
            edge_to_block.insert(id, b);
        }
        for &v in block.vertices() {
            *membership.entry(v).or_default() += 1;
        }
    }
    let cut_vertices = membership.into_iter().filter(|&(_, c)| c > 1).map(|(v, _)| v).collect();
    Ok(Decomposition {
        blocks,
        cut_vertices,
        edge_to_block,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Edge;
    use super::*;

    fn ids(g: &WeightedMultigraph) -> BTreeSet<EdgeId> {
        g.edge_ids().collect()
    }

    fn cycle(n: usize) -> WeightedMultigraph {
        WeightedMultigraph::from_edges((0..n).map(|i| Edge::new(i + 1, i + 1, (i + 1) % n + 1, 1.0)).collect()).unwrap()
    }

    #[test]
    fn twelve_vertex_prunes_three_leaf_edges() {
        let (pruned, removed) = prune_leaf_edges(&twelve_vertex());
        let removed: BTreeSet<_> = removed.into_iter().collect();
        assert_eq!(removed, BTreeSet::from([10, 15, 16]));
        assert_eq!(pruned.edge_count(), 14);
        assert!(!pruned.contains_vertex(7) && !pruned.contains_vertex(11) && !pruned.contains_vertex(12));
    }

    #[test]
    fn cycle_is_unchanged() {
        let g = cycle(5);
        let (pruned, removed) = prune_leaf_edges(&g);
        assert!(removed.is_empty());
        assert_eq!(pruned, g);
    }

    #[test]
    fn tree_is_consumed() {
        let g = WeightedMultigraph::from_edges(vec![
            Edge::new(1, 1, 2, 1.0),
            Edge::new(2, 2, 3, 1.0),
            Edge::new(3, 2, 4, 1.0),
            Edge::new(4, 4, 5, 1.0),
        ])
        .unwrap();
        let (pruned, removed) = prune_leaf_edges(&g);
        assert!(pruned.is_empty() && pruned.vertex_count() == 0);
        assert_eq!(removed.len(), 4);
    }

    #[test]
    fn parallel_pair_is_not_a_leaf() {
        let g = WeightedMultigraph::from_edges(vec![
            Edge::new(1, 1, 2, 1.0),
            Edge::new(2, 1, 2, 1.0),
            Edge::new(3, 2, 3, 1.0),
        ])
        .unwrap();
        let (_, removed) = prune_leaf_edges(&g);
        assert_eq!(removed, vec![3]);
    }

    #[test]
    fn twelve_vertex_splits_at_n3() {
        let (pruned, _) = prune_leaf_edges(&twelve_vertex());
        let d = split_at_cut_vertices(&pruned).unwrap();
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(d.cut_vertices, BTreeSet::from([3]));
        assert_eq!(ids(&d.blocks[0]), (1..=9).collect());
        assert_eq!(d.blocks[0].vertices(), &BTreeSet::from([1, 2, 3, 4, 5, 6]));
        assert_eq!(ids(&d.blocks[1]), BTreeSet::from([11, 12, 13, 14, 17]));
        assert_eq!(d.blocks[1].vertices(), &BTreeSet::from([3, 8, 9, 10]));
        assert_eq!(d.edge_to_block[&13], 1);
    }

    #[test]
    fn biconnected_graph_is_one_block() {
        let d = split_at_cut_vertices(&cycle(6)).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert!(d.cut_vertices.is_empty());
    }

    #[test]
    fn bridges_are_blocks() {
        let g = WeightedMultigraph::from_edges(vec![Edge::new(1, 1, 2, 1.0), Edge::new(2, 2, 3, 1.0)]).unwrap();
        let d = split_at_cut_vertices(&g).unwrap();
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(d.cut_vertices, BTreeSet::from([2]));
    }

    #[test]
    fn rejects_disconnected() {
        let g = WeightedMultigraph::new([1, 2, 3], vec![Edge::new(1, 1, 2, 1.0)]).unwrap();
        assert!(matches!(split_at_cut_vertices(&g), Err(OtsError::Disconnected)));
    }

    /// Articulation points by brute force: remove the vertex, test connectivity.
    fn articulation_oracle(g: &WeightedMultigraph) -> BTreeSet<VertexId> {
        g.vertices()
            .iter()
            .copied()
            .filter(|&v| {
                let rest: BTreeSet<_> = g.vertices().iter().copied().filter(|&x| x != v).collect();
                let edges: Vec<_> = g.edges().iter().filter(|e| !e.touches(v)).collect();
                !super::super::spans(&rest, edges)
            })
            .collect()
    }

    #[test]
    fn bowtie_has_two_triangles() {
        let g = WeightedMultigraph::from_edges(vec![
            Edge::new(1, 1, 2, 1.0),
            Edge::new(2, 2, 3, 1.0),
            Edge::new(3, 3, 1, 1.0),
            Edge::new(4, 3, 4, 1.0),
            Edge::new(5, 4, 5, 1.0),
            Edge::new(6, 5, 3, 1.0),
        ])
        .unwrap();
        let d = split_at_cut_vertices(&g).unwrap();
        assert_eq!(d.blocks.len(), 2);
        assert!(d.blocks.iter().all(|b| b.edge_count() == 3));
        assert_eq!(d.cut_vertices, articulation_oracle(&g));
        assert_eq!(d.cut_vertices, BTreeSet::from([3]));
    }

    #[test]
    fn cut_vertices_match_oracle_on_twelve_vertex() {
        let g = twelve_vertex();
        assert_eq!(split_at_cut_vertices(&g).unwrap().cut_vertices, articulation_oracle(&g));
    }
}
