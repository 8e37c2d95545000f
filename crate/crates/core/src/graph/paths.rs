use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{EdgeId, VertexId, WeightedMultigraph};
use crate::{OtsError, Result};

/// Vertex limit for [`longest_simple_path_bruteforce`] when callers have no
/// better figure.
pub const DEFAULT_BRUTEFORCE_BUDGET: usize = 14;

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra distance from `s` to `t` avoiding `excluded`; `f64::INFINITY`
/// when no such path exists.
pub fn shortest_path_weight(g: &WeightedMultigraph, s: VertexId, t: VertexId, excluded: Option<EdgeId>) -> Result<f64> {
    let idx = g.indexed();
    let (s, t) = (idx.index_of(s)?, idx.index_of(t)?);
    if s == t {
        return Ok(0.0);
    }
    let edges = g.edges();
    let mut dist = vec![f64::INFINITY; idx.ids.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((Dist(0.0), s)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if v == t {
            return Ok(d);
        }
        if d > dist[v] {
            continue;
        }
        for &(e, w) in &idx.adj[v] {
            if Some(edges[e].id) == excluded {
                continue;
            }
            let nd = d + edges[e].weight;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    Ok(f64::INFINITY)
}

/// Exact longest simple `s`–`t` path weight by exhaustive search, avoiding
/// `excluded`. Returns 0 when no path exists.
pub fn longest_simple_path_bruteforce(
    g: &WeightedMultigraph,
    s: VertexId,
    t: VertexId,
    excluded: Option<EdgeId>,
    budget: usize,
) -> Result<f64> {
    if g.vertex_count() > budget.min(64) {
        return Err(OtsError::TooLarge {
            vertices: g.vertex_count(),
            budget,
        });
    }
    let idx = g.indexed();
    let (s, t) = (idx.index_of(s)?, idx.index_of(t)?);
    if s == t {
        return Ok(0.0);
    }
    let weights: Vec<Option<f64>> = g
        .edges()
        .iter()
        .map(|e| (Some(e.id) != excluded).then_some(e.weight))
        .collect();

    fn dfs(v: usize, t: usize, visited: u64, acc: f64, adj: &[Vec<(usize, usize)>], w: &[Option<f64>], best: &mut Option<f64>) {
        if v == t {
            if best.map_or(true, |b| acc > b) {
                *best = Some(acc);
            }
            return;
        }
        for &(e, next) in &adj[v] {
            let Some(weight) = w[e] else { continue };
            if visited & (1 << next) != 0 {
                continue;
            }
            dfs(next, t, visited | (1 << next), acc + weight, adj, w, best);
        }
    }

    let mut best = None;
    dfs(s, t, 1 << s, 0.0, &idx.adj, &weights, &mut best);
    Ok(best.unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Edge;
    use super::*;

    #[test]
    fn counterexample_shortest_without_direct_line() {
        assert_eq!(shortest_path_weight(&counterexample(), 4, 5, Some(1)).unwrap(), 120.0);
        assert_eq!(shortest_path_weight(&counterexample(), 4, 5, None).unwrap(), 10.0);
    }

    #[test]
    fn single_edge_and_disconnected() {
        let g = WeightedMultigraph::from_edges(vec![Edge::new(1, 1, 2, 7.5)]).unwrap();
        assert_eq!(shortest_path_weight(&g, 1, 2, None).unwrap(), 7.5);
        assert_eq!(shortest_path_weight(&g, 1, 2, Some(1)).unwrap(), f64::INFINITY);
        assert_eq!(longest_simple_path_bruteforce(&g, 1, 2, Some(1), 14).unwrap(), 0.0);
        let g = WeightedMultigraph::new([1, 2, 3, 4], vec![Edge::new(1, 1, 2, 1.0), Edge::new(2, 3, 4, 1.0)]).unwrap();
        assert_eq!(shortest_path_weight(&g, 1, 4, None).unwrap(), f64::INFINITY);
        assert!(matches!(shortest_path_weight(&g, 1, 9, None), Err(OtsError::UnknownVertex(9))));
    }

    #[test]
    fn counterexample_longest_path() {
        assert_eq!(longest_simple_path_bruteforce(&counterexample(), 4, 5, None, 14).unwrap(), 162.0);
        assert_eq!(longest_simple_path_bruteforce(&counterexample(), 4, 5, Some(1), 14).unwrap(), 162.0);
    }

    #[test]
    fn left_block_longest_path() {
        assert_eq!(longest_simple_path_bruteforce(&left_block(), 1, 2, Some(1), 14).unwrap(), 103.0);
    }

    #[test]
    fn budget_enforced() {
        let err = longest_simple_path_bruteforce(&twelve_vertex(), 1, 2, Some(1), 10).unwrap_err();
        assert!(matches!(err, OtsError::TooLarge { vertices: 12, budget: 10 }));
    }
}
