use std::collections::BTreeSet;

use super::{EdgeId, VertexId, WeightedMultigraph};
use crate::{OtsError, Result};

/// Sum of the `k` heaviest edge weights, ignoring `excluded`. Sums every
/// remaining edge when fewer than `k` are left.
///
/// With `k = |V| - 1` this bounds every simple path of the graph, since such
/// a path uses at most `|V| - 1` distinct edges.
pub fn top_k_weight_sum(g: &WeightedMultigraph, k: usize, excluded: Option<EdgeId>) -> f64 {
    let mut weights: Vec<f64> = g
        .edges()
        .iter()
        .filter(|e| Some(e.id) != excluded)
        .map(|e| e.weight)
        .collect();
    weights.sort_by(|a, b| b.total_cmp(a));
    weights.iter().take(k).sum()
}

/// Greedy per-vertex edge assignment: walking `ordering`, each vertex takes
/// its heaviest incident edge that no earlier vertex has taken.
///
/// This is NOT a valid longest-path bound; it can fall below the true
/// longest path for some orderings and is kept as a baseline only. The value
/// does not depend on the path endpoints.
pub fn greedy_bound_moulin(g: &WeightedMultigraph, ordering: &[VertexId]) -> Result<f64> {
    let idx = g.indexed();
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut total = 0.0;
    for &v in ordering {
        let vi = idx.index_of(v)?;
        let pick = idx.adj[vi]
            .iter()
            .map(|&(e, _)| e)
            .filter(|e| !taken.contains(e))
            .max_by(|&a, &b| {
                let (ea, eb) = (&g.edges()[a], &g.edges()[b]);
                ea.weight.total_cmp(&eb.weight).then(eb.id.cmp(&ea.id))
            });
        if let Some(e) = pick {
            taken.insert(e);
            total += g.edges()[e].weight;
        }
    }
    if ordering.len() != g.vertex_count() || ordering.iter().collect::<BTreeSet<_>>().len() != ordering.len() {
        return Err(OtsError::invalid("ordering", "must be a permutation of the vertices"));
    }
    Ok(total)
}
