use std::collections::BTreeSet;

use proptest::prelude::*;

use ots_core::graph::{
    longest_simple_path_bruteforce, prune_leaf_edges, shortest_path_weight, split_at_cut_vertices, top_k_weight_sum,
    Edge, WeightedMultigraph,
};

prop_compose! {
    fn connected_graph()(n in 2usize..=8)
        (tree in proptest::collection::vec((0usize..1000, 1u32..50), n - 1),
         extra in proptest::collection::vec((1usize..=n, 1usize..=n, 1u32..50), 0..8))
        -> WeightedMultigraph {
        let mut edges = Vec::new();
        for (i, &(pick, w)) in tree.iter().enumerate() {
            let v = i + 2;
            edges.push(Edge::new(edges.len() + 1, pick % (v - 1) + 1, v, w as f64));
        }
        for &(u, v, w) in &extra {
            if u != v {
                edges.push(Edge::new(edges.len() + 1, u, v, w as f64));
            }
        }
        WeightedMultigraph::from_edges(edges).unwrap()
    }
}

/// Shortest path by Bellman-Ford relaxation over the edge list.
fn shortest_oracle(g: &WeightedMultigraph, s: usize, t: usize, excluded: usize) -> f64 {
    let n = g.vertices().iter().max().unwrap() + 1;
    let mut d = vec![f64::INFINITY; n];
    d[s] = 0.0;
    for _ in 0..n {
        for e in g.edges().iter().filter(|e| e.id != excluded) {
            d[e.v] = d[e.v].min(d[e.u] + e.weight);
            d[e.u] = d[e.u].min(d[e.v] + e.weight);
        }
    }
    d[t]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pruning_is_idempotent(g in connected_graph()) {
        let (once, _) = prune_leaf_edges(&g);
        let (twice, removed) = prune_leaf_edges(&once);
        prop_assert!(removed.is_empty());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn naive_bound_dominates_longest_path(g in connected_graph()) {
        let k = g.vertex_count() - 1;
        for e in g.edges() {
            let best = longest_simple_path_bruteforce(&g, e.u, e.v, Some(e.id), 16).unwrap();
            prop_assert!(top_k_weight_sum(&g, k, Some(e.id)) >= best);
        }
    }

    #[test]
    fn shortest_path_matches_relaxation(g in connected_graph()) {
        for e in g.edges() {
            let d = shortest_path_weight(&g, e.u, e.v, Some(e.id)).unwrap();
            prop_assert_eq!(d, shortest_oracle(&g, e.u, e.v, e.id));
        }
    }

    #[test]
    fn blocks_partition_edges(g in connected_graph()) {
        let d = split_at_cut_vertices(&g).unwrap();
        let mut seen = BTreeSet::new();
        for b in &d.blocks {
            for e in b.edges() {
                prop_assert!(seen.insert(e.id));
                prop_assert_eq!(d.block_of(e.id), Some(b));
            }
            let inner = split_at_cut_vertices(b).unwrap();
            prop_assert_eq!(inner.blocks.len(), 1);
        }
        prop_assert_eq!(seen.len(), g.edge_count());
        for e in g.edges() {
            let best = longest_simple_path_bruteforce(&g, e.u, e.v, Some(e.id), 16).unwrap();
            let local = longest_simple_path_bruteforce(d.block_of(e.id).unwrap(), e.u, e.v, Some(e.id), 16).unwrap();
            prop_assert_eq!(best, local);
        }
    }

    #[test]
    fn edge_list_round_trip(g in connected_graph()) {
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        prop_assert_eq!(WeightedMultigraph::read_edge_list(buf.as_slice()).unwrap(), g);
    }
}
