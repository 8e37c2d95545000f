use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::{MilpModel, ObjectiveSense, Sense, VarId};
use crate::graph::{top_k_weight_sum, EdgeId, VertexId, WeightedMultigraph};
use crate::solver::{Engine, SolveRequest, SolveStatus};
use crate::{OtsError, Result};

/// Arc model for a longest `source`–`sink` path: `y` follows each edge's
/// stored orientation, `z` the reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LongestPathModel {
    pub model: MilpModel,
    pub source: VertexId,
    pub sink: VertexId,
    pub edges: Vec<EdgeId>,
    pub y: Vec<VarId>,
    pub z: Vec<VarId>,
    graph: WeightedMultigraph,
    excluded: Option<EdgeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongestPathOutcome {
    /// Optimal value, or a valid upper bound when not proven optimal.
    pub value: f64,
    pub proven_optimal: bool,
    /// Solves performed (one more than the number of cut rounds).
    pub solves: usize,
    pub cuts: usize,
    pub wall_time: f64,
}

/// Longest-path model without subtour elimination: every vertex has at most
/// one outgoing arc, the sink none, and inflow plus the source/sink
/// injection equals outflow.
pub fn build_relaxed_longest_path(
    g: &WeightedMultigraph,
    source: VertexId,
    sink: VertexId,
    excluded: Option<EdgeId>,
) -> Result<LongestPathModel> {
    if source == sink {
        return Err(OtsError::invalid("longest path", "source and sink coincide"));
    }
    for v in [source, sink] {
        if !g.contains_vertex(v) {
            return Err(OtsError::UnknownVertex(v));
        }
    }
    let mut m = MilpModel::new(format!("longest_{source}_{sink}"), ObjectiveSense::Maximize);
    let mut edges = Vec::new();
    let (mut ys, mut zs) = (Vec::new(), Vec::new());
    let mut obj = Vec::new();
    for e in g.edges().iter().filter(|e| Some(e.id) != excluded) {
        let y = m.binary(format!("y_{}", e.id))?;
        let z = m.binary(format!("z_{}", e.id))?;
        obj.push((y, e.weight));
        obj.push((z, e.weight));
        m.add_constraint(format!("pair_{}", e.id), vec![(y, 1.0), (z, 1.0)], Sense::Le, 1.0)?;
        edges.push(e.id);
        ys.push(y);
        zs.push(z);
    }
    m.set_objective(obj);
    for &v in g.vertices() {
        let mut out = Vec::new();
        let mut net = Vec::new();
        for (i, &id) in edges.iter().enumerate() {
            let e = g.edge(id).expect("edge");
            if e.u == v {
                out.push((ys[i], 1.0));
                net.push((ys[i], 1.0));
                net.push((zs[i], -1.0));
            } else if e.v == v {
                out.push((zs[i], 1.0));
                net.push((zs[i], 1.0));
                net.push((ys[i], -1.0));
            }
        }
        let beta = if v == source {
            1.0
        } else if v == sink {
            -1.0
        } else {
            0.0
        };
        m.add_constraint(format!("bal_{v}"), net, Sense::Eq, beta)?;
        if v == sink {
            m.add_constraint(format!("out_{v}"), out, Sense::Eq, 0.0)?;
        } else {
            m.add_constraint(format!("out_{v}"), out, Sense::Le, 1.0)?;
        }
    }
    Ok(LongestPathModel {
        model: m,
        source,
        sink,
        edges,
        y: ys,
        z: zs,
        graph: g.clone(),
        excluded,
    })
}

/// Same model as [`build_relaxed_longest_path`]; [`solve_exact_longest_path`]
/// refines it with subtour cuts until the selected arcs form one path.
pub fn build_exact_longest_path(
    g: &WeightedMultigraph,
    source: VertexId,
    sink: VertexId,
    excluded: Option<EdgeId>,
) -> Result<LongestPathModel> {
    build_relaxed_longest_path(g, source, sink, excluded)
}

impl LongestPathModel {
    /// Selected arcs as `(tail, head)` per edge.
    pub fn arcs(&self, values: &[f64]) -> BTreeMap<EdgeId, (VertexId, VertexId)> {
        let mut arcs = BTreeMap::new();
        for (i, &id) in self.edges.iter().enumerate() {
            let e = self.graph.edge(id).expect("edge");
            if values[self.y[i].0] >= 0.5 {
                arcs.insert(id, (e.u, e.v));
            } else if values[self.z[i].0] >= 0.5 {
                arcs.insert(id, (e.v, e.u));
            }
        }
        arcs
    }

    /// Splits selected arcs into the source–sink path (edge ids in order)
    /// and the vertex sets of the remaining cycles.
    pub fn decompose(&self, values: &[f64]) -> (Vec<EdgeId>, Vec<BTreeSet<VertexId>>) {
        let arcs = self.arcs(values);
        let mut next: BTreeMap<VertexId, (EdgeId, VertexId)> = BTreeMap::new();
        for (&id, &(a, b)) in &arcs {
            next.insert(a, (id, b));
        }
        let mut path = Vec::new();
        let mut at = self.source;
        while let Some(&(id, b)) = next.get(&at) {
            next.remove(&at);
            path.push(id);
            at = b;
            if path.len() > arcs.len() {
                break;
            }
        }
        let mut cycles = Vec::new();
        while let Some((&start, _)) = next.iter().next() {
            let mut members = BTreeSet::new();
            let mut at = start;
            while let Some((_, b)) = next.remove(&at) {
                members.insert(at);
                at = b;
            }
            cycles.push(members);
        }
        (path, cycles)
    }

    /// Forbids every selection with `|S|` or more edges inside `members`.
    pub fn add_subtour_cut(&mut self, members: &BTreeSet<VertexId>, tag: usize) -> Result<()> {
        let mut terms = Vec::new();
        for (i, &id) in self.edges.iter().enumerate() {
            let e = self.graph.edge(id).expect("edge");
            if members.contains(&e.u) && members.contains(&e.v) {
                terms.push((self.y[i], 1.0));
                terms.push((self.z[i], 1.0));
            }
        }
        self.model
            .add_constraint(format!("cut_{tag}"), terms, Sense::Le, members.len() as f64 - 1.0)?;
        Ok(())
    }

    /// Column values selecting exactly the given path edges, oriented from
    /// the source.
    fn path_values(&self, path: &[EdgeId]) -> Vec<f64> {
        let mut values = vec![0.0; self.model.num_vars()];
        let mut at = self.source;
        for &id in path {
            let i = self.edges.iter().position(|&e| e == id).expect("path edge");
            let e = self.graph.edge(id).expect("edge");
            if e.u == at {
                values[self.y[i].0] = 1.0;
                at = e.v;
            } else {
                values[self.z[i].0] = 1.0;
                at = e.u;
            }
        }
        values
    }

    /// Total weight of the selected arcs, path edges first in path order.
    pub fn selected_weight(&self, values: &[f64]) -> f64 {
        let (path, _) = self.decompose(values);
        let on_path: BTreeSet<EdgeId> = path.iter().copied().collect();
        let weight = |id: EdgeId| self.graph.edge(id).expect("edge").weight;
        let rest = self.arcs(values).into_keys().filter(|id| !on_path.contains(id));
        path.iter().copied().chain(rest).map(weight).sum()
    }

    fn fallback_bound(&self) -> f64 {
        top_k_weight_sum(&self.graph, self.graph.vertex_count().saturating_sub(1), self.excluded)
    }
}

/// Optimum of the relaxed model. Infeasibility (no path at all) gives 0;
/// on timeout the value is the engine's bound.
pub fn solve_relaxed_longest_path(
    g: &WeightedMultigraph,
    source: VertexId,
    sink: VertexId,
    excluded: Option<EdgeId>,
    engine: &dyn Engine,
    time_limit: f64,
) -> Result<LongestPathOutcome> {
    let start = Instant::now();
    let lp = build_relaxed_longest_path(g, source, sink, excluded)?;
    let out = engine.solve(&lp.model, &exact_request(time_limit))?;
    let selected = out.best().map(|b| lp.selected_weight(&b.values));
    let (value, proven) = settle(&lp, out.status, selected, out.best_bound)?;
    Ok(LongestPathOutcome {
        value,
        proven_optimal: proven,
        solves: 1,
        cuts: 0,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn exact_request(time_limit: f64) -> SolveRequest {
    SolveRequest {
        time_limit,
        rel_gap_target: 0.0,
        ..SolveRequest::default()
    }
}

fn settle(lp: &LongestPathModel, status: SolveStatus, objective: Option<f64>, bound: f64) -> Result<(f64, bool)> {
    match status {
        SolveStatus::Optimal => Ok((objective.unwrap_or(0.0), true)),
        SolveStatus::Infeasible => Ok((0.0, true)),
        SolveStatus::FeasibleTimeLimit | SolveStatus::TimeLimit => {
            let b = if bound.is_finite() { bound } else { lp.fallback_bound() };
            Ok((b.min(lp.fallback_bound()), false))
        }
        other => Err(OtsError::Engine(format!("longest-path model ended with {other:?}"))),
    }
}

/// Exact longest simple path by re-solving the relaxed model with subtour
/// cuts until the selection is a single path. When `time_limit` runs out the
/// value is the last valid upper bound and `proven_optimal` is false.
pub fn solve_exact_longest_path(
    g: &WeightedMultigraph,
    source: VertexId,
    sink: VertexId,
    excluded: Option<EdgeId>,
    engine: &dyn Engine,
    time_limit: f64,
) -> Result<LongestPathOutcome> {
    let start = Instant::now();
    let mut lp = build_exact_longest_path(g, source, sink, excluded)?;
    let mut solves = 0;
    let mut cuts = 0;
    let mut bound = f64::INFINITY;
    loop {
        let left = time_limit - start.elapsed().as_secs_f64();
        if left <= 0.0 {
            let b = if bound.is_finite() { bound } else { lp.fallback_bound() };
            return Ok(LongestPathOutcome {
                value: b,
                proven_optimal: false,
                solves,
                cuts,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        let out = engine.solve(&lp.model, &exact_request(left))?;
        solves += 1;
        if out.status != SolveStatus::Optimal {
            let selected = out.best().map(|b| lp.selected_weight(&b.values));
            let (value, proven) = settle(&lp, out.status, selected, out.best_bound)?;
            return Ok(LongestPathOutcome {
                value: value.min(bound),
                proven_optimal: proven,
                solves,
                cuts,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        let best = out.best().expect("optimal outcome has a solution");
        bound = bound.min(lp.selected_weight(&best.values));
        let (path, cycles) = lp.decompose(&best.values);
        if cycles.is_empty() {
            return Ok(LongestPathOutcome {
                value: bound,
                proven_optimal: true,
                solves,
                cuts,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        for members in &cycles {
            lp.add_subtour_cut(members, cuts)?;
            cuts += 1;
        }
        let warm = lp.path_values(&path);
        lp.model.set_warm_start(warm)?;
    }
}
