//! Per-line big-M values for the linearised flow law.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{
    prune_leaf_edges, shortest_path_weight, split_at_cut_vertices, top_k_weight_sum, Edge, WeightedMultigraph,
};
use crate::model::{solve_exact_longest_path, solve_relaxed_longest_path, LongestPathOutcome};
use crate::network::{LineId, PowerNetwork};
use crate::solver::Engine;
use crate::{OtsError, Result};

/// Default per-line budget for the exact longest-path strategy (s).
pub const DEFAULT_PER_LINE_TIME_LIMIT: f64 = 60.0;

const LAMBDA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Sum of the heaviest edges.
    BN,
    /// Leaf pruning, block split and the relaxed longest path.
    SR,
    /// Exact longest path on each block.
    LP,
    /// Shortest path on a given topology.
    SP,
    Scaled,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::BN => "BN",
            Strategy::SR => "SR",
            Strategy::LP => "LP",
            Strategy::SP => "SP",
            Strategy::Scaled => "SCALED",
        })
    }
}

impl FromStr for Strategy {
    type Err = OtsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BN" => Ok(Strategy::BN),
            "SR" => Ok(Strategy::SR),
            "LP" => Ok(Strategy::LP),
            "SP" => Ok(Strategy::SP),
            "SCALED" => Ok(Strategy::Scaled),
            other => Err(OtsError::invalid("strategy", format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineBound {
    /// Big-M in MW.
    pub value: f64,
    pub compute_time_s: f64,
    /// False when the value is a fallback bound from an unfinished solve.
    pub proven_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigMSet {
    pub strategy: Strategy,
    /// Origin of a derived set, e.g. `LP+35%`.
    pub provenance: Option<String>,
    lines: BTreeMap<LineId, LineBound>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BigMRecord {
    line_id: LineId,
    strategy: String,
    value_mw: f64,
    compute_time_s: f64,
    proven_optimal: bool,
}

impl BigMSet {
    pub fn new(strategy: Strategy, lines: BTreeMap<LineId, LineBound>) -> Result<Self> {
        if let Some((id, b)) = lines.iter().find(|(_, b)| !(b.value >= 0.0 && b.value.is_finite())) {
            return Err(OtsError::invalid(format!("big-M of line {id}"), format!("must be finite and nonnegative, got {}", b.value)));
        }
        Ok(BigMSet {
            strategy,
            provenance: None,
            lines,
        })
    }

    /// Proven set from plain values.
    pub fn from_values(strategy: Strategy, values: impl IntoIterator<Item = (LineId, f64)>) -> Result<Self> {
        Self::new(
            strategy,
            values
                .into_iter()
                .map(|(id, value)| {
                    (
                        id,
                        LineBound {
                            value,
                            compute_time_s: 0.0,
                            proven_optimal: true,
                        },
                    )
                })
                .collect(),
        )
    }

    pub fn value(&self, line: LineId) -> Option<f64> {
        self.lines.get(&line).map(|b| b.value)
    }

    pub fn bound(&self, line: LineId) -> Option<&LineBound> {
        self.lines.get(&line)
    }

    pub fn lines(&self) -> &BTreeMap<LineId, LineBound> {
        &self.lines
    }

    pub fn values(&self) -> BTreeMap<LineId, f64> {
        self.lines.iter().map(|(&id, b)| (id, b.value)).collect()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn all_proven(&self) -> bool {
        self.lines.values().all(|b| b.proven_optimal)
    }

    pub fn total_compute_time(&self) -> f64 {
        self.lines.values().map(|b| b.compute_time_s).sum()
    }

    /// Label used in reports: the strategy, or the provenance for derived sets.
    pub fn label(&self) -> String {
        self.provenance.clone().unwrap_or_else(|| self.strategy.to_string())
    }

    /// Fails unless the set has a value for every line of `network`.
    pub fn check_covers(&self, network: &PowerNetwork) -> Result<()> {
        match network.line_ids().find(|id| !self.lines.contains_key(id)) {
            Some(id) => Err(OtsError::MissingBigM(id)),
            None => Ok(()),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let tag = self.label();
        for (&line_id, b) in &self.lines {
            w.serialize(BigMRecord {
                line_id,
                strategy: tag.clone(),
                value_mw: b.value,
                compute_time_s: b.compute_time_s,
                proven_optimal: b.proven_optimal,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BTreeMap::new();
        let mut tag: Option<String> = None;
        for (row, rec) in csv::Reader::from_reader(reader).deserialize().enumerate() {
            let rec: BigMRecord = rec?;
            match &tag {
                None => tag = Some(rec.strategy.clone()),
                Some(t) if *t != rec.strategy => {
                    return Err(OtsError::Syntax {
                        line: row + 2,
                        message: format!("strategy '{}' differs from '{t}'", rec.strategy),
                    })
                }
                Some(_) => {}
            }
            let bound = LineBound {
                value: rec.value_mw,
                compute_time_s: rec.compute_time_s,
                proven_optimal: rec.proven_optimal,
            };
            if lines.insert(rec.line_id, bound).is_some() {
                return Err(OtsError::Syntax {
                    line: row + 2,
                    message: format!("line {} given twice", rec.line_id),
                });
            }
        }
        let tag = tag.unwrap_or_else(|| "BN".into());
        let (strategy, provenance) = match tag.parse::<Strategy>() {
            Ok(s) => (s, None),
            Err(_) => (Strategy::Scaled, Some(tag)),
        };
        let mut set = BigMSet::new(strategy, lines)?;
        set.provenance = provenance;
        Ok(set)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// `M_l = B_l * (sum of the |N| - 1 heaviest other edge weights)`.
pub fn compute_bn(network: &PowerNetwork) -> BigMSet {
    let g = network.to_multigraph();
    let k = network.bus_count() - 1;
    let lines = network
        .lines()
        .iter()
        .map(|l| {
            let (w, t) = timed(|| top_k_weight_sum(&g, k, Some(l.id)));
            let bound = LineBound {
                value: network.flow_coefficient(l) * w,
                compute_time_s: t,
                proven_optimal: true,
            };
            (l.id, bound)
        })
        .collect();
    BigMSet::new(Strategy::BN, lines).expect("top-k sums are finite and nonnegative")
}

type PathSolver = fn(
    &WeightedMultigraph,
    usize,
    usize,
    Option<usize>,
    &dyn Engine,
    f64,
) -> Result<LongestPathOutcome>;

/// Leaf lines get 0; every other line gets `B_l` times the longest-path
/// value on its own block with the line removed.
fn block_bounds(
    network: &PowerNetwork,
    engine: &dyn Engine,
    per_line_time_limit: f64,
    strategy: Strategy,
    solve: PathSolver,
) -> Result<BigMSet> {
    let g = network.to_multigraph();
    let (pruned, leaves) = prune_leaf_edges(&g);
    let leaves: BTreeSet<LineId> = leaves.into_iter().collect();
    let blocks = if pruned.is_empty() {
        None
    } else {
        Some(split_at_cut_vertices(&pruned)?)
    };
    let results: Vec<Result<(LineId, LineBound)>> = network
        .lines()
        .par_iter()
        .map(|l| {
            if leaves.contains(&l.id) {
                let b = LineBound {
                    value: 0.0,
                    compute_time_s: 0.0,
                    proven_optimal: true,
                };
                return Ok((l.id, b));
            }
            let block = blocks
                .as_ref()
                .and_then(|d| d.block_of(l.id))
                .ok_or_else(|| OtsError::Model(format!("line {} is in no block", l.id)))?;
            let out = solve(block, l.from_bus, l.to_bus, Some(l.id), engine, per_line_time_limit)
                .map_err(|e| e.context(format!("line {}", l.id)))?;
            debug!("{strategy} line {}: {} ({} solves)", l.id, out.value, out.solves);
            let b = LineBound {
                value: network.flow_coefficient(l) * out.value,
                compute_time_s: out.wall_time,
                proven_optimal: out.proven_optimal,
            };
            Ok((l.id, b))
        })
        .collect();
    let lines = results.into_iter().collect::<Result<BTreeMap<_, _>>>()?;
    BigMSet::new(strategy, lines)
}

/// Simplify-and-relax big-Ms: leaf pruning, block split and the relaxed
/// longest-path model per line.
pub fn compute_sr(network: &PowerNetwork, engine: &dyn Engine, per_line_time_limit: f64) -> Result<BigMSet> {
    block_bounds(network, engine, per_line_time_limit, Strategy::SR, solve_relaxed_longest_path)
}

/// Exact longest-path big-Ms. Lines whose solve runs out of time keep the
/// best valid upper bound and are flagged as not proven.
pub fn compute_lp(network: &PowerNetwork, engine: &dyn Engine, per_line_time_limit: f64) -> Result<BigMSet> {
    block_bounds(network, engine, per_line_time_limit, Strategy::LP, solve_exact_longest_path)
}

/// Shortest-path big-Ms on the topology `active_lines`. Lines whose
/// endpoints are only joined through themselves take the `fallback` value.
pub fn compute_sp(network: &PowerNetwork, active_lines: &BTreeSet<LineId>, fallback: &BigMSet) -> Result<BigMSet> {
    if !network.is_connected_by(active_lines) {
        return Err(OtsError::Disconnected);
    }
    let full = network.to_multigraph();
    let edges: Vec<Edge> = full.edges().iter().filter(|e| active_lines.contains(&e.id)).copied().collect();
    let g = WeightedMultigraph::new(network.buses().iter().map(|b| b.id), edges)?;
    let mut lines = BTreeMap::new();
    for l in network.lines() {
        let (d, t) = timed(|| shortest_path_weight(&g, l.from_bus, l.to_bus, Some(l.id)));
        let d = d?;
        let value = if d.is_finite() {
            network.flow_coefficient(l) * d
        } else {
            fallback.value(l.id).ok_or(OtsError::MissingBigM(l.id))?
        };
        lines.insert(
            l.id,
            LineBound {
                value,
                compute_time_s: t,
                proven_optimal: true,
            },
        );
    }
    BigMSet::new(Strategy::SP, lines)
}

/// Every value multiplied by `1 + pct / 100`.
pub fn scale(set: &BigMSet, pct: f64) -> Result<BigMSet> {
    if !(pct >= 0.0 && pct.is_finite()) {
        return Err(OtsError::invalid("scale", format!("percentage must be nonnegative, got {pct}")));
    }
    let factor = 1.0 + pct / 100.0;
    let lines = set
        .lines
        .iter()
        .map(|(&id, b)| {
            (
                id,
                LineBound {
                    value: b.value * factor,
                    ..*b
                },
            )
        })
        .collect();
    let mut out = BigMSet::new(Strategy::Scaled, lines)?;
    out.provenance = Some(format!("{}+{pct}%", set.label()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaReport {
    pub candidate: String,
    pub ratios: BTreeMap<LineId, f64>,
    /// Lines whose reference value is zero.
    pub skipped: Vec<LineId>,
    pub min: f64,
    pub avg: f64,
    pub max: f64,
    pub reference_proven: bool,
}

/// Per-line ratios `candidate / reference` over lines with a nonzero
/// reference value.
pub fn compare_lambda(candidate: &BigMSet, reference: &BigMSet) -> Result<LambdaReport> {
    let a: BTreeSet<_> = candidate.lines.keys().collect();
    let b: BTreeSet<_> = reference.lines.keys().collect();
    if a != b {
        return Err(OtsError::Coverage(format!(
            "{} covers {} lines, {} covers {}",
            candidate.label(),
            a.len(),
            reference.label(),
            b.len()
        )));
    }
    let mut ratios = BTreeMap::new();
    let mut skipped = Vec::new();
    for (&id, r) in &reference.lines {
        let c = candidate.lines[&id].value;
        if r.value == 0.0 {
            skipped.push(id);
            continue;
        }
        if c == 0.0 {
            return Err(OtsError::Coverage(format!(
                "line {id} is zero in {} but {} in {}",
                candidate.label(),
                r.value,
                reference.label()
            )));
        }
        ratios.insert(id, c / r.value);
    }
    let reference_proven = reference.all_proven();
    if reference_proven {
        if let Some((id, r)) = ratios.iter().find(|(_, &r)| r < 1.0 - LAMBDA_TOLERANCE) {
            debug!("line {id} has ratio {r} below one against a proven reference");
        }
    }
    let (min, avg, max) = if ratios.is_empty() {
        (1.0, 1.0, 1.0)
    } else {
        let v = ratios.values();
        (
            v.clone().copied().fold(f64::INFINITY, f64::min),
            v.clone().sum::<f64>() / ratios.len() as f64,
            v.copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(LambdaReport {
        candidate: candidate.label(),
        ratios,
        skipped,
        min,
        avg,
        max,
        reference_proven,
    })
}
