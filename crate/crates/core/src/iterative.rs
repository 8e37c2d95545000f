//! Alternating full and restricted solves under a shared time ledger.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::bigm::{compute_sp, BigMSet};
use crate::model::{build_dispatch_model, build_ots_model, build_restricted_model, OtsModel, SwitchingSolution};
use crate::network::{DemandScenario, LineId, PowerNetwork};
use crate::solver::{decode_solution, Engine, SolveOutcome, SolveRequest, SolveStatus};
use crate::{OtsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    /// Budget of each full-model solve before the final one (s).
    pub outer_times: Vec<f64>,
    /// Budget of each restricted solve (s).
    pub heuristic_time: f64,
    pub pool_size: usize,
    /// Wall-clock budget for the whole run (s).
    pub total_budget: f64,
    pub rel_gap: f64,
    /// Optional cap on improving solutions per outer solve; the final solve
    /// is never capped.
    pub outer_solution_limit: Option<usize>,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            outer_times: vec![30.0, 60.0, 120.0, 300.0, 600.0],
            heuristic_time: 30.0,
            pool_size: 10,
            total_budget: 3600.0,
            rel_gap: 1e-4,
            outer_solution_limit: None,
        }
    }
}

impl IterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OtsError::invalid("iteration config", m));
        if self.outer_times.iter().any(|&t| !(t > 0.0)) || !(self.heuristic_time > 0.0) || !(self.total_budget > 0.0) {
            return bad("all times must be positive".into());
        }
        let outer: f64 = self.outer_times.iter().sum();
        if outer >= self.total_budget {
            return bad(format!("outer times sum to {outer} s, not below the total budget {}", self.total_budget));
        }
        if self.pool_size == 0 {
            return bad("pool size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rel_gap) {
            return bad(format!("gap target must lie in [0, 1), got {}", self.rel_gap));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Full,
    Restricted,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Full => "full",
            Stage::Restricted => "restricted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub stage: Stage,
    /// Best objective known after the stage.
    pub objective: Option<f64>,
    /// Engine gap; `None` when the stage was solved to optimality.
    pub gap: Option<f64>,
    pub wall_time_s: f64,
    pub status: SolveStatus,
}

/// Pool that seeded one restricted solve, with its per-member big-Ms.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolRecord {
    pub iteration: usize,
    pub members: Vec<SwitchingSolution>,
    pub bigms: Vec<BigMSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterStatus {
    /// A full solve closed the gap.
    Optimal,
    /// Budget spent with a feasible solution in hand.
    BudgetExhausted,
    /// Budget spent without any feasible solution.
    NoSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
    pub pools: Vec<PoolRecord>,
    pub status: IterStatus,
    /// Strongest bound from the full-model solves.
    pub best_bound: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    iteration: usize,
    stage: Stage,
    objective: Option<f64>,
    gap: Option<f64>,
    wall_time_s: f64,
}

impl IterationTrace {
    pub fn best_objective(&self) -> Option<f64> {
        self.entries.iter().filter_map(|e| e.objective).reduce(f64::min)
    }

    /// Gap of the best objective against the full-model bound.
    pub fn final_gap(&self) -> Option<f64> {
        match self.status {
            IterStatus::Optimal => self.entries.last().and_then(|e| e.gap).or(Some(0.0)),
            _ => self
                .best_objective()
                .map(|b| crate::solver::relative_gap(crate::model::ObjectiveSense::Minimize, b, self.best_bound)),
        }
    }

    /// `iteration,stage,objective,gap,wall_time_s`, one row per stage.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(TraceRow {
                iteration: e.iteration,
                stage: e.stage,
                objective: e.objective,
                gap: e.gap,
                wall_time_s: e.wall_time_s,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `T` minus the measured time of every stage, floored at zero.
pub fn remaining_budget(cfg: &IterConfig, measured: &[(f64, f64)]) -> f64 {
    let used: f64 = measured.iter().map(|(o, h)| o + h).sum();
    (cfg.total_budget - used).max(0.0)
}

/// Up to `k` distinct-topology solutions of `outcome`, cheapest first.
pub fn select_pool(
    ots: &OtsModel,
    outcome: &SolveOutcome,
    k: usize,
    network: &PowerNetwork,
    scenario: &DemandScenario,
    engine: &dyn Engine,
) -> Result<Vec<SwitchingSolution>> {
    if outcome.incumbents.is_empty() {
        return Err(OtsError::Model("cannot form a pool without incumbents".into()));
    }
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut pool = Vec::new();
    for inc in outcome.all_solutions(ots.model.sense) {
        if pool.len() == k {
            break;
        }
        let topology: Vec<bool> = ots.layout.x.iter().map(|x| inc.values[x.0] >= 0.5).collect();
        if !seen.insert(topology) {
            continue;
        }
        match decode_solution(ots, &inc.values, network, scenario, engine) {
            Ok(sol) => pool.push(sol),
            Err(e) => debug!("dropping pool candidate: {e}"),
        }
    }
    if pool.is_empty() {
        return Err(OtsError::Model("no incumbent decodes to a valid solution".into()));
    }
    Ok(pool)
}

fn stage_entry(iteration: usize, stage: Stage, out: &SolveOutcome, best: Option<f64>, time: f64) -> TraceEntry {
    let objective = match (out.objective(), best) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    TraceEntry {
        iteration,
        stage,
        objective,
        gap: (out.status != SolveStatus::Optimal).then_some(out.final_gap),
        wall_time_s: time,
        status: out.status,
    }
}

struct Run<'a> {
    network: &'a PowerNetwork,
    scenario: &'a DemandScenario,
    outer: &'a BigMSet,
    cfg: &'a IterConfig,
    engine: &'a dyn Engine,
    best: Option<SwitchingSolution>,
    best_objective: Option<f64>,
    trace: IterationTrace,
}

impl Run<'_> {
    fn offer(&mut self, ots: &OtsModel, out: &SolveOutcome) -> Result<()> {
        let Some(inc) = out.best() else { return Ok(()) };
        if self.best_objective.is_some_and(|b| inc.objective >= b) {
            return Ok(());
        }
        let sol = decode_solution(ots, &inc.values, self.network, self.scenario, self.engine)?;
        self.best_objective = Some(inc.objective);
        self.best = Some(sol);
        Ok(())
    }

    fn full_solve(&mut self, iteration: usize, limit: f64, solution_limit: Option<usize>) -> Result<(OtsModel, SolveOutcome, f64)> {
        let t = Instant::now();
        let mut ots = build_ots_model(self.network, self.scenario, self.outer)?;
        if let Some(best) = &self.best {
            ots.model.set_warm_start(ots.values_of(best))?;
        }
        let request = SolveRequest {
            time_limit: limit,
            rel_gap_target: self.cfg.rel_gap,
            solution_limit,
            ..SolveRequest::default()
        };
        let out = self
            .engine
            .solve(&ots.model, &request)
            .map_err(|e| e.context(format!("full solve of iteration {iteration}")))?;
        self.offer(&ots, &out)?;
        if out.best_bound.is_finite() {
            self.trace.best_bound = self.trace.best_bound.max(out.best_bound);
        }
        let elapsed = t.elapsed().as_secs_f64();
        let entry = stage_entry(iteration, Stage::Full, &out, self.best_objective, elapsed);
        info!("iteration {iteration} full: {:?} obj {:?} gap {:?}", out.status, entry.objective, entry.gap);
        self.trace.entries.push(entry);
        Ok((ots, out, elapsed))
    }
}

/// Alternates capped full solves with restricted solves around the best
/// solutions found so far, then spends the remaining budget on a final full
/// solve. Stops early as soon as a full solve is optimal.
pub fn run_iterative(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    outer_bigms: &BigMSet,
    cfg: &IterConfig,
    engine: &dyn Engine,
) -> Result<(Option<SwitchingSolution>, IterationTrace)> {
    cfg.validate()?;
    outer_bigms.check_covers(network)?;
    let start = Instant::now();
    let mut run = Run {
        network,
        scenario,
        outer: outer_bigms,
        cfg,
        engine,
        best: None,
        best_objective: None,
        trace: IterationTrace {
            entries: Vec::new(),
            pools: Vec::new(),
            status: IterStatus::NoSolution,
            best_bound: f64::NEG_INFINITY,
            wall_time_s: 0.0,
        },
    };
    let mut measured: Vec<(f64, f64)> = Vec::new();

    // Every line closed is the first guess.
    let t0 = Instant::now();
    let all: BTreeSet<LineId> = network.line_ids().collect();
    let dispatch = build_dispatch_model(network, scenario, &all)?;
    let seed = engine.solve(&dispatch.model, &SolveRequest::with_time_limit(cfg.outer_times[0].max(1.0)))?;
    if let (SolveStatus::Optimal, Some(inc)) = (seed.status, seed.best()) {
        if let Ok(sol) = crate::model::extract_switching_solution(&dispatch, &inc.values, network) {
            run.best_objective = Some(sol.objective_cost);
            run.best = Some(sol);
        }
    }
    let mut carry = t0.elapsed().as_secs_f64();

    for (i, &outer_time) in cfg.outer_times.iter().enumerate() {
        let iteration = i + 1;
        let left = remaining_budget(cfg, &measured) - carry;
        if left <= 0.0 {
            break;
        }
        let (ots, out, t_outer) = run.full_solve(iteration, outer_time.min(left), cfg.outer_solution_limit)?;
        let t_outer = t_outer + std::mem::take(&mut carry);
        match out.status {
            SolveStatus::Optimal => {
                measured.push((t_outer, 0.0));
                run.trace.status = IterStatus::Optimal;
                return Ok(finish(run, start));
            }
            SolveStatus::Infeasible => return Err(OtsError::Infeasible(format!("scenario {}", scenario.scenario_id))),
            SolveStatus::Unbounded | SolveStatus::Error => {
                return Err(OtsError::Engine(format!(
                    "full solve of iteration {iteration} ended with {:?}",
                    out.status
                )))
            }
            SolveStatus::FeasibleTimeLimit | SolveStatus::TimeLimit => {}
        }

        let t = Instant::now();
        if out.incumbents.len() + out.pool.len() < 2 {
            debug!("iteration {iteration}: fewer than two solutions, restricted stage skipped");
            measured.push((t_outer, t.elapsed().as_secs_f64()));
            continue;
        }
        let pool = select_pool(&ots, &out, cfg.pool_size, network, scenario, engine)?;
        if pool.len() < 2 {
            measured.push((t_outer, t.elapsed().as_secs_f64()));
            continue;
        }
        let bigms = pool
            .iter()
            .map(|s| compute_sp(network, &s.closed_lines(), outer_bigms))
            .collect::<Result<Vec<_>>>()?;
        let restricted = build_restricted_model(network, scenario, &pool, &bigms, outer_bigms)?;
        let left = remaining_budget(cfg, &measured) - t_outer - t.elapsed().as_secs_f64();
        if left <= 0.0 {
            measured.push((t_outer, t.elapsed().as_secs_f64()));
            break;
        }
        let request = SolveRequest {
            time_limit: cfg.heuristic_time.min(left),
            rel_gap_target: cfg.rel_gap,
            ..SolveRequest::default()
        };
        let hout = engine
            .solve(&restricted.model, &request)
            .map_err(|e| e.context(format!("restricted solve of iteration {iteration}")))?;
        run.offer(&restricted, &hout)?;
        let t_heur = t.elapsed().as_secs_f64();
        let entry = stage_entry(iteration, Stage::Restricted, &hout, run.best_objective, t_heur);
        info!("iteration {iteration} restricted: {:?} obj {:?}", hout.status, entry.objective);
        run.trace.entries.push(entry);
        run.trace.pools.push(PoolRecord {
            iteration,
            members: pool,
            bigms,
        });
        measured.push((t_outer, t_heur));
    }

    let left = remaining_budget(cfg, &measured) - carry;
    if left > 0.0 {
        let iteration = cfg.outer_times.len() + 1;
        let (_, out, _) = run.full_solve(iteration, left, None)?;
        match out.status {
            SolveStatus::Optimal => run.trace.status = IterStatus::Optimal,
            SolveStatus::Infeasible => return Err(OtsError::Infeasible(format!("scenario {}", scenario.scenario_id))),
            _ => {}
        }
    }
    if run.trace.status != IterStatus::Optimal {
        run.trace.status = if run.best.is_some() {
            IterStatus::BudgetExhausted
        } else {
            IterStatus::NoSolution
        };
    }
    Ok(finish(run, start))
}

fn finish(run: Run<'_>, start: Instant) -> (Option<SwitchingSolution>, IterationTrace) {
    let mut trace = run.trace;
    trace.wall_time_s = start.elapsed().as_secs_f64();
    (run.best, trace)
}
