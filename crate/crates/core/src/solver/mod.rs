//! Engine-neutral solve contract, the HiGHS adapter and a brute-force
//! topology oracle.

mod highs;

pub use highs::HighsEngine;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use log::debug;

use crate::model::{
    build_dispatch_model, extract_switching_solution, MilpModel, ObjectiveSense, OtsModel, SwitchingSolution,
};
use crate::network::{DemandScenario, LineId, PowerNetwork};
use crate::{OtsError, Result};

/// Environment variable naming the engine adapter.
pub const ENGINE_ENV: &str = "OTS_ENGINE";

/// Largest line count accepted by [`enumerate_topologies_oracle`].
pub const ORACLE_MAX_LINES: usize = 16;

/// Tolerance for checking warm starts and oracle solutions.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub rel_gap_target: f64,
    /// Overrides the model's own warm start when set.
    pub warm_start: Option<Vec<f64>>,
    pub integrality_emphasis: bool,
    pub threads: usize,
    /// Stop after this many improving solutions.
    pub solution_limit: Option<usize>,
}

impl Default for SolveRequest {
    fn default() -> Self {
        SolveRequest {
            time_limit: 3600.0,
            rel_gap_target: 1e-4,
            warm_start: None,
            integrality_emphasis: true,
            threads: 1,
            solution_limit: None,
        }
    }
}

impl SolveRequest {
    pub fn with_time_limit(time_limit: f64) -> Self {
        SolveRequest {
            time_limit,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_limit > 0.0) {
            return Err(OtsError::invalid("solve request", format!("time limit must be positive, got {}", self.time_limit)));
        }
        if !(0.0..1.0).contains(&self.rel_gap_target) {
            return Err(OtsError::invalid(
                "solve request",
                format!("gap target must lie in [0, 1), got {}", self.rel_gap_target),
            ));
        }
        if self.solution_limit == Some(0) {
            return Err(OtsError::invalid("solve request", "solution limit must be positive"));
        }
        if self.threads == 0 {
            return Err(OtsError::invalid("solve request", "thread count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    /// Budget exhausted before any feasible point was found.
    TimeLimit,
    Infeasible,
    Unbounded,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub objective: f64,
    pub values: Vec<f64>,
    /// Seconds since the solve started.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Strictly improving feasible points in discovery order.
    pub incumbents: Vec<Incumbent>,
    /// Further feasible points reported by the engine that did not improve.
    pub pool: Vec<Incumbent>,
    pub best_bound: f64,
    pub final_gap: f64,
    pub wall_time: f64,
    pub message: Option<String>,
}

impl SolveOutcome {
    pub fn best(&self) -> Option<&Incumbent> {
        self.incumbents.last()
    }

    pub fn objective(&self) -> Option<f64> {
        self.best().map(|i| i.objective)
    }

    /// Every feasible point seen, best first.
    pub fn all_solutions(&self, sense: ObjectiveSense) -> Vec<&Incumbent> {
        let mut all: Vec<&Incumbent> = self.incumbents.iter().chain(&self.pool).collect();
        all.sort_by(|a, b| match sense {
            ObjectiveSense::Minimize => a.objective.total_cmp(&b.objective),
            ObjectiveSense::Maximize => b.objective.total_cmp(&a.objective),
        });
        all
    }
}

/// Relative gap between an incumbent and a bound, 0 when both vanish.
pub fn relative_gap(sense: ObjectiveSense, incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    let diff = match sense {
        ObjectiveSense::Minimize => incumbent - bound,
        ObjectiveSense::Maximize => bound - incumbent,
    }
    .max(0.0);
    if diff == 0.0 {
        0.0
    } else {
        diff / incumbent.abs().max(1e-10)
    }
}

pub trait Engine: Send + Sync {
    fn name(&self) -> &str;

    fn version(&self) -> String {
        "unknown".into()
    }

    fn solve(&self, model: &MilpModel, request: &SolveRequest) -> Result<SolveOutcome>;
}

/// Engine selected by the `OTS_ENGINE` environment variable (default `highs`).
pub fn engine_from_env() -> Result<Arc<dyn Engine>> {
    let name = std::env::var(ENGINE_ENV).unwrap_or_else(|_| "highs".into());
    engine_by_name(&name)
}

pub fn engine_by_name(name: &str) -> Result<Arc<dyn Engine>> {
    match name.to_ascii_lowercase().as_str() {
        "highs" => Ok(Arc::new(HighsEngine)),
        other => Err(OtsError::Engine(format!("unknown engine '{other}' (available: highs)"))),
    }
}

/// True when the closed lines of `x` connect every bus.
pub fn check_connectivity(x: &BTreeMap<LineId, bool>, network: &PowerNetwork) -> bool {
    let closed: BTreeSet<LineId> = x.iter().filter(|(_, &on)| on).map(|(&l, _)| l).collect();
    network.is_connected_by(&closed)
}

/// Cheapest connected topology by exhaustive enumeration of every on/off
/// pattern, each solved as a dispatch LP.
pub fn enumerate_topologies_oracle(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    engine: &dyn Engine,
) -> Result<SwitchingSolution> {
    let lines: Vec<LineId> = network.line_ids().collect();
    if lines.len() > ORACLE_MAX_LINES {
        return Err(OtsError::invalid(
            "network",
            format!("{} lines exceed the enumeration limit of {ORACLE_MAX_LINES}", lines.len()),
        ));
    }
    let mut best: Option<SwitchingSolution> = None;
    for mask in 0u32..(1 << lines.len()) {
        let closed: BTreeSet<LineId> = lines
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &l)| l)
            .collect();
        if closed.len() + 1 < network.bus_count() || !network.is_connected_by(&closed) {
            continue;
        }
        let sol = match redispatch(network, scenario, &closed, engine) {
            Ok(sol) => sol,
            Err(OtsError::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().map_or(true, |b| sol.objective_cost < b.objective_cost) {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| OtsError::Infeasible("every connected topology is infeasible".into()))
}

/// Decodes engine values into a verified solution. When the raw values miss
/// the verification tolerance (engine tolerances scaled by large big-Ms),
/// the rounded topology is re-dispatched exactly instead.
pub fn decode_solution(
    ots: &OtsModel,
    values: &[f64],
    network: &PowerNetwork,
    scenario: &DemandScenario,
    engine: &dyn Engine,
) -> Result<SwitchingSolution> {
    match extract_switching_solution(ots, values, network) {
        Ok(sol) => Ok(sol),
        Err(OtsError::Violation { what, magnitude }) if ots.layout.has_switching() => {
            debug!("re-dispatching a solution that violates {what} by {magnitude:.2e}");
            let closed: BTreeSet<LineId> = ots
                .layout
                .lines
                .iter()
                .zip(&ots.layout.x)
                .filter(|(_, x)| values[x.0] >= 0.5)
                .map(|(&l, _)| l)
                .collect();
            redispatch(network, scenario, &closed, engine)
        }
        Err(e) => Err(e),
    }
}

/// Optimal dispatch on a fixed topology as a verified solution.
pub fn redispatch(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    closed: &BTreeSet<LineId>,
    engine: &dyn Engine,
) -> Result<SwitchingSolution> {
    let dispatch = build_dispatch_model(network, scenario, closed)?;
    let out = engine.solve(&dispatch.model, &SolveRequest::with_time_limit(60.0))?;
    match (out.status, out.best()) {
        (SolveStatus::Optimal, Some(best)) => extract_switching_solution(&dispatch, &best.values, network),
        (SolveStatus::Infeasible, _) => Err(OtsError::Infeasible("dispatch on the given topology".into())),
        (status, _) => Err(OtsError::Engine(format!("dispatch LP ended with {status:?}"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionRecord {
    variable: String,
    value: f64,
}

/// Writes `variable,value` pairs in column order.
pub fn write_solution_file<W: Write>(model: &MilpModel, values: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (v, &x) in model.variables().iter().zip(values) {
        w.serialize(SolutionRecord {
            variable: v.name.clone(),
            value: x,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `variable,value` pairs into a column vector; every column must
/// appear exactly once.
pub fn read_solution_file<R: Read>(model: &MilpModel, reader: R) -> Result<Vec<f64>> {
    let mut values = vec![None; model.num_vars()];
    for (row, rec) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        let rec: SolutionRecord = rec?;
        let line = row + 2;
        let Some(v) = model.var(&rec.variable) else {
            return Err(OtsError::Syntax {
                line,
                message: format!("unknown variable '{}'", rec.variable),
            });
        };
        if values[v.0].replace(rec.value).is_some() {
            return Err(OtsError::Syntax {
                line,
                message: format!("variable '{}' given twice", rec.variable),
            });
        }
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| OtsError::Model(format!("no value for {}", model.variables()[i].name))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sense, VarKind};

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(ObjectiveSense::Minimize, 100.0, 99.0), 0.01);
        assert_eq!(relative_gap(ObjectiveSense::Maximize, 100.0, 110.0), 0.1);
        assert_eq!(relative_gap(ObjectiveSense::Minimize, 0.0, 0.0), 0.0);
        assert_eq!(relative_gap(ObjectiveSense::Minimize, 5.0, 6.0), 0.0);
    }

    #[test]
    fn request_validation() {
        assert!(SolveRequest::default().validate().is_ok());
        assert!(SolveRequest::with_time_limit(0.0).validate().is_err());
        let r = SolveRequest {
            rel_gap_target: 1.0,
            ..SolveRequest::default()
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn unknown_engine_is_rejected() {
        assert!(engine_by_name("highs").is_ok());
        assert!(matches!(engine_by_name("cplex"), Err(OtsError::Engine(_))));
    }

    #[test]
    fn solution_file_round_trip() {
        let mut m = MilpModel::new("t", ObjectiveSense::Minimize);
        m.add_var("x_1", VarKind::Binary, 0.0, 1.0).unwrap();
        let y = m.continuous("f_1", -1.0, 1.0).unwrap();
        m.add_constraint("c", vec![(y, 1.0)], Sense::Le, 1.0).unwrap();
        let mut buf = Vec::new();
        write_solution_file(&m, &[1.0, -0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "variable,value\nx_1,1.0\nf_1,-0.25\n");
        assert_eq!(read_solution_file(&m, buf.as_slice()).unwrap(), vec![1.0, -0.25]);
        assert!(read_solution_file(&m, "variable,value\nx_1,1\n".as_bytes()).is_err());
        assert!(read_solution_file(&m, "variable,value\nq,1\n".as_bytes()).is_err());
    }
}
