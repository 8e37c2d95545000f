//! Solve methodologies, batch runs over demand scenarios and report files.

mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bigm::{compute_bn, compute_lp, compute_sp, compute_sr, scale, BigMSet, Strategy, DEFAULT_PER_LINE_TIME_LIMIT};
use crate::iterative::{run_iterative, IterConfig, IterStatus, IterationTrace};
use crate::model::{build_ots_model, SwitchingSolution};
use crate::network::{DemandScenario, LineId, PowerNetwork};
use crate::solver::{decode_solution, Engine, SolveRequest, SolveStatus};
use crate::{OtsError, Result};

pub use report::{read_runs_csv, solved_curve, summarize, BenchmarkBundle, CurvePoint, RunRow, SummaryRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// One solve over the whole budget.
    SS,
    /// The iterative procedure.
    IT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodId {
    pub strategy: Strategy,
    /// Percentage added to every big-M value.
    pub scale_pct: Option<f64>,
    pub mode: Mode,
}

impl MethodId {
    pub fn new(strategy: Strategy, mode: Mode) -> Self {
        MethodId {
            strategy,
            scale_pct: None,
            mode,
        }
    }

    pub fn scaled(self, pct: f64) -> Self {
        MethodId {
            scale_pct: Some(pct),
            ..self
        }
    }

    /// BN, LP and SR in both modes.
    pub fn six() -> Vec<MethodId> {
        let mut all = Vec::new();
        for mode in [Mode::SS, Mode::IT] {
            for s in [Strategy::BN, Strategy::LP, Strategy::SR] {
                all.push(MethodId::new(s, mode));
            }
        }
        all
    }

    /// Label of the big-M set this method runs on, e.g. `LP+35%`.
    pub fn bigm_label(&self) -> String {
        match self.scale_pct {
            Some(p) => format!("{}+{p}%", self.strategy),
            None => self.strategy.to_string(),
        }
    }

    /// Lower-case form used in file names.
    pub fn slug(&self) -> String {
        self.to_string().to_ascii_lowercase()
    }

    pub fn parse_list(list: &str) -> Result<Vec<MethodId>> {
        list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:?}", self.strategy, self.mode)?;
        if let Some(p) = self.scale_pct {
            write!(f, "+{p}")?;
        }
        Ok(())
    }
}

impl FromStr for MethodId {
    type Err = OtsError;

    /// Accepts `sr-it`, `LP-SS+35` and the like.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || OtsError::invalid("method", format!("cannot parse '{s}', expected e.g. sr-it or lp-ss+35"));
        let (body, pct) = match s.split_once('+') {
            Some((b, p)) => {
                let p: f64 = p.trim_end_matches('%').parse().map_err(|_| bad())?;
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(bad());
                }
                (b, Some(p))
            }
            None => (s, None),
        };
        let (strategy, mode) = body.split_once('-').ok_or_else(bad)?;
        let strategy: Strategy = strategy.parse()?;
        if !matches!(strategy, Strategy::BN | Strategy::SR | Strategy::LP) {
            return Err(OtsError::invalid("method", format!("strategy {strategy} is not a solve method")));
        }
        let mode = match mode.to_ascii_uppercase().as_str() {
            "SS" => Mode::SS,
            "IT" => Mode::IT,
            _ => return Err(bad()),
        };
        Ok(MethodId {
            strategy,
            scale_pct: pct,
            mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Budget of each solve (s). Also the total budget of the iterative runs.
    pub time_limit: f64,
    pub rel_gap: f64,
    /// Stage schedule of the iterative runs; its total budget is replaced by
    /// `time_limit`.
    pub iter: IterConfig,
    /// Per-line budget of the exact longest-path big-Ms (s).
    pub bigm_time_limit: f64,
    pub workers: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            time_limit: 3600.0,
            rel_gap: 1e-4,
            iter: IterConfig::default(),
            bigm_time_limit: DEFAULT_PER_LINE_TIME_LIMIT,
            workers: 1,
        }
    }
}

impl HarnessConfig {
    pub fn iter_config(&self) -> IterConfig {
        IterConfig {
            total_budget: self.time_limit,
            rel_gap: self.rel_gap,
            ..self.iter.clone()
        }
    }

    pub fn validate(&self, methods: &[MethodId]) -> Result<()> {
        SolveRequest {
            time_limit: self.time_limit,
            rel_gap_target: self.rel_gap,
            ..SolveRequest::default()
        }
        .validate()?;
        if self.workers == 0 {
            return Err(OtsError::invalid("harness config", "worker count must be positive"));
        }
        if !(self.bigm_time_limit > 0.0) {
            return Err(OtsError::invalid("harness config", "big-M time limit must be positive"));
        }
        if methods.iter().any(|m| m.mode == Mode::IT) {
            self.iter_config().validate()?;
        }
        Ok(())
    }

    fn request(&self) -> SolveRequest {
        SolveRequest {
            time_limit: self.time_limit,
            rel_gap_target: self.rel_gap,
            ..SolveRequest::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: String,
    pub scenario_id: usize,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub final_gap: Option<f64>,
    /// Solve time only; big-M time is reported on its own.
    pub wall_time_s: f64,
    pub bigm_compute_time_s: f64,
    pub trace: Option<IterationTrace>,
    pub solution: Option<SwitchingSolution>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn failed(method: String, scenario_id: usize, error: &OtsError, wall_time_s: f64) -> Self {
        RunReport {
            method,
            scenario_id,
            status: SolveStatus::Error,
            objective: None,
            final_gap: None,
            wall_time_s,
            bigm_compute_time_s: 0.0,
            trace: None,
            solution: None,
            error: Some(error.to_string()),
        }
    }
}

/// Big-M set of one strategy, scaled when `scale_pct` is set.
pub fn compute_bigms(
    network: &PowerNetwork,
    strategy: Strategy,
    scale_pct: Option<f64>,
    cfg: &HarnessConfig,
    engine: &dyn Engine,
) -> Result<BigMSet> {
    let base = match strategy {
        Strategy::BN => compute_bn(network),
        Strategy::SR => compute_sr(network, engine, cfg.bigm_time_limit)?,
        Strategy::LP => compute_lp(network, engine, cfg.bigm_time_limit)?,
        other => return Err(OtsError::invalid("strategy", format!("{other} needs a topology"))),
    };
    match scale_pct {
        Some(p) => scale(&base, p),
        None => Ok(base),
    }
}

/// Computes the method's big-Ms, then runs it.
pub fn run_method(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    method: MethodId,
    cfg: &HarnessConfig,
    engine: &dyn Engine,
) -> Result<RunReport> {
    cfg.validate(&[method])?;
    let bigms = compute_bigms(network, method.strategy, method.scale_pct, cfg, engine)
        .map_err(|e| e.context(format!("{method} big-Ms")))?;
    run_method_with(network, scenario, method, &bigms, cfg, engine, None)
}

/// Runs `method` on precomputed big-Ms. `warm` seeds single-step solves.
pub fn run_method_with(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    method: MethodId,
    bigms: &BigMSet,
    cfg: &HarnessConfig,
    engine: &dyn Engine,
    warm: Option<&SwitchingSolution>,
) -> Result<RunReport> {
    let ctx = |e: OtsError| e.context(format!("{method} on scenario {}", scenario.scenario_id));
    let mut report = match method.mode {
        Mode::SS => single_step(network, scenario, bigms, None, cfg, engine, warm).map_err(ctx)?,
        Mode::IT => {
            let t = Instant::now();
            let (solution, trace) = run_iterative(network, scenario, bigms, &cfg.iter_config(), engine).map_err(ctx)?;
            let status = match trace.status {
                IterStatus::Optimal => SolveStatus::Optimal,
                IterStatus::BudgetExhausted => SolveStatus::FeasibleTimeLimit,
                IterStatus::NoSolution => SolveStatus::TimeLimit,
            };
            RunReport {
                method: String::new(),
                scenario_id: scenario.scenario_id,
                status,
                objective: solution.as_ref().map(|s| s.objective_cost),
                final_gap: solution.as_ref().and(trace.final_gap()),
                wall_time_s: t.elapsed().as_secs_f64(),
                bigm_compute_time_s: 0.0,
                trace: Some(trace),
                solution,
                error: None,
            }
        }
    };
    report.method = method.to_string();
    report.bigm_compute_time_s = bigms.total_compute_time();
    Ok(report)
}

fn single_step(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    bigms: &BigMSet,
    fixed_closed: Option<&BTreeSet<LineId>>,
    cfg: &HarnessConfig,
    engine: &dyn Engine,
    warm: Option<&SwitchingSolution>,
) -> Result<RunReport> {
    let t = Instant::now();
    let mut ots = build_ots_model(network, scenario, bigms)?;
    if let Some(tree) = fixed_closed {
        for (i, &l) in ots.layout.lines.clone().iter().enumerate() {
            if tree.contains(&l) {
                ots.model.set_bounds(ots.layout.x[i], 1.0, 1.0);
            }
        }
    }
    if let Some(w) = warm {
        ots.model.set_warm_start(ots.values_of(w))?;
    }
    let out = engine.solve(&ots.model, &cfg.request())?;
    let solution = match out.best() {
        Some(inc) => Some(decode_solution(&ots, &inc.values, network, scenario, engine)?),
        None => None,
    };
    Ok(RunReport {
        method: String::new(),
        scenario_id: scenario.scenario_id,
        status: out.status,
        objective: solution.as_ref().map(|s| s.objective_cost),
        final_gap: solution.as_ref().map(|_| out.final_gap),
        wall_time_s: t.elapsed().as_secs_f64(),
        bigm_compute_time_s: 0.0,
        trace: None,
        solution,
        error: None,
    })
}

/// Minimum-weight spanning tree under the `F/b` edge weights.
pub fn default_spanning_tree(network: &PowerNetwork) -> BTreeSet<LineId> {
    network.to_multigraph().minimum_spanning_tree()
}

/// Label of the spanning-tree baseline in reports.
pub const BASELINE_LABEL: &str = "ST-SS";

/// Switching model with every line of `tree` forced closed. Big-Ms come
/// from shortest paths over the tree, naive values where none exists.
pub fn run_spanning_tree_baseline(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    tree: &BTreeSet<LineId>,
    cfg: &HarnessConfig,
    engine: &dyn Engine,
) -> Result<RunReport> {
    if let Some(l) = tree.iter().find(|l| network.line(**l).is_none()) {
        return Err(OtsError::invalid("spanning tree", format!("unknown line {l}")));
    }
    if tree.len() + 1 != network.bus_count() || !network.is_connected_by(tree) {
        return Err(OtsError::invalid(
            "spanning tree",
            format!("{} lines do not span {} buses as a tree", tree.len(), network.bus_count()),
        ));
    }
    let bigms = compute_sp(network, tree, &compute_bn(network))?;
    let mut report = single_step(network, scenario, &bigms, Some(tree), cfg, engine, None)
        .map_err(|e| e.context(format!("spanning-tree baseline on scenario {}", scenario.scenario_id)))?;
    report.method = BASELINE_LABEL.into();
    report.bigm_compute_time_s = bigms.total_compute_time();
    Ok(report)
}

/// Every method on every scenario. Big-Ms are computed once per set; each
/// (scenario, method) cell runs on its own, up to `cfg.workers` at a time.
/// Failed cells are recorded and the batch continues.
pub fn run_benchmark(
    network: &PowerNetwork,
    scenarios: &[DemandScenario],
    methods: &[MethodId],
    cfg: &HarnessConfig,
    engine: &dyn Engine,
) -> Result<BenchmarkBundle> {
    let mut bundle = BenchmarkBundle::new(engine, methods);
    if scenarios.is_empty() || methods.is_empty() {
        return Ok(bundle);
    }
    cfg.validate(methods)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| OtsError::Engine(format!("cannot start workers: {e}")))?;

    pool.install(|| -> Result<()> {
        let mut bases: Vec<BigMSet> = Vec::new();
        for m in methods {
            if !bases.iter().any(|b| b.strategy == m.strategy) {
                info!("computing {} big-Ms", m.strategy);
                bases.push(compute_bigms(network, m.strategy, None, cfg, engine)?);
            }
        }
        for m in methods {
            let label = m.bigm_label();
            if bundle.bigms.iter().any(|b| b.label() == label) {
                continue;
            }
            let base = bases.iter().find(|b| b.strategy == m.strategy).expect("base computed above");
            bundle.bigms.push(match m.scale_pct {
                Some(p) => scale(base, p)?,
                None => base.clone(),
            });
        }
        Ok(())
    })?;

    let cells: Vec<(&DemandScenario, MethodId)> =
        scenarios.iter().flat_map(|s| methods.iter().map(move |&m| (s, m))).collect();
    let sets = &bundle.bigms;
    bundle.reports = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, m)| {
                let t = Instant::now();
                let bigms = sets.iter().find(|b| b.label() == m.bigm_label()).expect("set computed above");
                match run_method_with(network, s, m, bigms, cfg, engine, None) {
                    Ok(r) => {
                        info!("{m} scenario {}: {:?} {:?}", s.scenario_id, r.status, r.objective);
                        r
                    }
                    Err(e) => {
                        warn!("{m} scenario {} failed: {e}", s.scenario_id);
                        let mut r = RunReport::failed(m.to_string(), s.scenario_id, &e, t.elapsed().as_secs_f64());
                        r.bigm_compute_time_s = bigms.total_compute_time();
                        r
                    }
                }
            })
            .collect()
    });
    bundle.finalize();
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::solver::{enumerate_topologies_oracle, HighsEngine};

    fn small_cfg() -> HarnessConfig {
        HarnessConfig {
            time_limit: 60.0,
            iter: IterConfig {
                outer_times: vec![2.0, 4.0, 8.0],
                heuristic_time: 2.0,
                ..IterConfig::default()
            },
            bigm_time_limit: 10.0,
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn method_names() {
        let m: MethodId = "sr-it".parse().unwrap();
        assert_eq!(m, MethodId::new(Strategy::SR, Mode::IT));
        assert_eq!(m.to_string(), "SR-IT");
        let m: MethodId = "LP-SS+35".parse().unwrap();
        assert_eq!(m.scale_pct, Some(35.0));
        assert_eq!(m.to_string(), "LP-SS+35");
        assert_eq!(m.bigm_label(), "LP+35%");
        assert_eq!(m.slug(), "lp-ss+35");
        assert!("sp-ss".parse::<MethodId>().is_err());
        assert!("sr".parse::<MethodId>().is_err());
        assert!("sr-xx".parse::<MethodId>().is_err());
        assert!("lp-ss+-5".parse::<MethodId>().is_err());
        let six = MethodId::parse_list("bn-ss,sr-ss,lp-ss,bn-it,sr-it,lp-it").unwrap();
        let mut a: Vec<String> = six.iter().map(|m| m.to_string()).collect();
        let mut b: Vec<String> = MethodId::six().iter().map(|m| m.to_string()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn modes_agree_with_oracle() {
        let net = five_bus();
        let s = DemandScenario::baseline(&net);
        let oracle = enumerate_topologies_oracle(&net, &s, &HighsEngine).unwrap().objective_cost;
        for name in ["sr-ss", "sr-it", "lp-ss+35"] {
            let r = run_method(&net, &s, name.parse().unwrap(), &small_cfg(), &HighsEngine).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{name}");
            assert!((r.objective.unwrap() - oracle).abs() <= 1e-6 * oracle, "{name}");
            assert_eq!(r.trace.is_some(), name.ends_with("it"));
        }
    }

    #[test]
    fn baseline_is_never_cheaper() {
        let net = triangle();
        let s = DemandScenario::baseline(&net);
        let tree = default_spanning_tree(&net);
        assert!(tree.contains(&3));
        let base = run_spanning_tree_baseline(&net, &s, &tree, &small_cfg(), &HighsEngine).unwrap();
        let full = run_method(&net, &s, "bn-ss".parse().unwrap(), &small_cfg(), &HighsEngine).unwrap();
        assert_eq!(base.method, BASELINE_LABEL);
        assert!(full.objective.unwrap() < base.objective.unwrap() - 1.0);
        let short: BTreeSet<LineId> = [1].into();
        assert!(run_spanning_tree_baseline(&net, &s, &short, &small_cfg(), &HighsEngine).is_err());
    }

    #[test]
    fn empty_batch() {
        let net = triangle();
        let b = run_benchmark(&net, &[], &MethodId::six(), &small_cfg(), &HighsEngine).unwrap();
        assert!(b.reports.is_empty() && b.summary.is_empty());
    }

    #[test]
    fn batch_writes_consistent_reports() {
        let net = five_bus();
        let scenarios = crate::network::sample_scenarios(&net, 2, 3);
        let methods = MethodId::parse_list("bn-ss,sr-it").unwrap();
        let cfg = HarnessConfig {
            workers: 2,
            ..small_cfg()
        };
        let b = run_benchmark(&net, &scenarios, &methods, &cfg, &HighsEngine).unwrap();
        assert_eq!(b.reports.len(), 4);
        let dir = tempfile::tempdir().unwrap();
        b.write(dir.path(), serde_json::json!({"seed": 3})).unwrap();
        for f in ["runs.csv", "summary.csv", "curve_bn-ss.csv", "curve_sr-it.csv", "bigm_bn.csv", "bigm_sr.csv", "meta.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(dir.path().join("trace_1_sr-it.csv").exists());
        let rows = read_runs_csv(std::fs::File::open(dir.path().join("runs.csv")).unwrap()).unwrap();
        assert_eq!(summarize(&rows), b.summary);
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("method,avg_time_s,max_gap,avg_gap,unsolved\n"));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
        assert_eq!(meta["engine"], "highs");
        assert_eq!(meta["seed"], 3);
    }
}
