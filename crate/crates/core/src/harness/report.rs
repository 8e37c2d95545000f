use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MethodId, RunReport};
use crate::bigm::BigMSet;
use crate::solver::{Engine, SolveStatus};
use crate::Result;

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: String,
    pub scenario_id: usize,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub final_gap: Option<f64>,
    pub wall_time_s: f64,
    pub bigm_compute_time_s: f64,
    pub error: Option<String>,
}

impl From<&RunReport> for RunRow {
    fn from(r: &RunReport) -> Self {
        RunRow {
            method: r.method.clone(),
            scenario_id: r.scenario_id,
            status: r.status,
            objective: r.objective,
            final_gap: r.final_gap,
            wall_time_s: r.wall_time_s,
            bigm_compute_time_s: r.bigm_compute_time_s,
            error: r.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub avg_time_s: f64,
    /// Over runs with an incumbent; empty when there is none.
    pub max_gap: Option<f64>,
    pub avg_gap: Option<f64>,
    pub unsolved: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub time_s: f64,
    pub solved: usize,
}

/// Per-method statistics in first-seen method order.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let runs: Vec<&RunRow> = rows.iter().filter(|r| r.method == method).collect();
            let gaps: Vec<f64> = runs.iter().filter_map(|r| r.final_gap).collect();
            SummaryRow {
                method: method.to_string(),
                avg_time_s: runs.iter().map(|r| r.wall_time_s).sum::<f64>() / runs.len() as f64,
                max_gap: gaps.iter().copied().reduce(f64::max),
                avg_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
                unsolved: runs.iter().filter(|r| r.status != SolveStatus::Optimal).count(),
            }
        })
        .collect()
}

/// Number of instances of `method` solved to optimality within each time.
pub fn solved_curve(rows: &[RunRow], method: &str) -> Vec<CurvePoint> {
    let mut times: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.status == SolveStatus::Optimal)
        .map(|r| r.wall_time_s)
        .collect();
    times.sort_by(f64::total_cmp);
    std::iter::once(CurvePoint { time_s: 0.0, solved: 0 })
        .chain(times.into_iter().enumerate().map(|(i, time_s)| CurvePoint { time_s, solved: i + 1 }))
        .collect()
}

pub fn read_runs_csv<R: Read>(reader: R) -> Result<Vec<RunRow>> {
    let mut csv = csv::Reader::from_reader(reader);
    Ok(csv.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone)]
pub struct BenchmarkBundle {
    pub engine: String,
    pub engine_version: String,
    pub methods: Vec<MethodId>,
    pub reports: Vec<RunReport>,
    pub bigms: Vec<BigMSet>,
    pub summary: Vec<SummaryRow>,
    pub curves: BTreeMap<String, Vec<CurvePoint>>,
}

impl BenchmarkBundle {
    pub(super) fn new(engine: &dyn Engine, methods: &[MethodId]) -> Self {
        BenchmarkBundle {
            engine: engine.name().to_string(),
            engine_version: engine.version(),
            methods: methods.to_vec(),
            reports: Vec::new(),
            bigms: Vec::new(),
            summary: Vec::new(),
            curves: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> Vec<RunRow> {
        self.reports.iter().map(RunRow::from).collect()
    }

    /// Recomputes summary and curves from the reports.
    pub fn finalize(&mut self) {
        let rows = self.rows();
        self.summary = summarize(&rows);
        self.curves = self
            .methods
            .iter()
            .map(|m| (m.to_string(), solved_curve(&rows, &m.to_string())))
            .collect();
    }

    /// Writes every report file into `dir`. `extra` must be a JSON object;
    /// its fields are merged into `meta.json`.
    pub fn write(&self, dir: &Path, extra: serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };

        let mut w = csv::Writer::from_writer(create("runs.csv")?);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_writer(create("summary.csv")?);
        if self.summary.is_empty() {
            w.write_record(["method", "avg_time_s", "max_gap", "avg_gap", "unsolved"])?;
        }
        for row in &self.summary {
            w.serialize(row)?;
        }
        w.flush()?;

        for m in &self.methods {
            let mut w = csv::Writer::from_writer(create(&format!("curve_{}.csv", m.slug()))?);
            w.write_record(["time_s", "solved"])?;
            for p in self.curves.get(&m.to_string()).into_iter().flatten() {
                w.serialize(p)?;
            }
            w.flush()?;
        }

        for r in &self.reports {
            if let Some(trace) = &r.trace {
                let name = format!("trace_{}_{}.csv", r.scenario_id, r.method.to_ascii_lowercase());
                trace.write_csv(create(&name)?)?;
            }
        }

        for set in &self.bigms {
            let name = format!("bigm_{}.csv", set.label().to_ascii_lowercase().trim_end_matches('%'));
            set.write_csv(create(&name)?)?;
        }

        let mut meta = serde_json::json!({
            "engine": self.engine,
            "engine_version": self.engine_version,
            "ots_core_version": env!("CARGO_PKG_VERSION"),
            "methods": self.methods.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "runs": self.reports.len(),
        });
        if let (Some(meta), serde_json::Value::Object(extra)) = (meta.as_object_mut(), extra) {
            meta.extend(extra);
        }
        serde_json::to_writer_pretty(create("meta.json")?, &meta)?;
        Ok(())
    }
}
