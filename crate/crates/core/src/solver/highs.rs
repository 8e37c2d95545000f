#![allow(non_upper_case_globals)]

use std::ffi::{c_char, c_int, c_void, CString};
use std::time::Instant;

use highs_sys::*;
use log::{debug, warn};

use super::{relative_gap, Engine, Incumbent, SolveOutcome, SolveRequest, SolveStatus, FEASIBILITY_TOLERANCE};
use crate::model::{MilpModel, ObjectiveSense, Sense, VarKind};
use crate::{OtsError, Result};

/// In-process HiGHS adapter.
///
/// Improving incumbents are collected through the MIP solution callbacks
/// with their wall-clock discovery time. A feasible warm start is recorded
/// as the first incumbent at time zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsEngine;

struct Session {
    ptr: *mut c_void,
}

impl Session {
    fn new() -> Self {
        Session {
            ptr: unsafe { Highs_create() },
        }
    }

    fn set_bool(&self, name: &str, v: bool) -> Result<()> {
        let key = CString::new(name).expect("option name");
        check(unsafe { Highs_setBoolOptionValue(self.ptr, key.as_ptr(), v as HighsInt) }, name)
    }

    fn set_int(&self, name: &str, v: i32) -> Result<()> {
        let key = CString::new(name).expect("option name");
        check(unsafe { Highs_setIntOptionValue(self.ptr, key.as_ptr(), v) }, name)
    }

    fn set_double(&self, name: &str, v: f64) -> Result<()> {
        let key = CString::new(name).expect("option name");
        check(unsafe { Highs_setDoubleOptionValue(self.ptr, key.as_ptr(), v) }, name)
    }

    fn int_info(&self, name: &str) -> Option<i32> {
        let key = CString::new(name).expect("info name");
        let mut v = 0;
        let status = unsafe { Highs_getIntInfoValue(self.ptr, key.as_ptr(), &mut v) };
        (status == kHighsStatusOk).then_some(v)
    }

    fn double_info(&self, name: &str) -> Option<f64> {
        let key = CString::new(name).expect("info name");
        let mut v = 0.0;
        let status = unsafe { Highs_getDoubleInfoValue(self.ptr, key.as_ptr(), &mut v) };
        (status == kHighsStatusOk).then_some(v)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.ptr) }
    }
}

fn check(status: HighsInt, what: &str) -> Result<()> {
    if status == kHighsStatusError {
        Err(OtsError::Engine(format!("HiGHS rejected {what}")))
    } else {
        Ok(())
    }
}

struct Recorder<'a> {
    model: &'a MilpModel,
    start: Instant,
    incumbents: Vec<Incumbent>,
    pool: Vec<Incumbent>,
}

impl Recorder<'_> {
    fn offer(&mut self, values: Vec<f64>) {
        let objective = self.model.objective_value(&values);
        let improves = match self.incumbents.last() {
            None => true,
            Some(best) => self.model.sense.improves(objective, best.objective),
        };
        let entry = Incumbent {
            objective,
            values,
            time: self.start.elapsed().as_secs_f64(),
        };
        if improves {
            self.incumbents.push(entry);
        } else if !self.incumbents.iter().chain(&self.pool).any(|i| i.values == entry.values) {
            self.pool.push(entry);
        }
    }
}

unsafe extern "C" fn on_event(
    kind: c_int,
    _message: *const c_char,
    out: *const HighsCallbackDataOut,
    _input: *mut HighsCallbackDataIn,
    user: *mut c_void,
) {
    if out.is_null() || user.is_null() {
        return;
    }
    if kind != kHighsCallbackMipImprovingSolution && kind != kHighsCallbackMipSolution {
        return;
    }
    let rec = &mut *(user as *mut Recorder);
    let out = &*out;
    let n = rec.model.num_vars();
    if out.mip_solution.is_null() || out.mip_solution_size as usize != n {
        return;
    }
    let values = std::slice::from_raw_parts(out.mip_solution, n).to_vec();
    rec.offer(values);
}

impl Engine for HighsEngine {
    fn name(&self) -> &str {
        "highs"
    }

    fn version(&self) -> String {
        // SAFETY: HiGHS returns a static NUL-terminated string.
        unsafe { std::ffi::CStr::from_ptr(Highs_version()) }.to_string_lossy().into_owned()
    }

    fn solve(&self, model: &MilpModel, request: &SolveRequest) -> Result<SolveOutcome> {
        request.validate()?;
        let start = Instant::now();
        let n = model.num_vars();
        let sense = model.sense;
        if n == 0 {
            return Ok(solve_empty(model, start));
        }
        let session = Session::new();
        session.set_bool("output_flag", false)?;
        session.set_double("time_limit", request.time_limit)?;
        session.set_double("mip_rel_gap", request.rel_gap_target)?;
        session.set_int("threads", request.threads as i32)?;
        session.set_int("random_seed", 0)?;
        if let Some(limit) = request.solution_limit {
            session.set_int("mip_max_improving_sols", limit.min(i32::MAX as usize) as i32)?;
        }
        if request.integrality_emphasis {
            session.set_double("mip_feasibility_tolerance", 1e-8)?;
        }

        let mut col_cost = vec![0.0; n];
        for &(v, c) in model.objective() {
            col_cost[v.0] += c;
        }
        let col_lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let col_upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        let mut row_lower = Vec::with_capacity(model.num_constraints());
        let mut row_upper = Vec::with_capacity(model.num_constraints());
        let mut a_start = Vec::with_capacity(model.num_constraints());
        let mut a_index = Vec::new();
        let mut a_value = Vec::new();
        for row in model.constraints() {
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            row_lower.push(lo);
            row_upper.push(hi);
            a_start.push(a_index.len() as HighsInt);
            for &(v, c) in &row.terms {
                a_index.push(v.0 as HighsInt);
                a_value.push(c);
            }
        }
        let integrality: Vec<HighsInt> = model
            .variables()
            .iter()
            .map(|v| match v.kind {
                VarKind::Binary => kHighsVarTypeInteger,
                VarKind::Continuous => kHighsVarTypeContinuous,
            })
            .collect();
        let is_mip = model.is_mip();
        let obj_sense = match sense {
            ObjectiveSense::Minimize => kHighsObjSenseMinimize,
            ObjectiveSense::Maximize => kHighsObjSenseMaximize,
        };
        let status = unsafe {
            Highs_passMip(
                session.ptr,
                n as HighsInt,
                row_lower.len() as HighsInt,
                a_index.len() as HighsInt,
                kHighsMatrixFormatRowwise,
                obj_sense,
                0.0,
                col_cost.as_ptr(),
                col_lower.as_ptr(),
                col_upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                a_start.as_ptr(),
                a_index.as_ptr(),
                a_value.as_ptr(),
                if is_mip { integrality.as_ptr() } else { std::ptr::null() },
            )
        };
        check(status, "the model")?;

        let mut rec = Box::new(Recorder {
            model,
            start,
            incumbents: Vec::new(),
            pool: Vec::new(),
        });
        let warm = request.warm_start.as_deref().or(model.warm_start());
        if let Some(ws) = warm {
            if ws.len() != n {
                return Err(OtsError::Model(format!("warm start has {} values for {n} variables", ws.len())));
            }
            if model.is_feasible(ws, FEASIBILITY_TOLERANCE) {
                rec.offer(ws.to_vec());
            } else {
                debug!("warm start for {} is infeasible, passing it as a hint only", model.name);
            }
            if is_mip {
                let status = unsafe {
                    Highs_setSolution(session.ptr, ws.as_ptr(), std::ptr::null(), std::ptr::null(), std::ptr::null())
                };
                if status == kHighsStatusError {
                    warn!("HiGHS refused the warm start for {}", model.name);
                }
            }
        }
        if is_mip {
            let user = &mut *rec as *mut Recorder as *mut c_void;
            unsafe {
                check(Highs_setCallback(session.ptr, Some(on_event), user), "the callback")?;
                check(Highs_startCallback(session.ptr, kHighsCallbackMipImprovingSolution), "the callback")?;
                check(Highs_startCallback(session.ptr, kHighsCallbackMipSolution), "the callback")?;
            }
        }

        let run_status = unsafe { Highs_run(session.ptr) };
        let model_status = unsafe { Highs_getModelStatus(session.ptr) };
        if is_mip {
            unsafe { Highs_setCallback(session.ptr, None, std::ptr::null_mut()) };
        }

        let primal_ok = session.int_info("primal_solution_status") == Some(2)
            && matches!(
                model_status,
                kHighsModelStatusOptimal
                    | kHighsModelStatusTimeLimit
                    | kHighsModelStatusIterationLimit
                    | kHighsModelStatusInterrupt
                    | kHighsModelStatusSolutionLimit
                    | kHighsModelStatusObjectiveBound
                    | kHighsModelStatusObjectiveTarget
            );
        if primal_ok {
            let mut col_value = vec![0.0; n];
            let mut row_value = vec![0.0; model.num_constraints()];
            let ok = unsafe {
                Highs_getSolution(
                    session.ptr,
                    col_value.as_mut_ptr(),
                    std::ptr::null_mut(),
                    row_value.as_mut_ptr(),
                    std::ptr::null_mut(),
                )
            };
            if ok != kHighsStatusError {
                rec.offer(col_value);
            }
        }

        let best = rec.incumbents.last().map(|i| i.objective);
        let mut message = None;
        let status = match model_status {
            kHighsModelStatusOptimal if best.is_some() => SolveStatus::Optimal,
            kHighsModelStatusInfeasible | kHighsModelStatusUnboundedOrInfeasible => SolveStatus::Infeasible,
            kHighsModelStatusUnbounded => SolveStatus::Unbounded,
            kHighsModelStatusTimeLimit
            | kHighsModelStatusIterationLimit
            | kHighsModelStatusInterrupt
            | kHighsModelStatusSolutionLimit
            | kHighsModelStatusObjectiveBound
            | kHighsModelStatusObjectiveTarget => {
                if best.is_some() {
                    SolveStatus::FeasibleTimeLimit
                } else {
                    SolveStatus::TimeLimit
                }
            }
            other => {
                message = Some(format!("HiGHS run status {run_status}, model status {other}"));
                SolveStatus::Error
            }
        };
        let worst = match sense {
            ObjectiveSense::Minimize => f64::NEG_INFINITY,
            ObjectiveSense::Maximize => f64::INFINITY,
        };
        let mut best_bound = if is_mip {
            session
                .double_info("mip_dual_bound")
                .filter(|b| b.is_finite())
                .unwrap_or(worst)
        } else if status == SolveStatus::Optimal {
            best.unwrap_or(worst)
        } else {
            worst
        };
        if status == SolveStatus::Optimal && !best_bound.is_finite() {
            best_bound = best.unwrap_or(worst);
        }
        if let Some(b) = best {
            // The bound never passes the best known objective.
            best_bound = match sense {
                ObjectiveSense::Minimize => best_bound.min(b),
                ObjectiveSense::Maximize => best_bound.max(b),
            };
        }
        let final_gap = best.map_or(f64::INFINITY, |b| relative_gap(sense, b, best_bound));
        let rec = *rec;
        Ok(SolveOutcome {
            status,
            incumbents: rec.incumbents,
            pool: rec.pool,
            best_bound,
            final_gap,
            wall_time: start.elapsed().as_secs_f64(),
            message,
        })
    }
}

/// A model without columns is decided by its constant rows alone.
fn solve_empty(model: &MilpModel, start: Instant) -> SolveOutcome {
    let feasible = model.is_feasible(&[], FEASIBILITY_TOLERANCE);
    let incumbents = if feasible {
        vec![Incumbent {
            objective: 0.0,
            values: Vec::new(),
            time: 0.0,
        }]
    } else {
        Vec::new()
    };
    SolveOutcome {
        status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
        incumbents,
        pool: Vec::new(),
        best_bound: if feasible { 0.0 } else { f64::NAN },
        final_gap: if feasible { 0.0 } else { f64::INFINITY },
        wall_time: start.elapsed().as_secs_f64(),
        message: None,
    }
}
