//! Solver-agnostic linear models and the switching-specific builders.

mod longest_path;
mod lp_format;
mod ots;

pub use longest_path::{
    build_exact_longest_path, build_relaxed_longest_path, solve_exact_longest_path, solve_relaxed_longest_path,
    LongestPathModel, LongestPathOutcome,
};
pub use lp_format::{read_lp, write_lp};
pub use ots::{
    build_dispatch_model, build_ots_model, build_restricted_model, extract_switching_solution, mtz_orientation,
    OtsLayout, OtsModel, SwitchingSolution, SOLUTION_TOLERANCE,
};

use std::collections::HashMap;
use std::fmt;

use crate::{OtsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violate the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

impl ObjectiveSense {
    /// True when `a` is strictly better than `b`.
    pub fn improves(self, a: f64, b: f64) -> bool {
        match self {
            ObjectiveSense::Minimize => a < b,
            ObjectiveSense::Maximize => a > b,
        }
    }
}

/// A violated bound, integrality requirement or constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    pub sense: ObjectiveSense,
    objective: Vec<(VarId, f64)>,
    warm_start: Option<Vec<f64>>,
    by_name: HashMap<String, VarId>,
    row_names: HashMap<String, usize>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>, sense: ObjectiveSense) -> Self {
        MilpModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            sense,
            objective: Vec::new(),
            warm_start: None,
            by_name: HashMap::new(),
            row_names: HashMap::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<VarId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(OtsError::Model(format!("duplicate variable name {name}")));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        if lower > upper {
            return Err(OtsError::Model(format!("variable {name} has empty domain [{lower}, {upper}]")));
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize> {
        let name = name.into();
        if self.row_names.contains_key(&name) {
            return Err(OtsError::Model(format!("duplicate constraint name {name}")));
        }
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(OtsError::Model(format!("constraint {name} references undeclared variable {}", v.0)));
        }
        let row = self.constraints.len();
        self.row_names.insert(name.clone(), row);
        self.constraints.push(Constraint {
            name,
            terms: merge_terms(terms),
            sense,
            rhs,
        });
        Ok(row)
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = merge_terms(terms);
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    /// Full-length starting point handed to the engine.
    pub fn set_warm_start(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.variables.len() {
            return Err(OtsError::Model(format!(
                "warm start has {} values for {} variables",
                values.len(),
                self.variables.len()
            )));
        }
        self.warm_start = Some(values);
        Ok(())
    }

    pub fn clear_warm_start(&mut self) {
        self.warm_start = None;
    }

    pub fn warm_start(&self) -> Option<&[f64]> {
        self.warm_start.as_deref()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.row_names.get(name).map(|&r| &self.constraints[r])
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn is_mip(&self) -> bool {
        self.num_binaries() > 0
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Every bound, integrality and constraint violation larger than `tol`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        if values.len() != self.variables.len() {
            out.push(Violation {
                what: format!("length: {} values for {} variables", values.len(), self.variables.len()),
                magnitude: f64::INFINITY,
            });
            return out;
        }
        for (var, &x) in self.variables.iter().zip(values) {
            let below = var.lower - x;
            let above = x - var.upper;
            if below > tol || above > tol {
                out.push(Violation {
                    what: format!("bounds of {}", var.name),
                    magnitude: below.max(above),
                });
            }
            if var.kind == VarKind::Binary {
                let frac = (x - x.round()).abs();
                if frac > tol {
                    out.push(Violation {
                        what: format!("integrality of {}", var.name),
                        magnitude: frac,
                    });
                }
            }
        }
        for row in &self.constraints {
            let v = row.violation(values);
            if v > tol {
                out.push(Violation {
                    what: format!("constraint {}", row.name),
                    magnitude: v,
                });
            }
        }
        out
    }

    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        self.violations(values, tol).is_empty()
    }
}

fn merge_terms(terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for (v, c) in terms {
        match merged.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 += c,
            None => merged.push((v, c)),
        }
    }
    merged.retain(|&(_, c)| c != 0.0);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_unknown_vars() {
        let mut m = MilpModel::new("t", ObjectiveSense::Minimize);
        let x = m.binary("x").unwrap();
        assert!(m.binary("x").is_err());
        assert!(m.add_constraint("c", vec![(VarId(7), 1.0)], Sense::Le, 1.0).is_err());
        m.add_constraint("c", vec![(x, 1.0)], Sense::Le, 1.0).unwrap();
        assert!(m.add_constraint("c", vec![(x, 1.0)], Sense::Le, 1.0).is_err());
    }

    #[test]
    fn merges_repeated_terms() {
        let mut m = MilpModel::new("t", ObjectiveSense::Minimize);
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let y = m.continuous("y", 0.0, 10.0).unwrap();
        m.add_constraint("c", vec![(x, 1.0), (y, 2.0), (x, -1.0)], Sense::Ge, 1.0).unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(y, 2.0)]);
    }

    #[test]
    fn reports_violations() {
        let mut m = MilpModel::new("t", ObjectiveSense::Minimize);
        let x = m.binary("x").unwrap();
        let y = m.continuous("y", 0.0, 5.0).unwrap();
        m.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 2.0).unwrap();
        assert!(m.is_feasible(&[1.0, 1.0], 1e-9));
        let v = m.violations(&[0.5, 6.0], 1e-9);
        let what: Vec<_> = v.iter().map(|v| v.what.as_str()).collect();
        assert_eq!(what, ["integrality of x", "bounds of y", "constraint sum"]);
    }
}
