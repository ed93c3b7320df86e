//! Deterministic-equivalent MILP of the two-stage program, its independent
//! feasibility checker and the mapping between solver assignments and
//! [`Schedule`]s.

mod build;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{validate_schedule, FlowTrace, Instance, Schedule};

pub use build::{build_deterministic_equivalent, build_with_options, BuildOptions};

/// Default absolute tolerance on constraint residuals and integrality.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse coefficients over variable indices, sorted by index with no
    /// repeats.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Where each decision of the emergency-department model lives in the
/// variable list. Per-pair tables follow [`Instance::staffed_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub instance: Instance,
    pub scenarios: usize,
    /// `x[k][t][n - 1]`
    pub x: Vec<Vec<Vec<usize>>>,
    pub p: Vec<Vec<usize>>,
    pub s: Vec<Vec<usize>>,
    pub e: Vec<Vec<usize>>,
    pub b: Vec<usize>,
    pub sb: Vec<usize>,
    pub eb: Vec<usize>,
    /// `waiting[w][t][q]`
    pub waiting: Vec<Vec<Vec<usize>>>,
    pub served: Vec<Vec<Vec<usize>>>,
}

/// A minimization MILP.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    /// Present when the model was built from an instance.
    pub layout: Option<ModelLayout>,
}

impl MilpModel {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            layout: None,
        }
    }

    pub fn add_variable(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    /// Adds a constraint; repeated variables in `terms` are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: String,
        mut terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.constraints.push(Constraint {
            name,
            terms: merged,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * assignment[v]).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("instance is invalid: {0}")]
    InvalidInstance(String),
    #[error("scenario {0} does not match the instance dimensions")]
    ScenarioMismatch(usize),
    #[error("at least one scenario is required")]
    NoScenarios,
    #[error("assignment has {found} values, model has {expected} variables")]
    MissingVariables { expected: usize, found: usize },
    #[error("model carries no emergency-department layout")]
    NoLayout,
    #[error("variable {name} = {value} is not integral")]
    Integrality { name: String, value: f64 },
    #[error("extracted schedule violates {0}")]
    InvalidSchedule(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every constraint, bound and integrality requirement violated by
/// more than `tol` (absolute).
///
/// Bound and integrality violations are named `bound:<var>` and
/// `integrality:<var>`.
pub fn check_solution(
    model: &MilpModel,
    assignment: &[f64],
    tol: f64,
) -> Result<FeasibilityReport, MilpError> {
    if assignment.len() != model.variables.len() {
        return Err(MilpError::MissingVariables {
            expected: model.variables.len(),
            found: assignment.len(),
        });
    }
    let mut violations = Vec::new();
    for c in &model.constraints {
        let activity: f64 = c.terms.iter().map(|&(v, a)| a * assignment[v]).sum();
        let residual = match c.relation {
            Relation::Le => activity - c.rhs,
            Relation::Ge => c.rhs - activity,
            Relation::Eq => libm::fabs(activity - c.rhs),
        };
        if !(residual <= tol) {
            violations.push(Violation {
                constraint: c.name.clone(),
                residual,
            });
        }
    }
    for (var, &value) in model.variables.iter().zip(assignment) {
        let below = var.lower - value;
        let above = value - var.upper;
        let residual = below.max(above);
        if !(residual <= tol) {
            violations.push(Violation {
                constraint: format!("bound:{}", var.name),
                residual,
            });
        }
        if var.kind.is_integral() {
            let frac = libm::fabs(value - libm::round(value));
            if frac > tol {
                violations.push(Violation {
                    constraint: format!("integrality:{}", var.name),
                    residual: frac,
                });
            }
        }
    }
    Ok(FeasibilityReport { violations })
}

fn rounded(model: &MilpModel, assignment: &[f64], var: usize, tol: f64) -> Result<u32, MilpError> {
    let value = assignment[var];
    let r = libm::round(value);
    if libm::fabs(value - r) > tol || r < 0.0 {
        return Err(MilpError::Integrality {
            name: model.variables[var].name.clone(),
            value,
        });
    }
    Ok(r as u32)
}

/// Reads the first-stage decisions out of a solver assignment.
pub fn extract_schedule(
    model: &MilpModel,
    assignment: &[f64],
    tol: f64,
) -> Result<Schedule, MilpError> {
    let layout = model.layout.as_ref().ok_or(MilpError::NoLayout)?;
    if assignment.len() != model.variables.len() {
        return Err(MilpError::MissingVariables {
            expected: model.variables.len(),
            found: assignment.len(),
        });
    }
    let table = |ids: &Vec<Vec<usize>>| -> Result<Vec<Vec<u32>>, MilpError> {
        ids.iter()
            .map(|row| {
                row.iter()
                    .map(|&v| rounded(model, assignment, v, tol))
                    .collect()
            })
            .collect()
    };
    let vector = |ids: &Vec<usize>| -> Result<Vec<u32>, MilpError> {
        ids.iter()
            .map(|&v| rounded(model, assignment, v, tol))
            .collect()
    };
    let x = layout
        .x
        .iter()
        .map(|pair| {
            pair.iter()
                .map(|levels| {
                    levels
                        .iter()
                        .map(|&v| rounded(model, assignment, v, tol).map(|r| r == 1))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sched = Schedule {
        x,
        p: table(&layout.p)?,
        s: table(&layout.s)?,
        e: table(&layout.e)?,
        b: vector(&layout.b)?,
        sb: vector(&layout.sb)?,
        eb: vector(&layout.eb)?,
    };
    let report = validate_schedule(&layout.instance, &sched);
    if let Some(issue) = report.issues.first() {
        return Err(MilpError::InvalidSchedule(format!(
            "{}: {}",
            issue.path, issue.message
        )));
    }
    Ok(sched)
}

/// Expands a schedule and one flow trace per scenario into a full
/// assignment of the model's variables.
pub fn assemble_assignment(
    model: &MilpModel,
    sched: &Schedule,
    traces: &[FlowTrace],
) -> Result<Vec<f64>, MilpError> {
    let layout = model.layout.as_ref().ok_or(MilpError::NoLayout)?;
    if traces.len() != layout.scenarios {
        return Err(MilpError::ScenarioMismatch(traces.len()));
    }
    let mut values = alloc::vec![0.0; model.variables.len()];
    for (k, pair) in layout.x.iter().enumerate() {
        for (t, levels) in pair.iter().enumerate() {
            for (n, &v) in levels.iter().enumerate() {
                values[v] = if sched.x[k][t][n] { 1.0 } else { 0.0 };
            }
            values[layout.p[k][t]] = f64::from(sched.p[k][t]);
            values[layout.s[k][t]] = f64::from(sched.s[k][t]);
            values[layout.e[k][t]] = f64::from(sched.e[k][t]);
        }
    }
    for (t, &v) in layout.b.iter().enumerate() {
        values[v] = f64::from(sched.b[t]);
        values[layout.sb[t]] = f64::from(sched.sb[t]);
        values[layout.eb[t]] = f64::from(sched.eb[t]);
    }
    for (w, trace) in traces.iter().enumerate() {
        for (t, row) in layout.waiting[w].iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                values[v] = trace.waiting[t][q];
                values[layout.served[w][t][q]] = trace.served[t][q];
            }
        }
    }
    Ok(values)
}
