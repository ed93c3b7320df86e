//! Exact MILP solving: a bounded primal simplex for the relaxations and
//! best-first branch and bound on top of it.

mod bnb;
pub mod lp;
mod lu;

pub use bnb::{solve_milp, solve_milp_with_clock};
pub use lp::{solve_lp, LpProblem, LpResult, LpRow, LpStatus};

use alloc::vec::Vec;

use crate::milp::{MilpModel, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    /// Fractional part closest to one half; ties go to the lowest index.
    #[default]
    MostFractional,
    /// Lowest-index fractional variable.
    FirstFractional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub integrality_tol: f64,
    pub node_limit: Option<u64>,
    /// Only honoured by [`solve_milp_with_clock`].
    pub time_limit_secs: Option<f64>,
    pub branching: Branching,
    /// A known feasible assignment; ignored if it fails the checker.
    pub start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            abs_gap: 1e-6,
            rel_gap: 1e-9,
            integrality_tol: 1e-6,
            node_limit: None,
            time_limit_secs: None,
            branching: Branching::MostFractional,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
    NumericalFailure,
}

impl MilpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MilpStatus::Optimal => "optimal",
            MilpStatus::Infeasible => "infeasible",
            MilpStatus::Unbounded => "unbounded",
            MilpStatus::NodeLimit => "node_limit",
            MilpStatus::TimeLimit => "time_limit",
            MilpStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, MilpStatus::NodeLimit | MilpStatus::TimeLimit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Best feasible assignment found, if any.
    pub assignment: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    pub nodes: u64,
    /// Global lower bound each time a node is taken off the queue.
    pub bound_history: Vec<f64>,
    /// Nodes dropped because their relaxation could not be solved.
    pub numerical_skips: u64,
}

impl MilpResult {
    pub fn gap(&self) -> Option<f64> {
        self.objective.map(|z| z - self.best_bound)
    }
}

/// LP relaxation of a model: integrality dropped, bounds kept.
pub fn relaxation(model: &MilpModel) -> LpProblem {
    let mut objective = alloc::vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective {
        objective[v] += c;
    }
    let rows = model
        .constraints
        .iter()
        .map(|c| {
            let (lower, upper) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            LpRow {
                terms: c.terms.clone(),
                lower,
                upper,
            }
        })
        .collect();
    LpProblem {
        objective,
        col_lower: model.variables.iter().map(|v| v.lower).collect(),
        col_upper: model.variables.iter().map(|v| v.upper).collect(),
        rows,
    }
}
