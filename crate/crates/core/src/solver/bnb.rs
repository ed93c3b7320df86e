use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::lp::{BasisState, LpStatus, Simplex};
use super::{relaxation, Branching, MilpResult, MilpStatus, SolveOptions};
use crate::milp::{check_solution, MilpModel, VarKind};

struct Node {
    key: f64,
    id: u64,
    /// Bound overrides accumulated along the path from the root.
    bounds: Vec<(usize, f64, f64)>,
    basis: BasisState,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed: the heap pops the smallest (key, id)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    options: &'a SolveOptions,
    simplex: Simplex,
    original: Vec<(f64, f64)>,
    applied: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    binaries: Vec<usize>,
    integers: Vec<usize>,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((z, _)) => {
                z - self
                    .options
                    .abs_gap
                    .max(self.options.rel_gap * libm::fabs(*z))
            }
            None => f64::INFINITY,
        }
    }

    fn apply_bounds(&mut self, bounds: &[(usize, f64, f64)]) {
        for &j in &self.applied {
            let (lo, up) = self.original[j];
            self.simplex.set_column_bounds(j, lo, up);
        }
        self.applied.clear();
        for &(j, lo, up) in bounds {
            self.simplex.set_column_bounds(j, lo, up);
            self.applied.push(j);
        }
    }

    fn offer(&mut self, assignment: Vec<f64>) -> bool {
        let Ok(report) = check_solution(self.model, &assignment, self.options.integrality_tol)
        else {
            return false;
        };
        if !report.is_feasible() {
            return false;
        }
        let z = self.model.objective_value(&assignment);
        if self.incumbent.as_ref().is_none_or(|(best, _)| z < *best) {
            self.incumbent = Some((z, assignment));
            return true;
        }
        false
    }

    /// Offers an LP solution whose integer columns are integral within
    /// tolerance, snapped to the nearest integers.
    fn offer_integral(&mut self, x: &[f64]) {
        let mut snapped = x.to_vec();
        for &j in self.binaries.iter().chain(&self.integers) {
            snapped[j] = libm::round(x[j]);
        }
        self.offer(snapped);
    }

    fn branch_variable(&self, x: &[f64]) -> Option<usize> {
        let tol = self.options.integrality_tol;
        for group in [&self.binaries, &self.integers] {
            let mut best: Option<(usize, f64)> = None;
            for &j in group {
                let frac = x[j] - libm::floor(x[j]);
                if frac <= tol || frac >= 1.0 - tol {
                    continue;
                }
                match self.options.branching {
                    Branching::FirstFractional => return Some(j),
                    Branching::MostFractional => {
                        let score = libm::fabs(frac - 0.5);
                        if best.is_none_or(|(_, s)| score < s) {
                            best = Some((j, score));
                        }
                    }
                }
            }
            if let Some((j, _)) = best {
                return Some(j);
            }
        }
        None
    }
}

/// Solves a MILP to proven optimality (within the gap tolerances) by
/// best-first branch and bound. The time limit is ignored; see
/// [`solve_milp_with_clock`].
pub fn solve_milp(model: &MilpModel, options: &SolveOptions) -> MilpResult {
    solve_milp_with_clock(model, options, &|| 0.0)
}

/// As [`solve_milp`], with `clock` returning elapsed seconds for the time
/// limit.
pub fn solve_milp_with_clock(
    model: &MilpModel,
    options: &SolveOptions,
    clock: &dyn Fn() -> f64,
) -> MilpResult {
    let lp = relaxation(model);
    let original: Vec<(f64, f64)> = lp
        .col_lower
        .iter()
        .zip(&lp.col_upper)
        .map(|(&l, &u)| (l, u))
        .collect();
    let mut binaries = Vec::new();
    let mut integers = Vec::new();
    for (j, v) in model.variables.iter().enumerate() {
        match v.kind {
            VarKind::Binary => binaries.push(j),
            VarKind::Integer => integers.push(j),
            VarKind::Continuous => {}
        }
    }
    let mut search = Search {
        model,
        options,
        simplex: Simplex::new(&lp),
        original,
        applied: Vec::new(),
        incumbent: None,
        binaries,
        integers,
    };
    if let Some(start) = &options.start {
        search.offer(start.clone());
    }

    let mut result = MilpResult {
        status: MilpStatus::Optimal,
        assignment: None,
        objective: None,
        best_bound: f64::NEG_INFINITY,
        nodes: 0,
        bound_history: Vec::new(),
        numerical_skips: 0,
    };

    match search.simplex.solve() {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            result.status = MilpStatus::Infeasible;
            result.best_bound = f64::INFINITY;
            return result;
        }
        LpStatus::Unbounded => {
            result.status = MilpStatus::Unbounded;
            return result;
        }
        LpStatus::NumericalFailure => {
            result.status = MilpStatus::NumericalFailure;
            return finish(result, search.incumbent);
        }
    }
    let root_key = search.simplex.objective_value();
    let root_basis = search.simplex.basis_state();

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Node {
        key: root_key,
        id: next_id,
        bounds: Vec::new(),
        basis: root_basis,
    });
    next_id += 1;
    // smallest relaxation bound among nodes fathomed by the cutoff
    let mut pruned_min = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if node.key >= search.cutoff() {
            // every remaining node has an even larger key
            pruned_min = pruned_min.min(node.key);
            heap.clear();
            break;
        }
        if options
            .node_limit
            .is_some_and(|limit| result.nodes >= limit)
        {
            result.status = MilpStatus::NodeLimit;
            heap.push(node);
            break;
        }
        if options
            .time_limit_secs
            .is_some_and(|limit| clock() >= limit)
        {
            result.status = MilpStatus::TimeLimit;
            heap.push(node);
            break;
        }
        result.nodes += 1;
        let global = result
            .bound_history
            .last()
            .map_or(node.key, |&b: &f64| b.max(node.key));
        result.bound_history.push(global);

        search.apply_bounds(&node.bounds);
        search.simplex.load_basis(&node.basis);
        let mut status = search.simplex.solve();
        if status == LpStatus::NumericalFailure {
            // retry from a fresh all-logical basis
            search.simplex = Simplex::new(&lp);
            search.applied.clear();
            search.apply_bounds(&node.bounds);
            status = search.simplex.solve();
        }
        match status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded | LpStatus::NumericalFailure => {
                result.numerical_skips += 1;
                continue;
            }
        }
        let z = search.simplex.objective_value().max(node.key);
        if z >= search.cutoff() {
            pruned_min = pruned_min.min(z);
            continue;
        }
        let x = search.simplex.column_values();
        let Some(j) = search.branch_variable(&x) else {
            search.offer_integral(&x);
            continue;
        };
        let basis = search.simplex.basis_state();
        let (lo, up) = search.simplex.column_bounds(j);
        let v = x[j];
        for (child_lo, child_up) in [(lo, libm::floor(v)), (libm::ceil(v), up)] {
            let mut bounds = node.bounds.clone();
            match bounds.iter_mut().find(|b| b.0 == j) {
                Some(b) => {
                    b.1 = child_lo;
                    b.2 = child_up;
                }
                None => bounds.push((j, child_lo, child_up)),
            }
            heap.push(Node {
                key: z,
                id: next_id,
                bounds,
                basis: basis.clone(),
            });
            next_id += 1;
        }
    }

    let open_bound = heap.iter().map(|n| n.key).fold(f64::INFINITY, f64::min);
    if result.status.is_limit() {
        result.best_bound = match &search.incumbent {
            Some((z, _)) => open_bound.min(*z),
            None => open_bound,
        };
    } else if let Some((z, _)) = &search.incumbent {
        result.best_bound = pruned_min.min(*z);
        if result.numerical_skips > 0 {
            result.status = MilpStatus::NumericalFailure;
        }
    } else if result.numerical_skips > 0 {
        result.status = MilpStatus::NumericalFailure;
    } else {
        result.status = MilpStatus::Infeasible;
        result.best_bound = f64::INFINITY;
    }
    finish(result, search.incumbent)
}

fn finish(mut result: MilpResult, incumbent: Option<(f64, Vec<f64>)>) -> MilpResult {
    if let Some((z, x)) = incumbent {
        result.objective = Some(z);
        result.assignment = Some(x);
    }
    result
}

#[cfg(test)]
mod tests {
    use alloc::format;
    use alloc::vec;

    use super::*;
    use crate::milp::Relation;

    fn knapsack() -> MilpModel {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = MilpModel::new("knap");
        let vars: Vec<usize> = (0..3)
            .map(|i| m.add_variable(format!("v{i}"), VarKind::Integer, 0.0, 10.0))
            .collect();
        m.objective = vec![(vars[0], -5.0), (vars[1], -4.0), (vars[2], -3.0)];
        m.add_constraint(
            "c1".into(),
            vec![(0, 2.0), (1, 3.0), (2, 1.0)],
            Relation::Le,
            5.0,
        );
        m.add_constraint(
            "c2".into(),
            vec![(0, 4.0), (1, 1.0), (2, 2.0)],
            Relation::Le,
            11.0,
        );
        m.add_constraint(
            "c3".into(),
            vec![(0, 3.0), (1, 4.0), (2, 2.0)],
            Relation::Le,
            8.0,
        );
        m
    }

    fn brute_force(m: &MilpModel) -> Option<f64> {
        let mut best: Option<f64> = None;
        for a in 0..=10 {
            for b in 0..=10 {
                for c in 0..=10 {
                    let x = [a as f64, b as f64, c as f64];
                    if check_solution(m, &x, 1e-9).unwrap().is_feasible() {
                        let z = m.objective_value(&x);
                        best = Some(best.map_or(z, |v: f64| v.min(z)));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn integer_program_matches_enumeration() {
        let m = knapsack();
        let res = solve_milp(&m, &SolveOptions::default());
        assert_eq!(res.status, MilpStatus::Optimal);
        let expected = brute_force(&m).unwrap();
        assert!((res.objective.unwrap() - expected).abs() < 1e-9);
        assert!(res.best_bound <= res.objective.unwrap() + 1e-9);
        for w in res.bound_history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn both_branching_rules_agree() {
        let m = knapsack();
        let opts = SolveOptions {
            branching: Branching::FirstFractional,
            ..SolveOptions::default()
        };
        let a = solve_milp(&m, &opts);
        let b = solve_milp(&m, &SolveOptions::default());
        assert!((a.objective.unwrap() - b.objective.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        // 2x = 1 has no integer solution
        let mut m = MilpModel::new("odd");
        m.add_variable("x".into(), VarKind::Integer, 0.0, 5.0);
        m.add_constraint("half".into(), vec![(0, 2.0)], Relation::Eq, 1.0);
        let res = solve_milp(&m, &SolveOptions::default());
        assert_eq!(res.status, MilpStatus::Infeasible);
        assert!(res.assignment.is_none());
    }

    #[test]
    fn node_limit_keeps_incumbent_and_bound() {
        let m = knapsack();
        let opts = SolveOptions {
            node_limit: Some(1),
            ..SolveOptions::default()
        };
        let res = solve_milp(&m, &opts);
        if res.status == MilpStatus::NodeLimit {
            if let Some(z) = res.objective {
                assert!(res.best_bound <= z + 1e-9);
            }
        } else {
            assert_eq!(res.status, MilpStatus::Optimal);
        }
    }

    #[test]
    fn time_limit_with_expired_clock() {
        let m = knapsack();
        let opts = SolveOptions {
            time_limit_secs: Some(0.0),
            ..SolveOptions::default()
        };
        let res = solve_milp_with_clock(&m, &opts, &|| 1.0);
        assert!(matches!(
            res.status,
            MilpStatus::TimeLimit | MilpStatus::Optimal
        ));
    }
}
