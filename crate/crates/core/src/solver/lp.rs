//! Bounded-variable primal simplex on a revised, factored basis.
//!
//! Every row `r` gets a logical variable `z_r = a_r x` carrying the row
//! bounds, so the working system is `[A -I] (x, z) = 0` with bounds on
//! every variable and the all-logical basis as a starting point. Phase 1
//! minimizes the sum of bound violations of basic variables; phase 2 the
//! objective. The ratio test is Harris-style; after a long run of
//! degenerate pivots the method switches to Bland's rule until progress
//! resumes.

use alloc::vec;
use alloc::vec::Vec;

use super::lu::LuFactors;

/// Pivot threshold of the ratio test.
pub const PIVOT_TOL: f64 = 1e-9;
/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost tolerance.
pub const DUAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_LIMIT: usize = 50;
const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// `min c^T x` subject to `row.lower <= a_r x <= row.upper` and column
/// bounds. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit reached or the basis could not be repaired.
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    /// Column values; meaningful when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Solves an LP from the all-logical basis.
pub fn solve_lp(problem: &LpProblem) -> LpResult {
    let mut simplex = Simplex::new(problem);
    let status = simplex.solve();
    LpResult {
        status,
        objective: simplex.objective_value(),
        x: simplex.column_values(),
        iterations: simplex.iterations,
    }
}

/// A basis that can be reinstalled after bound changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BasisState {
    basis: Vec<u32>,
    at_upper: Vec<u64>,
}

pub(crate) struct Simplex {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    lu: LuFactors,
    pub iterations: usize,
    pub iteration_limit: usize,
    work: Vec<f64>,
}

impl Simplex {
    pub fn new(problem: &LpProblem) -> Self {
        let n = problem.objective.len();
        let m = problem.rows.len();
        let mut counts = vec![0usize; n + 1];
        for row in &problem.rows {
            for &(j, _) in &row.terms {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        for (r, row) in problem.rows.iter().enumerate() {
            for &(j, v) in &row.terms {
                col_row[fill[j]] = r;
                col_val[fill[j]] = v;
                fill[j] += 1;
            }
        }
        let mut lower = problem.col_lower.clone();
        let mut upper = problem.col_upper.clone();
        lower.extend(problem.rows.iter().map(|r| r.lower));
        upper.extend(problem.rows.iter().map(|r| r.upper));
        let mut cost = problem.objective.clone();
        cost.resize(n + m, 0.0);
        let mut s = Simplex {
            n,
            m,
            col_start,
            col_row,
            col_val,
            lower,
            upper,
            cost,
            x: vec![0.0; n + m],
            at_upper: vec![false; n + m],
            basis: (n..n + m).collect(),
            pos: vec![NONBASIC; n + m],
            lu: LuFactors::default(),
            iterations: 0,
            iteration_limit: 50 * (n + m) + 10_000,
            work: Vec::new(),
        };
        for (i, &j) in s.basis.iter().enumerate() {
            s.pos[j] = i;
        }
        for j in 0..n {
            s.place_nonbasic(j);
        }
        s
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (lo, up) = (self.lower[j], self.upper[j]);
        if self.at_upper[j] && up.is_finite() {
            self.x[j] = up;
        } else if lo.is_finite() {
            self.x[j] = lo;
            self.at_upper[j] = false;
        } else if up.is_finite() {
            self.x[j] = up;
            self.at_upper[j] = true;
        } else {
            self.x[j] = 0.0;
            self.at_upper[j] = false;
        }
    }

    pub fn column_bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn set_column_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.pos[j] == NONBASIC {
            self.place_nonbasic(j);
        }
    }

    pub fn basis_state(&self) -> BasisState {
        let mut at_upper = vec![0u64; (self.n + self.m).div_ceil(64)];
        for (j, &flag) in self.at_upper.iter().enumerate() {
            if flag && self.pos[j] == NONBASIC {
                at_upper[j / 64] |= 1 << (j % 64);
            }
        }
        BasisState {
            basis: self.basis.iter().map(|&j| j as u32).collect(),
            at_upper,
        }
    }

    pub fn load_basis(&mut self, state: &BasisState) {
        self.pos.iter_mut().for_each(|p| *p = NONBASIC);
        for (i, &j) in state.basis.iter().enumerate() {
            self.basis[i] = j as usize;
            self.pos[j as usize] = i;
        }
        for j in 0..self.n + self.m {
            self.at_upper[j] = state.at_upper[j / 64] >> (j % 64) & 1 == 1;
            if self.pos[j] == NONBASIC {
                self.place_nonbasic(j);
            }
        }
    }

    pub fn objective_value(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub fn column_values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                out[self.col_row[k]] = self.col_val[k];
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut acc = 0.0;
            for k in self.col_start[j]..self.col_start[j + 1] {
                acc += self.col_val[k] * y[self.col_row[k]];
            }
            acc
        } else {
            -y[j - self.n]
        }
    }

    fn sparse_column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| (self.col_row[k], self.col_val[k]))
                .collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// Factors the current basis, swapping in logicals for dependent
    /// columns, and recomputes the basic values.
    fn refactor(&mut self) -> bool {
        for _ in 0..4 {
            let columns: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.sparse_column(j)).collect();
            match LuFactors::factor(self.m, &columns) {
                Ok(lu) => {
                    self.lu = lu;
                    self.recompute_basic_values();
                    return true;
                }
                Err(singular) => {
                    for (&p, &r) in singular.positions.iter().zip(&singular.rows) {
                        let old = self.basis[p];
                        self.pos[old] = NONBASIC;
                        self.place_nonbasic(old);
                        let logical = self.n + r;
                        self.basis[p] = logical;
                        self.pos[logical] = p;
                    }
                }
            }
        }
        false
    }

    fn recompute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            if j < self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.col_row[k]] -= self.col_val[k] * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        self.lu.ftran(&mut rhs, &mut self.work);
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[i];
        }
    }

    pub fn solve(&mut self) -> LpStatus {
        if !self.refactor() {
            return LpStatus::NumericalFailure;
        }
        let m = self.m;
        let total = self.n + self.m;
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut fresh = true;
        let start = self.iterations;
        loop {
            if self.iterations - start >= self.iteration_limit {
                return LpStatus::NumericalFailure;
            }
            let mut phase_one = false;
            for (i, &j) in self.basis.iter().enumerate() {
                y[i] = if self.x[j] < self.lower[j] - FEAS_TOL {
                    phase_one = true;
                    -1.0
                } else if self.x[j] > self.upper[j] + FEAS_TOL {
                    phase_one = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase_one {
                for (i, &j) in self.basis.iter().enumerate() {
                    y[i] = self.cost[j];
                }
            }
            self.lu.btran(&mut y, &mut self.work);

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for j in 0..total {
                if self.pos[j] != NONBASIC || self.lower[j] == self.upper[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { self.cost[j] };
                let d = c - self.dot_column(j, &y);
                let free = !self.lower[j].is_finite() && !self.upper[j].is_finite();
                let dir = if free {
                    if d < -DUAL_TOL {
                        1.0
                    } else if d > DUAL_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                } else if self.at_upper[j] {
                    if d > DUAL_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                } else if d < -DUAL_TOL {
                    1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d.abs() > best_score {
                    best_score = d.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                if !fresh {
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    fresh = true;
                    continue;
                }
                return if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };

            self.scatter_column(q, &mut alpha);
            self.lu.ftran(&mut alpha, &mut self.work);

            let step = self.ratio_test(&alpha, q, dir, bland);
            self.iterations += 1;
            fresh = false;
            let (theta, leaving) = match step {
                Step::Unbounded => {
                    if phase_one {
                        return LpStatus::NumericalFailure;
                    }
                    return LpStatus::Unbounded;
                }
                Step::Flip(theta) => (theta, None),
                Step::Pivot(theta, p, bound) => (theta, Some((p, bound))),
            };

            if theta > 1e-12 {
                degenerate_run = 0;
                bland = false;
            } else {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_LIMIT {
                    bland = true;
                }
            }

            self.x[q] += dir * theta;
            if theta != 0.0 {
                for (i, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        self.x[self.basis[i]] -= dir * a * theta;
                    }
                }
            }
            match leaving {
                None => {
                    self.at_upper[q] = dir > 0.0;
                    self.x[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some((p, bound)) => {
                    let out = self.basis[p];
                    self.x[out] = bound;
                    self.at_upper[out] = bound == self.upper[out] && bound != self.lower[out];
                    self.pos[out] = NONBASIC;
                    self.basis[p] = q;
                    self.pos[q] = p;
                    self.lu.update(p, &alpha);
                    if self.lu.num_updates() >= REFACTOR_EVERY {
                        if !self.refactor() {
                            return LpStatus::NumericalFailure;
                        }
                        fresh = true;
                    }
                }
            }
        }
    }

    fn ratio_test(&self, alpha: &[f64], q: usize, dir: f64, bland: bool) -> Step {
        // limit of each blocking basic variable: (position, bound, rate)
        let target = |i: usize, a: f64| -> Option<(f64, f64)> {
            let j = self.basis[i];
            let rate = -dir * a;
            let (x, lo, up) = (self.x[j], self.lower[j], self.upper[j]);
            if rate < 0.0 {
                if x < lo - FEAS_TOL {
                    return None;
                }
                let bound = if x > up + FEAS_TOL { up } else { lo };
                bound.is_finite().then_some((bound, rate))
            } else {
                if x > up + FEAS_TOL {
                    return None;
                }
                let bound = if x < lo - FEAS_TOL { lo } else { up };
                bound.is_finite().then_some((bound, rate))
            }
        };
        let flip = self.upper[q] - self.lower[q];

        if bland {
            let mut best: Option<(f64, usize, f64)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let Some((bound, rate)) = target(i, a) else {
                    continue;
                };
                let t = ((bound - self.x[self.basis[i]]) / rate).max(0.0);
                let better = match best {
                    None => true,
                    Some((bt, bi, _)) => {
                        t < bt - 1e-12 || (t <= bt + 1e-12 && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((t, i, bound));
                }
            }
            return match best {
                Some((t, _, _)) if flip.is_finite() && flip <= t => Step::Flip(flip),
                Some((t, i, bound)) => Step::Pivot(t, i, bound),
                None if flip.is_finite() => Step::Flip(flip),
                None => Step::Unbounded,
            };
        }

        let mut theta_max = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((bound, rate)) = target(i, a) {
                let x = self.x[self.basis[i]];
                let relaxed = if rate < 0.0 {
                    (x - bound + FEAS_TOL) / -rate
                } else {
                    (bound - x + FEAS_TOL) / rate
                };
                theta_max = theta_max.min(relaxed);
            }
        }
        if flip.is_finite() && flip <= theta_max {
            return Step::Flip(flip);
        }
        if theta_max == f64::INFINITY {
            return Step::Unbounded;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_abs = 0.0;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((bound, rate)) = target(i, a) {
                let t = ((bound - self.x[self.basis[i]]) / rate).max(0.0);
                if t <= theta_max && a.abs() > best_abs {
                    best_abs = a.abs();
                    best = Some((i, t, bound));
                }
            }
        }
        match best {
            Some((i, t, bound)) => Step::Pivot(t, i, bound),
            None => Step::Unbounded,
        }
    }
}

enum Step {
    Unbounded,
    Flip(f64),
    /// Step length, leaving position and the bound the leaving variable
    /// reaches.
    Pivot(f64, usize, f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], lower: f64, upper: f64) -> LpRow {
        LpRow {
            terms: terms.to_vec(),
            lower,
            upper,
        }
    }

    #[test]
    fn zero_objective_is_optimal() {
        let lp = LpProblem {
            objective: vec![0.0],
            col_lower: vec![0.0],
            col_upper: vec![f64::INFINITY],
            rows: vec![],
        };
        let res = solve_lp(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.objective, 0.0);
    }

    #[test]
    fn single_variable_upper_row() {
        // min -x s.t. x <= 3, x >= 0
        let lp = LpProblem {
            objective: vec![-1.0],
            col_lower: vec![0.0],
            col_upper: vec![f64::INFINITY],
            rows: vec![row(&[(0, 1.0)], f64::NEG_INFINITY, 3.0)],
        };
        let res = solve_lp(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.x[0] - 3.0).abs() < 1e-12);
        assert!((res.objective + 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let infeasible = LpProblem {
            objective: vec![1.0, 1.0],
            col_lower: vec![0.0, 0.0],
            col_upper: vec![f64::INFINITY; 2],
            rows: vec![
                row(&[(0, 1.0), (1, 1.0)], f64::NEG_INFINITY, 1.0),
                row(&[(0, 1.0), (1, 1.0)], 2.0, f64::INFINITY),
            ],
        };
        assert_eq!(solve_lp(&infeasible).status, LpStatus::Infeasible);
        let unbounded = LpProblem {
            objective: vec![-1.0, 0.0],
            col_lower: vec![0.0, 0.0],
            col_upper: vec![f64::INFINITY; 2],
            rows: vec![row(&[(0, 1.0), (1, -1.0)], f64::NEG_INFINITY, 1.0)],
        };
        assert_eq!(solve_lp(&unbounded).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y s.t. x + y = 4, x - y free-range in [-1, 1], y free
        let lp = LpProblem {
            objective: vec![1.0, 2.0],
            col_lower: vec![0.0, f64::NEG_INFINITY],
            col_upper: vec![10.0, f64::INFINITY],
            rows: vec![
                row(&[(0, 1.0), (1, 1.0)], 4.0, 4.0),
                row(&[(0, 1.0), (1, -1.0)], -1.0, 1.0),
            ],
        };
        let res = solve_lp(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.x[0] - 2.5).abs() < 1e-9);
        assert!((res.x[1] - 1.5).abs() < 1e-9);
        assert!((res.objective - 5.5).abs() < 1e-9);
    }

    #[test]
    fn warm_start_after_bound_change() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let lp = LpProblem {
            objective: vec![-1.0, -1.0],
            col_lower: vec![0.0, 0.0],
            col_upper: vec![10.0, 10.0],
            rows: vec![
                row(&[(0, 1.0), (1, 2.0)], f64::NEG_INFINITY, 4.0),
                row(&[(0, 3.0), (1, 1.0)], f64::NEG_INFINITY, 6.0),
            ],
        };
        let mut s = Simplex::new(&lp);
        assert_eq!(s.solve(), LpStatus::Optimal);
        assert!((s.objective_value() + 2.8).abs() < 1e-9);
        let state = s.basis_state();
        s.set_column_bounds(0, 0.0, 1.0);
        s.load_basis(&state);
        assert_eq!(s.solve(), LpStatus::Optimal);
        // x = 1, y = 1.5
        assert!((s.objective_value() + 2.5).abs() < 1e-9);
    }
}
