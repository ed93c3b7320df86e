//! Problem data, decision-variable value types and the routing structure of
//! the five-queue emergency-department network.
//!
//! Indices are zero-based throughout the library: queue `0` is triage, `1`
//! the short-circuit consultation, `2` the long-circuit consultation, `3`
//! auxiliary exams and `4` the bed queue. Periods run `0..horizon`.
//! Instances with fewer than five queues keep the first `num_queues` queues
//! of that network; flows routed to a queue that does not exist leave the
//! system.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

pub const TRIAGE: usize = 0;
pub const SHORT_CONSULT: usize = 1;
pub const LONG_CONSULT: usize = 2;
pub const EXAMS: usize = 3;
/// The only queue without staff; it is served by beds.
pub const BED_QUEUE: usize = 4;
pub const MAX_QUEUES: usize = 5;

/// Short human-readable label for a queue, used in reports.
pub fn queue_label(q: usize) -> &'static str {
    match q {
        TRIAGE => "triage",
        SHORT_CONSULT => "short circuit",
        LONG_CONSULT => "long circuit",
        EXAMS => "auxiliary exams",
        BED_QUEUE => "beds",
        _ => "unknown",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceType {
    pub name: String,
}

impl ResourceType {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
        }
    }
}

/// Routing fractions of the fluid network.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingCoefficients {
    /// Triage output: (short circuit, long circuit).
    pub alpha: [f64; 2],
    /// Short consultation output: (exams, bed, home).
    pub beta: [f64; 3],
    /// Long consultation output: (exams, bed, home).
    pub gamma: [f64; 3],
    /// Exam output: (back to short consultation, back to long consultation).
    pub lambda: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftBounds {
    pub lower: usize,
    pub upper: usize,
}

/// A (resource type, queue) pair that can be staffed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StaffPair {
    pub resource: usize,
    pub queue: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub horizon: usize,
    pub num_queues: usize,
    pub resource_types: Vec<ResourceType>,
    /// `queue_operators[q]` lists the resource types serving queue `q`.
    pub queue_operators: Vec<Vec<usize>>,
    /// Maximum simultaneous staff `N_{i,q}`, indexed `[i][q]`; zero where `i`
    /// does not operate `q`.
    pub max_staff: Vec<Vec<u32>>,
    pub routing: RoutingCoefficients,
    /// Staff-hour budget `TT_i` per resource type, applied to each staffed
    /// queue of that type.
    pub work_budget: Vec<u32>,
    pub shift_bounds: ShiftBounds,
    pub bed_stock: u32,
    /// Exogenous bed releases per period; the first entry is the
    /// initialization value and must be zero.
    pub bed_release: Vec<u32>,
}

impl Instance {
    pub fn num_resources(&self) -> usize {
        self.resource_types.len()
    }

    pub fn has_bed_queue(&self) -> bool {
        self.num_queues > BED_QUEUE
    }

    /// Staffed pairs in `(resource, queue)` lexicographic order. This order
    /// defines pair indices used by [`Scenario`] and [`Schedule`].
    pub fn staffed_pairs(&self) -> Vec<StaffPair> {
        let mut pairs = Vec::new();
        for i in 0..self.num_resources() {
            for q in 0..self.num_queues.min(BED_QUEUE) {
                if self
                    .queue_operators
                    .get(q)
                    .is_some_and(|ops| ops.contains(&i))
                {
                    pairs.push(StaffPair {
                        resource: i,
                        queue: q,
                    });
                }
            }
        }
        pairs
    }

    pub fn max_staff_of(&self, pair: StaffPair) -> u32 {
        self.max_staff
            .get(pair.resource)
            .and_then(|row| row.get(pair.queue))
            .copied()
            .unwrap_or(0)
    }

    /// Position of `pair` in [`Instance::staffed_pairs`].
    pub fn pair_index(&self, pair: StaffPair) -> Option<usize> {
        self.staffed_pairs().iter().position(|p| *p == pair)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }
}

fn check_share(report: &mut ValidationReport, path: &str, values: &[f64]) {
    if values
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
    {
        report.push(path, "every coefficient must lie in [0, 1]");
    } else if values.iter().sum::<f64>() > 1.0 + 1e-12 {
        report.push(path, "coefficients must sum to at most 1");
    }
}

/// Checks every structural invariant of an instance and reports one issue
/// per violation.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n_res = inst.num_resources();

    if inst.horizon == 0 {
        report.push("horizon_T", "horizon must be at least one period");
    }
    if inst.num_queues == 0 || inst.num_queues > MAX_QUEUES {
        report.push("num_queues_Q", "number of queues must be between 1 and 5");
    }
    if inst.queue_operators.len() != inst.num_queues {
        report.push(
            "queue_operators",
            format!(
                "expected {} queue entries, found {}",
                inst.num_queues,
                inst.queue_operators.len()
            ),
        );
    } else {
        for (q, ops) in inst.queue_operators.iter().enumerate() {
            let path = format!("queue_operators.{}", q + 1);
            if q == BED_QUEUE {
                if !ops.is_empty() {
                    report.push(path, "the bed queue has no staff operator");
                }
            } else if ops.is_empty() {
                report.push(path, "staffed queue needs at least one operator");
            } else if ops.iter().any(|&i| i >= n_res) {
                report.push(path, "operator refers to an unknown resource type");
            } else {
                let mut sorted = ops.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != ops.len() {
                    report.push(path, "duplicate operator");
                }
            }
        }
    }

    if inst.max_staff.len() != n_res || inst.max_staff.iter().any(|r| r.len() != inst.num_queues) {
        report.push("max_staff_N", "table must be resource types x queues");
    } else {
        for pair in inst.staffed_pairs() {
            if inst.max_staff_of(pair) == 0 {
                report.push(
                    format!("max_staff_N.{}.{}", pair.resource + 1, pair.queue + 1),
                    "operating pair needs N >= 1",
                );
            }
        }
    }

    let r = &inst.routing;
    check_share(&mut report, "routing.alpha", &r.alpha);
    check_share(&mut report, "routing.beta", &r.beta);
    check_share(&mut report, "routing.gamma", &r.gamma);
    check_share(&mut report, "routing.lambda_", &r.lambda);

    if inst.work_budget.len() != n_res {
        report.push("work_budget_TT", "one budget per resource type required");
    }

    let sb = inst.shift_bounds;
    if sb.lower < 1 || sb.lower > sb.upper || sb.upper > inst.horizon {
        report.push("shift_bounds", "need 1 <= LBD <= UBD <= horizon");
    }

    if inst.bed_release.len() != inst.horizon {
        report.push("bed_release_profile", "one entry per period required");
    } else if inst.bed_release.first().is_some_and(|&v| v != 0) {
        report.push(
            "bed_release_profile",
            "first period is the initialization and must be zero",
        );
    }

    report
}

/// Source of a term in a queue's per-period inflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSource {
    Arrivals,
    /// Patients served in the given queue during the previous period.
    Served(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("queue index {0} is out of range")]
    QueueOutOfRange(usize),
}

/// Linear description of what enters queue `q` each period. Zero
/// coefficients and sources outside the instance are omitted.
pub fn inflow_composition(inst: &Instance, q: usize) -> Result<Vec<(FlowSource, f64)>, ModelError> {
    if q >= inst.num_queues {
        return Err(ModelError::QueueOutOfRange(q));
    }
    let r = &inst.routing;
    let terms: Vec<(FlowSource, f64)> = match q {
        TRIAGE => vec![(FlowSource::Arrivals, 1.0)],
        SHORT_CONSULT => vec![
            (FlowSource::Served(TRIAGE), r.alpha[0]),
            (FlowSource::Served(EXAMS), r.lambda[0]),
        ],
        LONG_CONSULT => vec![
            (FlowSource::Served(TRIAGE), r.alpha[1]),
            (FlowSource::Served(EXAMS), r.lambda[1]),
        ],
        EXAMS => vec![
            (FlowSource::Served(SHORT_CONSULT), r.beta[0]),
            (FlowSource::Served(LONG_CONSULT), r.gamma[0]),
        ],
        BED_QUEUE => vec![
            (FlowSource::Served(SHORT_CONSULT), r.beta[1]),
            (FlowSource::Served(LONG_CONSULT), r.gamma[1]),
        ],
        _ => return Err(ModelError::QueueOutOfRange(q)),
    };
    Ok(terms
        .into_iter()
        .filter(|(src, c)| {
            *c != 0.0
                && match src {
                    FlowSource::Arrivals => true,
                    FlowSource::Served(s) => *s < inst.num_queues,
                }
        })
        .collect())
}

/// The CHT-shaped default: six one-hour periods, five queues, four staff
/// types with at most three per queue, seventeen beds.
///
/// Routing, budgets and shift bounds are synthetic placeholders. Physicians
/// get 14 staff-periods per queue, a little over two per period, so their
/// allocation across periods is a real decision; the other types may staff
/// every period fully.
pub fn build_default_instance() -> Instance {
    const PHYSICIAN: usize = 0;
    const INTERNAL: usize = 1;
    const NURSE: usize = 2;
    const CAREGIVER: usize = 3;
    let horizon = 6;
    let queue_operators = vec![
        vec![NURSE, CAREGIVER],
        vec![PHYSICIAN, INTERNAL, NURSE, CAREGIVER],
        vec![PHYSICIAN, INTERNAL, NURSE, CAREGIVER],
        vec![NURSE],
        vec![],
    ];
    let mut max_staff = vec![vec![0u32; MAX_QUEUES]; 4];
    for (q, ops) in queue_operators.iter().enumerate() {
        for &i in ops {
            max_staff[i][q] = 3;
        }
    }
    let mut bed_release = vec![1u32; horizon];
    bed_release[0] = 0;
    Instance {
        horizon,
        num_queues: MAX_QUEUES,
        resource_types: vec![
            ResourceType::new("physician"),
            ResourceType::new("internal"),
            ResourceType::new("nurse"),
            ResourceType::new("caregiver"),
        ],
        queue_operators,
        max_staff,
        routing: RoutingCoefficients {
            alpha: [0.55, 0.45],
            beta: [0.30, 0.15, 0.55],
            gamma: [0.40, 0.35, 0.25],
            lambda: [0.45, 0.55],
        },
        work_budget: vec![14, 18, 18, 18],
        shift_bounds: ShiftBounds { lower: 2, upper: 4 },
        bed_stock: 17,
        bed_release,
    }
}

/// Periods following `t` cyclically, `len` of them, never wrapping back
/// onto `t` itself. Used by the minimum and maximum shift-length windows.
pub fn shift_window(t: usize, len: usize, horizon: usize) -> impl Iterator<Item = usize> {
    let len = len.min(horizon.saturating_sub(1));
    (1..=len).map(move |k| (t + k) % horizon)
}

/// One realization of arrivals and service capacities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// Arrivals per period.
    pub arrivals: Vec<u32>,
    /// `capacity[k][t][n - 1]`: patients that `n` staff of staffed pair `k`
    /// serve in period `t`.
    pub capacity: Vec<Vec<Vec<u32>>>,
}

impl Scenario {
    pub fn capacity_of(&self, pair: usize, n: u32, t: usize) -> u32 {
        if n == 0 {
            return 0;
        }
        self.capacity[pair][t][n as usize - 1]
    }

    /// True when capacity never decreases with the number of staff.
    pub fn is_monotone(&self) -> bool {
        self.capacity
            .iter()
            .flat_map(|pair| pair.iter())
            .all(|row| row.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Checks that the scenario dimensions match `inst`.
    pub fn matches(&self, inst: &Instance) -> bool {
        let pairs = inst.staffed_pairs();
        self.arrivals.len() == inst.horizon
            && self.capacity.len() == pairs.len()
            && self.capacity.iter().zip(&pairs).all(|(table, &pair)| {
                table.len() == inst.horizon
                    && table
                        .iter()
                        .all(|row| row.len() == inst.max_staff_of(pair) as usize)
            })
    }
}

/// First-stage decisions. Per-pair tables are indexed `[pair][t]` in the
/// order of [`Instance::staffed_pairs`]; bed vectors are empty when the
/// instance has no bed queue.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Schedule {
    /// `x[k][t][n - 1]` is set iff exactly `n` staff work.
    pub x: Vec<Vec<Vec<bool>>>,
    pub p: Vec<Vec<u32>>,
    pub s: Vec<Vec<u32>>,
    pub e: Vec<Vec<u32>>,
    pub b: Vec<u32>,
    pub sb: Vec<u32>,
    pub eb: Vec<u32>,
}

impl Schedule {
    /// Builds a schedule from staff counts and bed availability alone.
    ///
    /// Starts and ends are the minimal ones consistent with the cyclic
    /// staffing profile, and bed occupations follow from
    /// `b_t = b_{t-1} + eb_t - sb_t`. An occupation that would be negative is
    /// clamped to zero and left for [`validate_schedule`] to report.
    pub fn from_staffing(inst: &Instance, p: Vec<Vec<u32>>, b: Vec<u32>) -> Self {
        let pairs = inst.staffed_pairs();
        let horizon = inst.horizon;
        let mut x = Vec::with_capacity(p.len());
        let mut s = Vec::with_capacity(p.len());
        let mut e = Vec::with_capacity(p.len());
        for (k, row) in p.iter().enumerate() {
            let max_n = pairs.get(k).map(|&pr| inst.max_staff_of(pr)).unwrap_or(0);
            x.push(
                row.iter()
                    .map(|&count| (1..=max_n).map(|n| n == count).collect())
                    .collect(),
            );
            let mut starts = vec![0; row.len()];
            let mut ends = vec![0; row.len()];
            for t in 0..row.len() {
                let prev = row[(t + row.len() - 1) % row.len()];
                starts[t] = row[t].saturating_sub(prev);
                ends[t] = prev.saturating_sub(row[t]);
            }
            s.push(starts);
            e.push(ends);
        }
        let (sb, eb) = if inst.has_bed_queue() && b.len() == horizon {
            let eb = inst.bed_release.clone();
            let mut sb = vec![0; horizon];
            for t in 1..horizon {
                let freed = i64::from(b[t - 1]) + i64::from(eb[t]) - i64::from(b[t]);
                sb[t] = freed.max(0) as u32;
            }
            (sb, eb)
        } else {
            (Vec::new(), Vec::new())
        };
        Schedule {
            x,
            p,
            s,
            e,
            b,
            sb,
            eb,
        }
    }

    /// Beds usable by the bed queue in period `t`: the available beds,
    /// further limited by the occupations booked at the start of `t + 1`.
    pub fn bed_capacity(&self, t: usize) -> f64 {
        let available = f64::from(self.b[t]);
        match self.sb.get(t + 1) {
            Some(&booked) => available.min(f64::from(booked)),
            None => available,
        }
    }
}

/// Checks the value-type invariants of a schedule against an instance:
/// dimensions, the one-hot/count linkage, nonnegativity and bed balance.
/// Budget and shift-length rules are MILP constraints and are not checked.
pub fn validate_schedule(inst: &Instance, sched: &Schedule) -> ValidationReport {
    let mut report = ValidationReport::default();
    let pairs = inst.staffed_pairs();
    let horizon = inst.horizon;
    let tables = [("p", &sched.p), ("s", &sched.s), ("e", &sched.e)];
    for (name, table) in tables {
        if table.len() != pairs.len() || table.iter().any(|r| r.len() != horizon) {
            report.push(name, "table must be staffed pairs x periods");
        }
    }
    if sched.x.len() != pairs.len() {
        report.push("x", "one indicator table per staffed pair required");
    }
    if !report.is_empty() {
        return report;
    }
    for (k, &pair) in pairs.iter().enumerate() {
        let max_n = inst.max_staff_of(pair) as usize;
        for t in 0..horizon {
            let path = format!("x.{}.{}.{}", pair.resource + 1, pair.queue + 1, t + 1);
            let Some(ind) = sched.x[k].get(t).filter(|ind| ind.len() == max_n) else {
                report.push(path, "indicator row must have one entry per staff level");
                continue;
            };
            let ones = ind.iter().filter(|&&v| v).count();
            let level = ind.iter().position(|&v| v).map(|n| n as u32 + 1);
            if ones != 1 {
                report.push(path, "exactly one staff level must be selected");
            } else if level != Some(sched.p[k][t]) {
                report.push(path, "selected staff level differs from p");
            }
        }
    }
    if inst.has_bed_queue() {
        let lens = [sched.b.len(), sched.sb.len(), sched.eb.len()];
        if lens.iter().any(|&l| l != horizon) {
            report.push("b", "bed vectors need one entry per period");
            return report;
        }
        for t in 0..horizon {
            if sched.b[t] > inst.bed_stock {
                report.push(format!("b.{}", t + 1), "more beds than the stock");
            }
            if t == 0 {
                if sched.b[0] != inst.bed_stock || sched.sb[0] != 0 || sched.eb[0] != 0 {
                    report.push("b.1", "first period must start with the full stock");
                }
            } else {
                let lhs = i64::from(sched.b[t]);
                let rhs =
                    i64::from(sched.b[t - 1]) + i64::from(sched.eb[t]) - i64::from(sched.sb[t]);
                if lhs != rhs {
                    report.push(format!("b.{}", t + 1), "bed balance violated");
                }
            }
        }
    } else if !(sched.b.is_empty() && sched.sb.is_empty() && sched.eb.is_empty()) {
        report.push("b", "instance has no bed queue");
    }
    report
}

/// Waiting and served counts of one scenario, indexed `[t][q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub waiting: Vec<Vec<f64>>,
    pub served: Vec<Vec<f64>>,
    /// Sum over periods and queues of `waiting - served`.
    pub objective: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_instance_is_valid() {
        let inst = build_default_instance();
        assert_eq!(inst.horizon, 6);
        assert_eq!(inst.bed_stock, 17);
        assert_eq!(inst.num_queues, 5);
        assert!(validate_instance(&inst).is_empty());
        assert_eq!(inst, build_default_instance());
        assert_eq!(inst.staffed_pairs().len(), 11);
        for pair in inst.staffed_pairs() {
            assert_eq!(inst.max_staff_of(pair), 3);
        }
    }

    #[test]
    fn alpha_over_one_is_reported() {
        let mut inst = build_default_instance();
        inst.routing.alpha = [0.7, 0.5];
        let report = validate_instance(&inst);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].path, "routing.alpha");
    }

    #[test]
    fn inverted_shift_bounds_are_reported() {
        let mut inst = build_default_instance();
        inst.shift_bounds = ShiftBounds { lower: 4, upper: 2 };
        let report = validate_instance(&inst);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].path, "shift_bounds");
    }

    #[test]
    fn staffed_bed_queue_is_reported() {
        let mut inst = build_default_instance();
        inst.queue_operators[BED_QUEUE].push(0);
        let report = validate_instance(&inst);
        assert!(report.issues.iter().any(|i| i.path == "queue_operators.5"));
    }

    #[test]
    fn inflow_of_triage_is_arrivals() {
        let inst = build_default_instance();
        assert_eq!(
            inflow_composition(&inst, TRIAGE).unwrap(),
            vec![(FlowSource::Arrivals, 1.0)]
        );
    }

    #[test]
    fn inflow_of_bed_queue() {
        let mut inst = build_default_instance();
        inst.routing.beta = [0.3, 0.3, 0.4];
        inst.routing.gamma = [0.2, 0.4, 0.4];
        assert_eq!(
            inflow_composition(&inst, BED_QUEUE).unwrap(),
            vec![
                (FlowSource::Served(SHORT_CONSULT), 0.3),
                (FlowSource::Served(LONG_CONSULT), 0.4)
            ]
        );
    }

    #[test]
    fn exam_output_feeds_consultations() {
        let inst = build_default_instance();
        let short = inflow_composition(&inst, SHORT_CONSULT).unwrap();
        assert!(short.contains(&(FlowSource::Served(EXAMS), inst.routing.lambda[0])));
        let long = inflow_composition(&inst, LONG_CONSULT).unwrap();
        assert!(long.contains(&(FlowSource::Served(EXAMS), inst.routing.lambda[1])));
    }

    #[test]
    fn zero_coefficients_give_empty_form() {
        let mut inst = build_default_instance();
        inst.routing.alpha[0] = 0.0;
        inst.routing.lambda[0] = 0.0;
        assert!(inflow_composition(&inst, SHORT_CONSULT).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_queue() {
        let inst = build_default_instance();
        assert_eq!(
            inflow_composition(&inst, 5),
            Err(ModelError::QueueOutOfRange(5))
        );
    }

    #[test]
    fn outflow_shares_never_duplicate_patients() {
        let inst = build_default_instance();
        let mut out = [0.0f64; MAX_QUEUES];
        for q in 0..inst.num_queues {
            for (src, c) in inflow_composition(&inst, q).unwrap() {
                if let FlowSource::Served(from) = src {
                    out[from] += c;
                }
            }
        }
        assert!(out.iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn schedule_from_staffing_is_consistent() {
        let inst = build_default_instance();
        let pairs = inst.staffed_pairs().len();
        let p = vec![vec![2, 2, 3, 3, 1, 1]; pairs];
        let b = vec![17, 17, 16, 15, 15, 14];
        let sched = Schedule::from_staffing(&inst, p, b);
        assert!(validate_schedule(&inst, &sched).is_empty());
        assert_eq!(sched.s[0], vec![1, 0, 1, 0, 0, 0]);
        assert_eq!(sched.e[0], vec![0, 0, 0, 0, 2, 0]);
        assert_eq!(sched.sb, vec![0, 1, 2, 2, 1, 2]);
    }

    #[test]
    fn shift_windows_wrap_cyclically() {
        let w: Vec<usize> = shift_window(4, 3, 6).collect();
        assert_eq!(w, vec![5, 0, 1]);
        let all: Vec<usize> = shift_window(2, 10, 6).collect();
        assert_eq!(all, vec![3, 4, 5, 0, 1]);
        assert_eq!(shift_window(0, 2, 1).count(), 0);
    }

    #[test]
    fn bed_stock_overflow_is_reported() {
        let inst = build_default_instance();
        let pairs = inst.staffed_pairs().len();
        let sched =
            Schedule::from_staffing(&inst, vec![vec![1; 6]; pairs], vec![17, 18, 18, 18, 18, 18]);
        let report = validate_schedule(&inst, &sched);
        assert!(report.issues.iter().any(|i| i.path == "b.2"));
    }
}
