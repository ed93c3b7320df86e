//! Discrete-time fluid evaluation of the queue network for a fixed schedule.
//!
//! Every queue serves as much as it can each period: `S = min(W, capacity)`.
//! For a fixed first stage this is an optimal second-stage response, so the
//! evaluator doubles as the reference optimizer used to verify the MILP
//! solver on tiny instances.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{
    inflow_composition, shift_window, FlowSource, FlowTrace, Instance, Scenario, Schedule,
    StaffPair, BED_QUEUE,
};
use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("at least one scenario is required")]
    EmptyScenarios,
    #[error("enumeration needs {needed} schedules, budget is {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },
    #[error("no schedule satisfies the staffing and bed constraints")]
    NoFeasibleSchedule,
}

/// Per-period service capacity of every queue, indexed `[t][q]`. Nothing is
/// served in the first period.
fn queue_capacities(
    sched: &Schedule,
    scen: &Scenario,
    inst: &Instance,
) -> Result<Vec<Vec<f64>>, SimError> {
    let pairs = inst.staffed_pairs();
    let mut caps = vec![vec![f64::INFINITY; inst.num_queues]; inst.horizon];
    caps[0].iter_mut().for_each(|c| *c = 0.0);
    for t in 1..inst.horizon {
        for (k, pair) in pairs.iter().enumerate() {
            let staff = sched.p[k][t];
            if staff > inst.max_staff_of(*pair) {
                return Err(SimError::DimensionMismatch("staff count above N"));
            }
            let cap = f64::from(scen.capacity_of(k, staff, t));
            let slot = &mut caps[t][pair.queue];
            *slot = slot.min(cap);
        }
        if inst.has_bed_queue() {
            caps[t][BED_QUEUE] = sched.bed_capacity(t);
        }
    }
    Ok(caps)
}

/// Runs the flow recursions for one scenario under the greedy service rule.
pub fn evaluate_schedule(
    sched: &Schedule,
    scen: &Scenario,
    inst: &Instance,
) -> Result<FlowTrace, SimError> {
    let horizon = inst.horizon;
    let n_pairs = inst.staffed_pairs().len();
    if !scen.matches(inst) {
        return Err(SimError::DimensionMismatch(
            "scenario does not match instance",
        ));
    }
    if sched.p.len() != n_pairs || sched.p.iter().any(|row| row.len() != horizon) {
        return Err(SimError::DimensionMismatch(
            "staffing table does not match instance",
        ));
    }
    if inst.has_bed_queue() && (sched.b.len() != horizon || sched.sb.len() != horizon) {
        return Err(SimError::DimensionMismatch(
            "bed vectors do not match horizon",
        ));
    }
    let caps = queue_capacities(sched, scen, inst)?;
    let inflows: Vec<_> = (0..inst.num_queues)
        .map(|q| inflow_composition(inst, q).expect("queue index in range"))
        .collect();

    let q_count = inst.num_queues;
    let mut waiting = vec![vec![0.0; q_count]; horizon];
    let mut served = vec![vec![0.0; q_count]; horizon];
    waiting[0][0] = f64::from(scen.arrivals[0]);
    for t in 0..horizon {
        if t > 0 {
            for q in 0..q_count {
                let mut w = waiting[t - 1][q] - served[t - 1][q];
                for &(src, coef) in &inflows[q] {
                    w += match src {
                        FlowSource::Arrivals => f64::from(scen.arrivals[t]),
                        FlowSource::Served(from) => coef * served[t - 1][from],
                    };
                }
                waiting[t][q] = w;
            }
        }
        for q in 0..q_count {
            served[t][q] = waiting[t][q].min(caps[t][q]);
        }
    }
    let mut objective = 0.0;
    for t in 0..horizon {
        for q in 0..q_count {
            objective += waiting[t][q] - served[t][q];
        }
    }
    Ok(FlowTrace {
        waiting,
        served,
        objective,
    })
}

/// Monte Carlo estimate of the expected objective of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedValue {
    pub mean: f64,
    pub sd: f64,
    /// Half-width of the 95% normal confidence interval.
    pub half_width: f64,
}

pub fn evaluate_expected(
    sched: &Schedule,
    scenarios: &[Scenario],
    inst: &Instance,
) -> Result<ExpectedValue, SimError> {
    if scenarios.is_empty() {
        return Err(SimError::EmptyScenarios);
    }
    let objectives = scenarios
        .iter()
        .map(|scen| evaluate_schedule(sched, scen, inst).map(|tr| tr.objective))
        .collect::<Result<Vec<_>, _>>()?;
    let sd = stats::sample_sd(&objectives);
    Ok(ExpectedValue {
        mean: stats::mean(&objectives),
        sd,
        half_width: stats::Z95 * sd / libm::sqrt(objectives.len() as f64),
    })
}

/// Minimal cyclic starts and ends that realize a staffing profile.
fn minimal_starts_ends(p: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let len = p.len();
    let mut s = vec![0; len];
    let mut e = vec![0; len];
    for t in 0..len {
        let prev = p[(t + len - 1) % len];
        s[t] = p[t].saturating_sub(prev);
        e[t] = prev.saturating_sub(p[t]);
    }
    (s, e)
}

/// Whether a staffing profile of one pair admits starts and ends meeting
/// the budget, shift-window and operational constraints.
///
/// Adding the same amount to `s_t` and `e_t` only tightens every one of
/// those constraints, so checking the minimal starts and ends decides
/// feasibility.
fn staffing_feasible(inst: &Instance, budget: u32, p: &[u32]) -> bool {
    let horizon = inst.horizon;
    if p.iter().map(|&v| u64::from(v)).sum::<u64>() > u64::from(budget) {
        return false;
    }
    let (s, e) = minimal_starts_ends(p);
    let bounds = inst.shift_bounds;
    (0..horizon).all(|t| {
        let ends_short: u32 = shift_window(t, bounds.lower, horizon).map(|u| e[u]).sum();
        let ends_long: u32 = shift_window(t, bounds.upper + 1, horizon)
            .map(|u| e[u])
            .sum();
        p[t] >= 1
            && p[t] >= s[t] + 1
            && u64::from(ends_short) + u64::from(s[t]) <= u64::from(p[t])
            && ends_long <= p[t]
    })
}

/// Staffing profiles of one pair that admit starts and ends meeting the
/// budget, shift-window and operational constraints, in lexicographic
/// order.
pub fn feasible_profiles(inst: &Instance, pair: StaffPair) -> Vec<Vec<u32>> {
    let budget = inst.work_budget[pair.resource];
    profiles(inst.max_staff_of(pair), inst.horizon)
        .into_iter()
        .filter(|p| staffing_feasible(inst, budget, p))
        .collect()
}

/// Every staffing profile in `[1, max]^horizon`, in lexicographic order.
fn profiles(max: u32, horizon: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![1u32; horizon];
    if max == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] < max {
                cur[pos] += 1;
                for v in cur.iter_mut().skip(pos + 1) {
                    *v = 1;
                }
                break;
            }
        }
    }
}

/// Bed-occupation sequences keeping `0 <= b_t <= stock`, lexicographic in
/// `sb`. Each entry is `(b, sb)`.
pub fn bed_plans(inst: &Instance) -> Vec<(Vec<u32>, Vec<u32>)> {
    let horizon = inst.horizon;
    let mut out = Vec::new();
    let mut b = vec![0u32; horizon];
    let mut sb = vec![0u32; horizon];
    b[0] = inst.bed_stock;
    fn recurse(
        inst: &Instance,
        t: usize,
        b: &mut Vec<u32>,
        sb: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, Vec<u32>)>,
    ) {
        if t == inst.horizon {
            out.push((b.clone(), sb.clone()));
            return;
        }
        let avail = b[t - 1] + inst.bed_release[t];
        let lo = avail.saturating_sub(inst.bed_stock);
        for occupied in lo..=avail {
            sb[t] = occupied;
            b[t] = avail - occupied;
            recurse(inst, t + 1, b, sb, out);
        }
    }
    recurse(inst, 1, &mut b, &mut sb, &mut out);
    out
}

/// Exhaustively searches all first-stage decisions and returns one with the
/// lowest mean objective over `scenarios`. Among equal objectives the
/// lexicographically smallest decision vector (staff counts pair by pair,
/// then bed occupations) wins.
pub fn brute_force_optimum(
    inst: &Instance,
    scenarios: &[Scenario],
    limit: u128,
) -> Result<(Schedule, f64), SimError> {
    if scenarios.is_empty() {
        return Err(SimError::EmptyScenarios);
    }
    if scenarios.iter().any(|s| !s.matches(inst)) {
        return Err(SimError::DimensionMismatch(
            "scenario does not match instance",
        ));
    }
    let pairs = inst.staffed_pairs();
    let mut per_pair: Vec<Vec<Vec<u32>>> = Vec::with_capacity(pairs.len());
    let mut needed: u128 = 1;
    for pair in &pairs {
        let max = inst.max_staff_of(*pair);
        let space = u128::from(max).saturating_pow(inst.horizon as u32);
        if space > limit {
            return Err(SimError::BudgetExceeded {
                needed: space,
                limit,
            });
        }
        let feasible = feasible_profiles(inst, *pair);
        needed = needed.saturating_mul(feasible.len() as u128);
        per_pair.push(feasible);
    }
    let beds = if inst.has_bed_queue() {
        bed_plans(inst)
    } else {
        vec![(Vec::new(), Vec::new())]
    };
    needed = needed.saturating_mul(beds.len() as u128);
    if needed > limit {
        return Err(SimError::BudgetExceeded { needed, limit });
    }
    if needed == 0 {
        return Err(SimError::NoFeasibleSchedule);
    }

    let mut best: Option<(Schedule, f64)> = None;
    let mut digits = vec![0usize; pairs.len()];
    loop {
        let p: Vec<Vec<u32>> = digits
            .iter()
            .enumerate()
            .map(|(k, &d)| per_pair[k][d].clone())
            .collect();
        for (b, sb) in &beds {
            let mut sched = Schedule::from_staffing(inst, p.clone(), b.clone());
            if inst.has_bed_queue() {
                sched.sb = sb.clone();
            }
            let mut total = 0.0;
            for scen in scenarios {
                total += evaluate_schedule(&sched, scen, inst)?.objective;
            }
            let value = total / scenarios.len() as f64;
            let improves = match &best {
                None => true,
                Some((_, incumbent)) => value < incumbent - 1e-9 * incumbent.abs().max(1.0),
            };
            if improves {
                best = Some((sched, value));
            }
        }
        // odometer over per-pair profiles, last pair fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return best.ok_or(SimError::NoFeasibleSchedule);
            }
            pos -= 1;
            if digits[pos] + 1 < per_pair[pos].len() {
                digits[pos] += 1;
                for d in digits.iter_mut().skip(pos + 1) {
                    *d = 0;
                }
                break;
            }
        }
    }
}
