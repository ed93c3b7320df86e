//! Scenario generation and the sample average approximation driver.
//!
//! Every random quantity is drawn from its own ChaCha stream, keyed by the
//! run seed and selected by a hash of (replication, scenario, resource,
//! period, queue). Scenario `k` of replication `m` is therefore the same no
//! matter how many replications or scenarios are requested.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use thiserror::Error;

use crate::milp::{
    build_deterministic_equivalent, check_solution, extract_schedule, MilpError, DEFAULT_TOL,
};
use crate::model::{
    validate_instance, Instance, ResourceType, RoutingCoefficients, Scenario, Schedule, ShiftBounds,
};
use crate::sim::{evaluate_expected, SimError};
use crate::solver::{solve_milp_with_clock, MilpStatus, SolveOptions};
use crate::stats;

/// Replication index reserved for out-of-sample evaluation scenarios.
pub const EVAL_REPLICATION: u64 = 1 << 32;
/// Upper limit on what one server can process in a period; guards against
/// near-zero service-time draws.
pub const MAX_SERVER_CAPACITY: u32 = 1_000_000;
const ARRIVAL_TAG: u64 = u64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("scenario count must be at least 1")]
    NoScenarios,
    #[error("{path}: {message}")]
    InvalidModel { path: String, message: String },
    #[error("instance is invalid: {0}")]
    InvalidInstance(String),
    #[error("replication {replication}: {reason}")]
    Replication { replication: usize, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

fn invalid(path: &str, message: impl Into<String>) -> StochasticError {
    StochasticError::InvalidModel {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    /// Poisson counts with one rate per period.
    Poisson { rates: Vec<f64> },
    /// Historical counts per period, each equally likely.
    Empirical { observations: Vec<Vec<u32>> },
    /// The same arrivals in every scenario:
    /// `round(total * profile[start_hour + t])`, halves rounded up.
    Forecast {
        total: f64,
        profile: Vec<f64>,
        start_hour: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceFamily {
    Exponential,
    /// Lognormal with the given coefficient of variation.
    Lognormal {
        cv: f64,
    },
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceTime {
    pub family: ServiceFamily,
    pub mean_minutes: f64,
}

/// Service-time distribution per staffed pair, in
/// [`Instance::staffed_pairs`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityModel {
    pub period_minutes: f64,
    pub services: Vec<ServiceTime>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed, |h, &p| splitmix(h ^ splitmix(p)))
}

fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(parts));
    rng
}

fn check_profile(
    profile: &[f64],
    start_hour: usize,
    horizon: usize,
) -> Result<(), StochasticError> {
    if profile.len() < start_hour + horizon {
        return Err(invalid(
            "profile",
            format!(
                "{} entries cannot cover periods {}..{}",
                profile.len(),
                start_hour,
                start_hour + horizon
            ),
        ));
    }
    if profile.iter().any(|&p| !(p >= 0.0)) {
        return Err(invalid("profile", "shares must be non-negative"));
    }
    let sum: f64 = profile.iter().sum();
    if libm::fabs(sum - 1.0) > 1e-9 {
        return Err(invalid("profile", format!("shares sum to {sum}, not 1")));
    }
    Ok(())
}

fn check_models(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
) -> Result<(), StochasticError> {
    let horizon = inst.horizon;
    match arrivals {
        ArrivalModel::Poisson { rates } => {
            if rates.len() != horizon {
                return Err(invalid("arrivals.rates", "one rate per period required"));
            }
            if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
                return Err(invalid("arrivals.rates", "rates must be finite and >= 0"));
            }
        }
        ArrivalModel::Empirical { observations } => {
            if observations.len() != horizon || observations.iter().any(|o| o.is_empty()) {
                return Err(invalid(
                    "arrivals.observations",
                    "one non-empty sample per period required",
                ));
            }
        }
        ArrivalModel::Forecast {
            total,
            profile,
            start_hour,
        } => {
            if !(*total >= 0.0) || !total.is_finite() {
                return Err(invalid(
                    "arrivals.total",
                    "forecast must be finite and >= 0",
                ));
            }
            check_profile(profile, *start_hour, horizon)?;
        }
    }
    if !(capacity.period_minutes > 0.0) || !capacity.period_minutes.is_finite() {
        return Err(invalid("capacity.period_minutes", "must be > 0"));
    }
    let pairs = inst.staffed_pairs();
    if capacity.services.len() != pairs.len() {
        return Err(invalid(
            "capacity.services",
            format!(
                "expected {} staffed pairs, found {}",
                pairs.len(),
                capacity.services.len()
            ),
        ));
    }
    for (k, svc) in capacity.services.iter().enumerate() {
        let path = format!(
            "capacity.services.{}.{}",
            pairs[k].resource + 1,
            pairs[k].queue + 1
        );
        if !(svc.mean_minutes > 0.0) || !svc.mean_minutes.is_finite() {
            return Err(invalid(&path, "mean service time must be > 0"));
        }
        if let ServiceFamily::Lognormal { cv } = svc.family {
            if !(cv > 0.0) || !cv.is_finite() {
                return Err(invalid(&path, "coefficient of variation must be > 0"));
            }
        }
    }
    Ok(())
}

fn forecast_arrivals(total: f64, profile: &[f64], start_hour: usize, horizon: usize) -> Vec<u32> {
    (0..horizon)
        .map(|t| libm::floor(total * profile[start_hour + t] + 0.5) as u32)
        .collect()
}

fn draw_service(svc: &ServiceTime, rng: &mut ChaCha8Rng) -> f64 {
    match svc.family {
        ServiceFamily::Deterministic => svc.mean_minutes,
        ServiceFamily::Exponential => Exp::new(1.0 / svc.mean_minutes)
            .map(|d| d.sample(rng))
            .unwrap_or(svc.mean_minutes),
        ServiceFamily::Lognormal { cv } => {
            let sigma2 = libm::log(1.0 + cv * cv);
            let mu = libm::log(svc.mean_minutes) - sigma2 / 2.0;
            LogNormal::new(mu, libm::sqrt(sigma2))
                .map(|d| d.sample(rng))
                .unwrap_or(svc.mean_minutes)
        }
    }
}

fn sample_capacity(
    inst: &Instance,
    capacity: &CapacityModel,
    seed: u64,
    replication: u64,
    scenario: u64,
) -> Vec<Vec<Vec<u32>>> {
    let pairs = inst.staffed_pairs();
    pairs
        .iter()
        .zip(&capacity.services)
        .map(|(pair, svc)| {
            (0..inst.horizon)
                .map(|t| {
                    let mut rng = stream(
                        seed,
                        &[
                            replication,
                            scenario,
                            pair.resource as u64,
                            t as u64,
                            pair.queue as u64,
                        ],
                    );
                    let mut total = 0u32;
                    (0..inst.max_staff_of(*pair))
                        .map(|_| {
                            let draw = draw_service(svc, &mut rng);
                            let per_server = if draw > 0.0 {
                                let c = libm::floor(capacity.period_minutes / draw);
                                if c >= f64::from(MAX_SERVER_CAPACITY) {
                                    MAX_SERVER_CAPACITY
                                } else {
                                    c.max(0.0) as u32
                                }
                            } else {
                                MAX_SERVER_CAPACITY
                            };
                            total = total.saturating_add(per_server);
                            total
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn sample_arrivals(
    arrivals: &ArrivalModel,
    horizon: usize,
    seed: u64,
    replication: u64,
    scenario: u64,
) -> Vec<u32> {
    match arrivals {
        ArrivalModel::Forecast {
            total,
            profile,
            start_hour,
        } => forecast_arrivals(*total, profile, *start_hour, horizon),
        ArrivalModel::Poisson { rates } => (0..horizon)
            .map(|t| {
                let mut rng = stream(seed, &[replication, scenario, ARRIVAL_TAG, t as u64]);
                match Poisson::new(rates[t]) {
                    Ok(d) => {
                        let v: f64 = d.sample(&mut rng);
                        v.min(f64::from(u32::MAX)) as u32
                    }
                    Err(_) => 0,
                }
            })
            .collect(),
        ArrivalModel::Empirical { observations } => (0..horizon)
            .map(|t| {
                let mut rng = stream(seed, &[replication, scenario, ARRIVAL_TAG, t as u64]);
                let obs = &observations[t];
                // rejection sampling keeps the index exactly uniform
                let n = obs.len() as u64;
                let zone = u64::MAX - u64::MAX % n;
                loop {
                    let v = rng.next_u64();
                    if v < zone {
                        return obs[(v % n) as usize];
                    }
                }
            })
            .collect(),
    }
}

/// Scenarios `0..k` of one replication.
pub fn generate_replication(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
    k: usize,
    seed: u64,
    replication: u64,
) -> Result<Vec<Scenario>, StochasticError> {
    if k == 0 {
        return Err(StochasticError::NoScenarios);
    }
    check_models(inst, arrivals, capacity)?;
    Ok((0..k as u64)
        .map(|w| Scenario {
            arrivals: sample_arrivals(arrivals, inst.horizon, seed, replication, w),
            capacity: sample_capacity(inst, capacity, seed, replication, w),
        })
        .collect())
}

/// `k` scenarios of the first replication.
pub fn generate_scenarios(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
    k: usize,
    seed: u64,
) -> Result<Vec<Scenario>, StochasticError> {
    generate_replication(inst, arrivals, capacity, k, seed, 0)
}

/// Scenarios sharing one forecast arrival vector, with independently
/// sampled capacities.
pub fn forecast_scenarios(
    inst: &Instance,
    forecast_total: f64,
    profile: &[f64],
    start_hour: usize,
    capacity: &CapacityModel,
    k: usize,
    seed: u64,
) -> Result<Vec<Scenario>, StochasticError> {
    let model = ArrivalModel::Forecast {
        total: forecast_total,
        profile: profile.to_vec(),
        start_hour,
    };
    generate_scenarios(inst, &model, capacity, k, seed)
}

/// Synthetic service model for the default instance: lognormal service
/// times (cv 0.5) with a mean per queue.
pub fn default_capacity_model(inst: &Instance) -> CapacityModel {
    // triage, short consult, long consult, exams
    const MEANS: [f64; 4] = [12.0, 20.0, 40.0, 15.0];
    CapacityModel {
        period_minutes: 60.0,
        services: inst
            .staffed_pairs()
            .iter()
            .map(|pair| ServiceTime {
                family: ServiceFamily::Lognormal { cv: 0.5 },
                mean_minutes: MEANS[pair.queue],
            })
            .collect(),
    }
}

/// Synthetic arrival model for the default instance: a daytime Poisson
/// profile peaking mid-horizon.
pub fn default_arrival_model(inst: &Instance) -> ArrivalModel {
    const SHAPE: [f64; 6] = [8.0, 11.0, 13.0, 13.0, 11.0, 9.0];
    ArrivalModel::Poisson {
        rates: (0..inst.horizon).map(|t| SHAPE[t % SHAPE.len()]).collect(),
    }
}

/// Same as [`default_capacity_model`] with every service time fixed at its
/// mean.
pub fn deterministic_capacity_model(inst: &Instance) -> CapacityModel {
    let mut model = default_capacity_model(inst);
    for svc in &mut model.services {
        svc.family = ServiceFamily::Deterministic;
    }
    model
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaConfig {
    pub k: usize,
    pub m: usize,
    /// Evaluation sample size; `None` means `10 * k`.
    pub eval_n: Option<usize>,
    pub seed: u64,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub objective: f64,
    pub schedule: Schedule,
    /// Mean of the schedule on the evaluation set.
    pub evaluation: f64,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaResult {
    pub k: usize,
    pub eval_n: usize,
    pub replications: Vec<Replication>,
    pub candidate_index: usize,
    pub lower_bound: f64,
    /// Variance of the lower-bound estimate; needs two replications.
    pub lower_bound_var: Option<f64>,
    pub upper_bound: f64,
    pub upper_bound_var: f64,
    pub gap: f64,
}

impl SaaResult {
    pub fn candidate(&self) -> &Schedule {
        &self.replications[self.candidate_index].schedule
    }

    pub fn sd_lower(&self) -> Option<f64> {
        self.lower_bound_var.map(libm::sqrt)
    }

    pub fn sd_upper(&self) -> f64 {
        libm::sqrt(self.upper_bound_var)
    }

    /// Standard deviation of the gap estimate.
    pub fn combined_sd(&self) -> f64 {
        libm::sqrt(self.lower_bound_var.unwrap_or(0.0) + self.upper_bound_var)
    }
}

/// Solves one replication's deterministic equivalent to optimality.
pub fn solve_replication(
    inst: &Instance,
    scenarios: &[Scenario],
    options: &SolveOptions,
    clock: &dyn Fn() -> f64,
    replication: usize,
) -> Result<(Schedule, f64, u64), StochasticError> {
    let model = build_deterministic_equivalent(inst, scenarios)?;
    let res = solve_milp_with_clock(&model, options, clock);
    if res.status != MilpStatus::Optimal {
        return Err(StochasticError::Replication {
            replication,
            reason: format!("solver stopped with status {}", res.status.as_str()),
        });
    }
    let assignment = res.assignment.as_deref().unwrap_or_default();
    let report = check_solution(&model, assignment, DEFAULT_TOL)?;
    if let Some(v) = report.violations.first() {
        return Err(StochasticError::Replication {
            replication,
            reason: format!("incumbent violates {} by {}", v.constraint, v.residual),
        });
    }
    let schedule = extract_schedule(&model, assignment, DEFAULT_TOL)?;
    Ok((schedule, res.objective.unwrap_or(f64::NAN), res.nodes))
}

pub fn saa_solve(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
    config: &SaaConfig,
    clock: &dyn Fn() -> f64,
) -> Result<SaaResult, StochasticError> {
    let eval_n = config.eval_n.unwrap_or(10 * config.k);
    let eval = generate_replication(
        inst,
        arrivals,
        capacity,
        eval_n,
        config.seed,
        EVAL_REPLICATION,
    )?;
    saa_solve_with_evaluation(inst, arrivals, capacity, config, &eval, clock)
}

/// [`saa_solve`] against a caller-supplied evaluation set.
pub fn saa_solve_with_evaluation(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
    config: &SaaConfig,
    eval: &[Scenario],
    clock: &dyn Fn() -> f64,
) -> Result<SaaResult, StochasticError> {
    let report = validate_instance(inst);
    if let Some(issue) = report.issues.first() {
        return Err(StochasticError::InvalidInstance(format!(
            "{}: {}",
            issue.path, issue.message
        )));
    }
    if config.m == 0 {
        return Err(invalid("m", "at least one replication is required"));
    }
    if eval.len() < config.k {
        return Err(invalid("eval_n", "evaluation sample must be at least K"));
    }
    let mut replications = Vec::with_capacity(config.m);
    let mut eval_sd = Vec::with_capacity(config.m);
    for m in 0..config.m {
        let scenarios =
            generate_replication(inst, arrivals, capacity, config.k, config.seed, m as u64)?;
        let (schedule, objective, nodes) =
            solve_replication(inst, &scenarios, &config.options, clock, m)?;
        let score = evaluate_expected(&schedule, eval, inst)?;
        eval_sd.push(score.sd);
        replications.push(Replication {
            objective,
            schedule,
            evaluation: score.mean,
            nodes,
        });
    }
    let mut candidate_index = 0;
    for (m, rep) in replications.iter().enumerate().skip(1) {
        let best = &replications[candidate_index];
        if rep.evaluation < best.evaluation
            || (rep.evaluation == best.evaluation && rep.schedule < best.schedule)
        {
            candidate_index = m;
        }
    }
    let optima: Vec<f64> = replications.iter().map(|r| r.objective).collect();
    let lower_bound = stats::mean(&optima);
    let lower_bound_var =
        (optima.len() >= 2).then(|| stats::sample_variance(&optima) / optima.len() as f64);
    let upper_bound = replications[candidate_index].evaluation;
    let sd = eval_sd[candidate_index];
    let upper_bound_var = sd * sd / eval.len() as f64;
    Ok(SaaResult {
        k: config.k,
        eval_n: eval.len(),
        replications,
        candidate_index,
        lower_bound,
        lower_bound_var,
        upper_bound,
        upper_bound_var,
        gap: upper_bound - lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub sd_lower: Option<f64>,
    pub sd_upper: f64,
    pub stabilized: bool,
}

/// Runs [`saa_solve`] for each sample size in `k_list` against one shared
/// evaluation set (`eval_n` scenarios, default `10 * max K`) and flags the
/// smallest K whose gap lies within one combined standard deviation of
/// the last K's gap.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    inst: &Instance,
    arrivals: &ArrivalModel,
    capacity: &CapacityModel,
    k_list: &[usize],
    m: usize,
    eval_n: Option<usize>,
    seed: u64,
    options: &SolveOptions,
    clock: &dyn Fn() -> f64,
) -> Result<Vec<ConvergenceRow>, StochasticError> {
    let Some(&k_max) = k_list.last() else {
        return Err(invalid("k_list", "at least one sample size is required"));
    };
    if k_list.windows(2).any(|w| w[0] >= w[1]) || k_list[0] == 0 {
        return Err(invalid(
            "k_list",
            "sample sizes must be positive and ascending",
        ));
    }
    let eval_n = eval_n.unwrap_or(10 * k_max);
    let eval = generate_replication(inst, arrivals, capacity, eval_n, seed, EVAL_REPLICATION)?;
    let mut results = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let config = SaaConfig {
            k,
            m,
            eval_n: Some(eval_n),
            seed,
            options: options.clone(),
        };
        results.push(saa_solve_with_evaluation(
            inst, arrivals, capacity, &config, &eval, clock,
        )?);
    }
    let final_gap = results.last().map_or(0.0, |r| r.gap);
    let stable_at = (results.len() >= 2)
        .then(|| {
            results
                .iter()
                .position(|r| libm::fabs(r.gap - final_gap) <= r.combined_sd() + DEFAULT_TOL)
        })
        .flatten();
    Ok(results
        .iter()
        .enumerate()
        .map(|(idx, r)| ConvergenceRow {
            k: r.k,
            lower_bound: r.lower_bound,
            upper_bound: r.upper_bound,
            gap: r.gap,
            sd_lower: r.sd_lower(),
            sd_upper: r.sd_upper(),
            stabilized: stable_at == Some(idx),
        })
        .collect())
}

/// Dimensions of a randomly generated test instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TinyDims {
    pub horizon: usize,
    pub resources: usize,
    pub queues: usize,
    pub max_staff: u32,
    pub scenarios: usize,
}

/// A random small instance with random scenarios, fully determined by
/// `seed`. Instances need not be feasible.
pub fn random_instance(dims: TinyDims, seed: u64) -> (Instance, Vec<Scenario>) {
    let mut rng = stream(seed, &[0xd1_3a5]);
    let mut below = |n: u32| -> u32 { (rng.next_u64() % u64::from(n)) as u32 };
    let horizon = dims.horizon;
    let queues = dims.queues;
    let staffed = queues.min(crate::model::BED_QUEUE);

    let mut queue_operators = Vec::with_capacity(queues);
    for _ in 0..staffed {
        let mut ops = Vec::new();
        for i in 0..dims.resources {
            if below(2) == 1 {
                ops.push(i);
            }
        }
        if ops.is_empty() {
            ops.push(below(dims.resources as u32) as usize);
        }
        queue_operators.push(ops);
    }
    if queues > staffed {
        queue_operators.push(Vec::new());
    }
    let mut max_staff = vec![vec![0u32; queues]; dims.resources];
    for (q, ops) in queue_operators.iter().enumerate() {
        for &i in ops {
            max_staff[i][q] = 1 + below(dims.max_staff);
        }
    }
    let mut share = |n: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| f64::from(1 + below(9))).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|v| v / sum).collect()
    };
    let a = share(2);
    let b = share(3);
    let g = share(3);
    let l = share(2);
    let routing = RoutingCoefficients {
        alpha: [a[0], a[1]],
        beta: [b[0], b[1], b[2]],
        gamma: [g[0], g[1], g[2]],
        lambda: [l[0], l[1]],
    };
    let t = horizon as u32;
    let work_budget = (0..dims.resources)
        .map(|_| t + below(t * (dims.max_staff - 1) + 1))
        .collect();
    let lower = 1 + below(t) as usize;
    let upper = lower + below(t - lower as u32 + 1) as usize;
    let mut bed_release: Vec<u32> = (0..horizon).map(|_| below(2)).collect();
    bed_release[0] = 0;
    let inst = Instance {
        horizon,
        num_queues: queues,
        resource_types: (0..dims.resources)
            .map(|i| ResourceType::new(&format!("r{}", i + 1)))
            .collect(),
        queue_operators,
        max_staff,
        routing,
        work_budget,
        shift_bounds: ShiftBounds { lower, upper },
        bed_stock: 1 + below(4),
        bed_release,
    };
    let pairs = inst.staffed_pairs();
    let scenarios = (0..dims.scenarios)
        .map(|_| Scenario {
            arrivals: (0..horizon).map(|_| below(6)).collect(),
            capacity: pairs
                .iter()
                .map(|&pair| {
                    (0..horizon)
                        .map(|_| {
                            let mut total = 0;
                            (0..inst.max_staff_of(pair))
                                .map(|_| {
                                    total += below(4);
                                    total
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();
    (inst, scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_default_instance;

    fn deterministic(inst: &Instance, minutes: f64) -> CapacityModel {
        CapacityModel {
            period_minutes: 60.0,
            services: vec![
                ServiceTime {
                    family: ServiceFamily::Deterministic,
                    mean_minutes: minutes,
                };
                inst.staffed_pairs().len()
            ],
        }
    }

    #[test]
    fn deterministic_half_period_service() {
        let inst = build_default_instance();
        let cap = deterministic(&inst, 30.0);
        let arr = ArrivalModel::Poisson {
            rates: vec![0.0; 6],
        };
        let scen = generate_scenarios(&inst, &arr, &cap, 2, 1).unwrap();
        for s in &scen {
            assert!(s.arrivals.iter().all(|&a| a == 0));
            for table in &s.capacity {
                for row in table {
                    assert_eq!(row[1], 4);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_scenarios() {
        let inst = build_default_instance();
        let cap = default_capacity_model(&inst);
        let arr = default_arrival_model(&inst);
        let a = generate_scenarios(&inst, &arr, &cap, 5, 42).unwrap();
        let b = generate_scenarios(&inst, &arr, &cap, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_scenarios(&inst, &arr, &cap, 5, 43).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|s| s.is_monotone() && s.matches(&inst)));
    }

    #[test]
    fn prefix_of_more_scenarios_is_stable() {
        let inst = build_default_instance();
        let cap = default_capacity_model(&inst);
        let arr = default_arrival_model(&inst);
        let few = generate_replication(&inst, &arr, &cap, 3, 7, 0).unwrap();
        let many = generate_replication(&inst, &arr, &cap, 8, 7, 0).unwrap();
        assert_eq!(few[..], many[..3]);
        let other = generate_replication(&inst, &arr, &cap, 3, 7, 1).unwrap();
        assert_ne!(few, other);
    }

    #[test]
    fn forecast_rounding() {
        let inst = build_default_instance();
        let cap = default_capacity_model(&inst);
        let flat = vec![1.0 / 6.0; 6];
        let scen = forecast_scenarios(&inst, 60.0, &flat, 0, &cap, 3, 9).unwrap();
        for s in &scen {
            assert_eq!(s.arrivals, vec![10; 6]);
        }
        assert_ne!(scen[0].capacity, scen[1].capacity);
        let zero = forecast_scenarios(&inst, 0.0, &flat, 0, &cap, 2, 9).unwrap();
        assert!(zero.iter().all(|s| s.arrivals.iter().all(|&a| a == 0)));
        // 2.5 rounds up, 1.25 rounds down
        let profile = [0.25, 0.125, 0.125, 0.25, 0.125, 0.125];
        let scen = forecast_scenarios(&inst, 10.0, &profile, 0, &cap, 1, 9).unwrap();
        assert_eq!(scen[0].arrivals, vec![3, 1, 1, 3, 1, 1]);
    }

    #[test]
    fn forecast_profile_must_cover_horizon() {
        let inst = build_default_instance();
        let cap = default_capacity_model(&inst);
        let short = vec![0.25; 4];
        assert!(matches!(
            forecast_scenarios(&inst, 10.0, &short, 0, &cap, 1, 0),
            Err(StochasticError::InvalidModel { .. })
        ));
        let day = vec![1.0 / 24.0; 24];
        assert!(forecast_scenarios(&inst, 10.0, &day, 18, &cap, 1, 0).is_ok());
        assert!(forecast_scenarios(&inst, 10.0, &day, 19, &cap, 1, 0).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        let inst = build_default_instance();
        let mut cap = default_capacity_model(&inst);
        let arr = default_arrival_model(&inst);
        assert_eq!(
            generate_scenarios(&inst, &arr, &cap, 0, 0),
            Err(StochasticError::NoScenarios)
        );
        cap.services[0].mean_minutes = 0.0;
        assert!(generate_scenarios(&inst, &arr, &cap, 1, 0).is_err());
        let bad = ArrivalModel::Poisson {
            rates: vec![-1.0; 6],
        };
        let cap = default_capacity_model(&inst);
        assert!(generate_scenarios(&inst, &bad, &cap, 1, 0).is_err());
    }

    #[test]
    fn empirical_single_observation_is_fixed() {
        let inst = build_default_instance();
        let cap = default_capacity_model(&inst);
        let arr = ArrivalModel::Empirical {
            observations: (0..6).map(|t| vec![t as u32]).collect(),
        };
        let scen = generate_scenarios(&inst, &arr, &cap, 4, 3).unwrap();
        assert!(scen.iter().all(|s| s.arrivals == vec![0, 1, 2, 3, 4, 5]));
    }

    #[test]
    fn random_instances_are_valid() {
        for seed in 0..50 {
            let dims = TinyDims {
                horizon: 3,
                resources: 2,
                queues: 3,
                max_staff: 2,
                scenarios: 2,
            };
            let (inst, scen) = random_instance(dims, seed);
            assert!(validate_instance(&inst).is_empty(), "seed {seed}");
            assert!(scen.iter().all(|s| s.matches(&inst) && s.is_monotone()));
        }
    }
}
