use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use edopt_core::milp::{
    assemble_assignment, build_deterministic_equivalent, check_solution, extract_schedule,
    DEFAULT_TOL,
};
use edopt_core::model::{build_default_instance, validate_schedule, Instance, Schedule};
use edopt_core::sim::{evaluate_expected, evaluate_schedule};
use edopt_core::solver::{solve_milp_with_clock, MilpStatus, SolveOptions};
use edopt_core::stochastic::{
    convergence_study, deterministic_capacity_model, generate_scenarios, saa_solve, SaaConfig,
};

use crate::config::{
    default_models, instance_json, load_instance, load_models, models_json, ScenarioModels,
};
use crate::error::{write_text, EdoptError};
use crate::mps::{export_mps, parse_mps};
use crate::report::{
    convergence_csv, cross_check, format_performance, parse_schedule_csv, read_schedule_csv,
    schedule_csv, to_json, trace_csv, FeasibilityJson, ResultJson, SaaJson, ScheduleJson,
    RESULT_SCHEMA,
};

#[derive(Debug, Parser)]
#[command(
    name = "edopt",
    version,
    about = "Emergency-department staffing and bed optimizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the K-scenario deterministic equivalent
    Solve(SolveArgs),
    /// Score a roster from schedule.csv on sampled scenarios
    Evaluate(EvaluateArgs),
    /// Sample average approximation with M replications
    Saa(SaaArgs),
    /// SAA bounds over a list of sample sizes
    Convergence(ConvergenceArgs),
    /// Write the deterministic equivalent as fixed-format MPS
    Export(ExportArgs),
    /// Write the default instance and scenario configuration
    Init(InitArgs),
    /// Solve a model given as MPS
    SolveMps(SolveMpsArgs),
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Instance JSON; the built-in default instance when omitted
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Scenario configuration JSON; the synthetic default models when omitted
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Wall-clock limit in seconds
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    /// Directory for one trace CSV per scenario
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SaaArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    #[arg(long, default_value_t = 7)]
    pub m: usize,
    /// Evaluation sample size; 10 K when omitted
    #[arg(long)]
    pub eval_n: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    pub m: usize,
    /// Shared evaluation sample size; 10 max(K) when omitted
    #[arg(long)]
    pub eval_n: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Fix every service time at its mean
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveMpsArgs {
    #[arg(long)]
    pub mps: PathBuf,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Process outcome: 0 solved, 2 stopped at a limit with an incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    LimitWithIncumbent,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Done => ExitCode::SUCCESS,
            Outcome::LimitWithIncumbent => ExitCode::from(2),
        }
    }
}

fn load(inputs: &Inputs) -> Result<(Instance, ScenarioModels), EdoptError> {
    let inst = match &inputs.instance {
        Some(path) => load_instance(path)?,
        None => build_default_instance(),
    };
    let models = match &inputs.scenarios {
        Some(path) => load_models(path, &inst)?,
        None => default_models(&inst),
    };
    Ok((inst, models))
}

fn options(time_limit: Option<f64>) -> SolveOptions {
    SolveOptions {
        time_limit_secs: time_limit,
        ..SolveOptions::default()
    }
}

pub fn run(cli: Cli) -> Result<Outcome, EdoptError> {
    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, &clock),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Saa(args) => cmd_saa(&args, &clock),
        Command::Convergence(args) => cmd_convergence(&args, &clock),
        Command::Export(args) => cmd_export(&args),
        Command::Init(args) => cmd_init(&args),
        Command::SolveMps(args) => cmd_solve_mps(&args, &clock),
    }
}

/// Writes `schedule.csv` next to its JSON counterpart and re-reads it to
/// confirm both describe the same roster.
fn write_schedule(
    out_dir: &Path,
    inst: &Instance,
    sched: &Schedule,
    performance: f64,
) -> Result<ScheduleJson, EdoptError> {
    let path = out_dir.join("schedule.csv");
    let text = schedule_csv(inst, sched, performance);
    write_text(&path, &text)?;
    let doc = ScheduleJson::new(inst, sched);
    let table = parse_schedule_csv(&path, &text, inst)?;
    cross_check(&table, &doc, Some(performance))?;
    Ok(doc)
}

pub fn cmd_solve(args: &SolveArgs, clock: &dyn Fn() -> f64) -> Result<Outcome, EdoptError> {
    let (inst, models) = load(&args.inputs)?;
    let scenarios = generate_scenarios(
        &inst,
        &models.arrivals,
        &models.capacity,
        args.k,
        args.inputs.seed,
    )?;
    let model = build_deterministic_equivalent(&inst, &scenarios)?;
    let res = solve_milp_with_clock(&model, &options(args.time_limit), clock);

    let mut schedule = None;
    if let (Some(assignment), Some(objective)) = (&res.assignment, res.objective) {
        let report = check_solution(&model, assignment, DEFAULT_TOL)?;
        if !report.is_feasible() {
            return Err(EdoptError::InfeasibleSchedule(
                report
                    .violations
                    .iter()
                    .map(|v| v.constraint.clone())
                    .collect(),
            ));
        }
        let sched = extract_schedule(&model, assignment, DEFAULT_TOL)?;
        schedule = Some(write_schedule(&args.out_dir, &inst, &sched, objective)?);
    }
    let result = ResultJson {
        schema: RESULT_SCHEMA.into(),
        status: res.status.as_str().into(),
        objective: res.objective,
        best_bound: res.best_bound,
        gap: res.gap(),
        nodes: res.nodes,
        k: args.k,
        seed: args.inputs.seed,
        schedule,
    };
    write_text(&args.out_dir.join("result.json"), &to_json(&result))?;
    if let Some(doc) = &result.schedule {
        let table = read_schedule_csv(&args.out_dir.join("schedule.csv"), &inst)?;
        cross_check(&table, doc, result.objective)?;
    }

    println!("status: {}", res.status.as_str());
    if let Some(obj) = res.objective {
        println!("objective: {}", format_performance(obj));
    }
    println!("nodes: {}", res.nodes);
    match res.status {
        MilpStatus::Optimal => Ok(Outcome::Done),
        s if s.is_limit() && res.objective.is_some() => Ok(Outcome::LimitWithIncumbent),
        s => Err(EdoptError::Solver(s.as_str())),
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome, EdoptError> {
    let (inst, models) = load(&args.inputs)?;
    let table = read_schedule_csv(&args.schedule, &inst)?;
    let sched = Schedule::from_staffing(&inst, table.staff, table.beds.unwrap_or_default());
    let scenarios = generate_scenarios(
        &inst,
        &models.arrivals,
        &models.capacity,
        args.k,
        args.inputs.seed,
    )?;

    let issues = validate_schedule(&inst, &sched);
    if !issues.is_empty() {
        return Err(EdoptError::InfeasibleSchedule(
            issues
                .issues
                .iter()
                .map(|i| format!("{}: {}", i.path, i.message))
                .collect(),
        ));
    }
    let traces = scenarios
        .iter()
        .map(|scen| evaluate_schedule(&sched, scen, &inst))
        .collect::<Result<Vec<_>, _>>()?;
    // budget, shift-length and floor rules live in the model
    let model = build_deterministic_equivalent(&inst, &scenarios)?;
    let assignment = assemble_assignment(&model, &sched, &traces)?;
    let report = check_solution(&model, &assignment, DEFAULT_TOL)?;
    if !report.is_feasible() {
        let listing = FeasibilityJson::from(&report);
        return Err(EdoptError::InfeasibleSchedule(
            listing
                .violations
                .iter()
                .map(|v| format!("{} (residual {})", v.constraint, v.residual))
                .collect(),
        ));
    }

    if let Some(dir) = &args.traces {
        for (w, trace) in traces.iter().enumerate() {
            write_text(
                &dir.join(format!("scenario_{:03}.csv", w + 1)),
                &trace_csv(trace),
            )?;
        }
    }
    let score = evaluate_expected(&sched, &scenarios, &inst)?;
    println!(
        "objective: {:.6} +/- {:.6} (95% CI, {} scenarios)",
        score.mean, score.half_width, args.k
    );
    Ok(Outcome::Done)
}

pub fn cmd_saa(args: &SaaArgs, clock: &dyn Fn() -> f64) -> Result<Outcome, EdoptError> {
    let (inst, models) = load(&args.inputs)?;
    let config = SaaConfig {
        k: args.k,
        m: args.m,
        eval_n: args.eval_n,
        seed: args.inputs.seed,
        options: options(args.time_limit),
    };
    let res = saa_solve(&inst, &models.arrivals, &models.capacity, &config, clock)?;
    let doc = write_schedule(&args.out_dir, &inst, res.candidate(), res.upper_bound)?;
    let json = SaaJson::new(&inst, &res, args.inputs.seed);
    write_text(&args.out_dir.join("saa_result.json"), &to_json(&json))?;
    let table = read_schedule_csv(&args.out_dir.join("schedule.csv"), &inst)?;
    cross_check(&table, &doc, Some(json.upper_bound))?;

    println!("lower bound: {:.6}", res.lower_bound);
    println!("upper bound: {:.6}", res.upper_bound);
    println!("gap: {:.6} (sd {:.6})", res.gap, res.combined_sd());
    Ok(Outcome::Done)
}

pub fn cmd_convergence(
    args: &ConvergenceArgs,
    clock: &dyn Fn() -> f64,
) -> Result<Outcome, EdoptError> {
    let (inst, models) = load(&args.inputs)?;
    let rows = convergence_study(
        &inst,
        &models.arrivals,
        &models.capacity,
        &args.k_list,
        args.m,
        args.eval_n,
        args.inputs.seed,
        &options(args.time_limit),
        clock,
    )?;
    let text = convergence_csv(&rows);
    write_text(&args.out_dir.join("convergence.csv"), &text)?;
    print!("{text}");
    Ok(Outcome::Done)
}

pub fn cmd_export(args: &ExportArgs) -> Result<Outcome, EdoptError> {
    let (inst, models) = load(&args.inputs)?;
    let scenarios = generate_scenarios(
        &inst,
        &models.arrivals,
        &models.capacity,
        args.k,
        args.inputs.seed,
    )?;
    let model = build_deterministic_equivalent(&inst, &scenarios)?;
    let path = args.out_dir.join("model.mps");
    write_text(&path, &export_mps(&model))?;
    println!(
        "wrote {} ({} columns, {} rows)",
        path.display(),
        model.variables.len(),
        model.constraints.len()
    );
    Ok(Outcome::Done)
}

pub fn cmd_init(args: &InitArgs) -> Result<Outcome, EdoptError> {
    let inst = build_default_instance();
    let mut models = default_models(&inst);
    if args.deterministic {
        models.capacity = deterministic_capacity_model(&inst);
    }
    write_text(&args.out_dir.join("instance.json"), &instance_json(&inst))?;
    write_text(
        &args.out_dir.join("scenarios.json"),
        &models_json(&inst, &models),
    )?;
    Ok(Outcome::Done)
}

#[derive(serde::Serialize)]
struct MpsSolution {
    status: String,
    objective: Option<f64>,
    best_bound: f64,
    nodes: u64,
    values: Vec<(String, f64)>,
}

pub fn cmd_solve_mps(args: &SolveMpsArgs, clock: &dyn Fn() -> f64) -> Result<Outcome, EdoptError> {
    let text = crate::error::read_text(&args.mps)?;
    let model = parse_mps(&text)?;
    let res = solve_milp_with_clock(&model, &options(args.time_limit), clock);
    let values = res
        .assignment
        .as_ref()
        .map(|a| {
            model
                .variables
                .iter()
                .zip(a)
                .map(|(v, &x)| (v.name.clone(), x))
                .collect()
        })
        .unwrap_or_default();
    let doc = MpsSolution {
        status: res.status.as_str().into(),
        objective: res.objective,
        best_bound: res.best_bound,
        nodes: res.nodes,
        values,
    };
    write_text(&args.out_dir.join("solution.json"), &to_json(&doc))?;
    println!("status: {}", res.status.as_str());
    match res.status {
        MilpStatus::Optimal => Ok(Outcome::Done),
        s if s.is_limit() && res.objective.is_some() => Ok(Outcome::LimitWithIncumbent),
        s => Err(EdoptError::Solver(s.as_str())),
    }
}
