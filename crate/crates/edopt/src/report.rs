//! Output files: the per-period staffing table (`schedule.csv`), result and
//! SAA documents, flow traces and the convergence table.

use std::path::Path;

use edopt_core::milp::FeasibilityReport;
use edopt_core::model::{queue_label, FlowTrace, Instance, Schedule};
use edopt_core::stochastic::{ConvergenceRow, SaaResult};
use serde::{Deserialize, Serialize};

use crate::error::{read_text, EdoptError};

pub const RESULT_SCHEMA: &str = "edopt-result/1";
pub const SAA_SCHEMA: &str = "edopt-saa/1";

/// Rendering used for the performance value in every report.
pub fn format_performance(value: f64) -> String {
    format!("{value:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffRow {
    pub resource: String,
    pub queue: String,
    pub p: Vec<u32>,
    pub s: Vec<u32>,
    pub e: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BedRows {
    pub b: Vec<u32>,
    pub sb: Vec<u32>,
    pub eb: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleJson {
    pub staffing: Vec<StaffRow>,
    pub beds: Option<BedRows>,
}

impl ScheduleJson {
    pub fn new(inst: &Instance, sched: &Schedule) -> Self {
        let staffing = inst
            .staffed_pairs()
            .iter()
            .enumerate()
            .map(|(k, pair)| StaffRow {
                resource: inst.resource_types[pair.resource].name.clone(),
                queue: queue_label(pair.queue).into(),
                p: sched.p[k].clone(),
                s: sched.s[k].clone(),
                e: sched.e[k].clone(),
            })
            .collect();
        let beds = inst.has_bed_queue().then(|| BedRows {
            b: sched.b.clone(),
            sb: sched.sb.clone(),
            eb: sched.eb.clone(),
        });
        ScheduleJson { staffing, beds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub schema: String,
    pub status: String,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub k: usize,
    pub seed: u64,
    pub schedule: Option<ScheduleJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationJson {
    pub objective: f64,
    pub evaluation: f64,
    pub nodes: u64,
    pub schedule: ScheduleJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaaJson {
    pub schema: String,
    pub k: usize,
    pub m: usize,
    pub eval_n: usize,
    pub seed: u64,
    pub replication_objectives: Vec<f64>,
    pub replications: Vec<ReplicationJson>,
    pub candidate_index: usize,
    pub lower_bound: f64,
    pub lower_bound_var: Option<f64>,
    pub upper_bound: f64,
    pub upper_bound_var: f64,
    pub gap: f64,
    pub combined_sd: f64,
    pub candidate: ScheduleJson,
}

impl SaaJson {
    pub fn new(inst: &Instance, res: &SaaResult, seed: u64) -> Self {
        SaaJson {
            schema: SAA_SCHEMA.into(),
            k: res.k,
            m: res.replications.len(),
            eval_n: res.eval_n,
            seed,
            replication_objectives: res.replications.iter().map(|r| r.objective).collect(),
            replications: res
                .replications
                .iter()
                .map(|r| ReplicationJson {
                    objective: r.objective,
                    evaluation: r.evaluation,
                    nodes: r.nodes,
                    schedule: ScheduleJson::new(inst, &r.schedule),
                })
                .collect(),
            candidate_index: res.candidate_index,
            lower_bound: res.lower_bound,
            lower_bound_var: res.lower_bound_var,
            upper_bound: res.upper_bound,
            upper_bound_var: res.upper_bound_var,
            gap: res.gap,
            combined_sd: res.combined_sd(),
            candidate: ScheduleJson::new(inst, res.candidate()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityJson {
    pub violations: Vec<ViolationJson>,
}

impl From<&FeasibilityReport> for FeasibilityJson {
    fn from(report: &FeasibilityReport) -> Self {
        FeasibilityJson {
            violations: report
                .violations
                .iter()
                .map(|v| ViolationJson {
                    constraint: v.constraint.clone(),
                    residual: v.residual,
                })
                .collect(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data");
    text.push('\n');
    text
}

fn csv_text(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields")
}

/// The staffing table: one row per staffed (resource, queue) pair with
/// the staff present per period, then the beds row and the performance
/// line.
pub fn schedule_csv(inst: &Instance, sched: &Schedule, performance: f64) -> String {
    let mut rows = Vec::new();
    let mut header = vec!["resource".to_string(), "queue".to_string()];
    header.extend((1..=inst.horizon).map(|t| format!("T{t}")));
    rows.push(header);
    for (k, pair) in inst.staffed_pairs().iter().enumerate() {
        let mut row = vec![
            inst.resource_types[pair.resource].name.clone(),
            queue_label(pair.queue).to_string(),
        ];
        row.extend(sched.p[k].iter().map(u32::to_string));
        rows.push(row);
    }
    if inst.has_bed_queue() {
        let mut row = vec!["Beds".to_string(), String::new()];
        row.extend(sched.b.iter().map(u32::to_string));
        rows.push(row);
    }
    rows.push(vec![
        "Performance".to_string(),
        format_performance(performance),
    ]);
    csv_text(&rows)
}

/// Contents of a `schedule.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    /// Staff present per period, in staffed-pair order.
    pub staff: Vec<Vec<u32>>,
    pub beds: Option<Vec<u32>>,
    pub performance: Option<String>,
}

pub fn read_schedule_csv(path: &Path, inst: &Instance) -> Result<ScheduleTable, EdoptError> {
    let text = read_text(path)?;
    parse_schedule_csv(path, &text, inst)
}

pub fn parse_schedule_csv(
    path: &Path,
    text: &str,
    inst: &Instance,
) -> Result<ScheduleTable, EdoptError> {
    let err = |line: u64, message: String| EdoptError::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let pairs = inst.staffed_pairs();
    let mut staff: Vec<Option<Vec<u32>>> = vec![None; pairs.len()];
    let mut beds = None;
    let mut performance = None;
    for record in reader.records() {
        let record = record.map_err(|e| err(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let first = record.get(0).unwrap_or_default();
        if first == "Performance" {
            performance = record.get(1).map(str::to_string);
            continue;
        }
        let values = record
            .iter()
            .skip(2)
            .map(|v| {
                v.trim()
                    .parse::<u32>()
                    .map_err(|_| err(line, format!("`{v}` is not a staff count")))
            })
            .collect::<Result<Vec<u32>, _>>()?;
        if values.len() != inst.horizon {
            return Err(err(
                line,
                format!("expected {} periods, found {}", inst.horizon, values.len()),
            ));
        }
        if first == "Beds" {
            beds = Some(values);
            continue;
        }
        let queue = record.get(1).unwrap_or_default();
        let slot = pairs
            .iter()
            .position(|p| {
                inst.resource_types[p.resource].name == first && queue_label(p.queue) == queue
            })
            .ok_or_else(|| err(line, format!("`{first}` does not staff `{queue}`")))?;
        if staff[slot].replace(values).is_some() {
            return Err(err(line, format!("duplicate row for `{first}`, `{queue}`")));
        }
    }
    let staff = staff
        .into_iter()
        .zip(&pairs)
        .map(|(row, pair)| {
            row.ok_or_else(|| {
                err(
                    0,
                    format!(
                        "missing row for `{}`, `{}`",
                        inst.resource_types[pair.resource].name,
                        queue_label(pair.queue)
                    ),
                )
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if inst.has_bed_queue() && beds.is_none() {
        return Err(err(0, "missing Beds row".into()));
    }
    Ok(ScheduleTable {
        staff,
        beds,
        performance,
    })
}

/// Checks that a staffing table and a schedule document describe the same
/// roster and performance.
pub fn cross_check(
    table: &ScheduleTable,
    doc: &ScheduleJson,
    performance: Option<f64>,
) -> Result<(), EdoptError> {
    for (k, (row, staff)) in doc.staffing.iter().zip(&table.staff).enumerate() {
        if &row.p != staff {
            return Err(EdoptError::ReportMismatch(format!(
                "staff row {} ({}, {})",
                k + 1,
                row.resource,
                row.queue
            )));
        }
    }
    if doc.staffing.len() != table.staff.len() {
        return Err(EdoptError::ReportMismatch("number of staff rows".into()));
    }
    if doc.beds.as_ref().map(|b| &b.b) != table.beds.as_ref() {
        return Err(EdoptError::ReportMismatch("beds row".into()));
    }
    if performance.map(format_performance) != table.performance {
        return Err(EdoptError::ReportMismatch("performance".into()));
    }
    Ok(())
}

/// Per-period waiting and served counts, 1-based `t` and `q`.
pub fn trace_csv(trace: &FlowTrace) -> String {
    let mut rows = vec![vec!["t".into(), "q".into(), "W".into(), "S".into()]];
    for (t, (w, s)) in trace.waiting.iter().zip(&trace.served).enumerate() {
        for q in 0..w.len() {
            rows.push(vec![
                (t + 1).to_string(),
                (q + 1).to_string(),
                w[q].to_string(),
                s[q].to_string(),
            ]);
        }
    }
    csv_text(&rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = vec![["K", "LB", "UB", "gap", "sd_lb", "sd_ub", "stabilized"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for r in rows {
        out.push(vec![
            r.k.to_string(),
            r.lower_bound.to_string(),
            r.upper_bound.to_string(),
            r.gap.to_string(),
            r.sd_lower.map(|v| v.to_string()).unwrap_or_default(),
            r.sd_upper.to_string(),
            r.stabilized.to_string(),
        ]);
    }
    csv_text(&out)
}
