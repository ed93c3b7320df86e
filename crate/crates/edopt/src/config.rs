//! Instance (`edopt-instance/1`) and scenario-model (`edopt-scenarios/1`)
//! JSON documents.
//!
//! Resource and queue indices are 1-based in files and 0-based in memory.

use std::path::Path;

use edopt_core::model::{
    validate_instance, Instance, ResourceType, RoutingCoefficients, ShiftBounds,
};
use edopt_core::stochastic::{
    default_arrival_model, default_capacity_model, ArrivalModel, CapacityModel, ServiceFamily,
    ServiceTime,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{read_text, EdoptError};

pub const INSTANCE_SCHEMA: &str = "edopt-instance/1";
pub const SCENARIOS_SCHEMA: &str = "edopt-scenarios/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingFile {
    pub alpha: [f64; 2],
    pub beta: [f64; 3],
    pub gamma: [f64; 3],
    pub lambda_: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftBoundsFile {
    #[serde(rename = "LBD")]
    pub lbd: usize,
    #[serde(rename = "UBD")]
    pub ubd: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema: String,
    #[serde(rename = "horizon_T")]
    pub horizon: usize,
    #[serde(rename = "num_queues_Q")]
    pub num_queues: usize,
    pub resource_types: Vec<String>,
    /// Per queue, the 1-based resource types that staff it.
    pub queue_operators: Vec<Vec<usize>>,
    /// `[resource][queue]`
    #[serde(rename = "max_staff_N")]
    pub max_staff: Vec<Vec<u32>>,
    pub routing: RoutingFile,
    #[serde(rename = "work_budget_TT")]
    pub work_budget: Vec<u32>,
    pub shift_bounds: ShiftBoundsFile,
    #[serde(rename = "bed_stock_Nb")]
    pub bed_stock: u32,
    pub bed_release_profile: Vec<u32>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let r = &inst.routing;
        InstanceFile {
            schema: INSTANCE_SCHEMA.into(),
            horizon: inst.horizon,
            num_queues: inst.num_queues,
            resource_types: inst.resource_types.iter().map(|r| r.name.clone()).collect(),
            queue_operators: inst
                .queue_operators
                .iter()
                .map(|ops| ops.iter().map(|i| i + 1).collect())
                .collect(),
            max_staff: inst.max_staff.clone(),
            routing: RoutingFile {
                alpha: r.alpha,
                beta: r.beta,
                gamma: r.gamma,
                lambda_: r.lambda,
            },
            work_budget: inst.work_budget.clone(),
            shift_bounds: ShiftBoundsFile {
                lbd: inst.shift_bounds.lower,
                ubd: inst.shift_bounds.upper,
            },
            bed_stock: inst.bed_stock,
            bed_release_profile: inst.bed_release.clone(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, EdoptError> {
        if self.schema != INSTANCE_SCHEMA {
            return Err(EdoptError::field(
                "schema",
                format!("expected \"{INSTANCE_SCHEMA}\", found \"{}\"", self.schema),
            ));
        }
        let mut queue_operators = Vec::with_capacity(self.queue_operators.len());
        for (q, ops) in self.queue_operators.iter().enumerate() {
            let mut zero_based = Vec::with_capacity(ops.len());
            for (n, &i) in ops.iter().enumerate() {
                if i == 0 {
                    return Err(EdoptError::field(
                        format!("queue_operators[{q}][{n}]"),
                        "resource indices are 1-based",
                    ));
                }
                zero_based.push(i - 1);
            }
            queue_operators.push(zero_based);
        }
        let inst = Instance {
            horizon: self.horizon,
            num_queues: self.num_queues,
            resource_types: self
                .resource_types
                .iter()
                .map(|n| ResourceType::new(n))
                .collect(),
            queue_operators,
            max_staff: self.max_staff,
            routing: RoutingCoefficients {
                alpha: self.routing.alpha,
                beta: self.routing.beta,
                gamma: self.routing.gamma,
                lambda: self.routing.lambda_,
            },
            work_budget: self.work_budget,
            shift_bounds: ShiftBounds {
                lower: self.shift_bounds.lbd,
                upper: self.shift_bounds.ubd,
            },
            bed_stock: self.bed_stock,
            bed_release: self.bed_release_profile,
        };
        let report = validate_instance(&inst);
        if let Some(issue) = report.issues.first() {
            return Err(EdoptError::field(issue.path.clone(), issue.message.clone()));
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrivalsFile {
    Poisson {
        rates: Vec<f64>,
    },
    Empirical {
        observations: Vec<Vec<u32>>,
    },
    Forecast {
        total: f64,
        profile: Vec<f64>,
        start_hour: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyFile {
    Exponential,
    Lognormal,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceFile {
    pub resource: usize,
    pub queue: usize,
    pub family: FamilyFile,
    pub mean_minutes: f64,
    /// Coefficient of variation; lognormal only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityFile {
    pub period_minutes: f64,
    pub services: Vec<ServiceFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenariosFile {
    pub schema: String,
    pub arrivals: ArrivalsFile,
    pub capacity: CapacityFile,
}

/// Distribution models ready for scenario generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioModels {
    pub arrivals: ArrivalModel,
    pub capacity: CapacityModel,
}

impl ScenariosFile {
    pub fn from_models(inst: &Instance, models: &ScenarioModels) -> Self {
        let arrivals = match &models.arrivals {
            ArrivalModel::Poisson { rates } => ArrivalsFile::Poisson {
                rates: rates.clone(),
            },
            ArrivalModel::Empirical { observations } => ArrivalsFile::Empirical {
                observations: observations.clone(),
            },
            ArrivalModel::Forecast {
                total,
                profile,
                start_hour,
            } => ArrivalsFile::Forecast {
                total: *total,
                profile: profile.clone(),
                start_hour: *start_hour,
            },
        };
        let services = inst
            .staffed_pairs()
            .iter()
            .zip(&models.capacity.services)
            .map(|(pair, svc)| {
                let (family, cv) = match svc.family {
                    ServiceFamily::Exponential => (FamilyFile::Exponential, None),
                    ServiceFamily::Lognormal { cv } => (FamilyFile::Lognormal, Some(cv)),
                    ServiceFamily::Deterministic => (FamilyFile::Deterministic, None),
                };
                ServiceFile {
                    resource: pair.resource + 1,
                    queue: pair.queue + 1,
                    family,
                    mean_minutes: svc.mean_minutes,
                    cv,
                }
            })
            .collect();
        ScenariosFile {
            schema: SCENARIOS_SCHEMA.into(),
            arrivals,
            capacity: CapacityFile {
                period_minutes: models.capacity.period_minutes,
                services,
            },
        }
    }

    pub fn into_models(self, inst: &Instance) -> Result<ScenarioModels, EdoptError> {
        if self.schema != SCENARIOS_SCHEMA {
            return Err(EdoptError::field(
                "schema",
                format!("expected \"{SCENARIOS_SCHEMA}\", found \"{}\"", self.schema),
            ));
        }
        let arrivals = match self.arrivals {
            ArrivalsFile::Poisson { rates } => ArrivalModel::Poisson { rates },
            ArrivalsFile::Empirical { observations } => ArrivalModel::Empirical { observations },
            ArrivalsFile::Forecast {
                total,
                profile,
                start_hour,
            } => ArrivalModel::Forecast {
                total,
                profile,
                start_hour,
            },
        };
        let pairs = inst.staffed_pairs();
        let mut services: Vec<Option<ServiceTime>> = vec![None; pairs.len()];
        for (n, svc) in self.capacity.services.iter().enumerate() {
            let path = format!("capacity.services[{n}]");
            let slot = pairs
                .iter()
                .position(|p| p.resource + 1 == svc.resource && p.queue + 1 == svc.queue)
                .ok_or_else(|| {
                    EdoptError::field(
                        path.clone(),
                        format!(
                            "resource {} does not staff queue {}",
                            svc.resource, svc.queue
                        ),
                    )
                })?;
            if services[slot].is_some() {
                return Err(EdoptError::field(path, "duplicate service entry"));
            }
            let family = match (svc.family, svc.cv) {
                (FamilyFile::Lognormal, Some(cv)) => ServiceFamily::Lognormal { cv },
                (FamilyFile::Lognormal, None) => {
                    return Err(EdoptError::field(path + ".cv", "lognormal needs cv"))
                }
                (_, Some(_)) => {
                    return Err(EdoptError::field(
                        path + ".cv",
                        "cv applies to lognormal only",
                    ))
                }
                (FamilyFile::Exponential, None) => ServiceFamily::Exponential,
                (FamilyFile::Deterministic, None) => ServiceFamily::Deterministic,
            };
            services[slot] = Some(ServiceTime {
                family,
                mean_minutes: svc.mean_minutes,
            });
        }
        let services = services
            .into_iter()
            .zip(&pairs)
            .map(|(svc, pair)| {
                svc.ok_or_else(|| {
                    EdoptError::field(
                        "capacity.services",
                        format!(
                            "missing entry for resource {} queue {}",
                            pair.resource + 1,
                            pair.queue + 1
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScenarioModels {
            arrivals,
            capacity: CapacityModel {
                period_minutes: self.capacity.period_minutes,
                services,
            },
        })
    }
}

pub fn default_models(inst: &Instance) -> ScenarioModels {
    ScenarioModels {
        arrivals: default_arrival_model(inst),
        capacity: default_capacity_model(inst),
    }
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, EdoptError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| EdoptError::Json {
        path: path.to_path_buf(),
        field: err.path().to_string(),
        message: err.inner().to_string(),
    })
}

fn in_file(path: &Path, err: EdoptError) -> EdoptError {
    match err {
        EdoptError::Field { field, message } => EdoptError::Json {
            path: path.to_path_buf(),
            field,
            message,
        },
        other => other,
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, EdoptError> {
    let text = read_text(path)?;
    let file: InstanceFile = parse_json(path, &text)?;
    file.into_instance().map_err(|e| in_file(path, e))
}

pub fn load_models(path: &Path, inst: &Instance) -> Result<ScenarioModels, EdoptError> {
    let text = read_text(path)?;
    let file: ScenariosFile = parse_json(path, &text)?;
    file.into_models(inst).map_err(|e| in_file(path, e))
}

pub fn instance_json(inst: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceFile::from(inst)).expect("plain data");
    text.push('\n');
    text
}

pub fn models_json(inst: &Instance, models: &ScenarioModels) -> String {
    let mut text = serde_json::to_string_pretty(&ScenariosFile::from_models(inst, models))
        .expect("plain data");
    text.push('\n');
    text
}
