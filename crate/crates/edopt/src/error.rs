use std::path::{Path, PathBuf};

use edopt_core::milp::MilpError;
use edopt_core::sim::SimError;
use edopt_core::stochastic::StochasticError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdoptError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: field `{field}`: {message}", path.display())]
    Json {
        path: PathBuf,
        field: String,
        message: String,
    },
    /// A field-level problem not yet attributed to a file.
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{}: line {line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("MPS line {line}: {message}")]
    Mps { line: usize, message: String },
    #[error("schedule is infeasible:\n  {}", .0.join("\n  "))]
    InfeasibleSchedule(Vec<String>),
    #[error("schedule.csv and result.json disagree: {0}")]
    ReportMismatch(String),
    #[error("solver finished with status {0}")]
    Solver(&'static str),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

impl EdoptError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        EdoptError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        EdoptError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, EdoptError> {
    std::fs::read_to_string(path).map_err(|e| EdoptError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), EdoptError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| EdoptError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| EdoptError::io(path, e))
}
