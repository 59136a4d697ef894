//! Command-line front end: scenario files in, CSV or JSON reports out.

pub mod fixtures;
pub mod report;
pub mod runner;
pub mod scenario;

use qsl_core::QslError;

pub use report::{Format, Metric, ReportRow};
pub use runner::{RunOptions, ToleranceProfile};
pub use scenario::{Scenario, ScenarioSpec, ValidationError};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;
pub const EXIT_FIXTURE_MISMATCH: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    Numerical(QslError),
    #[error("fixture mismatch: {}", .0.join("; "))]
    FixtureMismatch(Vec<String>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl From<QslError> for CliError {
    fn from(e: QslError) -> Self {
        CliError::Numerical(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(
                QslError::NoConvergence { .. }
                | QslError::NoImprovement
                | QslError::StepResolution { .. }
                | QslError::NotReached { .. }
                | QslError::Numerical(_),
            ) => EXIT_NON_CONVERGENCE,
            CliError::FixtureMismatch(_) => EXIT_FIXTURE_MISMATCH,
            _ => EXIT_VALIDATION,
        }
    }
}

/// Scenario text and a name for messages: a file path if one exists,
/// otherwise a built-in fixture.
pub fn load_scenario(arg: &str) -> Result<(String, String), CliError> {
    let path = std::path::Path::new(arg);
    if path.exists() {
        return Ok((std::fs::read_to_string(path)?, arg.to_string()));
    }
    match fixtures::builtin(arg) {
        Some(text) => Ok((text.to_string(), format!("fixture:{arg}"))),
        None => Err(CliError::Validation(ValidationError {
            origin: arg.to_string(),
            field: String::new(),
            line: None,
            column: None,
            message: format!("no such file or built-in fixture (built-ins: {})", fixtures::NAMES.join(", ")),
        })),
    }
}
