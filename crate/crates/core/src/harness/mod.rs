//! Pipeline stages, system-under-test adapters, execution and reporting.
//!
//! [`pipeline`] holds the stages as library functions over in-memory values;
//! [`commands`] wraps them as the command-line subcommands, which read and
//! write files under an output directory and map failures to exit codes.

pub mod commands;
mod execute;
pub mod pipeline;
mod report;
mod sut;

pub use execute::{execute_case, execute_suite, ExecutionReport, Outcome, TestResult, Totals};
pub use report::{build_report, cex_file, render_markdown, ReportInputs, RequirementRow, SafetyVerificationReport};
pub use sut::{sut_by_name, AccController, AccFault, Observation, SutAdapter, SutError, SUT_NAMES};

use crate::behavior::BehaviorError;
use crate::context::ContextError;
use crate::dsl::{parse_project_file, ParseError};
use crate::model::{validate, Project};
use crate::testgen::{ConcretizeError, IntegrityError};
use crate::verifier::FormalizeError;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// A property was violated or a test failed.
    pub const FAILURE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const RESOURCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseError>),
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Formalize(#[from] FormalizeError),
    #[error(transparent)]
    Concretize(#[from] ConcretizeError),
    #[error("suite does not match the model: {0}")]
    Integrity(#[from] IntegrityError),
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("{path}: malformed artifact: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("unknown system under test `{0}` (known: {known})", known = SUT_NAMES.join(", "))]
    UnknownSut(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Behavior(BehaviorError::ResourceExceeded { .. }) => exit::RESOURCE,
            _ => exit::INPUT,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a project from text; validation errors are fatal, warnings are returned.
pub fn load_project_str(source: &str, file: &str) -> Result<(Project, Vec<String>), HarnessError> {
    let project = parse_project_file(source, file).map_err(HarnessError::Parse)?;
    let report = validate(&project);
    if !report.is_ok() {
        return Err(HarnessError::Invalid(
            report.errors.iter().map(|f| format!("{file}: {f}")).collect(),
        ));
    }
    let warnings = report.warnings.iter().map(|f| format!("{file}: {f}")).collect();
    Ok((project, warnings))
}

pub fn load_project(path: &Path) -> Result<(Project, Vec<String>), HarnessError> {
    let source = std::fs::read_to_string(path).map_err(io_err(path))?;
    load_project_str(&source, &path.display().to_string())
}
