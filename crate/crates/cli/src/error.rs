//! CLI error channel: invalid input (exit 1) vs stage failure (exit 2).

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable / malformed input files. Exit code 1.
    Input(String),
    /// A stage failed while computing or writing its outputs. Exit code 2.
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Stage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "invalid input: {msg}"),
            CliError::Stage(msg) => write!(f, "stage failed: {msg}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input_err(msg: impl fmt::Display) -> CliError {
    CliError::Input(msg.to_string())
}

pub fn stage_err(msg: impl fmt::Display) -> CliError {
    CliError::Stage(msg.to_string())
}

/// Run a stage body with its output directory created up front; any error
/// removes the directory so a failed stage never leaves partial outputs.
pub fn run_stage<T>(dir: &Path, body: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
    std::fs::create_dir_all(dir)
        .map_err(|e| stage_err(format!("create {}: {e}", dir.display())))?;
    match body() {
        Ok(v) => Ok(v),
        Err(e) => {
            let _ = std::fs::remove_dir_all(dir);
            Err(e)
        }
    }
}
