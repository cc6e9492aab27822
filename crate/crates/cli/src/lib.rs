//! Subcommands of the `gardner` binary.
//!
//! Each command reads its TOML section, writes CSV/JSON artifacts and a
//! `manifest.json` into the output directory, and reports pass/fail.
//! Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.

pub mod commands;
pub mod config;
pub mod schema;

use std::fmt;
use std::path::{Path, PathBuf};

use gardner_core::Error as CoreError;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration, bad parameters.
    Config(String),
    /// A computation failed part way.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_)
            | CoreError::Regime(_)
            | CoreError::DomainTooSmall { .. }
            | CoreError::Resource(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

/// What a command found.
#[derive(Debug, Default)]
pub struct Outcome {
    pub pass: bool,
    pub warnings: Vec<String>,
    /// One line per check for the terminal.
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self, strict: bool) -> i32 {
        if self.pass && !(strict && !self.warnings.is_empty()) {
            0
        } else {
            1
        }
    }
}

/// Output directory that remembers what was written.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Outputs, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON, checked against the file's schema before it is written.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Run(e.to_string()))?;
        if let Some(s) = schema::for_file(name) {
            let errs = schema::validate_str(s, &v);
            if !errs.is_empty() {
                return Err(CliError::Run(format!("{name} violates its schema: {}", errs.join("; "))));
            }
        }
        let mut body = serde_json::to_string_pretty(&v).map_err(|e| CliError::Run(e.to_string()))?;
        body.push('\n');
        self.text(name, &body)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub strict: bool,
    pub pass: bool,
    pub warnings: Vec<String>,
    /// The configuration section actually used, defaults filled in.
    pub config: Value,
}

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
