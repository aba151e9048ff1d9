use std::process::ExitCode;

use serde::Serialize;
use wignerkit::{Error, Tolerances};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Attached to every JSON output. Holds everything that influences the
/// numbers; nothing time- or host-dependent.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub deterministic: bool,
    pub seed: Option<u64>,
    pub method: Option<String>,
    pub tolerances: Tolerances,
}

impl Metadata {
    pub fn new(argv: &[String], tolerances: Tolerances) -> Self {
        Metadata {
            tool: "wignerkit",
            version: env!("CARGO_PKG_VERSION"),
            command: argv.iter().skip(1).cloned().collect(),
            deterministic: true,
            seed: None,
            method: None,
            tolerances,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Unreadable, unwritable or malformed file.
    File(String),
    Core(Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn file(path: &std::path::Path, e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_) => {
                CliError::File(format!("{}: {e}", path.display()))
            }
            other => CliError::Core(other),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::File(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }

    /// Prints a one-line JSON error on stderr.
    pub fn report(&self) -> ExitCode {
        let code = self.code();
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::File(m) => ("input", m.clone()),
            CliError::Core(e) if e.is_validation() => ("validation", e.to_string()),
            CliError::Core(e) => ("numerical", e.to_string()),
        };
        let line = serde_json::json!({
            "error": { "kind": kind, "code": code, "message": message.replace('\n', " ") }
        });
        eprintln!("{line}");
        ExitCode::from(code)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}
