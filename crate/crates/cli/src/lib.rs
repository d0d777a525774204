//! `glyphctl` command-line interface.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a backend fails and
//! 1 for anything else. With `--json`, results go to stdout and errors to
//! stderr as single-line JSON objects.

mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use serde_json::{json, Value};

use glyphctl::mask::CodecError;
use glyphctl::pipeline::PipelineError;

pub use args::Cli;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Backend,
    Internal,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, code: code.into(), message: message.into(), detail: Value::Null }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Internal, code: "internal_error".into(), message: message.into(), detail: Value::Null }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Backend => 3,
            ErrorKind::Internal => 1,
        }
    }

    fn to_json(&self) -> Value {
        json!({ "code": self.code, "message": self.message, "detail": self.detail })
    }
}

impl<E: Into<PipelineError>> From<E> for CliError {
    fn from(e: E) -> Self {
        let e: PipelineError = e.into();
        let missing = |err: &std::io::Error| err.kind() == std::io::ErrorKind::NotFound;
        let kind = match &e {
            _ if e.is_backend() => ErrorKind::Backend,
            PipelineError::Io { source, .. } if missing(source) => ErrorKind::Validation,
            PipelineError::Codec(CodecError::Io { source, .. }) if missing(source) => ErrorKind::Validation,
            PipelineError::Io { .. } | PipelineError::Codec(CodecError::Io { .. } | CodecError::Encode(_)) => ErrorKind::Internal,
            _ => ErrorKind::Validation,
        };
        let detail = match &e {
            PipelineError::Backend(glyphctl::backend::BackendError::Unavailable { endpoint, attempts, .. }) => {
                json!({ "endpoint": endpoint, "attempts": attempts })
            }
            PipelineError::MisalignedOutputs { id, path } => json!({ "id": id, "path": path }),
            PipelineError::Manifest { path, line, .. } => json!({ "path": path, "line": line }),
            _ => Value::Null,
        };
        CliError { kind, code: e.code().into(), message: e.to_string(), detail }
    }
}

/// What a successful command reports: `text` normally, `json` with `--json`.
pub struct Output {
    pub text: String,
    pub json: Value,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let json_mode = argv.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ClapKind::DisplayHelp | ClapKind::DisplayVersion | ClapKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            let _ = e.print();
            return if e.kind() == ClapKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
        }
        Err(e) => {
            if json_mode {
                let text = e.to_string();
                let msg = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
                let err = CliError::validation("usage", msg).to_json();
                eprintln!("{err}");
            } else {
                let _ = e.print();
            }
            return 2;
        }
    };
    match commands::run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let written = if cli.json {
                writeln!(stdout, "{}", out.json)
            } else if out.text.is_empty() {
                Ok(())
            } else {
                writeln!(stdout, "{}", out.text)
            };
            if written.is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            if cli.json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error[{}]: {}", e.code, e.message);
            }
            e.exit_code()
        }
    }
}
