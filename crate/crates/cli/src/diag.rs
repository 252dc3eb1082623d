//! Failure classification and the JSON diagnostic written to stderr.

use std::fmt;

use serde::Serialize;

/// Input that is well-formed on disk but semantically unusable.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Validation,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> u8 {
        match self {
            FailureKind::Validation => 1,
            FailureKind::Io => 2,
        }
    }
}

/// I/O failures anywhere in the chain win: a truncated read is an I/O
/// problem even when it surfaces as a parse error.
pub fn classify(err: &anyhow::Error) -> FailureKind {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return FailureKind::Validation;
        }
        if cause.is::<std::io::Error>() {
            return FailureKind::Io;
        }
        if let Some(e) = cause.downcast_ref::<dupforge::io::IoError>() {
            match e {
                dupforge::io::IoError::Io(_) => return FailureKind::Io,
                dupforge::io::IoError::Csv(c) if c.is_io_error() => return FailureKind::Io,
                _ => {}
            }
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            if e.is_io() {
                return FailureKind::Io;
            }
        }
    }
    FailureKind::Validation
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    level: &'static str,
    kind: FailureKind,
    message: String,
    causes: Vec<String>,
    command: &'a str,
}

pub fn report(command: &str, err: &anyhow::Error) -> u8 {
    let kind = classify(err);
    let d = Diagnostic {
        level: "error",
        kind,
        message: err.to_string(),
        causes: err.chain().skip(1).map(ToString::to_string).collect(),
        command,
    };
    eprintln!("{}", serde_json::to_string(&d).unwrap_or_else(|_| format!("{err:#}")));
    kind.exit_code()
}
