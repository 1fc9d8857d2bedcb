//! Errors carrying their process exit code.

use std::fmt;

use swdtau::classify::ClassifyError;
use swdtau::detector::DetectError;
use swdtau::signal_model::io::FormatError;
use swdtau::synthgen::SynthError;

/// Exit codes: 2 input or config error, 3 incompatible templates,
/// 4 statistical degeneracy, 1 failed benchmark check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Check = 1,
    Input = 2,
    Incompatible = 3,
    Degenerate = 4,
}

#[derive(Debug)]
pub struct CliError {
    kind: ExitKind,
    message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Input, message)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }

    /// Prefixes the message, typically with a file name.
    pub fn context(self, what: &str) -> Self {
        CliError {
            kind: self.kind,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::config(format!("synth: {e}"))
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        let kind = if e.is_incompatibility() {
            ExitKind::Incompatible
        } else {
            ExitKind::Input
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        let kind = match e {
            ClassifyError::NonFinite(_) => ExitKind::Input,
            _ => ExitKind::Degenerate,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(e.to_string())
    }
}
