use std::path::PathBuf;

use thiserror::Error;

/// Errors of the command-line layer. Each maps onto one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {path}{}: at `{field}`: {msg}", location(*.line, *.column))]
    Config {
        path: String,
        line: usize,
        column: usize,
        field: String,
        msg: String,
    },
    #[error("config error: {0}")]
    Invalid(String),
    #[error("empty parameter range: {0}")]
    EmptyRange(String),
    #[error("{op}: {source}")]
    Module {
        op: &'static str,
        #[source]
        source: kahlercap_core::Error,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {}: {msg}", .path.display())]
    Format { path: PathBuf, msg: String },
    #[error("invariant failed: {0}")]
    Invariant(String),
}

fn location(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line}, column {column})")
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use kahlercap_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::EmptyRange(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Format { .. } => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Module { source, .. } => match source {
                E::ConvergenceFailure { .. } => EXIT_CONVERGENCE,
                E::ResolutionTooSmall(_)
                | E::InvalidGrid(_)
                | E::BadChart { .. }
                | E::InvalidArgument(_)
                | E::Parse { .. }
                | E::DegreeMismatch
                | E::DegenerateLift
                | E::BallTouchesBoundary
                | E::GridMismatch
                | E::PositiveSup(_) => EXIT_CONFIG,
                _ => EXIT_INVARIANT,
            },
        }
    }
}

/// Tags a core error with the operation that raised it.
pub trait Op<T> {
    fn op(self, name: &'static str) -> CliResult<T>;
}

impl<T> Op<T> for kahlercap_core::Result<T> {
    fn op(self, name: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Module { op: name, source })
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
