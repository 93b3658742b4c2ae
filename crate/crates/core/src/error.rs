use std::fmt;
use std::path::PathBuf;

/// A single violated invariant found while validating parameters or a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `graph.adjacency[0][1]`.
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation failed with {} violation(s):\n{}", .0.len(), join_lines(.0))]
    Validation(Vec<Violation>),

    #[error("simulation diverged at t = {t} s (step {step}), agent {agent}: {reason}")]
    Divergence {
        t: f64,
        step: usize,
        agent: usize,
        reason: String,
    },

    #[error("weight file {path}: {message}")]
    WeightSchema { path: PathBuf, message: String },

    #[error("consolidation window [{t_a}, {t_b}] is outside the logged range [{first}, {last}]")]
    Window {
        t_a: f64,
        t_b: f64,
        first: f64,
        last: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the command-line front-end.
    ///
    /// 0 success, 1 validation failure, 2 runtime divergence, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::Argument(_) => 1,
            Error::Divergence { .. } => 2,
            Error::WeightSchema { .. }
            | Error::Window { .. }
            | Error::Io { .. }
            | Error::Csv { .. }
            | Error::Plot(_) => 3,
        }
    }
}

fn join_lines(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
