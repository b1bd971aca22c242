use breakcircle::conjugacy::ConjugacyError;
use breakcircle::distortion::DistortionError;
use breakcircle::{MapError, NumberError, OrbitError, PartitionError};

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("{op}: invariant violated: {msg}")]
    Invariant { op: &'static str, msg: String },
    #[error("{op}: precision exhausted: {msg}")]
    Precision { op: &'static str, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(path: impl Into<String>, msg: impl ToString) -> Self {
        CliError::Config { path: path.into(), msg: msg.to_string() }
    }

    pub fn invariant(op: &'static str, msg: impl ToString) -> Self {
        CliError::Invariant { op, msg: msg.to_string() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Invariant { .. } => EXIT_INVARIANT,
            CliError::Precision { .. } => EXIT_PRECISION,
        }
    }
}

/// How a library error surfaces on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    /// The inputs were rejected.
    Input,
    /// A computed object failed one of its checks.
    Invariant,
    Precision,
}

pub trait Classify: std::fmt::Display {
    fn class(&self) -> Class;
}

impl Classify for NumberError {
    fn class(&self) -> Class {
        match self {
            NumberError::DepthUnreachable { .. } => Class::Precision,
            _ => Class::Input,
        }
    }
}

impl Classify for MapError {
    fn class(&self) -> Class {
        match self {
            MapError::PrecisionExhausted => Class::Precision,
            MapError::NotMonotone(_) => Class::Invariant,
            _ => Class::Input,
        }
    }
}

impl Classify for PartitionError {
    fn class(&self) -> Class {
        match self {
            PartitionError::DepthBeyondPrecision(_) => Class::Precision,
            PartitionError::NotAPartition(_) => Class::Invariant,
            _ => Class::Input,
        }
    }
}

impl Classify for OrbitError {
    fn class(&self) -> Class {
        match self {
            OrbitError::AmbiguousMatch { .. } => Class::Precision,
            OrbitError::Map(e) => e.class(),
            _ => Class::Invariant,
        }
    }
}

impl Classify for DistortionError {
    fn class(&self) -> Class {
        match self {
            DistortionError::Partition(e) => e.class(),
            DistortionError::Orbit(e) => e.class(),
            DistortionError::DegenerateTriple | DistortionError::InconclusiveWindow(_) => Class::Invariant,
            _ => Class::Input,
        }
    }
}

impl Classify for ConjugacyError {
    fn class(&self) -> Class {
        match self {
            ConjugacyError::Orbit(e) => e.class(),
            ConjugacyError::OrderMismatch { .. } => Class::Invariant,
            _ => Class::Input,
        }
    }
}

/// Attaches the failing operation to a library error.
pub trait Context<T> {
    fn during(self, op: &'static str) -> Result<T, CliError>;
}

impl<T, E: Classify> Context<T> for Result<T, E> {
    fn during(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|e| match e.class() {
            Class::Input => CliError::Config { path: op.to_string(), msg: e.to_string() },
            Class::Invariant => CliError::Invariant { op, msg: e.to_string() },
            Class::Precision => CliError::Precision { op, msg: e.to_string() },
        })
    }
}
