use std::fmt;
use std::path::Path;

use annlab::annihilator::AnnihilatorError;
use annlab::bench::BenchError;
use annlab::net::NetError;
use annlab::variability::VariabilityError;

/// A failure reported as one line, `error[<class>]: <message>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(class: &'static str, message: impl Into<String>) -> Self {
        CliError {
            class,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            "usage" | "config" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {one_line}", self.class)
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        let class = match e {
            NetError::Config(_) => "usage",
            NetError::Checkpoint(_) => "checkpoint",
            NetError::Dataset(_) => "data",
            NetError::NonFinite(_) => "numeric",
            NetError::Shape(_) | NetError::EmptyBatch => "model",
        };
        Self::new(class, e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let class = match &e {
            BenchError::UnknownTask(_) | BenchError::UnknownModel(_) | BenchError::Spec(_) => "usage",
            BenchError::MissingColumn { .. }
            | BenchError::BadCell { .. }
            | BenchError::ShortSeries { .. }
            | BenchError::WindowBeyondData { .. }
            | BenchError::EmptyWindow(_)
            | BenchError::Csv(_) => "data",
            BenchError::Io(_) => "io",
            BenchError::Store(_) => "store",
            BenchError::Net(n) => return n.clone().into(),
        };
        Self::new(class, e.to_string())
    }
}

impl From<AnnihilatorError> for CliError {
    fn from(e: AnnihilatorError) -> Self {
        let class = match &e {
            AnnihilatorError::Capacity(msg) => return Self::new("capacity", msg.clone()),
            AnnihilatorError::Underdetermined { .. } => "numeric",
            AnnihilatorError::Invalid(_) | AnnihilatorError::Poly(_) => "usage",
            AnnihilatorError::Net(n) => return n.clone().into(),
        };
        Self::new(class, e.to_string())
    }
}

impl From<VariabilityError> for CliError {
    fn from(e: VariabilityError) -> Self {
        let class = match &e {
            VariabilityError::Unreliable(_) => "unreliable",
            VariabilityError::Invalid(_) | VariabilityError::Poly(_) => "usage",
            VariabilityError::Io(_) => "data",
        };
        Self::new(class, e.to_string())
    }
}
