//! Extrapolation benchmark: train on a window, score MSE on cumulative
//! windows beyond its right border, for a standard MLP and the varied-depth
//! combination.

mod data;
mod report;
mod store;
mod sweep;

pub use data::{
    gen_synthetic, load_csv_column, load_csv_series, series_from_reader, split_extrapolation, ExtrapolationSplit,
    Series, SeriesSpec, SyntheticFunction, SyntheticSpec,
};
pub use report::{summarize, trajectory_rows, write_summary_csv, write_trajectories_csv, SummaryRow, TrajectoryRow};
pub use store::{RecordKey, RecordStore};
pub use sweep::{build_model, checkpoint_name, run_extrapolation, train_run, SweepJob, SweepOptions, TrainedRun};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::NetError;

/// Windows `π/4, π/2, 3π/4, π` in normalized input units.
pub const DEFAULT_WINDOWS: [f64; 4] = [
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_2,
    3.0 * std::f64::consts::FRAC_PI_4,
    std::f64::consts::PI,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("unknown task `{0}` (expected sin, complex_periodic, quadratic or tanh)")]
    UnknownTask(String),
    #[error("unknown model `{0}` (expected standard or proposed)")]
    UnknownModel(String),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("column `{column}` not found; available columns: {}", available.join(", "))]
    MissingColumn { column: String, available: Vec<String> },
    #[error("row {row}: column `{column}` holds `{value}`, not a finite number")]
    BadCell { row: usize, column: String, value: String },
    #[error("series has {found} rows but needs at least {needed}")]
    ShortSeries { needed: usize, found: usize },
    #[error("window {window:.4} extends {shortfall:.4} beyond the available data ({available:.4} past the border)")]
    WindowBeyondData { window: f64, available: f64, shortfall: f64 },
    #[error("window {0} holds no samples")]
    EmptyWindow(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error("record store: {0}")]
    Store(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Standard,
    Proposed,
}

impl ModelTag {
    pub const ALL: [ModelTag; 2] = [ModelTag::Standard, ModelTag::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Standard => "standard",
            ModelTag::Proposed => "proposed",
        }
    }
}

impl std::str::FromStr for ModelTag {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(ModelTag::Standard),
            "proposed" => Ok(ModelTag::Proposed),
            other => Err(BenchError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model: ModelTag,
    pub task: String,
    /// Length beyond the training border, normalized input units.
    pub window: f64,
    pub seed: u64,
    pub mse: f64,
    pub n_eval: usize,
    pub best_epoch: usize,
    pub diverged: bool,
    /// Wall-clock training time; only recorded on request since it breaks
    /// byte-identical reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl BenchRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey::new(self.model, &self.task, self.window, self.seed)
    }
}
