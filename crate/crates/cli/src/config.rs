use std::path::{Path, PathBuf};

use annlab::annihilator::AnnihilatorConfig;
use annlab::bench::{ModelTag, SyntheticFunction, DEFAULT_WINDOWS};
use annlab::net::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ANNLAB_OUT";
pub const DEFAULT_OUT_ROOT: &str = "annlab-out";
pub const CONFIG_FILE: &str = "config.json";

/// Everything a run depends on. Written as `config.json` next to the
/// outputs; passing that file back via `--config` repeats the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub log_level: String,
    /// Worker cap for sweeps; 0 means one per core.
    pub jobs: usize,
    /// Task for `train`.
    pub task: Option<String>,
    /// Model for `train`.
    pub model: ModelTag,
    /// Input for `annihilate` and `saturate`.
    pub checkpoint: Option<PathBuf>,
    pub train: TrainConfig,
    pub annihilator: AnnihilatorConfig,
    pub classify: ClassifyConfig,
    pub bench: BenchConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: None,
            log_level: "warn".into(),
            jobs: 0,
            task: None,
            model: ModelTag::Standard,
            checkpoint: None,
            train: TrainConfig::default(),
            annihilator: AnnihilatorConfig::default(),
            classify: ClassifyConfig::default(),
            bench: BenchConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// `[c₁, …, c_n]` of the monic operator `D^n + c_n D^{n−1} + … + c₁`.
    pub companion: Option<Vec<f64>>,
    /// Square matrix, row by row.
    pub inertia: Option<Vec<Vec<f64>>>,
    /// CSV of uniformly spaced samples.
    pub samples: Option<PathBuf>,
    pub x_column: String,
    pub y_column: String,
    pub max_order: usize,
    pub degree: u32,
    pub tol: f64,
    pub accuracy: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            companion: None,
            inertia: None,
            samples: None,
            x_column: "x".into(),
            y_column: "y".into(),
            max_order: 4,
            degree: 1,
            tol: 1e-8,
            accuracy: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Synthetic tasks; ignored when a CSV source is selected.
    pub tasks: Vec<String>,
    pub seeds: Vec<u64>,
    /// Cumulative evaluation windows past the training border, in
    /// normalized input units.
    pub windows: Vec<f64>,
    pub n_train: usize,
    pub noise_std: f64,
    /// Samples generated past the training border, normalized units.
    pub extension: f64,
    /// Use the bundled ETTh1-layout head file.
    pub fixture: bool,
    /// Use an ETT-style CSV file.
    pub csv: Option<PathBuf>,
    pub column: String,
    /// Training rows of a CSV series; defaults to 16 for the fixture and
    /// 2500 otherwise.
    pub train_length: Option<usize>,
    pub record_runtime: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tasks: SyntheticFunction::ALL.iter().map(|f| f.name().to_string()).collect(),
            seeds: (0..5).collect(),
            windows: DEFAULT_WINDOWS.to_vec(),
            n_train: 1000,
            noise_std: 0.0,
            extension: std::f64::consts::PI,
            fixture: false,
            csv: None,
            column: "OT".into(),
            train_length: None,
            record_runtime: false,
        }
    }
}

impl BenchConfig {
    pub fn uses_csv(&self) -> bool {
        self.fixture || self.csv.is_some()
    }

    pub fn train_length(&self) -> usize {
        self.train_length.unwrap_or(if self.fixture { 16 } else { 2500 })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Directory of a finished `bench` run.
    pub run: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Output directory: explicit setting, else `$ANNLAB_OUT/<leaf>`, else
    /// `annlab-out/<leaf>`.
    pub fn resolve_output(&mut self, leaf: &str) -> PathBuf {
        let dir = match &self.output_dir {
            Some(d) => d.clone(),
            None => {
                let root = std::env::var_os(OUT_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
                root.join(leaf)
            }
        };
        self.output_dir = Some(dir.clone());
        dir
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(CONFIG_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults_and_rejects_typos() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 7, "train": {"patience": 5}}"#).unwrap();
        let cfg = RunConfig::load(Some(&path)).unwrap();
        assert_eq!((cfg.seed, cfg.train.patience), (7, 5));
        assert_eq!(cfg.train.max_epochs, TrainConfig::default().max_epochs);

        std::fs::write(&path, r#"{"train": {"lerning_rate": 0.1}}"#).unwrap();
        let err = RunConfig::load(Some(&path)).unwrap_err();
        assert_eq!(err.class, "config");
        assert!(err.message.contains("lerning_rate"), "{}", err.message);
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.output_dir = Some("x".into());
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
