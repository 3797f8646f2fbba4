use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::net::InputMap;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticFunction {
    Sin,
    ComplexPeriodic,
    Quadratic,
    Tanh,
}

impl SyntheticFunction {
    pub const ALL: [SyntheticFunction; 4] = [
        SyntheticFunction::Sin,
        SyntheticFunction::ComplexPeriodic,
        SyntheticFunction::Quadratic,
        SyntheticFunction::Tanh,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            SyntheticFunction::Sin => x.sin(),
            SyntheticFunction::ComplexPeriodic => x.sin() + 0.5 * (3.0 * x).sin(),
            SyntheticFunction::Quadratic => 0.1 * x * x,
            SyntheticFunction::Tanh => x.tanh(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SyntheticFunction::Sin => "sin",
            SyntheticFunction::ComplexPeriodic => "complex_periodic",
            SyntheticFunction::Quadratic => "quadratic",
            SyntheticFunction::Tanh => "tanh",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            SyntheticFunction::Sin => "sin(x)",
            SyntheticFunction::ComplexPeriodic => "sin(x) + 0.5*sin(3x)",
            SyntheticFunction::Quadratic => "0.1*x^2",
            SyntheticFunction::Tanh => "tanh(x)",
        }
    }
}

impl std::str::FromStr for SyntheticFunction {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SyntheticFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub function: SyntheticFunction,
    pub train_domain: (f64, f64),
    pub n_train: usize,
    pub noise_std: f64,
    /// How far past the training border samples are generated, in
    /// normalized input units.
    pub extension: f64,
}

impl SyntheticSpec {
    pub fn new(function: SyntheticFunction) -> Self {
        SyntheticSpec {
            function,
            train_domain: (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI),
            n_train: 1000,
            noise_std: 0.0,
            extension: std::f64::consts::PI,
        }
    }
}

/// A uniformly sampled series whose first `n_train` points form the
/// training window.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n_train: usize,
}

impl Series {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Map sending the training window to `[-1, 1]`.
    pub fn input_map(&self) -> Result<InputMap, BenchError> {
        Ok(InputMap::new(self.x[0], self.x[self.n_train - 1])?)
    }

    /// Normalized coordinate of point `i`, computed from its index so the
    /// grid is exact: `−1 + 2i/(n_train − 1)`.
    pub fn normalized(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / (self.n_train - 1) as f64
    }
}

/// Box–Muller.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Series, BenchError> {
    let (a, b) = spec.train_domain;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(BenchError::Spec(format!("invalid train domain [{a}, {b}]")));
    }
    if spec.n_train < 100 {
        return Err(BenchError::Spec(format!("n_train must be at least 100, got {}", spec.n_train)));
    }
    if !(spec.noise_std >= 0.0 && spec.extension >= 0.0) {
        return Err(BenchError::Spec("noise_std and extension must be non-negative".into()));
    }
    let steps = (spec.n_train - 1) as f64;
    // Normalized spacing is 2/(n_train − 1).
    let extra = (spec.extension * steps / 2.0 + 1e-9).floor() as usize;
    let total = spec.n_train + extra;
    let mut rng = seed::rng_for(seed, &[seed::tag("noise"), seed::tag(spec.function.name())]);
    let x: Vec<f64> = (0..total).map(|i| a + (b - a) * i as f64 / steps).collect();
    let y = x
        .iter()
        .map(|&xi| {
            let clean = spec.function.eval(xi);
            if spec.noise_std > 0.0 {
                clean + spec.noise_std * standard_normal(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    Ok(Series {
        x,
        y,
        n_train: spec.n_train,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub csv_path: PathBuf,
    pub value_column: String,
    pub train_length: usize,
}

/// Reads one numeric column. Row numbers in errors count data rows from 1.
pub fn load_csv_column<R: std::io::Read>(reader: R, column: &str) -> Result<Vec<f64>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| BenchError::Csv(e.to_string()))?.clone();
    let Some(idx) = headers.iter().position(|h| h == column) else {
        return Err(BenchError::MissingColumn {
            column: column.to_string(),
            available: headers.iter().map(str::to_string).collect(),
        });
    };
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| BenchError::Csv(format!("row {row}: {e}")))?;
        let cell = rec.get(idx).unwrap_or("");
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(BenchError::BadCell {
                    row,
                    column: column.to_string(),
                    value: cell.to_string(),
                })
            }
        }
    }
    Ok(values)
}

/// Series indexed by sample number, `x = 0, 1, …`.
pub fn load_csv_series(spec: &SeriesSpec) -> Result<Series, BenchError> {
    let file = std::fs::File::open(&spec.csv_path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", spec.csv_path.display())))?;
    series_from_reader(file, &spec.value_column, spec.train_length, &spec.csv_path)
}

pub fn series_from_reader<R: std::io::Read>(
    reader: R,
    column: &str,
    train_length: usize,
    source: &Path,
) -> Result<Series, BenchError> {
    let values = load_csv_column(reader, column)?;
    if train_length < 2 || train_length + 1 > values.len() {
        return Err(BenchError::ShortSeries {
            needed: train_length.max(2) + 1,
            found: values.len(),
        });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    log::info!(
        "{}: {} rows of `{column}`, mean {mean:.4}, min {:.4}, max {:.4}",
        source.display(),
        values.len(),
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(Series {
        x: (0..values.len()).map(|i| i as f64).collect(),
        y: values,
        n_train: train_length,
    })
}

/// Train pairs and cumulative evaluation windows, in normalized input units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationSplit {
    pub train: Vec<(f64, f64)>,
    pub windows: Vec<f64>,
    pub evals: Vec<Vec<(f64, f64)>>,
    pub input_map: InputMap,
}

/// Tolerance for placing a grid point inside a window edge.
const EDGE_TOL: f64 = 1e-9;

pub fn split_extrapolation(series: &Series, windows: &[f64]) -> Result<ExtrapolationSplit, BenchError> {
    if windows.is_empty() {
        return Err(BenchError::Spec("need at least one window".into()));
    }
    if windows[0] <= 0.0 || windows.windows(2).any(|w| w[1] <= w[0]) || !windows.iter().all(|w| w.is_finite()) {
        return Err(BenchError::Spec(format!("windows must be positive and ascending, got {windows:?}")));
    }
    if series.n_train < 2 || series.n_train > series.len() {
        return Err(BenchError::Spec("training window must hold at least 2 points".into()));
    }
    let input_map = series.input_map()?;
    let last = series.len() - 1;
    let available = series.normalized(last) - 1.0;
    let widest = *windows.last().expect("non-empty");
    // Every grid point of the widest window must exist: the next point past
    // the data would lie beyond it.
    let spacing = 2.0 / (series.n_train - 1) as f64;
    if widest + EDGE_TOL >= available + spacing {
        return Err(BenchError::WindowBeyondData {
            window: widest,
            available,
            shortfall: widest - available,
        });
    }
    let train = (0..series.n_train).map(|i| (series.normalized(i), series.y[i])).collect();
    let mut evals = Vec::with_capacity(windows.len());
    for &w in windows {
        let set: Vec<(f64, f64)> = (series.n_train..series.len())
            .map(|i| (series.normalized(i), series.y[i]))
            .filter(|(u, _)| *u - 1.0 <= w + EDGE_TOL)
            .collect();
        if set.is_empty() {
            return Err(BenchError::EmptyWindow(w));
        }
        evals.push(set);
    }
    Ok(ExtrapolationSplit {
        train,
        windows: windows.to_vec(),
        evals,
        input_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn generator_values() {
        assert_eq!(SyntheticFunction::Sin.eval(PI / 2.0), 1.0);
        assert_eq!(SyntheticFunction::Quadratic.eval(0.0), 0.0);
        assert_eq!(SyntheticFunction::ComplexPeriodic.eval(0.0), 0.0);
        assert!("cosine".parse::<SyntheticFunction>().is_err());
    }

    #[test]
    fn synthetic_grid_extends_past_the_border() {
        let s = gen_synthetic(&SyntheticSpec::new(SyntheticFunction::Sin), 0).unwrap();
        assert_eq!(s.n_train, 1000);
        assert_eq!(s.x[999], 2.0 * PI);
        assert!(s.normalized(s.len() - 1) - 1.0 <= PI + 1e-9);
        assert!(s.normalized(s.len() - 1) - 1.0 > PI - 2.0 / 999.0);
        let mut bad = SyntheticSpec::new(SyntheticFunction::Sin);
        bad.n_train = 50;
        assert!(gen_synthetic(&bad, 0).is_err());
    }

    #[test]
    fn windows_are_cumulative_and_disjoint_from_training() {
        let s = gen_synthetic(&SyntheticSpec::new(SyntheticFunction::Sin), 0).unwrap();
        let w = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
        let split = split_extrapolation(&s, &w).unwrap();
        assert_eq!(split.train.len(), 1000);
        let last_train = split.train.last().unwrap().0;
        assert_eq!(last_train, 1.0);
        for k in 0..4 {
            assert!(split.evals[k].iter().all(|(u, _)| *u > last_train));
            if k > 0 {
                assert!(split.evals[k].starts_with(&split.evals[k - 1]));
            }
        }
        assert!(matches!(
            split_extrapolation(&s, &[PI + 0.1]),
            Err(BenchError::WindowBeyondData { .. })
        ));
        assert!(split_extrapolation(&s, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn csv_column_loading() {
        let text = "date,OT\na,1\nb,2\nc,3\n";
        assert_eq!(load_csv_column(text.as_bytes(), "OT").unwrap(), vec![1.0, 2.0, 3.0]);
        match load_csv_column(text.as_bytes(), "HUFL") {
            Err(BenchError::MissingColumn { available, .. }) => assert_eq!(available, vec!["date", "OT"]),
            other => panic!("{other:?}"),
        }
        let mut rows = String::from("OT\n");
        for i in 1..=10 {
            rows.push_str(if i == 7 { "NaN\n" } else { "1.5\n" });
        }
        let err = load_csv_column(rows.as_bytes(), "OT").unwrap_err();
        assert!(matches!(err, BenchError::BadCell { row: 7, .. }));
        assert!(err.to_string().contains("row 7"));
    }
}
