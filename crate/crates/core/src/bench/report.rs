use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchRecord, ModelTag, Series};
use crate::net::Checkpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub model: ModelTag,
    pub window: f64,
    pub mean_mse: f64,
    /// Population standard deviation over seeds.
    pub std_mse: f64,
    pub n_seeds: usize,
}

/// Mean and spread of MSE per `(task, model, window)`. Diverged runs are
/// left out of the statistics.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, ModelTag, u64), Vec<f64>> = BTreeMap::new();
    for r in records {
        let entry = groups.entry((r.task.clone(), r.model, r.window.to_bits())).or_default();
        if r.diverged {
            log::warn!("{}/{}/seed {}: diverged run excluded from the summary", r.task, r.model.name(), r.seed);
        } else {
            entry.push(r.mse);
        }
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((task, model, bits), v)| {
            let n = v.len();
            let (mean, std) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = v.iter().sum::<f64>() / n as f64;
                let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            };
            SummaryRow {
                task,
                model,
                window: f64::from_bits(bits),
                mean_mse: mean,
                std_mse: std,
                n_seeds: n,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.task
            .cmp(&b.task)
            .then(a.model.cmp(&b.model))
            .then(a.window.total_cmp(&b.window))
    });
    rows
}

/// CSV with header `task,model,window,mean_mse,std_mse,n_seeds`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| BenchError::Csv(e.to_string());
    w.write_record(["task", "model", "window", "mean_mse", "std_mse", "n_seeds"]).map_err(e)?;
    for r in rows {
        w.write_record([
            r.task.clone(),
            r.model.name().to_string(),
            r.window.to_string(),
            r.mean_mse.to_string(),
            r.std_mse.to_string(),
            r.n_seeds.to_string(),
        ])
        .map_err(e)?;
    }
    w.flush().map_err(|e| BenchError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub x: f64,
    pub y_true: f64,
    pub y_pred: f64,
    pub model: ModelTag,
    pub task: String,
}

/// Predictions over the whole series (training window and beyond).
pub fn trajectory_rows(series: &Series, checkpoint: &Checkpoint, model: ModelTag, task: &str) -> Vec<TrajectoryRow> {
    series
        .x
        .iter()
        .zip(&series.y)
        .map(|(&x, &y)| TrajectoryRow {
            x,
            y_true: y,
            y_pred: checkpoint.predict_raw(x),
            model,
            task: task.to_string(),
        })
        .collect()
}

/// CSV with header `x,y_true,y_pred,model,task`.
pub fn write_trajectories_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| BenchError::Csv(e.to_string());
    w.write_record(["x", "y_true", "y_pred", "model", "task"]).map_err(e)?;
    for r in rows {
        w.write_record([
            r.x.to_string(),
            r.y_true.to_string(),
            r.y_pred.to_string(),
            r.model.name().to_string(),
            r.task.clone(),
        ])
        .map_err(e)?;
    }
    w.flush().map_err(|e| BenchError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: ModelTag, window: f64, seed: u64, mse: f64) -> BenchRecord {
        BenchRecord {
            model,
            task: "sin".into(),
            window,
            seed,
            mse,
            n_eval: 1,
            best_epoch: 0,
            diverged: false,
            runtime_s: None,
        }
    }

    #[test]
    fn counting_and_statistics() {
        let mut records = Vec::new();
        for model in ModelTag::ALL {
            for w in [0.5, 1.0, 1.5, 2.0] {
                for seed in 0..3 {
                    records.push(rec(model, w, seed, seed as f64));
                }
            }
        }
        let rows = summarize(&records);
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].mean_mse, 1.0);
        assert!((rows[0].std_mse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let one = summarize(&[rec(ModelTag::Standard, 1.0, 0, 0.25)]);
        assert_eq!((one[0].mean_mse, one[0].std_mse, one[0].n_seeds), (0.25, 0.0, 1));
        let mut buf = Vec::new();
        write_summary_csv(&one, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "task,model,window,mean_mse,std_mse,n_seeds\nsin,standard,1,0.25,0,1\n"
        );
    }
}
