use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use super::{BenchError, BenchRecord, ExtrapolationSplit, ModelTag, RecordKey, RecordStore};
use crate::net::{
    build_varied_depth, train, Activation, Checkpoint, EpochLoss, Model, ModelParams, NetworkParams, TrainConfig,
};
use crate::seed;

pub const STANDARD_WIDTHS: [usize; 3] = [16, 16, 16];
pub const PROPOSED_DEPTHS: [usize; 3] = [1, 2, 3];
pub const PROPOSED_WIDTH: usize = 16;

/// Untrained model for a benchmark run.
pub fn build_model(tag: ModelTag, init_seed: u64) -> Result<ModelParams, BenchError> {
    Ok(match tag {
        ModelTag::Standard => ModelParams::Standard(NetworkParams::init(&STANDARD_WIDTHS, Activation::Sigmoid, init_seed)?),
        ModelTag::Proposed => ModelParams::Varied(build_varied_depth(
            &PROPOSED_DEPTHS,
            PROPOSED_WIDTH,
            Activation::Sigmoid,
            init_seed,
        )?),
    })
}

pub fn checkpoint_name(task: &str, model: ModelTag, seed: u64) -> String {
    format!("{task}_{}_seed{seed}.json", model.name())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepJob {
    pub model: ModelTag,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub train: TrainConfig,
    /// Worker cap; 0 means one per available core.
    pub jobs: usize,
    pub record_runtime: bool,
}

/// A trained benchmark model together with its training history.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub diverged: bool,
    pub history: Vec<EpochLoss>,
    pub runtime_s: f64,
}

/// Builds and trains one model on `split.train`. The initialization and
/// training seed is derived from `(seed, task)`, so the same run is
/// reproduced by `bench` and by `train`.
pub fn train_run(
    task: &str,
    split: &ExtrapolationSplit,
    model: ModelTag,
    seed: u64,
    train_cfg: &TrainConfig,
) -> Result<TrainedRun, BenchError> {
    let init_seed = seed::derive_seed(seed, &[seed::tag("bench"), seed::tag(task)]);
    let mut cfg = train_cfg.clone();
    cfg.seed = init_seed;
    let started = Instant::now();
    let (params, best_epoch, best_val_loss, diverged, history) = match build_model(model, init_seed)? {
        ModelParams::Standard(net) => {
            let out = train(net, &split.train, &cfg)?;
            (ModelParams::Standard(out.model), out.best_epoch, out.best_val_loss, out.diverged, out.history)
        }
        ModelParams::Varied(net) => {
            let out = train(net, &split.train, &cfg)?;
            (ModelParams::Varied(out.model), out.best_epoch, out.best_val_loss, out.diverged, out.history)
        }
    };
    let runtime_s = started.elapsed().as_secs_f64();
    if diverged {
        log::warn!("{task}/{}/seed {seed}: training diverged", model.name());
    }
    let mut checkpoint = Checkpoint::new(params, split.input_map);
    checkpoint.metadata.insert("task".into(), task.to_string());
    checkpoint.metadata.insert("model".into(), model.name().to_string());
    checkpoint.metadata.insert("seed".into(), seed.to_string());
    checkpoint.metadata.insert("best_epoch".into(), best_epoch.to_string());
    Ok(TrainedRun {
        checkpoint,
        best_epoch,
        best_val_loss,
        diverged,
        history,
        runtime_s,
    })
}

struct RunOutput {
    records: Vec<BenchRecord>,
    checkpoint: Checkpoint,
}

fn run_one(task: &str, split: &ExtrapolationSplit, job: &SweepJob, opts: &SweepOptions) -> Result<RunOutput, BenchError> {
    let run = train_run(task, split, job.model, job.seed, &opts.train)?;
    let records = split
        .windows
        .iter()
        .zip(&split.evals)
        .map(|(&window, eval)| {
            let mse = match &run.checkpoint.model {
                ModelParams::Standard(n) => n.mse(eval),
                ModelParams::Varied(v) => v.mse(eval),
            };
            BenchRecord {
                model: job.model,
                task: task.to_string(),
                window,
                seed: job.seed,
                mse,
                n_eval: eval.len(),
                best_epoch: run.best_epoch,
                diverged: run.diverged || !mse.is_finite(),
                runtime_s: opts.record_runtime.then_some(run.runtime_s),
            }
        })
        .collect();
    Ok(RunOutput {
        records,
        checkpoint: run.checkpoint,
    })
}

/// Trains every job on `split` and scores each window. With `out_dir`,
/// records go to `records.jsonl` and models to `checkpoints/`; jobs whose
/// records and checkpoint already exist are skipped, so an interrupted
/// sweep resumes where it stopped. Returns this task's records for the
/// given jobs in canonical order.
pub fn run_extrapolation(
    task: &str,
    split: &ExtrapolationSplit,
    jobs: &[SweepJob],
    opts: &SweepOptions,
    out_dir: Option<&Path>,
) -> Result<Vec<BenchRecord>, BenchError> {
    let io = |p: &Path, e: std::io::Error| BenchError::Io(format!("{}: {e}", p.display()));
    let ckpt_dir: Option<PathBuf> = out_dir.map(|d| d.join("checkpoints"));
    if let Some(d) = &ckpt_dir {
        std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
    }
    let store = match out_dir {
        Some(d) => Some(Mutex::new(RecordStore::open(&d.join("records.jsonl"))?)),
        None => None,
    };
    let done = |job: &SweepJob| -> bool {
        let (Some(store), Some(dir)) = (&store, &ckpt_dir) else {
            return false;
        };
        let s = store.lock().expect("store lock");
        dir.join(checkpoint_name(task, job.model, job.seed)).exists()
            && split
                .windows
                .iter()
                .all(|&w| s.contains(&RecordKey::new(job.model, task, w, job.seed)))
    };
    let pending: Vec<&SweepJob> = jobs.iter().filter(|j| !done(j)).collect();
    if pending.len() < jobs.len() {
        log::info!("{task}: resuming, {} of {} runs already stored", jobs.len() - pending.len(), jobs.len());
    }
    let fresh = Mutex::new(Vec::new());
    let work = |job: &&SweepJob| -> Result<(), BenchError> {
        let out = run_one(task, split, job, opts)?;
        if let (Some(store), Some(dir)) = (&store, &ckpt_dir) {
            let path = dir.join(checkpoint_name(task, job.model, job.seed));
            std::fs::write(&path, out.checkpoint.to_json()).map_err(|e| io(&path, e))?;
            let mut s = store.lock().expect("store lock");
            for r in &out.records {
                s.append(r.clone())?;
            }
        }
        fresh.lock().expect("results lock").extend(out.records);
        Ok(())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| BenchError::Spec(format!("thread pool: {e}")))?;
    pool.install(|| pending.par_iter().try_for_each(work))?;

    let mut records = match store {
        Some(store) => {
            let mut s = store.into_inner().expect("store lock");
            s.compact()?;
            let wanted: Vec<RecordKey> = jobs
                .iter()
                .flat_map(|j| split.windows.iter().map(move |&w| RecordKey::new(j.model, task, w, j.seed)))
                .collect();
            s.records().into_iter().filter(|r| wanted.contains(&r.key())).collect()
        }
        None => fresh.into_inner().expect("results lock"),
    };
    records.sort_by(|a, b| {
        a.model
            .cmp(&b.model)
            .then(a.window.total_cmp(&b.window))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}
