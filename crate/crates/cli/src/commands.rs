use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use annlab::annihilator::{annihilate as run_annihilator, saturation_profile, AnnihilatorReport, SaturationProfile};
use annlab::bench::{
    checkpoint_name, gen_synthetic, load_csv_column, load_csv_series, run_extrapolation, series_from_reader,
    split_extrapolation, summarize, train_run, trajectory_rows, write_summary_csv, write_trajectories_csv,
    ModelTag, RecordStore, Series, SeriesSpec, SweepJob, SweepOptions, SyntheticFunction, SyntheticSpec,
};
use annlab::net::{Checkpoint, InputMap};
use annlab::variability::{companion_roots, inertia_signature, minimal_ode_order, UniformSamples};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, CONFIG_FILE};
use crate::error::CliError;

/// ETTh1-layout head file shipped with the repository.
pub const FIXTURE: &str = include_str!("../../../fixtures/etth1_head.csv");
pub const FIXTURE_NAME: &str = "fixtures/etth1_head.csv";
/// Task name of CSV-backed series.
pub const ETT_TASK: &str = "ett";

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_text(path, &text)
}

fn create_file(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::io(path, e))
}

fn required<T: Clone>(value: &Option<T>, field: &str, flag: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::usage(format!("missing required field `{field}` (pass {flag} or set it in the config file)")))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn load_series(task: &str, cfg: &RunConfig) -> Result<Series, CliError> {
    let b = &cfg.bench;
    if task == ETT_TASK {
        if let Some(path) = &b.csv {
            return Ok(load_csv_series(&SeriesSpec {
                csv_path: path.clone(),
                value_column: b.column.clone(),
                train_length: b.train_length(),
            })?);
        }
        if b.fixture {
            return Ok(series_from_reader(FIXTURE.as_bytes(), &b.column, b.train_length(), Path::new(FIXTURE_NAME))?);
        }
        return Err(CliError::usage("task `ett` needs --fixture or --csv"));
    }
    let function: SyntheticFunction = task.parse()?;
    let spec = SyntheticSpec {
        n_train: b.n_train,
        noise_std: b.noise_std,
        extension: b.extension,
        ..SyntheticSpec::new(function)
    };
    Ok(gen_synthetic(&spec, cfg.seed)?)
}

fn describe_task(task: &str, cfg: &RunConfig) -> String {
    let b = &cfg.bench;
    match task.parse::<SyntheticFunction>() {
        Ok(f) => format!(
            "{} on [-2π, 2π], {} training points, noise std {}",
            f.formula(),
            b.n_train,
            b.noise_std
        ),
        Err(_) => {
            let source = b.csv.as_ref().map_or_else(|| FIXTURE_NAME.to_string(), |p| p.display().to_string());
            format!(
                "column {} of {source}, first {} rows for training, x = sample index",
                b.column,
                b.train_length()
            )
        }
    }
}

pub fn train(cfg: &mut RunConfig) -> Result<(), CliError> {
    let task = required(&cfg.task, "task", "--task")?;
    cfg.train.seed = cfg.seed;
    cfg.train.validate()?;
    let series = load_series(&task, cfg)?;
    let split = split_extrapolation(&series, &cfg.bench.windows)?;
    let name = checkpoint_name(&task, cfg.model, cfg.seed);
    let out = cfg.resolve_output(&format!("train/{}", name.trim_end_matches(".json")));
    cfg.write(&out)?;

    let run = train_run(&task, &split, cfg.model, cfg.seed, &cfg.train)?;
    let ckpt_path = out.join(&name);
    write_text(&ckpt_path, &run.checkpoint.to_json())?;
    let mut history = String::from("epoch,train_loss,val_loss\n");
    for h in &run.history {
        let _ = writeln!(history, "{},{},{}", h.epoch, h.train_loss, h.val_loss);
    }
    write_text(&out.join("history.csv"), &history)?;

    if let Some(last) = run.history.last() {
        println!(
            "final epoch {}: train loss {:.6e}, validation loss {:.6e}",
            last.epoch, last.train_loss, last.val_loss
        );
    }
    if let Some(best) = run.history.iter().find(|h| h.epoch == run.best_epoch) {
        println!(
            "best epoch {}: train loss {:.6e}, validation loss {:.6e}",
            best.epoch, best.train_loss, best.val_loss
        );
    }
    if run.diverged {
        log::warn!("training diverged; the checkpoint holds the last finite parameters");
    }
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

/// Reads a checkpoint and its SHA-256.
fn read_checkpoint(path: &Path) -> Result<(Checkpoint, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| CliError::new("checkpoint", format!("{}: not UTF-8", path.display())))?;
    Ok((Checkpoint::from_json(&text)?, digest))
}

#[derive(Serialize)]
struct Provenance {
    checkpoint: String,
    checkpoint_sha256: String,
    seed: u64,
    tol: f64,
    degree_cap: u32,
    order_max: Option<usize>,
    samples_factor: usize,
}

#[derive(Serialize)]
struct AnnihilationDoc {
    schema: &'static str,
    provenance: Provenance,
    input_map: InputMap,
    report: AnnihilatorReport,
}

pub fn annihilate(cfg: &mut RunConfig) -> Result<(), CliError> {
    let path = required(&cfg.checkpoint, "checkpoint", "--checkpoint")?;
    cfg.annihilator.seed = cfg.seed;
    let (ckpt, digest) = read_checkpoint(&path)?;
    let out = cfg.resolve_output(&format!("annihilate/{}", stem(&path)));
    cfg.write(&out)?;
    let a = &cfg.annihilator;
    let report = run_annihilator(&ckpt.model, a)?;
    for n in &report.networks {
        let label = n.subnet.map_or_else(|| "network".to_string(), |j| format!("subnet {j}"));
        match &n.relation {
            Some(r) => println!(
                "{label} (widths {:?}): order {}, degree {}: {} = 0",
                n.widths, r.order, r.degree, r.poly
            ),
            None => println!(
                "{label} (widths {:?}): no relation up to order {}, degree {}",
                n.widths,
                a.order_max.map_or(n.n_hidden, |k| k.min(n.n_hidden)),
                a.degree_cap
            ),
        }
    }
    let doc = AnnihilationDoc {
        schema: "annlab.annihilation.v1",
        provenance: Provenance {
            checkpoint: path.display().to_string(),
            checkpoint_sha256: digest,
            seed: a.seed,
            tol: a.tol,
            degree_cap: a.degree_cap,
            order_max: a.order_max,
            samples_factor: a.samples_factor,
        },
        input_map: ckpt.input_map,
        report,
    };
    let report_path = out.join("report.json");
    write_json(&report_path, &doc)?;
    println!("report: {}", report_path.display());
    Ok(())
}

#[derive(Serialize)]
struct FarField {
    /// `b + 10 (b − a)` in raw input units.
    x: f64,
    prediction: f64,
    limit: f64,
    gap: f64,
}

#[derive(Serialize)]
struct SaturationDoc {
    schema: &'static str,
    checkpoint: String,
    checkpoint_sha256: String,
    input_map: InputMap,
    /// Limits at −∞ and +∞ from saturated propagation.
    limits: (f64, f64),
    profile: SaturationProfile,
    far_field_right: FarField,
}

pub fn saturate(cfg: &mut RunConfig) -> Result<(), CliError> {
    let path = required(&cfg.checkpoint, "checkpoint", "--checkpoint")?;
    let (ckpt, digest) = read_checkpoint(&path)?;
    let out = cfg.resolve_output(&format!("saturate/{}", stem(&path)));
    cfg.write(&out)?;
    let a = &cfg.annihilator;
    let model = &ckpt.model;
    let profile = saturation_profile(&|u: f64| model.predict(u), (-1.0, 1.0), a.probe_multiplier, a.probe_grid)?;
    let limits = (model.limit_at_infinity(-1.0), model.limit_at_infinity(1.0));
    let map = ckpt.input_map;
    let x = map.hi + 10.0 * (map.hi - map.lo);
    let prediction = ckpt.predict_raw(x);
    for (side, fit) in [("left", &profile.left), ("right", &profile.right)] {
        println!(
            "{side} tail: far value {:.9}, decay rate {:.6}, r² {:.6}",
            fit.far_value, fit.kappa, fit.r2
        );
    }
    println!("limits: -∞ → {:.9}, +∞ → {:.9}", limits.0, limits.1);
    let doc = SaturationDoc {
        schema: "annlab.saturation.v1",
        checkpoint: path.display().to_string(),
        checkpoint_sha256: digest,
        input_map: map,
        limits,
        profile,
        far_field_right: FarField {
            x,
            prediction,
            limit: limits.1,
            gap: (prediction - limits.1).abs(),
        },
    };
    let report_path = out.join("saturation.json");
    write_json(&report_path, &doc)?;
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn classify(cfg: &mut RunConfig) -> Result<(), CliError> {
    let c = cfg.classify.clone();
    let chosen = [c.companion.is_some(), c.inertia.is_some(), c.samples.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(CliError::usage("classify needs exactly one of --companion, --inertia or --samples"));
    }
    let out = cfg.resolve_output("classify");
    cfg.write(&out)?;
    let doc = if let Some(coeffs) = &c.companion {
        let spectrum = companion_roots(coeffs)?;
        for (r, label) in spectrum.roots.iter().zip(&spectrum.labels) {
            let label = serde_json::to_value(label).expect("label serializes");
            println!("root {:+.9} {:+.9}i: {}", r.re, r.im, label.as_str().unwrap_or_default());
        }
        json!({ "schema": "annlab.classify.v1", "mode": "companion", "spectrum": spectrum })
    } else if let Some(rows) = &c.inertia {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CliError::usage(format!(
                "inertia matrix must be square; got row lengths {:?}",
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        let m = DMatrix::from_row_slice(n, n, &rows.concat());
        let report = inertia_signature(&m)?;
        let s = report.signature;
        println!("inertia (positive, negative, zero) = ({}, {}, {})", s.n_plus, s.n_minus, s.n_zero);
        json!({ "schema": "annlab.classify.v1", "mode": "inertia", "matrix": rows, "report": report })
    } else {
        let path = c.samples.clone().expect("one mode is set");
        let open = || File::open(&path).map_err(|e| CliError::io(&path, e));
        let xs = load_csv_column(open()?, &c.x_column)?;
        let ys = load_csv_column(open()?, &c.y_column)?;
        let pairs: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
        let samples = UniformSamples::from_pairs(&pairs)?;
        let fit = minimal_ode_order(&samples, c.max_order, c.degree, c.tol, c.accuracy)?;
        match &fit {
            Some(f) => println!("order {}: {} = 0", f.order, f.poly),
            None => println!("no relation up to order {} at degree {}", c.max_order, c.degree),
        }
        json!({
            "schema": "annlab.classify.v1",
            "mode": "samples",
            "source": path.display().to_string(),
            "n_samples": samples.len(),
            "degree": c.degree,
            "fit": fit,
        })
    };
    let report_path = out.join("classify.json");
    write_json(&report_path, &doc)?;
    println!("report: {}", report_path.display());
    Ok(())
}

fn bench_tasks(cfg: &RunConfig) -> Vec<String> {
    if cfg.bench.uses_csv() {
        vec![ETT_TASK.to_string()]
    } else {
        cfg.bench.tasks.clone()
    }
}

/// The parts of a config that determine bench results.
fn result_inputs(cfg: &RunConfig) -> serde_json::Value {
    let mut bench = cfg.bench.clone();
    bench.record_runtime = false;
    json!({ "seed": cfg.seed, "train": cfg.train, "bench": bench })
}

pub fn bench(cfg: &mut RunConfig) -> Result<(), CliError> {
    cfg.train.validate()?;
    let tasks = bench_tasks(cfg);
    if tasks.is_empty() || cfg.bench.seeds.is_empty() {
        return Err(CliError::usage("bench needs at least one task and one seed"));
    }
    let series: Vec<(String, Series)> = tasks
        .iter()
        .map(|t| Ok((t.clone(), load_series(t, cfg)?)))
        .collect::<Result<_, CliError>>()?;
    let splits = series
        .iter()
        .map(|(t, s)| Ok((t.clone(), split_extrapolation(s, &cfg.bench.windows)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let out = cfg.resolve_output("bench");
    let previous = out.join(CONFIG_FILE);
    if previous.exists() {
        let old = RunConfig::load(Some(&previous))?;
        if result_inputs(&old) != result_inputs(cfg) {
            return Err(CliError::config(format!(
                "{} holds a run with different settings; choose another --out",
                out.display()
            )));
        }
    }
    cfg.write(&out)?;

    let opts = SweepOptions {
        train: cfg.train.clone(),
        jobs: cfg.jobs,
        record_runtime: cfg.bench.record_runtime,
    };
    let jobs: Vec<SweepJob> = ModelTag::ALL
        .iter()
        .flat_map(|&model| cfg.bench.seeds.iter().map(move |&seed| SweepJob { model, seed }))
        .collect();
    for (task, split) in &splits {
        log::info!("{task}: {} runs", jobs.len());
        run_extrapolation(task, split, &jobs, &opts, Some(&out))?;
    }
    write_report(cfg, &out, &out)
}

pub fn report(cfg: &mut RunConfig) -> Result<(), CliError> {
    let run = required(&cfg.report.run, "report.run", "--run")?;
    let run_cfg = RunConfig::load(Some(&run.join(CONFIG_FILE)))?;
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(run.join("report"));
    }
    let out = cfg.resolve_output("report");
    cfg.write(&out)?;
    write_report(&run_cfg, &run, &out)
}

#[derive(Serialize)]
struct ReportMeta {
    schema: &'static str,
    windows: Vec<f64>,
    window_units: &'static str,
    tasks: BTreeMap<String, String>,
    seeds: Vec<u64>,
    n_records: usize,
    n_diverged: usize,
    /// Seed whose checkpoints drew each trajectory file.
    trajectory_seed: BTreeMap<String, BTreeMap<String, u64>>,
}

/// Summary CSV, one trajectory CSV per task and `report.json` from the
/// records and checkpoints of the bench run in `run_dir`.
fn write_report(run_cfg: &RunConfig, run_dir: &Path, out: &Path) -> Result<(), CliError> {
    let records_path = run_dir.join("records.jsonl");
    if !records_path.exists() {
        return Err(CliError::new("data", format!("{} not found", records_path.display())));
    }
    let records = RecordStore::open(&records_path)?.records();
    if records.is_empty() {
        return Err(CliError::new("data", format!("{} holds no records", records_path.display())));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let rows = summarize(&records);
    write_summary_csv(&rows, create_file(&out.join("summary.csv"))?)?;

    let tasks: BTreeSet<&str> = records.iter().map(|r| r.task.as_str()).collect();
    let mut trajectory_seed = BTreeMap::new();
    let mut descriptions = BTreeMap::new();
    for &task in &tasks {
        descriptions.insert(task.to_string(), describe_task(task, run_cfg));
        let series = load_series(task, run_cfg)?;
        let mut traj = Vec::new();
        let mut seeds = BTreeMap::new();
        for model in ModelTag::ALL {
            let Some(seed) = records.iter().filter(|r| r.task == task && r.model == model).map(|r| r.seed).min() else {
                continue;
            };
            let path: PathBuf = run_dir.join("checkpoints").join(checkpoint_name(task, model, seed));
            let (ckpt, _) = read_checkpoint(&path)?;
            traj.extend(trajectory_rows(&series, &ckpt, model, task));
            seeds.insert(model.name().to_string(), seed);
        }
        write_trajectories_csv(&traj, create_file(&out.join(format!("trajectories_{task}.csv")))?)?;
        trajectory_seed.insert(task.to_string(), seeds);
    }
    let meta = ReportMeta {
        schema: "annlab.report.v1",
        windows: run_cfg.bench.windows.clone(),
        window_units: "cumulative length past the training border in normalized input units \
                       (training window mapped to [-1, 1]); synthetic and ETT tables share this grid",
        tasks: descriptions,
        seeds: records.iter().map(|r| r.seed).collect::<BTreeSet<_>>().into_iter().collect(),
        n_records: records.len(),
        n_diverged: records.iter().filter(|r| r.diverged).count(),
        trajectory_seed,
    };
    write_json(&out.join("report.json"), &meta)?;

    println!("{:<18} {:<9} {:>8} {:>14} {:>12} {:>3}", "task", "model", "window", "mean_mse", "std_mse", "n");
    for r in &rows {
        println!(
            "{:<18} {:<9} {:>8.4} {:>14.6e} {:>12.4e} {:>3}",
            r.task,
            r.model.name(),
            r.window,
            r.mean_mse,
            r.std_mse,
            r.n_seeds
        );
    }
    println!("summary: {}", out.join("summary.csv").display());
    Ok(())
}
