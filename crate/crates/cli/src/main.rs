//! `annlab`: train small MLPs, extract their differential annihilators,
//! classify ODE structure and run the extrapolation benchmark.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use annlab::bench::ModelTag;
use annlab::net::BatchPolicy;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "annlab", version, about = "Differential annihilators and extrapolation of small MLPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [default: $ANNLAB_OUT/<command>/…, else annlab-out/…].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker cap for sweeps; 0 uses every core.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Log filter such as `info` or `annlab=debug`.
    #[arg(long, value_name = "FILTER")]
    log_level: Option<String>,
}

#[derive(Args, Debug)]
struct TrainFlags {
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Mini-batch size; 0 means full batch.
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
}

#[derive(Args, Debug)]
struct DataFlags {
    /// Training points of synthetic series.
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Run on the bundled ETTh1-layout head file.
    #[arg(long)]
    fixture: bool,
    /// ETT-style CSV file.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Value column of the CSV.
    #[arg(long)]
    column: Option<String>,
    /// Training rows of the CSV series.
    #[arg(long)]
    train_length: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write its checkpoint and loss history.
    Train {
        #[command(flatten)]
        common: Common,
        /// sin, complex_periodic, quadratic, tanh, or ett (with --fixture/--csv).
        #[arg(long)]
        task: Option<String>,
        /// standard or proposed.
        #[arg(long)]
        model: Option<ModelTag>,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        data: DataFlags,
    },
    /// Find the minimal polynomial ODE satisfied by a checkpointed network.
    Annihilate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Singular-value ratio below which a relation is accepted.
        #[arg(long)]
        tol: Option<f64>,
        /// Largest total degree searched.
        #[arg(long)]
        degree: Option<u32>,
        /// Largest derivative order searched [default: hidden width].
        #[arg(long)]
        order_max: Option<usize>,
        /// Largest total hidden width accepted.
        #[arg(long)]
        hidden_cap: Option<usize>,
        #[arg(long)]
        samples_factor: Option<usize>,
    },
    /// Classify an ODE by companion roots, quadratic inertia or sampled order.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Monic linear operator as `c1,…,cn` for D^n + cn·D^(n−1) + … + c1.
        #[arg(long, allow_hyphen_values = true, value_name = "COEFFS")]
        companion: Option<String>,
        /// Square matrix, rows separated by `;`, entries by `,`.
        #[arg(long, allow_hyphen_values = true, value_name = "MATRIX")]
        inertia: Option<String>,
        /// CSV of uniformly spaced samples.
        #[arg(long, value_name = "FILE")]
        samples: Option<PathBuf>,
        #[arg(long)]
        x_column: Option<String>,
        #[arg(long)]
        y_column: Option<String>,
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        tol: Option<f64>,
        /// Finite-difference accuracy order.
        #[arg(long)]
        accuracy: Option<usize>,
    },
    /// Probe how a checkpointed model saturates outside its training window.
    Saturate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Probe reach in training-window widths.
        #[arg(long)]
        probe_multiplier: Option<f64>,
        /// Probe points per side.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run the extrapolation sweep; an interrupted run resumes in place.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Cumulative windows past the training border, normalized units.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<f64>>,
        /// Store wall-clock training time (outputs are then not reproducible).
        #[arg(long)]
        record_runtime: bool,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        data: DataFlags,
    },
    /// Rebuild summary and trajectory files from a bench run.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory of the bench run.
        #[arg(long, value_name = "DIR")]
        run: Option<PathBuf>,
    },
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn load(common: Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.jobs, common.jobs);
    set(&mut cfg.log_level, common.log_level);
    if common.out.is_some() {
        cfg.output_dir = common.out;
    }
    Ok(cfg)
}

fn apply_train(cfg: &mut RunConfig, f: TrainFlags) {
    let t = &mut cfg.train;
    set(&mut t.learning_rate, f.learning_rate);
    set(&mut t.max_epochs, f.max_epochs);
    set(&mut t.patience, f.patience);
    set(&mut t.validation_fraction, f.validation_fraction);
    if let Some(n) = f.batch_size {
        t.batch = if n == 0 { BatchPolicy::FullBatch } else { BatchPolicy::MiniBatch(n) };
    }
}

fn apply_data(cfg: &mut RunConfig, f: DataFlags) {
    let b = &mut cfg.bench;
    set(&mut b.n_train, f.n_train);
    set(&mut b.noise_std, f.noise_std);
    b.fixture |= f.fixture;
    if f.csv.is_some() {
        b.csv = f.csv;
    }
    set(&mut b.column, f.column);
    if f.train_length.is_some() {
        b.train_length = f.train_length;
    }
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("--{flag}: `{}` is not a number", s.trim())))
        })
        .collect()
}

fn init_logging(filter: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            common,
            task,
            model,
            train,
            data,
        } => {
            let mut cfg = load(common)?;
            if task.is_some() {
                cfg.task = task;
            }
            set(&mut cfg.model, model);
            apply_train(&mut cfg, train);
            apply_data(&mut cfg, data);
            init_logging(&cfg.log_level);
            commands::train(&mut cfg)
        }
        Command::Annihilate {
            common,
            checkpoint,
            tol,
            degree,
            order_max,
            hidden_cap,
            samples_factor,
        } => {
            let mut cfg = load(common)?;
            if checkpoint.is_some() {
                cfg.checkpoint = checkpoint;
            }
            let a = &mut cfg.annihilator;
            set(&mut a.tol, tol);
            set(&mut a.degree_cap, degree);
            if order_max.is_some() {
                a.order_max = order_max;
            }
            set(&mut a.hidden_cap, hidden_cap);
            set(&mut a.samples_factor, samples_factor);
            init_logging(&cfg.log_level);
            commands::annihilate(&mut cfg)
        }
        Command::Classify {
            common,
            companion,
            inertia,
            samples,
            x_column,
            y_column,
            max_order,
            degree,
            tol,
            accuracy,
        } => {
            let mut cfg = load(common)?;
            let c = &mut cfg.classify;
            if let Some(text) = companion {
                c.companion = Some(parse_list("companion", &text)?);
            }
            if let Some(text) = inertia {
                c.inertia = Some(text.split(';').map(|row| parse_list("inertia", row)).collect::<Result<_, _>>()?);
            }
            if samples.is_some() {
                c.samples = samples;
            }
            set(&mut c.x_column, x_column);
            set(&mut c.y_column, y_column);
            set(&mut c.max_order, max_order);
            set(&mut c.degree, degree);
            set(&mut c.tol, tol);
            set(&mut c.accuracy, accuracy);
            init_logging(&cfg.log_level);
            commands::classify(&mut cfg)
        }
        Command::Saturate {
            common,
            checkpoint,
            probe_multiplier,
            grid,
        } => {
            let mut cfg = load(common)?;
            if checkpoint.is_some() {
                cfg.checkpoint = checkpoint;
            }
            set(&mut cfg.annihilator.probe_multiplier, probe_multiplier);
            set(&mut cfg.annihilator.probe_grid, grid);
            init_logging(&cfg.log_level);
            commands::saturate(&mut cfg)
        }
        Command::Bench {
            common,
            tasks,
            seeds,
            windows,
            record_runtime,
            train,
            data,
        } => {
            let mut cfg = load(common)?;
            set(&mut cfg.bench.tasks, tasks);
            set(&mut cfg.bench.seeds, seeds);
            set(&mut cfg.bench.windows, windows);
            cfg.bench.record_runtime |= record_runtime;
            apply_train(&mut cfg, train);
            apply_data(&mut cfg, data);
            init_logging(&cfg.log_level);
            commands::bench(&mut cfg)
        }
        Command::Report { common, run } => {
            let mut cfg = load(common)?;
            if run.is_some() {
                cfg.report.run = run;
            }
            init_logging(&cfg.log_level);
            commands::report(&mut cfg)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::usage(first.trim_start_matches("error: "));
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
