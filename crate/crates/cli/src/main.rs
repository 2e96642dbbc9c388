use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sbc_cli::commands;
use sbc_cli::config::{Hpo, UnknownArg, WeightsMode};
use sbc_cli::{CliError, CliResult, RunConfig, Stage};

/// Cascaded binary gradient-boosted classifiers for imbalanced data.
#[derive(Parser)]
#[command(name = "sbc", version, about)]
struct Cli {
    /// Worker threads for searches; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; relative paths in it resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hyperparameter grid file.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// none, inverse_frequency or original_inverse_frequency.
    #[arg(long)]
    weights: Option<WeightsMode>,
    /// emit_unknown or assign_last_class.
    #[arg(long)]
    unknown_action: Option<UnknownArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw CSV file and split it into train.csv and test.csv.
    Prepare(RunArgs),
    /// Train the configured method and write model.json.
    Train(RunArgs),
    /// Train with hyperparameter search; same as train with hpo other than fixed.
    Tune(RunArgs),
    /// Evaluate a saved model on a labeled CSV file.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "assign_last_class")]
        unknown_action: UnknownArg,
        #[arg(long, default_value = "eval")]
        out: PathBuf,
    },
    /// Predict a CSV file, with or without a label column.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "emit_unknown")]
        unknown_action: UnknownArg,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several methods on one train/test split and tabulate them.
    Benchmark {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated method labels, e.g. mcc+gs,sbc+phgs+weights.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
    },
}

fn load_config(a: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&a.config)?;
    cfg.resolve_paths(a.config.parent().unwrap_or(Path::new(".")));
    if let Some(seed) = a.seed {
        cfg.apply_seed(seed);
    }
    if let Some(out) = &a.out {
        cfg.out = out.clone();
    }
    if let Some(grid) = &a.grid {
        cfg.grid = Some(grid.clone());
    }
    if let Some(w) = a.weights {
        cfg.weights = w;
    }
    if let Some(u) = a.unknown_action {
        cfg.unknown_action = u.0;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(Stage::Config, format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Prepare(a) => {
            let cfg = load_config(&a)?;
            let p = commands::prepare(&cfg)?;
            print!("{}", p.report.to_text());
            println!("train: {}\ntest: {}", p.train.display(), p.test.display());
        }
        Command::Train(a) => train(&a, false)?,
        Command::Tune(a) => train(&a, true)?,
        Command::Evaluate {
            bundle,
            test,
            unknown_action,
            out,
        } => {
            let e = commands::evaluate_bundle(&bundle, &test, unknown_action.0, &out)?;
            print!("{}", e.summary.to_table(&e.class_names));
        }
        Command::Predict {
            bundle,
            input,
            unknown_action,
            out,
        } => {
            let text = commands::predict(&bundle, &input, unknown_action.0)?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| CliError::new(Stage::Data, format!("{}: {e}", path.display())))?,
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::new(Stage::Data, format!("stdout: {e}")))?,
            }
        }
        Command::Benchmark { run, methods } => {
            let cfg = load_config(&run)?;
            let report = commands::benchmark(&cfg, &methods)?;
            print!("{}", report.to_table());
        }
    }
    Ok(())
}

fn train(a: &RunArgs, tune: bool) -> CliResult<()> {
    let cfg = load_config(a)?;
    if tune && cfg.hpo == Hpo::Fixed {
        return Err(CliError::new(Stage::Config, "tune needs hpo set to gs, hgs or phgs"));
    }
    let out = commands::train(&cfg)?;
    println!("model: {}", out.bundle.display());
    match &out.evaluation {
        Some(e) => print!("{}", e.summary.to_table(&e.class_names)),
        None => print!(
            "{}",
            commands::timing_rows(&sbc_core::Timings {
                hpo_s: out.trained.hpo_s,
                train_s: out.trained.train_s,
                test_s: 0.0,
            })
        ),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
