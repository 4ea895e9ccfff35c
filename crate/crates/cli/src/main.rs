use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use log::info;

use timewise::config::ExperimentConfig;
use timewise::dataset::{dataset_summary, write_summary_csv};
use timewise::experiment::{load_dataset, planned_pairs, run_experiment, validate, write_run_outputs, RunError};
use timewise::pairs::{write_pair_manifest, PairKind};
use timewise::report::{build_reports, render_summary, write_reports};
use timewise::results::read_results;
use timewise::stats::{DEFAULT_EXACT_MAX_N, DEFAULT_STABILITY_THRESHOLD};

/// Time-aware evaluation of cross-project defect prediction.
#[derive(Parser)]
#[command(name = "timewise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for `run` (defaults to one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Write every trained tree under `<out>/trees`.
    #[arg(long, global = true)]
    dump_trees: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and dataset without training.
    Validate,
    /// Per-bucket dataset summary (CSV).
    Summary,
    /// Planned train/test pairs (CSV).
    Pairs,
    /// Run the experiment and write results and reports.
    Run,
    /// Rebuild reports from an existing results.csv.
    Report,
}

enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

fn run_error(e: RunError) -> Failure {
    if e.is_input_error() {
        input(e)
    } else {
        internal(e)
    }
}

struct Loaded {
    cfg: ExperimentConfig,
    text: String,
}

fn load_config(cli: &Cli) -> Result<Loaded, Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| input(anyhow!("--config is required")))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = ExperimentConfig::parse(&text, base)
        .with_context(|| format!("in {}", path.display()))
        .map_err(input)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(Loaded { cfg, text })
}

/// `<out>/name` when `--out` was given, otherwise stdout.
fn sink(cli: &Cli, name: &str) -> Result<Box<dyn Write>, Failure> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(internal)?;
            let file = File::create(dir.join(name)).map_err(internal)?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn cmd_validate(cli: &Cli) -> Outcome {
    let Loaded { cfg, .. } = load_config(cli)?;
    let d = validate(&cfg);
    for line in &d.info {
        println!("{line}");
    }
    for line in &d.warnings {
        println!("warning: {line}");
    }
    for line in &d.errors {
        eprintln!("error: {line}");
    }
    if d.is_ok() {
        Ok(())
    } else {
        Err(input(anyhow!("{} problem(s) found", d.errors.len())))
    }
}

fn cmd_summary(cli: &Cli) -> Outcome {
    let Loaded { cfg, .. } = load_config(cli)?;
    let data = load_dataset(&cfg).map_err(run_error)?;
    write_summary_csv(&dataset_summary(&data.timeline), sink(cli, "summary.csv")?).map_err(internal)
}

fn cmd_pairs(cli: &Cli) -> Outcome {
    let Loaded { cfg, .. } = load_config(cli)?;
    let data = load_dataset(&cfg).map_err(run_error)?;
    let pairs = planned_pairs(&cfg, &data).map_err(run_error)?;
    write_pair_manifest(&pairs, sink(cli, "pairs.csv")?).map_err(internal)
}

fn cmd_run(cli: &Cli) -> Outcome {
    let Loaded { cfg, text } = load_config(cli)?;
    let data = load_dataset(&cfg).map_err(run_error)?;
    let outcome = run_experiment(&cfg, &data, cli.threads, cli.dump_trees).map_err(run_error)?;
    let dir = &cfg.output_dir;
    write_run_outputs(&outcome, &text, cfg.seed, dir).map_err(internal)?;
    let reports = build_reports(&outcome.records, cfg.stability_threshold, cfg.exact_max_n);
    write_reports(&reports, cfg.crossval_folds.is_some(), dir).map_err(internal)?;
    info!("wrote {} rows to {}", outcome.records.len(), dir.display());
    print!("{}", render_summary(&reports));
    println!(
        "{} of {} units processed, {} rows written to {}",
        outcome.units - outcome.units_skipped,
        outcome.units,
        outcome.records.len(),
        dir.join("results.csv").display()
    );
    Ok(())
}

fn cmd_report(cli: &Cli) -> Outcome {
    let (dir, threshold, exact_max_n) = match (&cli.config, &cli.out) {
        (Some(_), _) => {
            let Loaded { cfg, .. } = load_config(cli)?;
            (cfg.output_dir, cfg.stability_threshold, cfg.exact_max_n)
        }
        (None, Some(out)) => (out.clone(), DEFAULT_STABILITY_THRESHOLD, DEFAULT_EXACT_MAX_N),
        (None, None) => return Err(input(anyhow!("report needs --config or --out"))),
    };
    let path = dir.join("results.csv");
    let file = File::open(&path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(input)?;
    let records = read_results(io::BufReader::new(file))
        .with_context(|| format!("in {}", path.display()))
        .map_err(input)?;
    let has_baseline = records.iter().any(|r| r.kind == PairKind::CrossValidation);
    let reports = build_reports(&records, threshold, exact_max_n);
    write_reports(&reports, has_baseline, &dir).map_err(internal)?;
    print!("{}", render_summary(&reports));
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>()
                .is_some_and(|c| matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Validate => cmd_validate(&cli),
        Command::Summary => cmd_summary(&cli),
        Command::Pairs => cmd_pairs(&cli),
        Command::Run => cmd_run(&cli),
        Command::Report => cmd_report(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Internal(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
