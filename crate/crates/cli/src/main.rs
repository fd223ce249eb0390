mod config;
mod describe;
mod output;
mod runner;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use output::OutputWriter;

#[derive(Parser)]
#[command(
    name = "nbw",
    about = "Finite-volume random-operator ensembles: eigenvalue-window statistics, \
             counting-function estimates, and point-set tooling",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trial-count override.
        #[arg(long)]
        trials: Option<usize>,
        /// Master-seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (also NBW_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the execution plan (dimensions, warnings) without computing.
    Describe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant battery.
    Selftest {
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the version.
    Version,
}

fn worker_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("NBW_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn with_pool<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("nbw {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Describe { config } => match load(&config).and_then(|cfg| describe::describe(&cfg)) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Selftest { workers } => {
            match with_pool(worker_count(workers), selftest::run_battery) {
                Ok(report) => {
                    print!("{report}");
                    println!("selftest: all checks passed");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("selftest failed: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Run {
            config,
            out,
            trials,
            seed,
            workers,
        } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(t) = trials {
                cfg.experiment.trials = t;
            }
            if let Some(s) = seed {
                cfg.disorder.seed = s;
            }
            if let Some(dir) = &out {
                cfg.output.dir = dir.display().to_string();
            }
            // Validate before any file is touched.
            if let Err(e) = cfg.plan() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let dir = PathBuf::from(&cfg.output.dir);
            let writer = match OutputWriter::new(&cfg, &dir) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match with_pool(worker_count(workers), || runner::run(&cfg, &writer)) {
                Ok(warnings) => {
                    for w in &warnings {
                        eprintln!("warning [{}]: {}", w.code, w.message);
                    }
                    println!(
                        "run complete: {} (config {})",
                        dir.display(),
                        writer.hash
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

fn load(path: &PathBuf) -> nbw_core::error::Result<ExperimentConfig> {
    ExperimentConfig::load(path)
}
