use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_malliavin::harness::{run_experiment, summary, write_csv, ExperimentConfig, EXPERIMENTS};
use levy_malliavin::Error;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "LEVY_LAB_THREADS";

#[derive(Parser)]
#[command(name = "levy-lab", version, about = "Malliavin calculus experiments for finite-activity Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the replicate count.
        #[arg(long)]
        reps: Option<u64>,
        /// CSV output path (default: <experiment>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the statistical gate in standard errors.
        #[arg(long)]
        gate: Option<f64>,
    },
    /// List the available experiments.
    List,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={value} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot configure {threads} threads: {e}")))
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    reps: Option<u64>,
    out: Option<PathBuf>,
    gate: Option<f64>,
) -> Result<bool, Error> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(reps) = reps {
        if reps < 2 {
            return Err(Error::Config(format!("--reps must be at least 2, got {reps}")));
        }
        cfg.replicates = reps;
    }
    if let Some(gate) = gate {
        if !(gate > 0.0 && gate.is_finite()) {
            return Err(Error::Config(format!("--gate must be positive, got {gate}")));
        }
        cfg.gate = gate;
    }
    configure_threads()?;
    let rows = run_experiment(&cfg)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));
    write_csv(&rows, BufWriter::new(File::create(&path)?))?;
    print!("{}", summary(&rows));
    println!("wrote {}", path.display());
    Ok(rows.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (name, description) in EXPERIMENTS {
                println!("{name:<22} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            reps,
            out,
            gate,
        } => match run(config, seed, reps, out, gate) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e @ Error::Config(_)) => {
                eprintln!("levy-lab: {e}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("levy-lab: {e}");
                ExitCode::from(1)
            }
        },
    }
}
