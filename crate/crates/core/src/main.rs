use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fundus_core::harness::compare::{render, write_comparison};
use fundus_core::harness::pipeline::reduce_only;
use fundus_core::harness::{compare_runs, execute, resolve_output, ModelSource, RunConfig};

#[derive(Parser)]
#[command(name = "fundus", version, about = "Fundus heat model reduction and absorption estimation runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: assemble, reduce, simulate, estimate, write artifacts.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output.directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reduction only; writes model.json.
    Reduce {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pipeline on a previously reduced model.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulates the summaries of two or more runs.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "comparison")]
        output: PathBuf,
    },
    /// Prints the default configuration.
    DefaultConfig,
}

fn load(path: &Path, output: &Option<PathBuf>) -> Result<(RunConfig, PathBuf), String> {
    let cfg = RunConfig::read(path).map_err(|e| e.to_string())?;
    let dir = output.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    Ok((cfg, resolve_output(&dir)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output } => load(&config, &output).and_then(|(cfg, dir)| {
            execute(&cfg, &ModelSource::Reduce, &dir)
                .map(|r| println!("{}", r.directory.display()))
                .map_err(|e| e.to_string())
        }),
        Command::Simulate { config, model, output } => load(&config, &output).and_then(|(cfg, dir)| {
            execute(&cfg, &ModelSource::Document(model), &dir)
                .map(|r| println!("{}", r.directory.display()))
                .map_err(|e| e.to_string())
        }),
        Command::Reduce { config, output } => load(&config, &output).and_then(|(cfg, dir)| {
            reduce_only(&cfg, &dir)
                .map(|p| println!("{}", p.display()))
                .map_err(|e| e.to_string())
        }),
        Command::Compare { runs, output } => compare_runs(&runs)
            .and_then(|rows| {
                write_comparison(&rows, &resolve_output(&output))?;
                print!("{}", render(&rows));
                Ok(())
            })
            .map_err(|e| e.to_string()),
        Command::DefaultConfig => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
