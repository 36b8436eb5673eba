use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedawa::cli::{self, Overrides, Probe};
use fedawa::orchestrator::Strategy;

#[derive(Parser)]
#[command(name = "fedawa", version, about = "Federated learning simulator with adaptive aggregation weights")]
struct Args {
    /// Override run.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override run.strategy
    #[arg(long, global = true, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts
    Run {
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Write the client partition manifest only
    Partition {
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Run a probe on a finished run directory
    Analyze {
        run_dir: PathBuf,
        #[arg(long, value_parser = parse_probe)]
        probe: Probe,
    },
    /// Print the config schema with defaults
    Config {
        #[arg(long, required = true)]
        schema: bool,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::parse(s).ok_or_else(|| {
        let names: Vec<_> = Strategy::ALL.iter().map(|s| s.name()).collect();
        format!("unknown strategy `{s}` (expected one of {})", names.join(", "))
    })
}

fn parse_probe(s: &str) -> Result<Probe, String> {
    Probe::parse(s).ok_or_else(|| format!("unknown probe `{s}` (expected distance_matrix, ideal_vector or weight_trajectory)"))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        strategy: args.strategy,
    };
    let result = match &args.command {
        Command::Run { config, out } => cli::cmd_run(config, out, &overrides).map(|records| {
            if let Some(acc) = records.iter().rev().find_map(|r| r.accuracy) {
                println!("{} rounds, final accuracy {acc:.4}", records.len());
            }
            println!("artifacts in {}", out.display());
        }),
        Command::Partition { config, out } => cli::cmd_partition(config, out, &overrides).map(|m| {
            println!("{} clients written to {}", m.clients.len(), out.join(cli::PARTITION_FILE).display());
        }),
        Command::Analyze { run_dir, probe } => cli::cmd_analyze(run_dir, *probe).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
        Command::Config { .. } => {
            print!("{}", cli::schema());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
