//! Writes a full run directory and runs the three probes on it, the same
//! path the `fedawa` binary takes.
//!
//! ```text
//! cargo run --release --example run_artifacts -- [out_dir]
//! ```

use std::path::PathBuf;

use fedawa::cli::{self, Probe};
use fedawa::orchestrator::{ExperimentConfig, Strategy};

fn main() -> fedawa::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fedawa-run"));
    let mut cfg = ExperimentConfig::default();
    cfg.run.strategy = Strategy::FedAwaL;
    cfg.run.rounds = 10;
    cfg.run.participation = 0.5;

    let records = cli::run_to_dir(&cfg, &out)?;
    println!("config hash {}", cli::config_hash(&cfg));
    println!("{} rounds, final accuracy {:?}", records.len(), records.last().and_then(|r| r.accuracy));
    for probe in [Probe::DistanceMatrix, Probe::IdealVector, Probe::WeightTrajectory] {
        for path in cli::cmd_analyze(&out, probe)? {
            println!("{:<18} {}", probe.name(), path.display());
        }
    }
    print!("{}", std::fs::read_to_string(out.join(cli::SUMMARY_FILE))?);
    Ok(())
}
