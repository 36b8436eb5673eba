//! Final test accuracy of every strategy on non-IID blobs, averaged over
//! a few seeds.
//!
//! ```text
//! cargo run --release --example compare_strategies -- [seeds] [rounds]
//! ```

use fedawa::orchestrator::{run_experiment, ExperimentConfig, Strategy};

fn main() -> fedawa::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let rounds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);

    let mut cfg = ExperimentConfig::default();
    cfg.run.rounds = rounds;
    cfg.run.eval_every = rounds;

    println!("{:<11} {:>8} {:>8}   per seed", "strategy", "mean", "std");
    for strategy in Strategy::ALL {
        cfg.run.strategy = strategy;
        let mut accs = Vec::new();
        for seed in 0..seeds {
            cfg.run.seed = seed;
            let records = run_experiment(&cfg)?;
            accs.push(records.last().and_then(|r| r.accuracy).unwrap_or(f64::NAN));
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
        let per: Vec<String> = accs.iter().map(|a| format!("{a:.3}")).collect();
        println!("{:<11} {:>8.4} {:>8.4}   {}", strategy.name(), mean, var.sqrt(), per.join(" "));
    }
    Ok(())
}
