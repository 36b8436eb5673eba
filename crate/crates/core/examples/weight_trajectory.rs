//! Cosine similarity between each round's aggregation weights and the
//! label-distribution similarity of every client to the pooled data.

use fedawa::analysis::{dataset_vector, weight_trajectory_similarity, CostMatrix};
use fedawa::orchestrator::{ExperimentConfig, Simulation, Strategy};

fn main() -> fedawa::Result<()> {
    let rounds: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    for strategy in [Strategy::FedAvg, Strategy::FedAwa, Strategy::FedAwaCos] {
        let mut cfg = ExperimentConfig::default();
        cfg.run.strategy = strategy;
        cfg.run.rounds = rounds;
        let mut sim = Simulation::new(cfg)?;
        let records = sim.run()?;
        let dv = dataset_vector(sim.histograms(), sim.global_histogram(), &CostMatrix::zero_one(10))?;
        let weights: Vec<Vec<f64>> = records.iter().map(|r| r.weights.per_client()).collect();
        let sims = weight_trajectory_similarity(&weights, &dv)?;
        let every: Vec<String> = sims.iter().step_by(5).map(|s| format!("{s:.3}")).collect();
        println!("{:<10} {}", strategy.name(), every.join(" "));
    }
    Ok(())
}
