//! Distance between clients after one round on the three-group split:
//! client vectors against raw parameters and label distributions.

use fedawa::analysis::{ot_distance_matrix, vector_distance_matrix, CostMatrix, DistanceMatrix};
use fedawa::orchestrator::{ExperimentConfig, PartitionScheme, Simulation, Strategy};
use fedawa::tensor::ParamVector;

fn show(name: &str, m: &DistanceMatrix) {
    let (a, b): (Vec<usize>, Vec<usize>) = ((0..4).collect(), (4..8).collect());
    println!("{name}: contrast {:.3}", m.contrast_ratio(&a, &b));
    for i in 0..m.size() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.2}")).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> fedawa::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.run.strategy = Strategy::FedAvg;
    cfg.run.clients = 12;
    cfg.run.rounds = 1;
    cfg.partition.scheme = PartitionScheme::ExtremeGroups;
    let mut sim = Simulation::new(cfg)?;
    let out = sim.run_round_full()?;

    let taus: Vec<ParamVector> = out.client_vectors.iter().map(|t| t.delta.clone()).collect();
    show("client vectors", &vector_distance_matrix(&taus)?);
    show("parameters", &vector_distance_matrix(&out.client_models)?);
    show("label OT", &ot_distance_matrix(sim.histograms(), &CostMatrix::zero_one(10))?);
    Ok(())
}
