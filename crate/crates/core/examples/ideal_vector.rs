//! Distance of each client vector, and of their size-weighted average, to
//! the update obtained by training on the pooled data.

use fedawa::analysis::ideal_vector_probe;
use fedawa::orchestrator::{ExperimentConfig, PartitionScheme, Simulation, Strategy};
use fedawa::seed::{self, tag};

fn main() -> fedawa::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.run.strategy = Strategy::FedAvg;
    cfg.run.clients = 12;
    cfg.run.rounds = 10;
    cfg.partition.scheme = PartitionScheme::ExtremeGroups;
    let tc = cfg.local_train_config();
    let master = cfg.run.seed;
    let mut sim = Simulation::new(cfg)?;

    println!("round  global  median client  best client");
    for _ in 0..10 {
        let out = sim.run_round_full()?;
        let t = out.record.round;
        let sizes: Vec<usize> = out.record.participants.iter().map(|&k| sim.partitions()[k].n()).collect();
        let probe = ideal_vector_probe(
            &out.theta_prev,
            sim.mlp(),
            sim.train_set(),
            &tc,
            tc.round_lr(t),
            seed::derive(master, &[tag::IDEAL, t as u64]),
            &out.client_vectors,
            &sizes,
        )?;
        let mut clients = probe.dists[1..].to_vec();
        clients.sort_by(f64::total_cmp);
        println!("{t:>5}  {:.4}  {:.4}         {:.4}", probe.dists[0], clients[clients.len() / 2], clients[0]);
    }
    Ok(())
}
