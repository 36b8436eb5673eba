//! One client trains from a shared starting point for a few epochs; the
//! client vector is the difference from that start.

use fedawa::data::{dirichlet_partition, gen_blobs, DirichletSpec};
use fedawa::model::{evaluate, init_params, local_train_traced, Activation, MlpConfig, TrainConfig};
use fedawa::tensor::l2_norm;

fn main() -> fedawa::Result<()> {
    let train = gen_blobs(10, 32, 200, 1.0, 1)?;
    let parts = dirichlet_partition(train.labels(), 10, &DirichletSpec::new(0.1, 10, 2))?;
    let cfg = MlpConfig::new(vec![32, 64, 10], Activation::Relu, 5)?;
    let theta_g = init_params(&cfg)?;
    let tc = TrainConfig {
        local_epochs: 5,
        ..TrainConfig::default()
    };

    for part in parts.iter().take(3) {
        let out = local_train_traced(&theta_g, &cfg, &train, part, &tc, tc.initial_lr, 9)?;
        let tau = out.params.sub(&theta_g)?;
        let losses: Vec<String> = out.epoch_losses.iter().map(|l| format!("{l:.3}")).collect();
        println!(
            "client {} (n={}): epoch losses [{}], |tau| {:.3}, accuracy on all data {:.3}",
            part.client_id,
            part.n(),
            losses.join(", "),
            l2_norm(&tau),
            evaluate(&out.params, &cfg, &train)?
        );
    }
    Ok(())
}
