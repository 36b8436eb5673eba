//! Label skew of Dirichlet partitions at a few concentrations, and the
//! three-group preset.
//!
//! ```text
//! cargo run --example partition_clients -- [clients]
//! ```

use fedawa::data::{dirichlet_partition, extreme_groups, gen_blobs, label_histogram, DirichletSpec};

fn main() -> fedawa::Result<()> {
    let clients: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let data = gen_blobs(10, 8, 200, 1.0, 3)?;

    for alpha in [100.0, 1.0, 0.1] {
        let parts = dirichlet_partition(data.labels(), 10, &DirichletSpec::new(alpha, clients, 11))?;
        println!("alpha = {alpha}");
        for p in &parts {
            let h = label_histogram(&data, p)?;
            println!("  client {:>2}  n={:>4}  entropy {:.2}  {:?}", p.client_id, p.n(), h.entropy(), h.counts);
        }
    }

    let groups = clients.div_ceil(3) * 3;
    println!("extreme groups, {groups} clients");
    for p in extreme_groups(data.labels(), 10, groups, 11)? {
        let h = label_histogram(&data, &p)?;
        println!("  client {:>2}  n={:>4}  {:?}", p.client_id, p.n(), h.counts);
    }
    Ok(())
}
