use fedawa::analysis::{dataset_vector, ot_distance_matrix, vector_distance_matrix, weight_trajectory_similarity, CostMatrix};
use fedawa::orchestrator::{ExperimentConfig, PartitionScheme, Simulation, Strategy};
use fedawa::tensor::ParamVector;

fn extreme(seed_value: u64) -> Simulation {
    let mut cfg = ExperimentConfig::default();
    cfg.run.strategy = Strategy::FedAvg;
    cfg.run.clients = 12;
    cfg.run.rounds = 1;
    cfg.run.seed = seed_value;
    cfg.partition.scheme = PartitionScheme::ExtremeGroups;
    Simulation::new(cfg).unwrap()
}

const A: [usize; 4] = [0, 1, 2, 3];
const B: [usize; 4] = [4, 5, 6, 7];
const MIXED: [usize; 4] = [8, 9, 10, 11];

#[test]
fn mixed_group_sits_between_the_extremes() {
    for s in 0..3 {
        let mut sim = extreme(s);
        let out = sim.run_round_full().unwrap();
        let taus: Vec<ParamVector> = out.client_vectors.iter().map(|t| t.delta.clone()).collect();
        let m = vector_distance_matrix(&taus).unwrap();
        let within = 0.5 * (m.block_mean(&A, &A) + m.block_mean(&B, &B));
        let between = m.block_mean(&A, &B);
        assert!(within < between, "seed {s}");
        assert!(m.block_mean(&MIXED, &A) < between, "seed {s}");
        assert!(m.block_mean(&MIXED, &B) < between, "seed {s}");
    }
}

#[test]
fn distance_matrices_satisfy_the_metric_axioms() {
    let mut sim = extreme(4);
    let out = sim.run_round_full().unwrap();
    let taus: Vec<ParamVector> = out.client_vectors.iter().map(|t| t.delta.clone()).collect();
    for m in [
        vector_distance_matrix(&taus).unwrap(),
        vector_distance_matrix(&out.client_models).unwrap(),
        ot_distance_matrix(sim.histograms(), &CostMatrix::zero_one(10)).unwrap(),
    ] {
        for i in 0..m.size() {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..m.size() {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert!((0.0..=2.0).contains(&m.get(i, j)));
            }
        }
    }
}

#[test]
fn label_ot_separates_the_extreme_groups() {
    let sim = extreme(0);
    let m = ot_distance_matrix(sim.histograms(), &CostMatrix::zero_one(10)).unwrap();
    assert!(m.block_mean(&A, &B) > 0.99);
    assert!(m.block_mean(&A, &A) < 0.5);
    let dv = dataset_vector(sim.histograms(), sim.global_histogram(), &CostMatrix::zero_one(10)).unwrap();
    assert!(dv.sims.iter().all(|&s| s > 0.0 && s <= 1.0));
    // mixed clients hold every class, so they are closest to the pooled data
    let mixed_min = MIXED.iter().map(|&i| dv.sims[i]).fold(f64::INFINITY, f64::min);
    let extreme_max = A.iter().chain(&B).map(|&i| dv.sims[i]).fold(0.0, f64::max);
    assert!(mixed_min > extreme_max);
}

#[test]
fn fedavg_trajectory_is_constant_under_full_participation() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.strategy = Strategy::FedAvg;
    cfg.run.rounds = 4;
    let mut sim = Simulation::new(cfg).unwrap();
    let weights: Vec<Vec<f64>> = (0..4).map(|_| sim.run_round().unwrap().weights.per_client()).collect();
    let dv = dataset_vector(sim.histograms(), sim.global_histogram(), &CostMatrix::zero_one(10)).unwrap();
    let s = weight_trajectory_similarity(&weights, &dv).unwrap();
    assert!(s.iter().all(|v| v.to_bits() == s[0].to_bits()));
    assert!(s[0] > 0.0 && s[0] <= 1.0);
}
