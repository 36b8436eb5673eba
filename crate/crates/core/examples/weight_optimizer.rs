//! The adaptive weight objective on a two-client toy, solved on the
//! simplex and compared against a grid scan.

use fedawa::aggregation::{awa_objective, optimize_weights, AggWeights, AwaOptions, RegKind};
use fedawa::tensor::{ClientVector, ParamVector};

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::from_vec(v.to_vec()).unwrap()
}

fn main() -> fedawa::Result<()> {
    let theta_g = pv(&[1.0, 1.0, 0.5]);
    let raw = [[0.8, -0.1, 0.0], [-0.3, 0.9, 0.4], [0.6, 0.2, 0.1]];
    let taus: Vec<ClientVector> = raw
        .iter()
        .enumerate()
        .map(|(i, t)| ClientVector {
            delta: pv(t),
            client_id: i,
            round: 1,
        })
        .collect();
    let thetas: Vec<ParamVector> = raw.iter().map(|t| fedawa::tensor::axpy(1.0, &pv(t), &theta_g).unwrap()).collect();
    let init = AggWeights::new(vec![0.5, 0.3, 0.2])?;

    for reg in [RegKind::Cosine, RegKind::Euclid, RegKind::None] {
        for (label, opts) in [
            ("fixed steps", AwaOptions { reg_kind: reg, ..AwaOptions::default() }),
            ("converged", AwaOptions { reg_kind: reg, ..AwaOptions::converged() }),
        ] {
            let sol = optimize_weights(&taus, &thetas, &theta_g, &init, &opts)?;
            let lam: Vec<String> = sol.weights.lambda().iter().map(|l| format!("{l:.4}")).collect();
            println!(
                "{reg:?} {label:<11} lambda [{}]  f {:.6} -> {:.6}",
                lam.join(", "),
                sol.objective_trace[0],
                sol.best_objective
            );
        }
        // coarse grid over the simplex
        let mut best = (f64::INFINITY, [0.0; 3]);
        let opts = AwaOptions { reg_kind: reg, ..AwaOptions::default() };
        for i in 0..=100 {
            for j in 0..=100 - i {
                let l = [i as f64 / 100.0, j as f64 / 100.0, (100 - i - j) as f64 / 100.0];
                let f = awa_objective(&l, &taus, &thetas, &theta_g, &opts)?;
                if f < best.0 {
                    best = (f, l);
                }
            }
        }
        println!("{reg:?} grid        lambda {:?}  f {:.6}", best.1, best.0);
    }
    Ok(())
}
