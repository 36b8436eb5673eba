//! Exact optimal transport between label histograms under two ground
//! costs.

use fedawa::analysis::{ot_distance, CostMatrix};
use fedawa::data::LabelHistogram;

fn main() -> fedawa::Result<()> {
    let hists = [
        LabelHistogram::from_counts(vec![10, 0, 0, 0])?,
        LabelHistogram::from_counts(vec![0, 0, 0, 10])?,
        LabelHistogram::from_counts(vec![5, 5, 0, 0])?,
        LabelHistogram::from_counts(vec![1, 1, 1, 1])?,
    ];
    for (name, cost) in [("0/1", CostMatrix::zero_one(4)), ("|i-j|", CostMatrix::abs_diff(4))] {
        println!("cost {name}");
        for p in &hists {
            let row: Vec<String> = hists
                .iter()
                .map(|q| ot_distance(p, q, &cost).map(|d| format!("{d:.3}")))
                .collect::<fedawa::Result<_>>()?;
            println!("  {}", row.join(" "));
        }
    }
    Ok(())
}
