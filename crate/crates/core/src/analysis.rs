//! Diagnostics: distance matrices between clients, label-distribution OT,
//! the pooled-data ("ideal") update comparison and weight trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{ClientPartition, Dataset, LabelHistogram};
use crate::error::{Error, Result};
use crate::model::{local_train, MlpConfig, TrainConfig};
use crate::tensor::{cosine_similarity, l2_norm, weighted_sum, ClientVector, ParamVector};

/// Floats in CSV output: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Symmetric, non-negative ground cost with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    c: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(c: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != c * c {
            return Err(Error::CountMismatch {
                expected: c * c,
                got: values.len(),
            });
        }
        for i in 0..c {
            if values[i * c + i] != 0.0 {
                return Err(Error::Domain(format!("cost[{i}][{i}] must be 0")));
            }
            for j in 0..c {
                let v = values[i * c + j];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("cost[{i}][{j}] = {v}")));
                }
                if v != values[j * c + i] {
                    return Err(Error::Domain(format!("cost is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { c, values })
    }

    /// 1 off the diagonal.
    pub fn zero_one(c: usize) -> Self {
        let values = (0..c * c).map(|x| if x / c == x % c { 0.0 } else { 1.0 }).collect();
        Self { c, values }
    }

    /// `|i - j|`.
    pub fn abs_diff(c: usize) -> Self {
        let values = (0..c * c).map(|x| (x / c).abs_diff(x % c) as f64).collect();
        Self { c, values }
    }

    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.c + j]
    }
}

/// Exact optimal-transport cost between two normalized histograms.
pub fn ot_distance(p: &LabelHistogram, q: &LabelHistogram, cost: &CostMatrix) -> Result<f64> {
    ot_distance_raw(&p.normalized, &q.normalized, cost)
}

/// [`ot_distance`] on raw probability vectors.
pub fn ot_distance_raw(p: &[f64], q: &[f64], cost: &CostMatrix) -> Result<f64> {
    if p.len() != cost.c {
        return Err(Error::CountMismatch {
            expected: cost.c,
            got: p.len(),
        });
    }
    if q.len() != cost.c {
        return Err(Error::CountMismatch {
            expected: cost.c,
            got: q.len(),
        });
    }
    for v in p.iter().chain(q) {
        if !(*v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("histogram entry {v}")));
        }
    }
    let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
    if (sp - sq).abs() > 1e-9 * sp.max(sq).max(1.0) {
        return Err(Error::Domain(format!("histogram masses differ ({sp} vs {sq})")));
    }
    if p == q {
        return Ok(0.0);
    }
    Ok(Transport::solve(p, q, cost).cost())
}

/// Transportation simplex on an `m x n` problem. The basis is a spanning
/// tree of `m + n - 1` cells over the bipartite row/column graph.
struct Transport<'a> {
    m: usize,
    n: usize,
    cost: &'a CostMatrix,
    /// (row, col, flow)
    basis: Vec<(usize, usize, f64)>,
}

impl<'a> Transport<'a> {
    fn solve(p: &[f64], q: &[f64], cost: &'a CostMatrix) -> Self {
        let mut t = Self {
            m: p.len(),
            n: q.len(),
            cost,
            basis: Vec::with_capacity(p.len() + q.len()),
        };
        t.northwest(p, q);
        let tol = 1e-13 * cost.values.iter().cloned().fold(1.0, f64::max);
        // Bland's rule terminates; the cap only guards against float noise
        let cap = 50 * (t.m + t.n) * (t.m + t.n) + 1000;
        for _ in 0..cap {
            let (u, v) = t.potentials();
            let entering = (0..t.m)
                .flat_map(|i| (0..t.n).map(move |j| (i, j)))
                .find(|&(i, j)| cost.get(i, j) - u[i] - v[j] < -tol && !t.in_basis(i, j));
            match entering {
                Some((i, j)) => t.pivot(i, j),
                None => break,
            }
        }
        t
    }

    fn northwest(&mut self, p: &[f64], q: &[f64]) {
        let mut supply = p.to_vec();
        let mut demand = q.to_vec();
        let (mut i, mut j) = (0, 0);
        while i < self.m && j < self.n {
            let x = supply[i].min(demand[j]);
            self.basis.push((i, j, x));
            supply[i] -= x;
            demand[j] -= x;
            // leave exactly one of row/column per cell so the basis stays a tree
            if i == self.m - 1 {
                j += 1;
            } else if j == self.n - 1 || supply[i] <= demand[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.basis.len(), self.m + self.n - 1);
    }

    fn in_basis(&self, i: usize, j: usize) -> bool {
        self.basis.iter().any(|&(a, b, _)| a == i && b == j)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (e, &(i, j, _)) in self.basis.iter().enumerate() {
            adj[i].push(e);
            adj[self.m + j].push(e);
        }
        adj
    }

    /// Row potentials `u` and column potentials `v` with `u_0 = 0` and
    /// `u_i + v_j = c_ij` on every basic cell.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            for &e in &adj[node] {
                let (i, j, _) = self.basis[e];
                let (r, c) = (i, self.m + j);
                let other = if node == r { c } else { r };
                if pot[other].is_nan() {
                    pot[other] = self.cost.get(i, j) - pot[node];
                    stack.push(other);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basis cells on the tree path from column `j` to row `i`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let start = self.m + j;
        let mut via = vec![usize::MAX; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &e in &adj[node] {
                let (r, c, _) = self.basis[e];
                let other = if node == r { self.m + c } else { r };
                if !seen[other] {
                    seen[other] = true;
                    via[other] = e;
                    queue.push_back(other);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = i;
        while node != start {
            let e = via[node];
            edges.push(e);
            let (r, c, _) = self.basis[e];
            node = if node == r { self.m + c } else { r };
        }
        edges.reverse();
        edges
    }

    fn pivot(&mut self, i: usize, j: usize) {
        // cycle: (i, j) gains, then cells alternate losing/gaining from column j back to row i
        let path = self.path(i, j);
        let losing: Vec<usize> = path.iter().step_by(2).copied().collect();
        let theta = losing.iter().map(|&e| self.basis[e].2).fold(f64::INFINITY, f64::min);
        let leave = losing
            .iter()
            .copied()
            .filter(|&e| self.basis[e].2 == theta)
            .min_by_key(|&e| (self.basis[e].0, self.basis[e].1))
            .expect("cycle has a losing cell");
        for (k, &e) in path.iter().enumerate() {
            let f = &mut self.basis[e].2;
            if k % 2 == 0 {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
        self.basis[leave] = (i, j, theta);
    }

    fn cost(&self) -> f64 {
        self.basis.iter().map(|&(i, j, x)| x * self.cost.get(i, j)).sum()
    }
}

/// Per-client similarity `1 / (1 + d_OT(local, global))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetVector {
    pub sims: Vec<f64>,
}

pub fn dataset_vector(local_hists: &[LabelHistogram], global_hist: &LabelHistogram, cost: &CostMatrix) -> Result<DatasetVector> {
    let sims = local_hists
        .iter()
        .map(|h| ot_distance(h, global_hist, cost).map(|d| 1.0 / (1.0 + d)))
        .collect::<Result<_>>()?;
    Ok(DatasetVector { sims })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OneMinusCosine,
    OtLabel,
}

/// Square matrix of pairwise client distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    k: usize,
    values: Vec<f64>,
    pub metric: Metric,
}

impl DistanceMatrix {
    fn from_pairs(k: usize, metric: Metric, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let d = f(i, j)?;
                values[i * k + j] = d;
                values[j * k + i] = d;
            }
        }
        Ok(Self { k, values, metric })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    /// Mean over pairs `(i, j)` with `i` in `a`, `j` in `b`, `i != j`.
    pub fn block_mean(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &i in a {
            for &j in b {
                if i != j {
                    sum += self.get(i, j);
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Between-group mean distance divided by the mean of the two
    /// within-group means.
    pub fn contrast_ratio(&self, a: &[usize], b: &[usize]) -> f64 {
        let within = 0.5 * (self.block_mean(a, a) + self.block_mean(b, b));
        self.block_mean(a, b) / within
    }

    /// CSV with a `client` column and one column per client id.
    pub fn write_csv<W: Write>(&self, ids: &[usize], w: W) -> Result<()> {
        if ids.len() != self.k {
            return Err(Error::CountMismatch {
                expected: self.k,
                got: ids.len(),
            });
        }
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["client".to_string()];
        header.extend(ids.iter().map(|i| i.to_string()));
        out.write_record(&header)?;
        for (r, id) in ids.iter().enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(self.row(r).iter().map(|&v| fmt_f64(v)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `1 - cos` between every pair of vectors.
pub fn vector_distance_matrix(vs: &[ParamVector]) -> Result<DistanceMatrix> {
    if let Some(first) = vs.first() {
        for v in vs {
            first.check_layout(v)?;
        }
    }
    DistanceMatrix::from_pairs(vs.len(), Metric::OneMinusCosine, |i, j| {
        Ok((1.0 - cosine_similarity(&vs[i], &vs[j])?).clamp(0.0, 2.0))
    })
}

/// OT distance between every pair of label histograms.
pub fn ot_distance_matrix(hists: &[LabelHistogram], cost: &CostMatrix) -> Result<DistanceMatrix> {
    DistanceMatrix::from_pairs(hists.len(), Metric::OtLabel, |i, j| ot_distance(&hists[i], &hists[j], cost))
}

#[derive(Debug, Clone)]
pub struct IdealProbe {
    pub tau_ideal: ParamVector,
    /// `||tau_g - tau_ideal||` followed by `||tau_k - tau_ideal||` per client.
    pub dists: Vec<f64>,
}

/// Trains `theta_g` on the pooled dataset with the clients' settings and
/// compares the resulting update with the client vectors and their
/// dataset-size-weighted merge.
#[allow(clippy::too_many_arguments)]
pub fn ideal_vector_probe(
    theta_g: &ParamVector,
    cfg: &MlpConfig,
    global_dataset: &Dataset,
    tc: &TrainConfig,
    round_lr: f64,
    rng_seed: u64,
    taus: &[ClientVector],
    sizes: &[usize],
) -> Result<IdealProbe> {
    if taus.len() != sizes.len() {
        return Err(Error::CountMismatch {
            expected: taus.len(),
            got: sizes.len(),
        });
    }
    let whole = ClientPartition::whole(0, global_dataset);
    let theta_ideal = local_train(theta_g, cfg, global_dataset, &whole, tc, round_lr, rng_seed)?;
    let tau_ideal = theta_ideal.sub(theta_g)?;
    let w = crate::aggregation::fedavg_weights(sizes)?;
    let deltas: Vec<&ParamVector> = taus.iter().map(|t| &t.delta).collect();
    let tau_g = weighted_sum(&deltas, w.lambda())?;
    let mut dists = vec![l2_norm(&tau_g.sub(&tau_ideal)?)];
    for t in taus {
        dists.push(l2_norm(&t.delta.sub(&tau_ideal)?));
    }
    Ok(IdealProbe { tau_ideal, dists })
}

/// Scatters subset weights into a length-`k` vector (zeros elsewhere).
pub fn expand_weights(participants: &[usize], lambda: &[f64], k: usize) -> Result<Vec<f64>> {
    if participants.len() != lambda.len() {
        return Err(Error::CountMismatch {
            expected: participants.len(),
            got: lambda.len(),
        });
    }
    let mut out = vec![0.0; k];
    for (&id, &l) in participants.iter().zip(lambda) {
        *out.get_mut(id).ok_or(Error::Index { index: id, len: k })? = l;
    }
    Ok(out)
}

/// Cosine similarity between each round's weights and the dataset vector.
pub fn weight_trajectory_similarity(weights_per_round: &[Vec<f64>], dv: &DatasetVector) -> Result<Vec<f64>> {
    let target = ParamVector::from_vec(dv.sims.clone())?;
    weights_per_round
        .iter()
        .map(|w| {
            if w.len() != dv.sims.len() {
                return Err(Error::CountMismatch {
                    expected: dv.sims.len(),
                    got: w.len(),
                });
            }
            cosine_similarity(&ParamVector::from_vec(w.clone())?, &target)
        })
        .collect()
}
