//! Multilayer perceptron with hand-written backprop, plus the client-side
//! local trainer and accuracy evaluation.
//!
//! Parameters are stored as `w0, b0, w1, b1, ...` where `w{i}` is a
//! row-major `out x in` matrix.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ClientPartition, Dataset};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::{LayerLayout, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Input dim, hidden widths..., class count.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub init_seed: u64,
}

impl MlpConfig {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, init_seed: u64) -> Result<Self> {
        let cfg = Self {
            layer_sizes,
            activation,
            init_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("model.layer_sizes", "need at least input and output sizes"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::config("model.layer_sizes", "sizes must be positive"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    fn num_affine(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layout(&self) -> Result<LayerLayout> {
        let mut layers = Vec::new();
        for (i, pair) in self.layer_sizes.windows(2).enumerate() {
            layers.push((format!("w{i}"), pair[0] * pair[1]));
            layers.push((format!("b{i}"), pair[1]));
        }
        LayerLayout::from_lengths(layers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub initial_lr: f64,
    /// Multiplicative per-round decay of the local learning rate.
    pub lr_decay: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    /// FedProx proximal coefficient; 0 disables the term. Set by the
    /// orchestrator from the strategy, never read from config files.
    #[serde(skip)]
    pub prox_mu: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.08,
            lr_decay: 0.99,
            momentum: 0.9,
            weight_decay: 5e-4,
            local_epochs: 1,
            batch_size: 32,
            prox_mu: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::config("train.initial_lr", "must be > 0"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("train.lr_decay", "must be in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("train.momentum", "must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config("train.weight_decay", "must be >= 0"));
        }
        if self.local_epochs == 0 {
            return Err(Error::config("train.local_epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if !(self.prox_mu >= 0.0 && self.prox_mu.is_finite()) {
            return Err(Error::config("train.prox_mu", "must be >= 0"));
        }
        Ok(())
    }

    /// `initial_lr * decay^(round - 1)` for 1-based `round`.
    pub fn round_lr(&self, round: usize) -> f64 {
        self.initial_lr * self.lr_decay.powi(round.saturating_sub(1) as i32)
    }
}

/// Row-major mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
}

impl Batch {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Data(format!(
                "{} features do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(Self { features, labels, dim })
    }

    pub fn from_indices(dataset: &Dataset, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * dataset.dim());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(dataset.row(i));
            labels.push(dataset.labels()[i]);
        }
        Self {
            features,
            labels,
            dim: dataset.dim(),
        }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn init_params(cfg: &MlpConfig) -> Result<ParamVector> {
    cfg.validate()?;
    let layout = Arc::new(cfg.layout()?);
    let mut rng = seed::rng(cfg.init_seed, &[seed::tag::INIT]);
    let mut values = Vec::with_capacity(layout.total_len());
    for pair in cfg.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            values.push(rng.random_range(-bound..=bound));
        }
        values.extend(std::iter::repeat_n(0.0, fan_out));
    }
    ParamVector::new(values, layout)
}

fn check_shapes(params: &ParamVector, cfg: &MlpConfig, batch: &Batch) -> Result<()> {
    let layout = cfg.layout()?;
    if **params.layout() != layout {
        return Err(Error::Layout("parameters do not match the model config".into()));
    }
    if batch.dim != cfg.input_dim() {
        return Err(Error::Layout(format!(
            "batch width {} but model input {}",
            batch.dim,
            cfg.input_dim()
        )));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&l| l >= cfg.class_count()) {
        return Err(Error::Data(format!("label {bad} outside [0, {})", cfg.class_count())));
    }
    Ok(())
}

/// Offsets of `(w_i, b_i)` inside the flat vector.
fn affine_offsets(cfg: &MlpConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(cfg.num_affine());
    let mut off = 0;
    for pair in cfg.layer_sizes.windows(2) {
        let w = off;
        let b = w + pair[0] * pair[1];
        out.push((w, b));
        off = b + pair[1];
    }
    out
}

/// Pre-activations `zs[l]` and outputs `acts[l]` (acts[0] is the input).
struct Trace {
    zs: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

fn forward_one(p: &[f64], cfg: &MlpConfig, offsets: &[(usize, usize)], x: &[f64]) -> Trace {
    let last = cfg.num_affine() - 1;
    let mut zs = Vec::with_capacity(cfg.num_affine());
    let mut acts = Vec::with_capacity(cfg.num_affine() + 1);
    acts.push(x.to_vec());
    for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
        let (n_in, n_out) = (cfg.layer_sizes[l], cfg.layer_sizes[l + 1]);
        let input = &acts[l];
        let mut z = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &p[w_off + o * n_in..w_off + (o + 1) * n_in];
            let mut acc = p[b_off + o];
            for (w, a) in row.iter().zip(input) {
                acc += w * a;
            }
            z.push(acc);
        }
        let a = if l == last {
            z.clone()
        } else {
            z.iter().map(|&v| cfg.activation.apply(v)).collect()
        };
        zs.push(z);
        acts.push(a);
    }
    Trace { zs, acts }
}

/// Raw logits, row-major `rows x classes`.
pub fn forward(params: &ParamVector, cfg: &MlpConfig, batch: &Batch) -> Result<Vec<f64>> {
    check_shapes(params, cfg, batch)?;
    let offsets = affine_offsets(cfg);
    let mut out = Vec::with_capacity(batch.rows() * cfg.class_count());
    for i in 0..batch.rows() {
        let trace = forward_one(params.values(), cfg, &offsets, batch.row(i));
        out.extend(trace.acts.last().expect("at least one layer"));
    }
    Ok(out)
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Mean softmax cross-entropy over the batch and its gradient.
pub fn loss_and_grad(params: &ParamVector, cfg: &MlpConfig, batch: &Batch) -> Result<(f64, ParamVector)> {
    check_shapes(params, cfg, batch)?;
    if batch.rows() == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    let p = params.values();
    let offsets = affine_offsets(cfg);
    let inv_n = 1.0 / batch.rows() as f64;
    let mut grad = vec![0.0; p.len()];
    let mut loss = 0.0;

    for i in 0..batch.rows() {
        let trace = forward_one(p, cfg, &offsets, batch.row(i));
        let logits = trace.acts.last().expect("at least one layer");
        if let Some(j) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("logit {j} of row {i} is {}", logits[j])));
        }
        let logp = log_softmax(logits);
        let y = batch.labels[i];
        loss -= logp[y];

        let mut delta: Vec<f64> = logp.iter().map(|lp| lp.exp() * inv_n).collect();
        delta[y] -= inv_n;

        for l in (0..cfg.num_affine()).rev() {
            let (w_off, b_off) = offsets[l];
            let n_in = cfg.layer_sizes[l];
            let input = &trace.acts[l];
            for (o, &d) in delta.iter().enumerate() {
                grad[b_off + o] += d;
                let g_row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, a) in g_row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &p[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (acc, w) in prev.iter_mut().zip(row) {
                    *acc += w * d;
                }
            }
            let (z, a) = (&trace.zs[l - 1], &trace.acts[l]);
            for ((v, &zv), &av) in prev.iter_mut().zip(z).zip(a) {
                *v *= cfg.activation.derivative(zv, av);
            }
            delta = prev;
        }
    }
    let loss = loss * inv_n;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss}")));
    }
    let grad = params
        .with_values(grad)
        .map_err(|e| Error::Numeric(format!("gradient: {e}")))?;
    Ok((loss, grad))
}

/// Result of a local training run.
#[derive(Debug, Clone)]
pub struct LocalTrainOutput {
    pub params: ParamVector,
    /// Mean mini-batch loss of each epoch, measured before each step.
    pub epoch_losses: Vec<f64>,
}

/// Runs `tc.local_epochs` epochs of momentum SGD from `theta_g` on the
/// client's rows. Weight decay is added to the gradient; with
/// `tc.prox_mu > 0` the proximal pull `prox_mu * (theta - theta_g)` is too.
pub fn local_train(
    theta_g: &ParamVector,
    cfg: &MlpConfig,
    dataset: &Dataset,
    partition: &ClientPartition,
    tc: &TrainConfig,
    round_lr: f64,
    rng_seed: u64,
) -> Result<ParamVector> {
    local_train_traced(theta_g, cfg, dataset, partition, tc, round_lr, rng_seed).map(|o| o.params)
}

pub fn local_train_traced(
    theta_g: &ParamVector,
    cfg: &MlpConfig,
    dataset: &Dataset,
    partition: &ClientPartition,
    tc: &TrainConfig,
    round_lr: f64,
    rng_seed: u64,
) -> Result<LocalTrainOutput> {
    tc.validate()?;
    if partition.n() == 0 {
        return Err(Error::Data(format!("client {} has no samples", partition.client_id)));
    }
    if !(round_lr >= 0.0 && round_lr.is_finite()) {
        return Err(Error::Domain(format!("learning rate must be >= 0, got {round_lr}")));
    }
    let mut rng = seed::rng(rng_seed, &[seed::tag::LOCAL_TRAIN]);
    let anchor = theta_g.values();
    let mut theta = anchor.to_vec();
    let mut velocity = vec![0.0; theta.len()];
    let mut order = partition.indices().to_vec();
    let mut epoch_losses = Vec::with_capacity(tc.local_epochs);

    for _ in 0..tc.local_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(tc.batch_size) {
            let batch = Batch::from_indices(dataset, chunk);
            let current = theta_g.with_values(theta)?;
            let (loss, grad) = loss_and_grad(&current, cfg, &batch)?;
            theta = current.into_values();
            loss_sum += loss;
            batches += 1;
            for (j, g) in grad.values().iter().enumerate() {
                let mut step = g + tc.weight_decay * theta[j];
                if tc.prox_mu > 0.0 {
                    step += tc.prox_mu * (theta[j] - anchor[j]);
                }
                velocity[j] = tc.momentum * velocity[j] + step;
                theta[j] -= round_lr * velocity[j];
            }
        }
        epoch_losses.push(loss_sum / batches as f64);
    }
    let params = theta_g
        .with_values(theta)
        .map_err(|e| Error::Numeric(format!("client {} diverged: {e}", partition.client_id)))?;
    Ok(LocalTrainOutput { params, epoch_losses })
}

/// Index of the largest logit; ties go to the lowest index.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Top-1 accuracy over the whole dataset.
pub fn evaluate(params: &ParamVector, cfg: &MlpConfig, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let mut correct = 0usize;
    for chunk in all.chunks(256) {
        let batch = Batch::from_indices(dataset, chunk);
        let logits = forward(params, cfg, &batch)?;
        for (row, &y) in logits.chunks(cfg.class_count()).zip(&batch.labels) {
            if argmax(row) == y {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;

    fn two_layer() -> MlpConfig {
        MlpConfig::new(vec![4, 5, 3], Activation::Tanh, 7).unwrap()
    }

    fn random_batch(rows: usize, dim: usize, classes: usize, s: u64) -> Batch {
        let mut rng = seed::rng(s, &[99]);
        let features = (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..rows).map(|_| rng.random_range(0..classes)).collect();
        Batch::new(features, labels, dim).unwrap()
    }

    #[test]
    fn init_layout_and_determinism() {
        let cfg = MlpConfig::new(vec![4, 3], Activation::Relu, 1).unwrap();
        let p = init_params(&cfg).unwrap();
        let e = p.layout().entries();
        assert_eq!((e[0].name.as_str(), e[0].offset, e[0].len), ("w0", 0, 12));
        assert_eq!((e[1].name.as_str(), e[1].offset, e[1].len), ("b0", 12, 3));
        assert_eq!(p.len(), 15);
        assert!(p.values()[12..].iter().all(|&b| b == 0.0));
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(p.values()[..12].iter().all(|w| w.abs() <= bound));
        assert_eq!(p, init_params(&cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(MlpConfig::new(vec![4], Activation::Relu, 0).is_err());
        assert!(MlpConfig::new(vec![4, 0, 2], Activation::Relu, 0).is_err());
        let tc = TrainConfig {
            local_epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(tc.validate(), Err(Error::Config { field, .. }) if field == "train.local_epochs"));
    }

    #[test]
    fn forward_examples() {
        let cfg = MlpConfig::new(vec![2, 2], Activation::Relu, 0).unwrap();
        let layout = Arc::new(cfg.layout().unwrap());
        let zero = ParamVector::zeros(Arc::clone(&layout));
        let batch = Batch::new(vec![1.0, 0.0, 0.3, -2.0, 5.0, 5.0], vec![0, 1, 0], 2).unwrap();
        let logits = forward(&zero, &cfg, &batch).unwrap();
        assert_eq!(logits.len(), 6);
        assert!(logits.iter().all(|&v| v == 0.0));

        let eye = ParamVector::new(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0], layout).unwrap();
        let one = Batch::new(vec![1.0, 0.0], vec![0], 2).unwrap();
        assert_eq!(forward(&eye, &cfg, &one).unwrap(), vec![1.0, 0.0]);

        let wide = Batch::new(vec![1.0, 0.0, 1.0], vec![0], 3).unwrap();
        assert!(forward(&eye, &cfg, &wide).is_err());
    }

    #[test]
    fn uniform_logits_give_log_c() {
        let cfg = MlpConfig::new(vec![3, 6, 5], Activation::Relu, 0).unwrap();
        let zero = ParamVector::zeros(Arc::new(cfg.layout().unwrap()));
        let batch = random_batch(7, 3, 5, 1);
        let (loss, _) = loss_and_grad(&zero, &cfg, &batch).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_leave_loss_and_grad_unchanged() {
        let cfg = two_layer();
        let p = init_params(&cfg).unwrap();
        let batch = random_batch(6, 4, 3, 2);
        let mut features = batch.features.clone();
        features.extend_from_slice(&batch.features);
        let mut labels = batch.labels.clone();
        labels.extend_from_slice(&batch.labels);
        let doubled = Batch::new(features, labels, 4).unwrap();
        let (l1, g1) = loss_and_grad(&p, &cfg, &batch).unwrap();
        let (l2, g2) = loss_and_grad(&p, &cfg, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Central finite differences on the loss, independent of backprop.
    fn fd_grad(p: &ParamVector, cfg: &MlpConfig, batch: &Batch, j: usize, h: f64) -> f64 {
        let mut plus = p.values().to_vec();
        let mut minus = p.values().to_vec();
        plus[j] += h;
        minus[j] -= h;
        let lp = loss_and_grad(&p.with_values(plus).unwrap(), cfg, batch).unwrap().0;
        let lm = loss_and_grad(&p.with_values(minus).unwrap(), cfg, batch).unwrap().0;
        (lp - lm) / (2.0 * h)
    }

    #[test]
    fn grad_matches_finite_differences() {
        for act in [Activation::Tanh, Activation::Relu] {
            let cfg = MlpConfig::new(vec![4, 6, 3], act, 3).unwrap();
            let p = init_params(&cfg).unwrap();
            // non-zero biases so every coordinate is exercised
            let p = p
                .with_values(p.values().iter().enumerate().map(|(i, v)| v + 0.01 * (i % 7) as f64).collect())
                .unwrap();
            let batch = random_batch(8, 4, 3, 5);
            let (_, g) = loss_and_grad(&p, &cfg, &batch).unwrap();
            let mut rng = seed::rng(17, &[]);
            for _ in 0..50 {
                let j = rng.random_range(0..p.len());
                let fd = fd_grad(&p, &cfg, &batch, j, 1e-5);
                let an = g.values()[j];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "{act:?} coord {j}: analytic {an} fd {fd}");
            }
        }
    }

    fn blob_setup() -> (Dataset, MlpConfig, ClientPartition) {
        let d = gen_blobs(2, 3, 40, 1.0, 4).unwrap();
        let cfg = MlpConfig::new(vec![3, 8, 2], Activation::Relu, 2).unwrap();
        let part = ClientPartition::whole(0, &d);
        (d, cfg, part)
    }

    #[test]
    fn zero_lr_is_a_no_op_and_training_is_deterministic() {
        let (d, cfg, part) = blob_setup();
        let theta = init_params(&cfg).unwrap();
        let tc = TrainConfig {
            local_epochs: 3,
            ..TrainConfig::default()
        };
        assert_eq!(local_train(&theta, &cfg, &d, &part, &tc, 0.0, 1).unwrap(), theta);
        let a = local_train(&theta, &cfg, &d, &part, &tc, 0.05, 1).unwrap();
        let b = local_train(&theta, &cfg, &d, &part, &tc, 0.05, 1).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a, theta);
    }

    #[test]
    fn plain_sgd_single_step() {
        let (d, cfg, _) = blob_setup();
        let theta = init_params(&cfg).unwrap();
        let part = ClientPartition::new(0, (0..10).collect());
        let tc = TrainConfig {
            momentum: 0.0,
            weight_decay: 0.0,
            prox_mu: 0.0,
            batch_size: 10,
            ..TrainConfig::default()
        };
        let lr = 0.1;
        let out = local_train(&theta, &cfg, &d, &part, &tc, lr, 3).unwrap();
        // a single full batch is shuffle-invariant for the mean loss
        let (_, g) = loss_and_grad(&theta, &cfg, &Batch::from_indices(&d, part.indices())).unwrap();
        for ((new, old), gj) in out.values().iter().zip(theta.values()).zip(g.values()) {
            assert!((new - (old - lr * gj)).abs() < 1e-12);
        }
    }

    #[test]
    fn proximal_term_pulls_toward_anchor() {
        let (d, cfg, part) = blob_setup();
        let theta = init_params(&cfg).unwrap();
        let plain = TrainConfig {
            momentum: 0.0,
            batch_size: 8,
            local_epochs: 2,
            ..TrainConfig::default()
        };
        let lr = 0.05;
        // lr * mu = 1 resets the accumulated drift at every step
        let prox = TrainConfig {
            prox_mu: 1.0 / lr,
            ..plain.clone()
        };
        let a = local_train(&theta, &cfg, &d, &part, &plain, lr, 9).unwrap();
        let b = local_train(&theta, &cfg, &d, &part, &prox, lr, 9).unwrap();
        let drift = |x: &ParamVector| crate::tensor::l2_norm(&x.sub(&theta).unwrap());
        assert!(drift(&b) < drift(&a), "prox {} plain {}", drift(&b), drift(&a));
    }

    #[test]
    fn epoch_loss_decreases_on_separable_blobs() {
        let (d, cfg, part) = blob_setup();
        let theta = init_params(&cfg).unwrap();
        let tc = TrainConfig {
            local_epochs: 5,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = local_train_traced(&theta, &cfg, &d, &part, &tc, 0.05, 0).unwrap();
        assert!(out.epoch_losses.windows(2).all(|w| w[1] < w[0]), "{:?}", out.epoch_losses);
    }

    #[test]
    fn empty_partition_and_bad_lr_fail() {
        let (d, cfg, _) = blob_setup();
        let theta = init_params(&cfg).unwrap();
        let tc = TrainConfig::default();
        let empty = ClientPartition::new(3, vec![]);
        assert!(matches!(local_train(&theta, &cfg, &d, &empty, &tc, 0.1, 0), Err(Error::Data(_))));
        let part = ClientPartition::whole(0, &d);
        assert!(local_train(&theta, &cfg, &d, &part, &tc, -0.1, 0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        // identity single layer: logits equal the one-hot features
        let cfg = MlpConfig::new(vec![3, 3], Activation::Relu, 0).unwrap();
        let layout = Arc::new(cfg.layout().unwrap());
        let mut eye = vec![0.0; 12];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let eye = ParamVector::new(eye, Arc::clone(&layout)).unwrap();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..9 {
            let mut row = vec![0.0; 3];
            row[i % 3] = 1.0;
            features.extend(row);
            labels.push(i % 3);
        }
        let d = Dataset::new(features, 3, labels, 3).unwrap();
        assert_eq!(evaluate(&eye, &cfg, &d).unwrap(), 1.0);
        // all-tie logits resolve to class 0, so a stratified set scores 1/C
        let zero = ParamVector::zeros(layout);
        assert_eq!(evaluate(&zero, &cfg, &d).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn round_lr_schedule() {
        let tc = TrainConfig::default();
        assert_eq!(tc.round_lr(1), 0.08);
        assert!((tc.round_lr(3) - 0.08 * 0.99 * 0.99).abs() < 1e-15);
    }
}
