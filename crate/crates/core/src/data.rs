//! Datasets, non-IID partitioning and label histograms.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

const MEANS_TAG: u64 = 0x10;
const SAMPLES_TAG: u64 = 0x11;
const REPARTITION_RETRIES: u64 = 100;

/// Row-major features with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("dataset has no samples".into()));
        }
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Data(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(Error::Data(format!("label {l} at row {i} outside [0, {class_count})")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite feature at row {}", i / dim)));
        }
        Ok(Self {
            features,
            dim,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies the given rows, in order, into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Index { index: i, len: self.len() });
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(features, self.dim, labels, self.class_count)
    }
}

/// One client's slice of the training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientPartition {
    pub client_id: usize,
    indices: Vec<usize>,
}

impl ClientPartition {
    /// Sorts and de-duplicates `indices`.
    pub fn new(client_id: usize, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { client_id, indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    /// The partition covering every row of `dataset`.
    pub fn whole(client_id: usize, dataset: &Dataset) -> Self {
        Self {
            client_id,
            indices: (0..dataset.len()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub counts: Vec<u64>,
    pub normalized: Vec<f64>,
}

impl LabelHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Data("histogram has no mass".into()));
        }
        let normalized = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { counts, normalized })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    /// Shannon entropy of the normalized histogram, in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .normalized
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

pub fn label_histogram(dataset: &Dataset, partition: &ClientPartition) -> Result<LabelHistogram> {
    let mut counts = vec![0u64; dataset.class_count()];
    for &i in partition.indices() {
        let label = *dataset
            .labels()
            .get(i)
            .ok_or(Error::Index { index: i, len: dataset.len() })?;
        counts[label] += 1;
    }
    LabelHistogram::from_counts(counts)
}

/// Histogram over every row of `dataset`.
pub fn global_histogram(dataset: &Dataset) -> Result<LabelHistogram> {
    label_histogram(dataset, &ClientPartition::whole(0, dataset))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub alpha: f64,
    pub clients: usize,
    pub seed: u64,
    pub min_samples: usize,
}

impl DirichletSpec {
    pub fn new(alpha: f64, clients: usize, seed: u64) -> Self {
        Self {
            alpha,
            clients,
            seed,
            min_samples: 2,
        }
    }
}

/// Isotropic Gaussian class blobs. Class means are unit directions scaled by
/// `3 * spread`; samples add `spread`-scaled standard normal noise.
pub fn gen_blobs(classes: usize, dims: usize, n_per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    gen_blobs_split(classes, dims, n_per_class, spread, seed, seed)
}

/// Like [`gen_blobs`], but draws the samples from `sample_seed` while keeping
/// the class means fixed by `mean_seed`. Used for held-out test splits.
pub fn gen_blobs_split(
    classes: usize,
    dims: usize,
    n_per_class: usize,
    spread: f64,
    mean_seed: u64,
    sample_seed: u64,
) -> Result<Dataset> {
    if classes < 2 || dims == 0 || n_per_class == 0 {
        return Err(Error::Data(format!(
            "blobs need at least 2 classes, 1 dim and 1 sample per class (got {classes}, {dims}, {n_per_class})"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::Data(format!("spread must be finite and >= 0, got {spread}")));
    }
    let mut mean_rng = seed::rng(mean_seed, &[MEANS_TAG]);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| loop {
            let dir: Vec<f64> = (0..dims).map(|_| mean_rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break dir.iter().map(|v| 3.0 * spread * v / norm).collect();
            }
        })
        .collect();

    let mut rng = seed::rng(sample_seed, &[SAMPLES_TAG]);
    let mut features = Vec::with_capacity(classes * n_per_class * dims);
    let mut labels = Vec::with_capacity(classes * n_per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            for m in mean {
                let z: f64 = rng.sample(StandardNormal);
                features.push(m + spread * z);
            }
            labels.push(c);
        }
    }
    Dataset::new(features, dims, labels, classes)
}

fn class_buckets(labels: &[usize], class_count: usize) -> Result<Vec<Vec<usize>>> {
    let mut buckets = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        buckets
            .get_mut(l)
            .ok_or_else(|| Error::Data(format!("label {l} at row {i} outside [0, {class_count})")))?
            .push(i);
    }
    Ok(buckets)
}

fn dirichlet_draw<R: Rng>(rng: &mut R, alpha: f64, k: usize) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let mut p: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        // every gamma draw underflowed; the limit of Dir(alpha -> 0) is a vertex
        p.iter_mut().for_each(|v| *v = 0.0);
        p[rng.random_range(0..k)] = 1.0;
    }
    p
}

fn dirichlet_attempt(buckets: &[Vec<usize>], spec: &DirichletSpec, attempt: u64) -> Vec<Vec<usize>> {
    let mut rng = seed::rng(spec.seed, &[seed::tag::PARTITION, attempt]);
    let k = spec.clients;
    let mut clients = vec![Vec::new(); k];
    for bucket in buckets {
        let mut idx = bucket.clone();
        idx.shuffle(&mut rng);
        let p = dirichlet_draw(&mut rng, spec.alpha, k);
        let n = idx.len();
        let mut start = 0;
        let mut cum = 0.0;
        for (client, share) in clients.iter_mut().zip(&p) {
            cum += share;
            let end = ((cum * n as f64).floor() as usize).min(n);
            let end = end.max(start);
            client.extend_from_slice(&idx[start..end]);
            start = end;
        }
        // rounding leftovers go to the last client
        clients[k - 1].extend_from_slice(&idx[start..]);
    }
    clients
}

/// Per-class Dirichlet split of `labels` across `spec.clients` clients.
///
/// Each class's samples are shuffled and cut by cumulative proportions drawn
/// from `Dir(alpha * 1_K)`. Draws leaving any client under `min_samples` are
/// retried with derived seeds; if that keeps failing, samples are moved from
/// the largest client.
pub fn dirichlet_partition(labels: &[usize], class_count: usize, spec: &DirichletSpec) -> Result<Vec<ClientPartition>> {
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(Error::Domain(format!("dirichlet alpha must be > 0, got {}", spec.alpha)));
    }
    if spec.clients == 0 {
        return Err(Error::Domain("need at least one client".into()));
    }
    let floor = spec.min_samples.max(1);
    if labels.len() < spec.clients * floor {
        return Err(Error::Infeasible(format!(
            "{} samples cannot give {} clients at least {} each",
            labels.len(),
            spec.clients,
            floor
        )));
    }
    let buckets = class_buckets(labels, class_count)?;

    let mut assignment = Vec::new();
    for attempt in 0..REPARTITION_RETRIES {
        assignment = dirichlet_attempt(&buckets, spec, attempt);
        if assignment.iter().all(|c| c.len() >= floor) {
            break;
        }
    }
    while let Some(small) = assignment.iter().position(|c| c.len() < floor) {
        let largest = (0..assignment.len())
            .max_by(|&a, &b| assignment[a].len().cmp(&assignment[b].len()).then(b.cmp(&a)))
            .expect("at least one client");
        let moved = assignment[largest].pop().expect("largest client is non-empty");
        assignment[small].push(moved);
    }
    Ok(assignment
        .into_iter()
        .enumerate()
        .map(|(id, idx)| ClientPartition::new(id, idx))
        .collect())
}

/// Three equal-size client groups: the first third only sees the lower half
/// of the classes, the second third only the upper half, and the last third
/// sees every class. `clients` must be a positive multiple of 3.
pub fn extreme_groups(labels: &[usize], class_count: usize, clients: usize, seed_value: u64) -> Result<Vec<ClientPartition>> {
    if clients == 0 || !clients.is_multiple_of(3) {
        return Err(Error::Domain(format!("extreme_groups needs a multiple of 3 clients, got {clients}")));
    }
    if class_count < 2 {
        return Err(Error::Domain("extreme_groups needs at least 2 classes".into()));
    }
    let per_group = clients / 3;
    let half = class_count / 2;
    let buckets = class_buckets(labels, class_count)?;
    let mut rng = seed::rng(seed_value, &[seed::tag::PARTITION]);
    let mut assignment = vec![Vec::new(); clients];
    for (c, bucket) in buckets.iter().enumerate() {
        let mut idx = bucket.clone();
        idx.shuffle(&mut rng);
        // two thirds to the half-class group, one third to the mixed group,
        // which gives every client the same expected sample count
        let split = (idx.len() * 2).div_ceil(3);
        let home = if c < half { 0 } else { 1 };
        for (j, &i) in idx[..split].iter().enumerate() {
            assignment[home * per_group + j % per_group].push(i);
        }
        for (j, &i) in idx[split..].iter().enumerate() {
            assignment[2 * per_group + j % per_group].push(i);
        }
    }
    if let Some(empty) = assignment.iter().position(|a| a.is_empty()) {
        return Err(Error::Infeasible(format!("client {empty} received no samples")));
    }
    Ok(assignment
        .into_iter()
        .enumerate()
        .map(|(id, idx)| ClientPartition::new(id, idx))
        .collect())
}

/// Group index (0, 1, 2) of a client under [`extreme_groups`].
pub fn extreme_group_of(client_id: usize, clients: usize) -> usize {
    client_id / (clients / 3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub id: usize,
    pub n: usize,
    pub histogram: Vec<u64>,
}

/// JSON manifest describing a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub seed: u64,
    pub alpha: Option<f64>,
    pub clients: Vec<ClientSummary>,
}

impl PartitionManifest {
    pub fn build(dataset: &Dataset, parts: &[ClientPartition], seed_value: u64, alpha: Option<f64>) -> Result<Self> {
        let clients = parts
            .iter()
            .map(|p| {
                Ok(ClientSummary {
                    id: p.client_id,
                    n: p.n(),
                    histogram: label_histogram(dataset, p)?.counts,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            seed: seed_value,
            alpha,
            clients,
        })
    }
}

// IDX ----------------------------------------------------------------------

struct IdxArray {
    dims: Vec<usize>,
    values: Vec<f64>,
    is_ubyte: bool,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

fn take<'a>(bytes: &'a [u8], offset: usize, len: usize, what: &str) -> Result<&'a [u8]> {
    bytes
        .get(offset..offset + len)
        .ok_or_else(|| parse_err(offset, format!("truncated file while reading {what}")))
}

fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    let magic = take(bytes, 0, 4, "magic")?;
    if magic[0] != 0 || magic[1] != 0 {
        return Err(parse_err(0, "magic must start with two zero bytes"));
    }
    let width = match magic[2] {
        0x08 | 0x09 => 1,
        0x0B => 2,
        0x0C | 0x0D => 4,
        0x0E => 8,
        t => return Err(parse_err(2, format!("unknown IDX type code 0x{t:02x}"))),
    };
    let ndims = magic[3] as usize;
    if ndims == 0 {
        return Err(parse_err(3, "IDX file declares zero dimensions"));
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        let off = 4 + 4 * d;
        let b = take(bytes, off, 4, "dimension")?;
        dims.push(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize);
    }
    let count: usize = dims.iter().product();
    let start = 4 + 4 * ndims;
    let body = take(bytes, start, count * width, "data")?;
    if bytes.len() != start + count * width {
        return Err(parse_err(start + count * width, "trailing bytes after IDX data"));
    }
    let values = body
        .chunks_exact(width)
        .map(|c| match magic[2] {
            0x08 => c[0] as f64,
            0x09 => c[0] as i8 as f64,
            0x0B => i16::from_be_bytes([c[0], c[1]]) as f64,
            0x0C => i32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64,
            0x0D => f32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64,
            _ => f64::from_be_bytes(c.try_into().expect("8-byte chunk")),
        })
        .collect();
    Ok(IdxArray {
        dims,
        values,
        is_ubyte: magic[2] == 0x08,
    })
}

/// Loads an IDX image/label file pair (MNIST layout). Unsigned-byte pixels
/// are scaled to `[0, 1]`. With `class_count` unset it is inferred as
/// `max(label) + 1`.
pub fn load_idx(images_path: &Path, labels_path: &Path, class_count: Option<usize>) -> Result<Dataset> {
    let images = parse_idx(&std::fs::read(images_path)?)?;
    let labels = parse_idx(&std::fs::read(labels_path)?)?;
    if images.dims.len() < 2 {
        return Err(parse_err(3, "image file needs at least 2 dimensions"));
    }
    if labels.dims.len() != 1 {
        return Err(parse_err(3, "label file must be one-dimensional"));
    }
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::Data(format!("{n} images but {} labels", labels.dims[0])));
    }
    let dim: usize = images.dims[1..].iter().product();
    let features = if images.is_ubyte {
        images.values.iter().map(|v| v / 255.0).collect()
    } else {
        images.values
    };
    let labels = to_labels(&labels.values)?;
    let classes = resolve_classes(&labels, class_count);
    Dataset::new(features, dim, labels, classes)
}

fn to_labels(values: &[f64]) -> Result<Vec<usize>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Data(format!("label {v} at row {i} is not a class index")))
            }
        })
        .collect()
}

fn resolve_classes(labels: &[usize], class_count: Option<usize>) -> usize {
    class_count.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1))
}

/// Loads a CSV with header `label,f0,f1,...`.
pub fn load_csv(path: &Path, class_count: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(parse_err(0, "CSV header must be `label,f0,f1,...`"));
    }
    let dim = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte()) as usize;
        let label: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(offset, format!("bad label `{}`", &record[0])))?;
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(offset, format!("bad feature `{field}`")))?;
            features.push(v);
        }
    }
    let classes = resolve_classes(&labels, class_count);
    Dataset::new(features, dim, labels, classes)
}
