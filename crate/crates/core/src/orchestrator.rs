//! The communication-round loop: broadcast, local training, client vectors,
//! weight strategy, aggregation, evaluation.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    aggregate, aggregate_layerwise, awa_cos_weights, awa_layer_objective, awa_objective, client_vector,
    disco_weights, fedavg_weights, ldawa_weights, optimize_layer_weights, optimize_weights, AggWeights, AwaOptions,
    LayerWeights,
};
use crate::data::{
    dirichlet_partition, extreme_groups, gen_blobs_split, global_histogram, label_histogram, load_csv, load_idx,
    ClientPartition, Dataset, DirichletSpec, LabelHistogram,
};
use crate::error::{Error, Result};
use crate::model::{evaluate, init_params, local_train_traced, Activation, MlpConfig, TrainConfig};
use crate::seed::{self, tag};
use crate::tensor::{ClientVector, ParamVector};

/// Environment variable capping client-training concurrency (0 = serial).
pub const THREADS_ENV: &str = "FEDAWA_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(rename = "fedavg")]
    FedAvg,
    #[serde(rename = "fedprox")]
    FedProx,
    #[serde(rename = "feddisco")]
    FedDisco,
    Ldawa,
    #[default]
    #[serde(rename = "fedawa")]
    FedAwa,
    #[serde(rename = "fedawa_l")]
    FedAwaL,
    #[serde(rename = "fedawa_cos")]
    FedAwaCos,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::FedAvg,
        Strategy::FedProx,
        Strategy::FedDisco,
        Strategy::Ldawa,
        Strategy::FedAwa,
        Strategy::FedAwaL,
        Strategy::FedAwaCos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx => "fedprox",
            Strategy::FedDisco => "feddisco",
            Strategy::Ldawa => "ldawa",
            Strategy::FedAwa => "fedawa",
            Strategy::FedAwaL => "fedawa_l",
            Strategy::FedAwaCos => "fedawa_cos",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub rounds: usize,
    pub clients: usize,
    pub participation: f64,
    pub seed: u64,
    pub eval_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::FedAwa,
            rounds: 50,
            clients: 20,
            participation: 1.0,
            seed: 0,
            eval_every: 1,
        }
    }
}

/// Where training and test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    /// Gaussian class blobs; train and test share class means.
    Blobs {
        classes: usize,
        dims: usize,
        per_class: usize,
        test_per_class: usize,
        spread: f64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        classes: Option<usize>,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
        classes: Option<usize>,
    },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Blobs {
            classes: 10,
            dims: 32,
            per_class: 200,
            test_per_class: 100,
            spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    #[default]
    Dirichlet,
    /// Three label groups of equal size; needs a multiple of 3 clients.
    ExtremeGroups,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub scheme: PartitionScheme,
    pub alpha: f64,
    pub min_samples: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            scheme: PartitionScheme::Dirichlet,
            alpha: 0.1,
            min_samples: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden layer widths; input and output sizes come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoConfig {
    pub a: f64,
    pub b: f64,
}

impl Default for DiscoConfig {
    fn default() -> Self {
        Self { a: 0.5, b: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxConfig {
    pub mu: f64,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self { mu: 0.01 }
    }
}

/// Full experiment description; one section per TOML table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub data: DataConfig,
    pub partition: PartitionConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub awa: AwaOptions,
    pub disco: DiscoConfig,
    pub fedprox: ProxConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.rounds == 0 {
            return Err(Error::config("run.rounds", "must be >= 1"));
        }
        if r.clients == 0 {
            return Err(Error::config("run.clients", "must be >= 1"));
        }
        if !(r.participation > 0.0 && r.participation <= 1.0) {
            return Err(Error::config("run.participation", "must be in (0, 1]"));
        }
        if r.eval_every == 0 {
            return Err(Error::config("run.eval_every", "must be >= 1"));
        }
        match &self.data {
            DataConfig::Blobs {
                classes,
                dims,
                per_class,
                test_per_class,
                spread,
            } => {
                if *classes < 2 {
                    return Err(Error::config("data.classes", "must be >= 2"));
                }
                if *dims == 0 {
                    return Err(Error::config("data.dims", "must be >= 1"));
                }
                if *per_class == 0 {
                    return Err(Error::config("data.per_class", "must be >= 1"));
                }
                if *test_per_class == 0 {
                    return Err(Error::config("data.test_per_class", "must be >= 1"));
                }
                if !(spread.is_finite() && *spread > 0.0) {
                    return Err(Error::config("data.spread", "must be > 0"));
                }
            }
            DataConfig::Idx { classes, .. } | DataConfig::Csv { classes, .. } => {
                if matches!(classes, Some(c) if *c < 2) {
                    return Err(Error::config("data.classes", "must be >= 2"));
                }
            }
        }
        let p = &self.partition;
        match p.scheme {
            PartitionScheme::Dirichlet => {
                if !(p.alpha.is_finite() && p.alpha > 0.0) {
                    return Err(Error::config("partition.alpha", "must be > 0"));
                }
            }
            PartitionScheme::ExtremeGroups => {
                if !r.clients.is_multiple_of(3) {
                    return Err(Error::config("run.clients", "extreme_groups needs a multiple of 3 clients"));
                }
            }
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::config("model.hidden", "widths must be >= 1"));
        }
        self.train.validate()?;
        self.awa.validate()?;
        if !(self.disco.a.is_finite() && self.disco.b.is_finite()) {
            return Err(Error::config("disco", "a and b must be finite"));
        }
        if !(self.fedprox.mu.is_finite() && self.fedprox.mu >= 0.0) {
            return Err(Error::config("fedprox.mu", "must be >= 0"));
        }
        Ok(())
    }

    /// Training config with the proximal term set for the strategy.
    pub fn local_train_config(&self) -> TrainConfig {
        let mut tc = self.train.clone();
        tc.prox_mu = if self.run.strategy == Strategy::FedProx { self.fedprox.mu } else { 0.0 };
        tc
    }

    /// Loads (or generates) the train and test sets.
    pub fn load_data(&self) -> Result<(Dataset, Dataset)> {
        let s = self.run.seed;
        match &self.data {
            DataConfig::Blobs {
                classes,
                dims,
                per_class,
                test_per_class,
                spread,
            } => {
                let means = seed::derive(s, &[tag::TRAIN_DATA]);
                let train = gen_blobs_split(*classes, *dims, *per_class, *spread, means, means)?;
                let test = gen_blobs_split(*classes, *dims, *test_per_class, *spread, means, seed::derive(s, &[tag::TEST_DATA]))?;
                Ok((train, test))
            }
            DataConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                classes,
            } => {
                let train = load_idx(train_images, train_labels, *classes)?;
                let test = load_idx(test_images, test_labels, Some(train.class_count()))?;
                check_compatible(&train, &test)?;
                Ok((train, test))
            }
            DataConfig::Csv { train, test, classes } => {
                let train = load_csv(train, *classes)?;
                let test = load_csv(test, Some(train.class_count()))?;
                check_compatible(&train, &test)?;
                Ok((train, test))
            }
        }
    }

    pub fn partition(&self, train: &Dataset) -> Result<Vec<ClientPartition>> {
        let k = self.run.clients;
        match self.partition.scheme {
            PartitionScheme::Dirichlet => {
                let spec = DirichletSpec {
                    alpha: self.partition.alpha,
                    clients: k,
                    seed: self.run.seed,
                    min_samples: self.partition.min_samples,
                };
                dirichlet_partition(train.labels(), train.class_count(), &spec)
            }
            PartitionScheme::ExtremeGroups => extreme_groups(train.labels(), train.class_count(), k, self.run.seed),
        }
    }

    pub fn mlp(&self, train: &Dataset) -> Result<MlpConfig> {
        let mut sizes = vec![train.dim()];
        sizes.extend(&self.model.hidden);
        sizes.push(train.class_count());
        MlpConfig::new(sizes, self.model.activation, seed::derive(self.run.seed, &[tag::INIT]))
    }
}

fn check_compatible(train: &Dataset, test: &Dataset) -> Result<()> {
    if train.dim() != test.dim() {
        return Err(Error::Data(format!(
            "train rows have {} features, test rows {}",
            train.dim(),
            test.dim()
        )));
    }
    Ok(())
}

/// Uniform sample without replacement of `max(1, round(R*K))` client ids,
/// ascending. Deterministic in `(master_seed, round)`.
pub fn sample_clients(k: usize, ratio: f64, round: usize, master_seed: u64) -> Vec<usize> {
    let m = ((ratio * k as f64).round() as usize).clamp(1, k.max(1));
    if m >= k {
        return (0..k).collect();
    }
    let mut rng = seed::rng(master_seed, &[tag::SAMPLE_CLIENTS, round as u64]);
    let mut ids = index::sample(&mut rng, k, m).into_vec();
    ids.sort_unstable();
    ids
}

/// Seed for client `client`'s local training in `round`.
pub fn client_seed(master_seed: u64, round: usize, client: usize) -> u64 {
    seed::derive(master_seed, &[tag::LOCAL_TRAIN, round as u64, client as u64])
}

/// Thread count from [`THREADS_ENV`]; `None` when unset or unparsable.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoundWeights {
    Flat(AggWeights),
    Layer(LayerWeights),
}

impl RoundWeights {
    pub fn min_max(&self) -> (f64, f64) {
        let vals: Box<dyn Iterator<Item = f64> + '_> = match self {
            RoundWeights::Flat(w) => Box::new(w.lambda().iter().copied()),
            RoundWeights::Layer(w) => Box::new(w.columns().iter().flatten().copied()),
        };
        vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Per-client weights; layer weights are averaged over layers.
    pub fn per_client(&self) -> Vec<f64> {
        match self {
            RoundWeights::Flat(w) => w.lambda().to_vec(),
            RoundWeights::Layer(w) => w.mean_column(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub participants: Vec<usize>,
    /// Weights over `participants`, in the same order.
    pub weights: RoundWeights,
    /// Last-epoch mean training loss of each participant.
    pub local_losses: Vec<f64>,
    pub accuracy: Option<f64>,
    pub wall_time_ms: f64,
    /// Objective at the applied weights (summed over layers when layer-wise).
    pub objective: f64,
    /// Optimizer traces: one per layer for `fedawa_l`, one for `fedawa`,
    /// none otherwise.
    pub objective_traces: Vec<Vec<f64>>,
}

/// Everything a round produced, including the client vectors.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub record: RoundRecord,
    pub theta_prev: ParamVector,
    pub client_vectors: Vec<ClientVector>,
    pub client_models: Vec<ParamVector>,
}

/// Mutable simulation state; one [`Simulation::run_round`] per round.
pub struct Simulation {
    config: ExperimentConfig,
    mlp: MlpConfig,
    train: Dataset,
    test: Dataset,
    partitions: Vec<ClientPartition>,
    histograms: Vec<LabelHistogram>,
    global_hist: LabelHistogram,
    theta_g: ParamVector,
    /// Warm-start weights over all K clients.
    lambda: Vec<f64>,
    /// Per-layer warm-start weights over all K clients.
    layer_lambda: Vec<Vec<f64>>,
    round: usize,
    pool: Option<rayon::ThreadPool>,
    serial: bool,
}

impl Simulation {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (train, test) = config.load_data()?;
        let partitions = config.partition(&train)?;
        Self::from_parts(config, train, test, partitions)
    }

    /// Builds a simulation over caller-supplied data and partitions.
    pub fn from_parts(
        config: ExperimentConfig,
        train: Dataset,
        test: Dataset,
        partitions: Vec<ClientPartition>,
    ) -> Result<Self> {
        config.validate()?;
        if partitions.len() != config.run.clients {
            return Err(Error::CountMismatch {
                expected: config.run.clients,
                got: partitions.len(),
            });
        }
        check_compatible(&train, &test)?;
        let mlp = config.mlp(&train)?;
        let theta_g = init_params(&mlp)?;
        let histograms = partitions
            .iter()
            .map(|p| label_histogram(&train, p))
            .collect::<Result<Vec<_>>>()?;
        let global_hist = global_histogram(&train)?;
        let sizes: Vec<usize> = partitions.iter().map(ClientPartition::n).collect();
        let lambda = fedavg_weights(&sizes)?.lambda().to_vec();
        let layer_lambda = vec![lambda.clone(); theta_g.layout().num_layers()];
        let mut sim = Self {
            config,
            mlp,
            train,
            test,
            partitions,
            histograms,
            global_hist,
            theta_g,
            lambda,
            layer_lambda,
            round: 0,
            pool: None,
            serial: false,
        };
        sim.set_threads(threads_from_env())?;
        Ok(sim)
    }

    /// `None`: rayon's global pool; `Some(0)`: serial; `Some(n)`: n threads.
    pub fn set_threads(&mut self, threads: Option<usize>) -> Result<()> {
        self.serial = threads == Some(0);
        self.pool = match threads {
            Some(n) if n > 0 => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Domain(format!("thread pool: {e}")))?,
            ),
            _ => None,
        };
        Ok(())
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn mlp(&self) -> &MlpConfig {
        &self.mlp
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn partitions(&self) -> &[ClientPartition] {
        &self.partitions
    }

    pub fn histograms(&self) -> &[LabelHistogram] {
        &self.histograms
    }

    pub fn global_histogram(&self) -> &LabelHistogram {
        &self.global_hist
    }

    pub fn theta_g(&self) -> &ParamVector {
        &self.theta_g
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    fn train_clients(&self, ids: &[usize], t: usize) -> Result<Vec<(ParamVector, f64)>> {
        let tc = self.config.local_train_config();
        let lr = tc.round_lr(t);
        let master = self.config.run.seed;
        let job = |&k: &usize| {
            local_train_traced(
                &self.theta_g,
                &self.mlp,
                &self.train,
                &self.partitions[k],
                &tc,
                lr,
                client_seed(master, t, k),
            )
            .map(|o| (o.params, o.epoch_losses.last().copied().unwrap_or(f64::NAN)))
            .map_err(|e| Error::Round {
                round: t,
                message: format!("client {k}: {e}"),
            })
        };
        if self.serial {
            ids.iter().map(job).collect()
        } else if let Some(pool) = &self.pool {
            pool.install(|| ids.par_iter().map(job).collect())
        } else {
            ids.par_iter().map(job).collect()
        }
    }

    fn warm_init(full: &[f64], ids: &[usize], sizes: &[usize]) -> Result<(AggWeights, f64)> {
        if ids.len() == full.len() {
            return Ok((AggWeights::new(full.to_vec())?, 1.0));
        }
        let sub: Vec<f64> = ids.iter().map(|&k| full[k]).collect();
        let mass: f64 = sub.iter().sum();
        if mass > 0.0 {
            Ok((AggWeights::new(sub.iter().map(|v| v / mass).collect())?, mass))
        } else {
            // all the subset's mass collapsed; restart it from dataset sizes
            Ok((fedavg_weights(sizes)?, 0.0))
        }
    }

    fn write_back(full: &mut [f64], ids: &[usize], new: &[f64], mass: f64) {
        if ids.len() == full.len() {
            full.copy_from_slice(new);
            return;
        }
        let mass = if mass > 0.0 { mass } else { ids.iter().map(|&k| full[k]).sum() };
        for (&k, &v) in ids.iter().zip(new) {
            full[k] = v * mass;
        }
    }

    /// Runs the next round and keeps the client vectors.
    pub fn run_round_full(&mut self) -> Result<RoundOutcome> {
        let started = Instant::now();
        let t = self.round + 1;
        let cfg = &self.config;
        let ids = sample_clients(cfg.run.clients, cfg.run.participation, t, cfg.run.seed);
        let trained = self.train_clients(&ids, t)?;
        let (thetas, local_losses): (Vec<ParamVector>, Vec<f64>) = trained.into_iter().unzip();
        let taus = thetas
            .iter()
            .zip(&ids)
            .map(|(th, &k)| client_vector(th, &self.theta_g, k, t))
            .collect::<Result<Vec<_>>>()?;
        let sizes: Vec<usize> = ids.iter().map(|&k| self.partitions[k].n()).collect();
        let round_err = |e: Error| Error::Round {
            round: t,
            message: e.to_string(),
        };

        let awa = &cfg.awa;
        let mut traces = Vec::new();
        let weights = match cfg.run.strategy {
            Strategy::FedAvg | Strategy::FedProx => RoundWeights::Flat(fedavg_weights(&sizes)?),
            Strategy::FedDisco => {
                let hists: Vec<LabelHistogram> = ids.iter().map(|&k| self.histograms[k].clone()).collect();
                RoundWeights::Flat(disco_weights(&sizes, &hists, &self.global_hist, cfg.disco.a, cfg.disco.b)?)
            }
            Strategy::Ldawa => RoundWeights::Flat(ldawa_weights(&thetas, &self.theta_g)?),
            Strategy::FedAwaCos => RoundWeights::Flat(awa_cos_weights(&taus, &fedavg_weights(&sizes)?)?),
            Strategy::FedAwa => {
                let (init, mass) = if awa.warm_start {
                    Self::warm_init(&self.lambda, &ids, &sizes)?
                } else {
                    (fedavg_weights(&sizes)?, 0.0)
                };
                let sol = optimize_weights(&taus, &thetas, &self.theta_g, &init, awa).map_err(round_err)?;
                if awa.warm_start {
                    Self::write_back(&mut self.lambda, &ids, sol.weights.lambda(), mass);
                }
                traces.push(sol.objective_trace);
                RoundWeights::Flat(sol.weights)
            }
            Strategy::FedAwaL => {
                let mut cols = Vec::with_capacity(self.layer_lambda.len());
                let mut masses = Vec::with_capacity(self.layer_lambda.len());
                for col in &self.layer_lambda {
                    let (init, mass) = if awa.warm_start {
                        Self::warm_init(col, &ids, &sizes)?
                    } else {
                        (fedavg_weights(&sizes)?, 0.0)
                    };
                    cols.push(init.lambda().to_vec());
                    masses.push(mass);
                }
                let init = LayerWeights::new(cols)?;
                let sol = optimize_layer_weights(&taus, &thetas, &self.theta_g, &init, awa).map_err(round_err)?;
                if awa.warm_start {
                    for (l, col) in self.layer_lambda.iter_mut().enumerate() {
                        Self::write_back(col, &ids, sol.weights.column(l), masses[l]);
                    }
                }
                traces = sol.objective_traces;
                RoundWeights::Layer(sol.weights)
            }
        };

        let (new_theta, objective) = match &weights {
            RoundWeights::Flat(w) => (
                aggregate(&thetas, w),
                awa_objective(w.lambda(), &taus, &thetas, &self.theta_g, awa)?,
            ),
            RoundWeights::Layer(w) => (
                aggregate_layerwise(&thetas, w),
                awa_layer_objective(w, &taus, &thetas, &self.theta_g, awa)?,
            ),
        };
        let new_theta = new_theta.map_err(|e| Error::Round {
            round: t,
            message: format!("aggregated model is invalid: {e}"),
        })?;
        let accuracy = if t.is_multiple_of(cfg.run.eval_every) {
            Some(evaluate(&new_theta, &self.mlp, &self.test)?)
        } else {
            None
        };
        let weights = match weights {
            RoundWeights::Flat(w) => RoundWeights::Flat(w.with_round(t)),
            RoundWeights::Layer(w) => RoundWeights::Layer(w.with_round(t)),
        };
        let record = RoundRecord {
            round: t,
            participants: ids,
            weights,
            local_losses,
            accuracy,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            objective,
            objective_traces: traces,
        };
        let theta_prev = std::mem::replace(&mut self.theta_g, new_theta);
        self.round = t;
        Ok(RoundOutcome {
            record,
            theta_prev,
            client_vectors: taus,
            client_models: thetas,
        })
    }

    pub fn run_round(&mut self) -> Result<RoundRecord> {
        self.run_round_full().map(|o| o.record)
    }

    /// Runs all remaining rounds.
    pub fn run(&mut self) -> Result<Vec<RoundRecord>> {
        let mut out = Vec::with_capacity(self.config.run.rounds.saturating_sub(self.round));
        while self.round < self.config.run.rounds {
            out.push(self.run_round()?);
        }
        Ok(out)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    Simulation::new(config.clone())?.run()
}
