//! Config files, run artifacts and the commands behind the `fedawa` binary.
//!
//! A run directory holds:
//!
//! | file | content |
//! |------|---------|
//! | `config.toml` | canonical config snapshot |
//! | `manifest.json` | [`RunManifest`] |
//! | `partition.json` | per-client sizes and label counts |
//! | `rounds.jsonl` | one [`RoundRecord`] per line |
//! | `weights.jsonl` | `{round, strategy, participants, lambda, objective_trace}` per line |
//! | `summary.csv` | `round,strategy,accuracy,lambda_min,lambda_max,objective` for evaluated rounds |
//! | `model.bin` | final global parameters |
//!
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    dataset_vector, expand_weights, fmt_f64, ideal_vector_probe, ot_distance_matrix, vector_distance_matrix,
    weight_trajectory_similarity, CostMatrix,
};
use crate::data::{LabelHistogram, PartitionManifest};
use crate::error::{Error, Result};
use crate::orchestrator::{ExperimentConfig, RoundRecord, RoundWeights, Simulation, Strategy};
use crate::seed::{self, tag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARTITION_FILE: &str = "partition.json";
pub const ROUNDS_FILE: &str = "rounds.jsonl";
pub const WEIGHTS_FILE: &str = "weights.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MODEL_FILE: &str = "model.bin";

/// Exit code for an error: 2 for bad configs (including infeasible
/// partitions), 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Infeasible(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses TOML text; errors name the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<toml>", e.to_string().trim()))?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string().trim())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Serializes a config as TOML.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config types always serialize")
}

/// Canonical text: every field spelled out in a fixed order.
pub fn canonicalize(cfg: &ExperimentConfig) -> String {
    emit_config(cfg)
}

/// Git-style blob hash of the canonical config text.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = canonicalize(cfg);
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Default config with the accepted values of every enum field.
pub fn schema() -> String {
    let notes: &[(&str, &[&str])] = &[
        (
            "[run]",
            &[
                "strategy: fedavg | fedprox | feddisco | ldawa | fedawa | fedawa_l | fedawa_cos",
                "participation: fraction of clients sampled per round, in (0, 1]",
                "eval_every: evaluate on the test split when round % eval_every == 0",
            ],
        ),
        (
            "[data]",
            &[
                "kind = \"blobs\": classes, dims, per_class, test_per_class, spread",
                "kind = \"idx\": train_images, train_labels, test_images, test_labels, classes (optional)",
                "kind = \"csv\": train, test, classes (optional); header label,f0,f1,...",
            ],
        ),
        (
            "[partition]",
            &["scheme: dirichlet | extreme_groups (clients must be a multiple of 3)"],
        ),
        (
            "[model]",
            &["hidden: hidden layer widths; activation: relu | tanh"],
        ),
        (
            "[train]",
            &["local lr at round t is initial_lr * lr_decay^(t-1)"],
        ),
        (
            "[awa]",
            &[
                "reg: none | euclid | cosine",
                "step_rule: fixed | backtracking",
                "vertex_starts: also descend from every simplex vertex",
            ],
        ),
        ("[disco]", &["weights max(n_k/N - a*d_k + b, 0), normalized"]),
        ("[fedprox]", &["mu: proximal coefficient used by strategy fedprox"]),
    ];
    let mut out = String::from("# fedawa experiment config; every value below is the default\n\n");
    for line in emit_config(&ExperimentConfig::default()).lines() {
        if let Some((_, lines)) = notes.iter().find(|(h, _)| *h == line) {
            for l in lines.iter() {
                out.push_str("# ");
                out.push_str(l);
                out.push('\n');
            }
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strategy: Option<Strategy>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(s) = self.strategy {
            cfg.run.strategy = s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub version: String,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, &it)?;
        out.push(b'\n');
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct WeightLine {
    round: usize,
    strategy: Strategy,
    participants: Vec<usize>,
    lambda: serde_json::Value,
    objective_trace: serde_json::Value,
}

fn weight_line(r: &RoundRecord, strategy: Strategy) -> Result<WeightLine> {
    let (lambda, trace) = match &r.weights {
        RoundWeights::Flat(w) => (
            serde_json::to_value(w.lambda())?,
            serde_json::to_value(r.objective_traces.first().cloned().unwrap_or_default())?,
        ),
        RoundWeights::Layer(w) => (serde_json::to_value(w.columns())?, serde_json::to_value(&r.objective_traces)?),
    };
    Ok(WeightLine {
        round: r.round,
        strategy,
        participants: r.participants.clone(),
        lambda,
        objective_trace: trace,
    })
}

/// Summary CSV over evaluated rounds.
pub fn summary_csv(records: &[RoundRecord], strategy: Strategy) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["round", "strategy", "accuracy", "lambda_min", "lambda_max", "objective"])?;
    for r in records {
        let Some(acc) = r.accuracy else { continue };
        let (lo, hi) = r.weights.min_max();
        w.write_record([
            r.round.to_string(),
            strategy.to_string(),
            fmt_f64(acc),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_f64(r.objective),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs `cfg` and writes every artifact into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    let started = now_ms();
    fs::create_dir_all(out_dir)?;
    let mut sim = Simulation::new(cfg.clone())?;
    write_partition(&sim, out_dir)?;
    write_atomic(&out_dir.join(CONFIG_FILE), canonicalize(cfg).as_bytes())?;
    let records = sim.run()?;
    let strategy = cfg.run.strategy;

    write_atomic(&out_dir.join(ROUNDS_FILE), &jsonl(&records)?)?;
    let lines = records.iter().map(|r| weight_line(r, strategy)).collect::<Result<Vec<_>>>()?;
    write_atomic(&out_dir.join(WEIGHTS_FILE), &jsonl(&lines)?)?;
    write_atomic(&out_dir.join(SUMMARY_FILE), &summary_csv(&records, strategy)?)?;
    let mut model = Vec::new();
    sim.theta_g().write_to(&mut model)?;
    write_atomic(&out_dir.join(MODEL_FILE), &model)?;
    let manifest = RunManifest {
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        output_dir: out_dir.to_path_buf(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_atomic(&out_dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(records)
}

fn write_partition(sim: &Simulation, out_dir: &Path) -> Result<PartitionManifest> {
    let cfg = sim.config();
    let alpha = match cfg.partition.scheme {
        crate::orchestrator::PartitionScheme::Dirichlet => Some(cfg.partition.alpha),
        crate::orchestrator::PartitionScheme::ExtremeGroups => None,
    };
    let manifest = PartitionManifest::build(sim.train_set(), sim.partitions(), cfg.run.seed, alpha)?;
    write_atomic(&out_dir.join(PARTITION_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn cmd_run(config_path: &Path, out_dir: &Path, overrides: &Overrides) -> Result<Vec<RoundRecord>> {
    let mut cfg = load_config(config_path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    run_to_dir(&cfg, out_dir)
}

pub fn cmd_partition(config_path: &Path, out_dir: &Path, overrides: &Overrides) -> Result<PartitionManifest> {
    let mut cfg = load_config(config_path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let (train, _) = cfg.load_data()?;
    let parts = cfg.partition(&train)?;
    let alpha = match cfg.partition.scheme {
        crate::orchestrator::PartitionScheme::Dirichlet => Some(cfg.partition.alpha),
        crate::orchestrator::PartitionScheme::ExtremeGroups => None,
    };
    let manifest = PartitionManifest::build(&train, &parts, cfg.run.seed, alpha)?;
    write_atomic(&out_dir.join(PARTITION_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    DistanceMatrix,
    IdealVector,
    WeightTrajectory,
}

impl Probe {
    pub fn name(self) -> &'static str {
        match self {
            Probe::DistanceMatrix => "distance_matrix",
            Probe::IdealVector => "ideal_vector",
            Probe::WeightTrajectory => "weight_trajectory",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Probe::DistanceMatrix, Probe::IdealVector, Probe::WeightTrajectory]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

fn require(run_dir: &Path, name: &str) -> Result<PathBuf> {
    let p = run_dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::MissingArtifact(p.display().to_string()))
    }
}

fn snapshot(run_dir: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(require(run_dir, CONFIG_FILE)?)?;
    parse_config(&text)
}

/// Runs a probe on a finished run and returns the CSV paths written.
pub fn cmd_analyze(run_dir: &Path, probe: Probe) -> Result<Vec<PathBuf>> {
    require(run_dir, MANIFEST_FILE)?;
    match probe {
        Probe::DistanceMatrix => probe_distance_matrix(run_dir),
        Probe::IdealVector => probe_ideal_vector(run_dir),
        Probe::WeightTrajectory => probe_weight_trajectory(run_dir),
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Round-1 client vectors and parameters (all clients), plus label OT.
fn probe_distance_matrix(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut cfg = snapshot(run_dir)?;
    cfg.run.participation = 1.0;
    let mut sim = Simulation::new(cfg)?;
    let out = sim.run_round_full()?;
    let ids: Vec<usize> = out.record.participants.clone();
    let taus: Vec<_> = out.client_vectors.iter().map(|t| t.delta.clone()).collect();
    let mut written = Vec::new();
    for (name, m) in [
        ("distance_matrix.csv", vector_distance_matrix(&taus)?),
        ("distance_matrix_params.csv", vector_distance_matrix(&out.client_models)?),
        (
            "distance_matrix_ot.csv",
            ot_distance_matrix(sim.histograms(), &CostMatrix::zero_one(sim.train_set().class_count()))?,
        ),
    ] {
        let mut buf = Vec::new();
        m.write_csv(&ids, &mut buf)?;
        let path = run_dir.join(name);
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}

/// Reruns the experiment and compares every round's client vectors with
/// the update from training on the pooled data.
fn probe_ideal_vector(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg = snapshot(run_dir)?;
    let k = cfg.run.clients;
    let mut sim = Simulation::new(cfg.clone())?;
    let tc = cfg.local_train_config();
    let mut header = vec!["round".to_string(), "global".to_string()];
    header.extend((0..k).map(|i| format!("client_{i}")));
    let mut rows = Vec::new();
    for _ in 0..cfg.run.rounds {
        let out = sim.run_round_full()?;
        let t = out.record.round;
        let sizes: Vec<usize> = out.record.participants.iter().map(|&i| sim.partitions()[i].n()).collect();
        let probe = ideal_vector_probe(
            &out.theta_prev,
            sim.mlp(),
            sim.train_set(),
            &tc,
            tc.round_lr(t),
            seed::derive(cfg.run.seed, &[tag::IDEAL, t as u64]),
            &out.client_vectors,
            &sizes,
        )?;
        let mut row = vec![t.to_string(), fmt_f64(probe.dists[0])];
        let mut per_client = vec![String::new(); k];
        for (&id, d) in out.record.participants.iter().zip(&probe.dists[1..]) {
            per_client[id] = fmt_f64(*d);
        }
        row.extend(per_client);
        rows.push(row);
    }
    let path = run_dir.join("ideal_vector.csv");
    write_atomic(&path, &csv_bytes(&header, &rows)?)?;
    Ok(vec![path])
}

fn probe_weight_trajectory(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg = snapshot(run_dir)?;
    let part: PartitionManifest = serde_json::from_slice(&fs::read(require(run_dir, PARTITION_FILE)?)?)?;
    let k = part.clients.len();
    let hists = part
        .clients
        .iter()
        .map(|c| LabelHistogram::from_counts(c.histogram.clone()))
        .collect::<Result<Vec<_>>>()?;
    let classes = hists.first().map(|h| h.classes()).unwrap_or(0);
    let mut global = vec![0u64; classes];
    for c in &part.clients {
        for (g, v) in global.iter_mut().zip(&c.histogram) {
            *g += v;
        }
    }
    let dv = dataset_vector(&hists, &LabelHistogram::from_counts(global)?, &CostMatrix::zero_one(classes))?;

    let text = fs::read_to_string(require(run_dir, WEIGHTS_FILE)?)?;
    let mut rounds = Vec::new();
    let mut weights = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let wl: WeightLine = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("{WEIGHTS_FILE} line {}: {e}", n + 1)))?;
        if !wl.round.is_multiple_of(cfg.run.eval_every) {
            continue;
        }
        let lambda: Vec<f64> = match serde_json::from_value::<Vec<f64>>(wl.lambda.clone()) {
            Ok(v) => v,
            Err(_) => {
                let cols: Vec<Vec<f64>> = serde_json::from_value(wl.lambda)?;
                crate::aggregation::LayerWeights::new(cols)?.mean_column()
            }
        };
        weights.push(expand_weights(&wl.participants, &lambda, k)?);
        rounds.push(wl.round);
    }
    let sims = weight_trajectory_similarity(&weights, &dv)?;
    let rows: Vec<Vec<String>> = rounds.iter().zip(&sims).map(|(r, s)| vec![r.to_string(), fmt_f64(*s)]).collect();
    let path = run_dir.join("weight_trajectory.csv");
    write_atomic(&path, &csv_bytes(&["round".into(), "similarity".into()], &rows)?)?;
    Ok(vec![path])
}
