//! Client vectors, aggregation-weight rules and model merging.
//!
//! The adaptive rule minimizes, over the probability simplex,
//!
//! ```text
//! f(lambda) = sum_k lambda_k * ||tau_k - tau_g(lambda)||  +  c * d(sum_k lambda_k theta_k, theta_g)
//! tau_g(lambda) = sum_k lambda_k tau_k
//! ```
//!
//! where `d` is `1 - cos` (default), the Euclidean distance, or absent.
//! Weights are parameterized as `softmax(z)` so every iterate is feasible.

use serde::{Deserialize, Serialize};

use crate::data::LabelHistogram;
use crate::error::{Error, Result};
use crate::tensor::{
    cosine_similarity, cosine_slices, dot_slices, layer_slice, weighted_sum, ClientVector, ParamVector, NORM_EPS,
};

/// Tolerance on `|sum(lambda) - 1|`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Offset added before taking logs of the initial weights.
const LOGIT_FLOOR: f64 = 1e-8;

fn check_simplex(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::Domain("weights are empty".into()));
    }
    if let Some(i) = lambda.iter().position(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::Domain(format!("weight {i} is {}", lambda[i])));
    }
    let sum: f64 = lambda.iter().sum();
    if (sum - 1.0).abs() >= SIMPLEX_TOL {
        return Err(Error::Domain(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// Per-client aggregation weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggWeights {
    lambda: Vec<f64>,
    pub round: usize,
}

impl AggWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        check_simplex(&lambda)?;
        Ok(Self { lambda, round: 0 })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("no clients".into()));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn with_round(mut self, round: usize) -> Self {
        self.round = round;
        self
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Clips negatives to zero and rescales; uniform if nothing is left.
    fn from_scores(scores: Vec<f64>) -> Result<Self> {
        let clipped: Vec<f64> = scores.into_iter().map(|s| s.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total > 0.0 && total.is_finite() {
            Self::new(clipped.iter().map(|s| s / total).collect())
        } else {
            Self::uniform(clipped.len())
        }
    }
}

/// One simplex column of client weights per layer (`K x L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    columns: Vec<Vec<f64>>,
    pub round: usize,
}

impl LayerWeights {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let k = columns.first().map(Vec::len).ok_or_else(|| Error::Domain("no layers".into()))?;
        for (l, col) in columns.iter().enumerate() {
            if col.len() != k {
                return Err(Error::CountMismatch { expected: k, got: col.len() });
            }
            check_simplex(col).map_err(|e| Error::Domain(format!("layer {l}: {e}")))?;
        }
        Ok(Self { columns, round: 0 })
    }

    /// Every layer uses the same weights.
    pub fn broadcast(w: &AggWeights, layers: usize) -> Result<Self> {
        Self::new(vec![w.lambda.clone(); layers])
    }

    pub fn with_round(mut self, round: usize) -> Self {
        self.round = round;
        self
    }

    pub fn column(&self, l: usize) -> &[f64] {
        &self.columns[l]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn clients(&self) -> usize {
        self.columns[0].len()
    }

    pub fn layers(&self) -> usize {
        self.columns.len()
    }

    /// Column average; still a simplex vector.
    pub fn mean_column(&self) -> Vec<f64> {
        let l = self.layers() as f64;
        (0..self.clients())
            .map(|k| self.columns.iter().map(|c| c[k]).sum::<f64>() / l)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    None,
    Euclid,
    #[default]
    Cosine,
}

/// How the weight optimizer picks its step length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Plain gradient descent with `step_size`; stops after `steps`.
    #[default]
    Fixed,
    /// Armijo backtracking starting at `step_size`, doubling after every
    /// accepted step. Runs until `steps` accepted steps or no descent.
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AwaOptions {
    pub steps: usize,
    pub step_size: f64,
    #[serde(rename = "reg")]
    pub reg_kind: RegKind,
    pub reg_coeff: f64,
    pub warm_start: bool,
    pub step_rule: StepRule,
    /// Also descend from every simplex vertex and keep the best result.
    pub vertex_starts: bool,
}

impl Default for AwaOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            step_size: 0.05,
            reg_kind: RegKind::Cosine,
            reg_coeff: 1.0,
            warm_start: false,
            step_rule: StepRule::Fixed,
            vertex_starts: false,
        }
    }
}

impl AwaOptions {
    /// Settings that drive the optimizer to the minimum of the objective
    /// instead of stopping after a fixed budget of small steps.
    pub fn converged() -> Self {
        Self {
            step_rule: StepRule::Backtracking,
            vertex_starts: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("awa.step_size", "must be > 0"));
        }
        if !(self.reg_coeff >= 0.0 && self.reg_coeff.is_finite()) {
            return Err(Error::config("awa.reg_coeff", "must be >= 0"));
        }
        Ok(())
    }
}

// Client vectors and merging --------------------------------------------------

/// `theta_k - theta_g`.
pub fn client_vector(theta_k: &ParamVector, theta_g: &ParamVector, client_id: usize, round: usize) -> Result<ClientVector> {
    Ok(ClientVector {
        delta: theta_k.sub(theta_g)?,
        client_id,
        round,
    })
}

/// `sum_k lambda_k tau_k`.
pub fn merge_vectors(taus: &[ClientVector], w: &AggWeights) -> Result<ParamVector> {
    let vs: Vec<&ParamVector> = taus.iter().map(|t| &t.delta).collect();
    weighted_sum(&vs, w.lambda())
}

/// Convex combination of client models.
pub fn aggregate(thetas: &[ParamVector], w: &AggWeights) -> Result<ParamVector> {
    let vs: Vec<&ParamVector> = thetas.iter().collect();
    weighted_sum(&vs, w.lambda())
}

/// Convex combination with separate weights per layout entry.
pub fn aggregate_layerwise(thetas: &[ParamVector], w: &LayerWeights) -> Result<ParamVector> {
    let first = thetas.first().ok_or_else(|| Error::Domain("no models to aggregate".into()))?;
    if w.clients() != thetas.len() {
        return Err(Error::CountMismatch {
            expected: thetas.len(),
            got: w.clients(),
        });
    }
    if w.layers() != first.layout().num_layers() {
        return Err(Error::CountMismatch {
            expected: first.layout().num_layers(),
            got: w.layers(),
        });
    }
    let mut out = vec![0.0; first.len()];
    for t in thetas {
        first.check_layout(t)?;
    }
    for (l, entry) in first.layout().entries().iter().enumerate() {
        let dst = &mut out[entry.offset..entry.offset + entry.len];
        for (t, &lam) in thetas.iter().zip(w.column(l)) {
            for (d, x) in dst.iter_mut().zip(layer_slice(t, l)?) {
                *d += lam * x;
            }
        }
    }
    first.with_values(out)
}

// Fixed and heuristic weight rules -------------------------------------------

/// Dataset-size proportional weights.
pub fn fedavg_weights(n: &[usize]) -> Result<AggWeights> {
    let total: usize = n.iter().sum();
    if total == 0 {
        return Err(Error::Domain("total sample count is zero".into()));
    }
    AggWeights::new(n.iter().map(|&v| v as f64 / total as f64).collect())
}

/// Size-and-discrepancy weights: `max(n_k/N - a*d_k + b, 0)` normalized,
/// with `d_k` the L2 distance between local and global label distributions.
pub fn disco_weights(
    n: &[usize],
    local_hists: &[LabelHistogram],
    global_hist: &LabelHistogram,
    a: f64,
    b: f64,
) -> Result<AggWeights> {
    if n.len() != local_hists.len() {
        return Err(Error::CountMismatch {
            expected: n.len(),
            got: local_hists.len(),
        });
    }
    let base = fedavg_weights(n)?;
    let mut raw = Vec::with_capacity(n.len());
    for (h, &p) in local_hists.iter().zip(base.lambda()) {
        if h.classes() != global_hist.classes() {
            return Err(Error::CountMismatch {
                expected: global_hist.classes(),
                got: h.classes(),
            });
        }
        let d = h
            .normalized
            .iter()
            .zip(&global_hist.normalized)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        raw.push((p - a * d + b).max(0.0));
    }
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        AggWeights::new(raw.iter().map(|r| r / total).collect())
    } else {
        Ok(base)
    }
}

/// Weights proportional to the (clipped) cosine between each local model and
/// the global model.
pub fn ldawa_weights(thetas: &[ParamVector], theta_g: &ParamVector) -> Result<AggWeights> {
    if thetas.is_empty() {
        return Err(Error::Domain("no clients".into()));
    }
    let scores = thetas
        .iter()
        .map(|t| cosine_similarity(t, theta_g))
        .collect::<Result<Vec<_>>>()?;
    AggWeights::from_scores(scores)
}

/// Weights proportional to the (clipped) cosine between each client vector
/// and the global vector merged with `w_init`.
pub fn awa_cos_weights(taus: &[ClientVector], w_init: &AggWeights) -> Result<AggWeights> {
    if taus.len() != w_init.len() {
        return Err(Error::CountMismatch {
            expected: taus.len(),
            got: w_init.len(),
        });
    }
    let tau_g = merge_vectors(taus, w_init)?;
    let scores = taus
        .iter()
        .map(|t| cosine_similarity(&t.delta, &tau_g))
        .collect::<Result<Vec<_>>>()?;
    AggWeights::from_scores(scores)
}

// Objective -------------------------------------------------------------------

fn check_counts(taus: usize, thetas: usize, lambda: usize) -> Result<()> {
    if taus != thetas {
        return Err(Error::CountMismatch { expected: taus, got: thetas });
    }
    if taus != lambda {
        return Err(Error::CountMismatch { expected: taus, got: lambda });
    }
    if taus == 0 {
        return Err(Error::Domain("no clients".into()));
    }
    Ok(())
}

/// Direct evaluation of the objective on raw slices.
fn objective_slices(lambda: &[f64], taus: &[&[f64]], thetas: &[&[f64]], theta_g: &[f64], opts: &AwaOptions) -> f64 {
    let dim = theta_g.len();
    let mut tau_g = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for ((t, th), &l) in taus.iter().zip(thetas).zip(lambda) {
        for j in 0..dim {
            tau_g[j] += l * t[j];
            x[j] += l * th[j];
        }
    }
    let mut term1 = 0.0;
    for (t, &l) in taus.iter().zip(lambda) {
        let mut r2 = 0.0;
        for j in 0..dim {
            let d = t[j] - tau_g[j];
            r2 += d * d;
        }
        term1 += l * r2.sqrt();
    }
    let term2 = match opts.reg_kind {
        RegKind::None => 0.0,
        RegKind::Cosine => 1.0 - cosine_slices(&x, theta_g),
        RegKind::Euclid => x
            .iter()
            .zip(theta_g)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    };
    term1 + opts.reg_coeff * term2
}

/// Evaluates the objective at `lambda` by forming the merged vectors
/// explicitly. Fails if `lambda` is not on the simplex.
pub fn awa_objective(
    lambda: &[f64],
    taus: &[ClientVector],
    thetas: &[ParamVector],
    theta_g: &ParamVector,
    opts: &AwaOptions,
) -> Result<f64> {
    check_counts(taus.len(), thetas.len(), lambda.len())?;
    check_simplex(lambda)?;
    for t in taus {
        theta_g.check_layout(&t.delta)?;
    }
    for t in thetas {
        theta_g.check_layout(t)?;
    }
    let tau_s: Vec<&[f64]> = taus.iter().map(|t| t.delta.values()).collect();
    let th_s: Vec<&[f64]> = thetas.iter().map(|t| t.values()).collect();
    Ok(objective_slices(lambda, &tau_s, &th_s, theta_g.values(), opts))
}

/// The objective reduced to Gram matrices, so that evaluating it (and its
/// gradient) costs `O(K^2)` regardless of model size.
#[derive(Debug, Clone)]
pub struct AwaProblem {
    k: usize,
    /// `tau_i . tau_j`
    tau_gram: Vec<f64>,
    /// `D_i . D_j` with `D_i = theta_i - theta_g`
    delta_gram: Vec<f64>,
    /// `D_i . theta_g`
    delta_g: Vec<f64>,
    /// `theta_g . theta_g`
    gg: f64,
    reg_kind: RegKind,
    reg_coeff: f64,
}

fn gram(vs: &[Vec<f64>]) -> Vec<f64> {
    let k = vs.len();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v = dot_slices(&vs[i], &vs[j]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    g
}

impl AwaProblem {
    pub fn new(taus: &[&[f64]], thetas: &[&[f64]], theta_g: &[f64], opts: &AwaOptions) -> Result<Self> {
        check_counts(taus.len(), thetas.len(), taus.len())?;
        let dim = theta_g.len();
        if taus.iter().chain(thetas).any(|v| v.len() != dim) {
            return Err(Error::Layout("client slices differ in length from the global slice".into()));
        }
        let tau_owned: Vec<Vec<f64>> = taus.iter().map(|t| t.to_vec()).collect();
        let deltas: Vec<Vec<f64>> = thetas
            .iter()
            .map(|t| t.iter().zip(theta_g).map(|(a, b)| a - b).collect())
            .collect();
        Ok(Self {
            k: taus.len(),
            tau_gram: gram(&tau_owned),
            delta_g: deltas.iter().map(|d| dot_slices(d, theta_g)).collect(),
            delta_gram: gram(&deltas),
            gg: dot_slices(theta_g, theta_g),
            reg_kind: opts.reg_kind,
            reg_coeff: opts.reg_coeff,
        })
    }

    pub fn from_vectors(taus: &[ClientVector], thetas: &[ParamVector], theta_g: &ParamVector, opts: &AwaOptions) -> Result<Self> {
        for t in taus {
            theta_g.check_layout(&t.delta)?;
        }
        for t in thetas {
            theta_g.check_layout(t)?;
        }
        let tau_s: Vec<&[f64]> = taus.iter().map(|t| t.delta.values()).collect();
        let th_s: Vec<&[f64]> = thetas.iter().map(|t| t.values()).collect();
        Self::new(&tau_s, &th_s, theta_g.values(), opts)
    }

    pub fn clients(&self) -> usize {
        self.k
    }

    fn mat_vec(&self, m: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.k).map(|i| dot_slices(&m[i * self.k..(i + 1) * self.k], v)).collect()
    }

    /// Objective value and its gradient with respect to `lambda`.
    pub fn value_and_grad(&self, lambda: &[f64]) -> (f64, Vec<f64>) {
        let k = self.k;
        let g = &self.tau_gram;
        let g_lam = self.mat_vec(g, lambda);
        let quad = dot_slices(lambda, &g_lam);
        let r: Vec<f64> = (0..k)
            .map(|i| (g[i * k + i] - 2.0 * g_lam[i] + quad).max(0.0).sqrt())
            .collect();
        let mut value = dot_slices(lambda, &r);

        // d/d lambda_j of sum_k lambda_k r_k, using
        // d r_k / d lambda_j = -(tau_k - tau_g) . tau_j / r_k
        let w: Vec<f64> = (0..k)
            .map(|i| if r[i] > 0.0 { lambda[i] / r[i] } else { 0.0 })
            .collect();
        let w_sum: f64 = w.iter().sum();
        let g_w = self.mat_vec(g, &w);
        let mut grad: Vec<f64> = (0..k).map(|j| r[j] - g_w[j] + g_lam[j] * w_sum).collect();

        if self.reg_kind != RegKind::None && self.reg_coeff != 0.0 {
            let s: f64 = lambda.iter().sum();
            let m_lam = self.mat_vec(&self.delta_gram, lambda);
            let ld = dot_slices(lambda, &self.delta_g);
            let quad_d = dot_slices(lambda, &m_lam);
            let c = self.reg_coeff;
            match self.reg_kind {
                RegKind::Cosine => {
                    // x = s*theta_g + sum_k lambda_k D_k
                    let xg = s * self.gg + ld;
                    let xx = (s * s * self.gg + 2.0 * s * ld + quad_d).max(0.0);
                    let (nx, ng) = (xx.sqrt(), self.gg.sqrt());
                    if nx < NORM_EPS || ng < NORM_EPS {
                        value += c;
                    } else {
                        let cos = (xg / (nx * ng)).clamp(-1.0, 1.0);
                        value += c * (1.0 - cos);
                        for j in 0..k {
                            let dxg = self.gg + self.delta_g[j];
                            let dxx = 2.0 * (s * self.gg + ld + s * self.delta_g[j] + m_lam[j]);
                            let dcos = dxg / (nx * ng) - xg * dxx / (2.0 * nx * nx * nx * ng);
                            grad[j] -= c * dcos;
                        }
                    }
                }
                RegKind::Euclid => {
                    // x - theta_g = (s - 1) theta_g + sum_k lambda_k D_k
                    let t = s - 1.0;
                    let e2 = (t * t * self.gg + 2.0 * t * ld + quad_d).max(0.0);
                    let e = e2.sqrt();
                    value += c * e;
                    if e > 0.0 {
                        for j in 0..k {
                            let de2 = 2.0 * (t * self.gg + ld + t * self.delta_g[j] + m_lam[j]);
                            grad[j] += c * de2 / (2.0 * e);
                        }
                    }
                }
                RegKind::None => unreachable!(),
            }
        }
        (value, grad)
    }

    /// Objective and gradient with respect to softmax logits `z`.
    pub fn value_and_grad_logits(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let lambda = softmax(z);
        let (f, g) = self.value_and_grad(&lambda);
        let mean = dot_slices(&lambda, &g);
        let gz = lambda.iter().zip(&g).map(|(l, gi)| l * (gi - mean)).collect();
        (f, gz, lambda)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

/// Result of a weight optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub weights: AggWeights,
    /// Objective at the starting weights, then after every step. With
    /// vertex starts enabled, each restart's values are appended.
    pub objective_trace: Vec<f64>,
    pub best_objective: f64,
}

struct Best {
    value: f64,
    lambda: Vec<f64>,
}

fn non_finite(step: usize, value: f64) -> Error {
    Error::Optimizer {
        step,
        message: format!("objective is {value}"),
    }
}

fn descend(problem: &AwaProblem, z0: Vec<f64>, opts: &AwaOptions, trace: &mut Vec<f64>, best: &mut Best) -> Result<()> {
    let (mut f, mut g, _) = problem.value_and_grad_logits(&z0);
    if !f.is_finite() {
        return Err(non_finite(0, f));
    }
    let mut z = z0;
    let mut eta = opts.step_size;
    for step in 1..=opts.steps {
        let accepted = match opts.step_rule {
            StepRule::Fixed => {
                let z_new: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - eta * gi).collect();
                let out = problem.value_and_grad_logits(&z_new);
                Some((z_new, out))
            }
            StepRule::Backtracking => {
                let gn2 = dot_slices(&g, &g);
                let mut found = None;
                if gn2 > 0.0 {
                    for _ in 0..64 {
                        let z_new: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - eta * gi).collect();
                        let out = problem.value_and_grad_logits(&z_new);
                        if out.0 <= f - 1e-4 * eta * gn2 {
                            eta *= 2.0;
                            found = Some((z_new, out));
                            break;
                        }
                        eta *= 0.5;
                    }
                }
                found
            }
        };
        let Some((z_new, (f_new, g_new, lambda))) = accepted else {
            break;
        };
        if !f_new.is_finite() || g_new.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(step, f_new));
        }
        trace.push(f_new);
        if f_new < best.value {
            best.value = f_new;
            best.lambda = lambda;
        }
        z = z_new;
        f = f_new;
        g = g_new;
    }
    Ok(())
}

fn logits_of(w: &[f64]) -> Vec<f64> {
    w.iter().map(|v| (v + LOGIT_FLOOR).ln()).collect()
}

/// Minimizes the objective over the simplex by gradient descent on softmax
/// logits started at `w_init`, returning the best iterate seen. `w_init`
/// itself is a candidate, so zero steps return it unchanged.
pub fn optimize_problem(problem: &AwaProblem, w_init: &AggWeights, opts: &AwaOptions) -> Result<WeightSolution> {
    opts.validate()?;
    if w_init.len() != problem.clients() {
        return Err(Error::CountMismatch {
            expected: problem.clients(),
            got: w_init.len(),
        });
    }
    let (f0, _) = problem.value_and_grad(w_init.lambda());
    if !f0.is_finite() {
        return Err(non_finite(0, f0));
    }
    let mut trace = vec![f0];
    let mut best = Best {
        value: f0,
        lambda: w_init.lambda().to_vec(),
    };
    if opts.steps > 0 && problem.clients() > 1 {
        descend(problem, logits_of(w_init.lambda()), opts, &mut trace, &mut best)?;
        if opts.vertex_starts {
            for v in 0..problem.clients() {
                let mut e = vec![0.0; problem.clients()];
                e[v] = 1.0;
                let (fv, _) = problem.value_and_grad(&e);
                trace.push(fv);
                if fv < best.value {
                    best = Best { value: fv, lambda: e.clone() };
                }
                descend(problem, logits_of(&e), opts, &mut trace, &mut best)?;
            }
        }
    }
    Ok(WeightSolution {
        weights: AggWeights::new(best.lambda)?.with_round(w_init.round),
        objective_trace: trace,
        best_objective: best.value,
    })
}

pub fn optimize_weights(
    taus: &[ClientVector],
    thetas: &[ParamVector],
    theta_g: &ParamVector,
    w_init: &AggWeights,
    opts: &AwaOptions,
) -> Result<WeightSolution> {
    check_counts(taus.len(), thetas.len(), w_init.len())?;
    let problem = AwaProblem::from_vectors(taus, thetas, theta_g, opts)?;
    optimize_problem(&problem, w_init, opts)
}

/// Result of the layer-wise optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSolution {
    pub weights: LayerWeights,
    /// One trace per layer.
    pub objective_traces: Vec<Vec<f64>>,
    pub best_objectives: Vec<f64>,
}

/// Solves an independent weight problem on every layer slice. `w_init`
/// supplies one starting column per layer.
pub fn optimize_layer_weights(
    taus: &[ClientVector],
    thetas: &[ParamVector],
    theta_g: &ParamVector,
    w_init: &LayerWeights,
    opts: &AwaOptions,
) -> Result<LayerSolution> {
    check_counts(taus.len(), thetas.len(), w_init.clients())?;
    let layers = theta_g.layout().num_layers();
    if w_init.layers() != layers {
        return Err(Error::CountMismatch {
            expected: layers,
            got: w_init.layers(),
        });
    }
    for t in taus {
        theta_g.check_layout(&t.delta)?;
    }
    for t in thetas {
        theta_g.check_layout(t)?;
    }
    let mut columns = Vec::with_capacity(layers);
    let mut traces = Vec::with_capacity(layers);
    let mut bests = Vec::with_capacity(layers);
    for l in 0..layers {
        let tau_s = taus.iter().map(|t| layer_slice(&t.delta, l)).collect::<Result<Vec<_>>>()?;
        let th_s = thetas.iter().map(|t| layer_slice(t, l)).collect::<Result<Vec<_>>>()?;
        let problem = AwaProblem::new(&tau_s, &th_s, layer_slice(theta_g, l)?, opts)?;
        let init = AggWeights::new(w_init.column(l).to_vec())?;
        let sol = optimize_problem(&problem, &init, opts).map_err(|e| match e {
            Error::Optimizer { step, message } => Error::Optimizer {
                step,
                message: format!("layer {l}: {message}"),
            },
            other => other,
        })?;
        columns.push(sol.weights.lambda().to_vec());
        traces.push(sol.objective_trace);
        bests.push(sol.best_objective);
    }
    Ok(LayerSolution {
        weights: LayerWeights::new(columns)?.with_round(w_init.round),
        objective_traces: traces,
        best_objectives: bests,
    })
}

/// Sum over layers of the per-layer objective at the given columns.
pub fn awa_layer_objective(
    w: &LayerWeights,
    taus: &[ClientVector],
    thetas: &[ParamVector],
    theta_g: &ParamVector,
    opts: &AwaOptions,
) -> Result<f64> {
    check_counts(taus.len(), thetas.len(), w.clients())?;
    let mut total = 0.0;
    for l in 0..theta_g.layout().num_layers() {
        let tau_s = taus.iter().map(|t| layer_slice(&t.delta, l)).collect::<Result<Vec<_>>>()?;
        let th_s = thetas.iter().map(|t| layer_slice(t, l)).collect::<Result<Vec<_>>>()?;
        total += objective_slices(w.column(l), &tau_s, &th_s, layer_slice(theta_g, l)?, opts);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::LayerLayout;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_vec(v.to_vec()).unwrap()
    }

    fn cv(v: &[f64], id: usize) -> ClientVector {
        ClientVector {
            delta: pv(v),
            client_id: id,
            round: 1,
        }
    }

    fn w(v: &[f64]) -> AggWeights {
        AggWeights::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn client_vector_examples() {
        let g = pv(&[1.0, 1.0]);
        assert_eq!(client_vector(&g, &g, 0, 1).unwrap().delta, pv(&[0.0, 0.0]));
        let k = pv(&[2.0, 3.0]);
        let tau = client_vector(&k, &g, 0, 1).unwrap();
        assert_eq!(tau.delta, pv(&[1.0, 2.0]));
        assert_eq!(crate::tensor::axpy(1.0, &tau.delta, &g).unwrap(), k);
    }

    #[test]
    fn merge_examples() {
        let same = [cv(&[1.0, 2.0], 0), cv(&[1.0, 2.0], 1)];
        assert!(close(merge_vectors(&same, &w(&[0.3, 0.7])).unwrap().values(), &[1.0, 2.0], 1e-15));
        let taus = [cv(&[2.0, 0.0], 0), cv(&[0.0, 2.0], 1)];
        assert_eq!(merge_vectors(&taus, &w(&[0.5, 0.5])).unwrap(), pv(&[1.0, 1.0]));
        assert_eq!(merge_vectors(&taus, &w(&[0.0, 1.0])).unwrap(), pv(&[0.0, 2.0]));
        assert!(matches!(merge_vectors(&taus, &w(&[1.0])), Err(Error::CountMismatch { .. })));
    }

    #[test]
    fn fedavg_examples() {
        assert_eq!(fedavg_weights(&[100, 300]).unwrap().lambda(), &[0.25, 0.75]);
        assert_eq!(fedavg_weights(&[5, 5, 5, 5]).unwrap().lambda(), &[0.25; 4]);
        assert_eq!(fedavg_weights(&[7]).unwrap().lambda(), &[1.0]);
        assert!(fedavg_weights(&[0, 0]).is_err());
    }

    fn hist(norm: &[f64]) -> LabelHistogram {
        LabelHistogram {
            counts: vec![0; norm.len()],
            normalized: norm.to_vec(),
        }
    }

    #[test]
    fn disco_examples() {
        let global = hist(&[0.5, 0.5]);
        let locals = [hist(&[0.5, 0.5]), hist(&[0.5, 0.5])];
        assert!(close(disco_weights(&[10, 10], &locals, &global, 0.5, 0.1).unwrap().lambda(), &[0.5, 0.5], 1e-15));
        let locals = [hist(&[1.0, 0.0]), hist(&[0.5, 0.5])];
        assert_eq!(
            disco_weights(&[10, 30], &locals, &global, 0.0, 0.0).unwrap(),
            fedavg_weights(&[10, 30]).unwrap()
        );
        // d = [0, 0.5]: second client sits 0.5 away in L2
        let global = hist(&[0.5, 0.5, 0.0]);
        let far = (0.5f64 / 2.0).sqrt() / 2.0_f64.sqrt();
        let locals = [
            hist(&[0.5, 0.5, 0.0]),
            hist(&[0.5 + far * 0.0, 0.5 - 0.5 / 2f64.sqrt(), 0.5 / 2f64.sqrt()]),
        ];
        let d1: f64 = locals[1]
            .normalized
            .iter()
            .zip(&global.normalized)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((d1 - 0.5).abs() < 1e-12);
        let out = disco_weights(&[10, 10], &locals, &global, 1.0, 0.5).unwrap();
        assert!(close(out.lambda(), &[2.0 / 3.0, 1.0 / 3.0], 1e-12), "{:?}", out.lambda());
    }

    #[test]
    fn disco_falls_back_when_everything_clips() {
        let global = hist(&[0.5, 0.5]);
        let locals = [hist(&[1.0, 0.0]), hist(&[0.0, 1.0])];
        let out = disco_weights(&[10, 30], &locals, &global, 100.0, 0.0).unwrap();
        assert_eq!(out, fedavg_weights(&[10, 30]).unwrap());
    }

    #[test]
    fn ldawa_examples() {
        let g = pv(&[1.0, 1.0]);
        let out = ldawa_weights(&[g.clone(), g.clone(), g.clone()], &g).unwrap();
        assert!(close(out.lambda(), &[1.0 / 3.0; 3], 1e-15));
        let orth = pv(&[1.0, -1.0]);
        let out = ldawa_weights(&[g.clone(), orth.clone(), g.clone()], &g).unwrap();
        assert!(close(out.lambda(), &[0.5, 0.0, 0.5], 1e-15));
        let thetas = [pv(&[1.0, 0.3]), pv(&[0.2, 1.0])];
        let a = ldawa_weights(&thetas, &g).unwrap();
        let b = ldawa_weights(&thetas, &g.scale(2.0).unwrap()).unwrap();
        assert!(close(a.lambda(), b.lambda(), 1e-15));
    }

    #[test]
    fn awa_cos_examples() {
        let same = [cv(&[1.0, 0.0], 0), cv(&[1.0, 0.0], 1)];
        assert_eq!(awa_cos_weights(&same, &w(&[0.5, 0.5])).unwrap().lambda(), &[0.5, 0.5]);

        let taus = [cv(&[1.0, 0.0], 0), cv(&[0.0, 1.0], 1)];
        let out = awa_cos_weights(&taus, &w(&[0.8, 0.2])).unwrap();
        // tau_g = [0.8, 0.2]; cosines are 0.8/|tau_g| and 0.2/|tau_g|
        let n = (0.68f64).sqrt();
        let (c1, c2) = (0.8 / n, 0.2 / n);
        assert!((c1 - 0.970).abs() < 1e-3 && (c2 - 0.243).abs() < 1e-3);
        assert!(close(out.lambda(), &[c1 / (c1 + c2), c2 / (c1 + c2)], 1e-12));
        assert!(close(out.lambda(), &[0.8, 0.2], 1e-12));

        let anti = [cv(&[1.0, 2.0], 0), cv(&[-1.0, -2.0], 1)];
        assert_eq!(awa_cos_weights(&anti, &w(&[0.9, 0.1])).unwrap().lambda(), &[1.0, 0.0]);
    }

    #[test]
    fn objective_examples() {
        let g = pv(&[1.0, 1.0]);
        let none = AwaOptions {
            reg_kind: RegKind::None,
            ..AwaOptions::default()
        };
        let same = [cv(&[1.0, 2.0], 0), cv(&[1.0, 2.0], 1)];
        let th = [pv(&[2.0, 3.0]), pv(&[2.0, 3.0])];
        let f = awa_objective(&[0.3, 0.7], &same, &th, &g, &none).unwrap();
        assert!(f.abs() < 1e-15);

        let one = [cv(&[0.5, -0.2], 0)];
        let th1 = [pv(&[1.5, 0.8])];
        let f = awa_objective(&[1.0], &one, &th1, &g, &AwaOptions::default()).unwrap();
        let expected = 1.0 - cosine_similarity(&th1[0], &g).unwrap();
        assert!((f - expected).abs() < 1e-15);

        let taus = [cv(&[1.0, 0.0], 0), cv(&[0.0, 1.0], 1)];
        let th = [pv(&[2.0, 1.0]), pv(&[1.0, 2.0])];
        let f = awa_objective(&[0.5, 0.5], &taus, &th, &g, &none).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-15);

        assert!(matches!(
            awa_objective(&[0.6, 0.6], &taus, &th, &g, &none),
            Err(Error::Domain(_))
        ));
    }

    fn random_instance(rng: &mut impl Rng, k: usize, dim: usize) -> (Vec<ClientVector>, Vec<ParamVector>, ParamVector) {
        let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = pv(&g);
        let mut taus = Vec::new();
        let mut thetas = Vec::new();
        for i in 0..k {
            let t: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = pv(&t);
            thetas.push(crate::tensor::axpy(1.0, &t, &g).unwrap());
            taus.push(ClientVector {
                delta: t,
                client_id: i,
                round: 1,
            });
        }
        (taus, thetas, g)
    }

    #[test]
    fn gram_route_matches_direct_route() {
        let mut rng = crate::seed::rng(5, &[]);
        for reg in [RegKind::None, RegKind::Cosine, RegKind::Euclid] {
            let opts = AwaOptions {
                reg_kind: reg,
                reg_coeff: 0.7,
                ..AwaOptions::default()
            };
            for _ in 0..20 {
                let k = rng.random_range(1..6);
                let dim = rng.random_range(1..40);
                let (taus, thetas, g) = random_instance(&mut rng, k, dim);
                let p = AwaProblem::from_vectors(&taus, &thetas, &g, &opts).unwrap();
                let z: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
                let lam = softmax(&z);
                let direct = awa_objective(&lam, &taus, &thetas, &g, &opts).unwrap();
                let (gram_val, _) = p.value_and_grad(&lam);
                assert!((direct - gram_val).abs() < 1e-10 * (1.0 + direct.abs()), "{reg:?}: {direct} vs {gram_val}");
            }
        }
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let mut rng = crate::seed::rng(6, &[]);
        for reg in [RegKind::None, RegKind::Cosine, RegKind::Euclid] {
            let opts = AwaOptions {
                reg_kind: reg,
                ..AwaOptions::default()
            };
            for _ in 0..20 {
                let k = rng.random_range(2..6);
                let dim = rng.random_range(2..50);
                let (taus, thetas, g) = random_instance(&mut rng, k, dim);
                let p = AwaProblem::from_vectors(&taus, &thetas, &g, &opts).unwrap();
                let z: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (_, gz, _) = p.value_and_grad_logits(&z);
                for i in 0..k {
                    let h = 1e-6;
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[i] += h;
                    zm[i] -= h;
                    let fp = awa_objective(&softmax(&zp), &taus, &thetas, &g, &opts).unwrap();
                    let fm = awa_objective(&softmax(&zm), &taus, &thetas, &g, &opts).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let rel = (gz[i] - fd).abs() / gz[i].abs().max(fd.abs()).max(1e-6);
                    assert!(rel < 1e-3, "{reg:?} i={i}: {} vs {fd}", gz[i]);
                }
            }
        }
    }

    #[test]
    fn single_client_and_flat_landscape() {
        let g = pv(&[1.0, 2.0, 3.0]);
        let taus = [cv(&[0.1, 0.2, -0.1], 0)];
        let thetas = [pv(&[1.1, 2.2, 2.9])];
        let sol = optimize_weights(&taus, &thetas, &g, &w(&[1.0]), &AwaOptions::default()).unwrap();
        assert_eq!(sol.weights.lambda(), &[1.0]);
        assert!(sol.objective_trace.iter().all(|&f| f == sol.objective_trace[0]));

        let taus = [cv(&[0.1, 0.2, -0.1], 0), cv(&[0.1, 0.2, -0.1], 1), cv(&[0.1, 0.2, -0.1], 2)];
        let thetas = [pv(&[1.1, 2.2, 2.9]), pv(&[1.1, 2.2, 2.9]), pv(&[1.1, 2.2, 2.9])];
        let init = w(&[0.2, 0.5, 0.3]);
        for opts in [AwaOptions::default(), AwaOptions { vertex_starts: false, ..AwaOptions::converged() }] {
            let sol = optimize_weights(&taus, &thetas, &g, &init, &opts).unwrap();
            assert!(close(sol.weights.lambda(), init.lambda(), 1e-6), "{:?}", sol.weights);
        }
    }

    #[test]
    fn zero_steps_return_the_initial_weights() {
        let mut rng = crate::seed::rng(8, &[]);
        let (taus, thetas, g) = random_instance(&mut rng, 4, 10);
        let init = w(&[0.1, 0.2, 0.3, 0.4]);
        let opts = AwaOptions {
            steps: 0,
            ..AwaOptions::default()
        };
        let sol = optimize_weights(&taus, &thetas, &g, &init, &opts).unwrap();
        assert_eq!(sol.weights, init);
        assert_eq!(sol.objective_trace.len(), 1);
    }

    /// Exhaustive grid over lambda_1 in steps of 1e-3.
    fn grid_min(taus: &[ClientVector], thetas: &[ParamVector], g: &ParamVector, opts: &AwaOptions) -> f64 {
        (0..=1000)
            .map(|i| {
                let l1 = i as f64 / 1000.0;
                awa_objective(&[l1, 1.0 - l1], taus, thetas, g, opts).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn toy_problem_reaches_the_grid_minimum() {
        let g = pv(&[1.0, 1.0, 1.0]);
        let taus = [cv(&[1.0, 0.0, 0.0], 0), cv(&[0.9, 0.1, 0.0], 1)];
        let thetas: Vec<ParamVector> = taus.iter().map(|t| crate::tensor::axpy(1.0, &t.delta, &g).unwrap()).collect();
        let opts = AwaOptions::converged();
        let best = grid_min(&taus, &thetas, &g, &opts);
        let sol = optimize_weights(&taus, &thetas, &g, &AggWeights::uniform(2).unwrap(), &opts).unwrap();
        let f = awa_objective(sol.weights.lambda(), &taus, &thetas, &g, &opts).unwrap();
        assert!(f <= best + 1e-4, "optimizer {f} grid {best}");
        assert!(sol.objective_trace.iter().all(|&t| t >= sol.best_objective));
    }

    #[test]
    fn alignment_gets_more_weight() {
        // equal norms; the initial weights make tau_g lean towards client 0
        let taus = [cv(&[1.0, 0.0], 0), cv(&[0.0, 1.0], 1)];
        let g = pv(&[3.0, 3.0]);
        let thetas: Vec<ParamVector> = taus.iter().map(|t| crate::tensor::axpy(1.0, &t.delta, &g).unwrap()).collect();
        let init = w(&[0.6, 0.4]);
        let tau_g = merge_vectors(&taus, &init).unwrap();
        let c0 = cosine_similarity(&taus[0].delta, &tau_g).unwrap();
        let c1 = cosine_similarity(&taus[1].delta, &tau_g).unwrap();
        assert!(c0 > c1);
        let sol = optimize_weights(&taus, &thetas, &g, &init, &AwaOptions::default()).unwrap();
        let lam = sol.weights.lambda();
        assert!(lam[0] >= lam[1], "{lam:?}");
    }

    #[test]
    fn aggregate_examples() {
        let thetas = [pv(&[1.0, 2.0]), pv(&[3.0, 5.0])];
        assert_eq!(aggregate(&thetas, &w(&[0.0, 1.0])).unwrap(), thetas[1]);
        let same = [pv(&[1.5, -2.0]), pv(&[1.5, -2.0])];
        assert!(close(aggregate(&same, &w(&[0.25, 0.75])).unwrap().values(), &[1.5, -2.0], 1e-15));
    }

    #[test]
    fn layerwise_consistency() {
        let layout = Arc::new(LayerLayout::from_lengths([("w0", 3), ("b0", 2)]).unwrap());
        let mk = |v: Vec<f64>| ParamVector::new(v, Arc::clone(&layout)).unwrap();
        let thetas = [mk(vec![1.0, 2.0, 3.0, 4.0, 5.0]), mk(vec![-1.0, 0.0, 2.0, 1.0, 0.5])];
        let flat = w(&[0.3, 0.7]);
        let lw = LayerWeights::broadcast(&flat, 2).unwrap();
        assert_eq!(aggregate_layerwise(&thetas, &lw).unwrap(), aggregate(&thetas, &flat).unwrap());
        let mixed = LayerWeights::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(aggregate_layerwise(&thetas, &mixed).unwrap().values(), &[1.0, 2.0, 3.0, 1.0, 0.5]);
        assert!(aggregate_layerwise(&thetas, &LayerWeights::broadcast(&flat, 3).unwrap()).is_err());
    }

    #[test]
    fn layerwise_reduces_to_flat_for_one_layer() {
        let mut rng = crate::seed::rng(12, &[]);
        let (taus, thetas, g) = random_instance(&mut rng, 3, 8);
        let init = w(&[0.5, 0.3, 0.2]);
        let opts = AwaOptions::default();
        let flat = optimize_weights(&taus, &thetas, &g, &init, &opts).unwrap();
        let lw = optimize_layer_weights(&taus, &thetas, &g, &LayerWeights::broadcast(&init, 1).unwrap(), &opts).unwrap();
        assert_eq!(lw.weights.column(0), flat.weights.lambda());
    }

    #[test]
    fn layerwise_identical_layer_keeps_init_and_other_layer_optimizes() {
        let layout = Arc::new(LayerLayout::from_lengths([("w0", 3), ("b0", 3)]).unwrap());
        let mk = |v: Vec<f64>| ParamVector::new(v, Arc::clone(&layout)).unwrap();
        let g = mk(vec![0.5, -0.5, 1.0, 1.0, 1.0, 1.0]);
        let raw_taus = [vec![0.2, 0.1, -0.3, 1.0, 0.0, 0.0], vec![0.2, 0.1, -0.3, 0.9, 0.1, 0.0]];
        let taus: Vec<ClientVector> = raw_taus
            .iter()
            .enumerate()
            .map(|(i, t)| ClientVector {
                delta: mk(t.clone()),
                client_id: i,
                round: 1,
            })
            .collect();
        let thetas: Vec<ParamVector> = taus.iter().map(|t| crate::tensor::axpy(1.0, &t.delta, &g).unwrap()).collect();
        let init = w(&[0.5, 0.5]);
        let opts = AwaOptions::converged();
        let sol = optimize_layer_weights(&taus, &thetas, &g, &LayerWeights::broadcast(&init, 2).unwrap(), &opts).unwrap();
        assert!(close(sol.weights.column(0), init.lambda(), 1e-6), "{:?}", sol.weights.column(0));

        // layer 1 alone is the toy problem; compare against its grid oracle
        let l_taus = [cv(&raw_taus[0][3..], 0), cv(&raw_taus[1][3..], 1)];
        let l_g = pv(&[1.0, 1.0, 1.0]);
        let l_thetas: Vec<ParamVector> = l_taus.iter().map(|t| crate::tensor::axpy(1.0, &t.delta, &l_g).unwrap()).collect();
        let best = grid_min(&l_taus, &l_thetas, &l_g, &opts);
        let f = awa_objective(sol.weights.column(1), &l_taus, &l_thetas, &l_g, &opts).unwrap();
        assert!(f <= best + 1e-4, "{f} vs {best}");
    }

    #[test]
    fn aggregate_equals_global_plus_merged_vector() {
        let mut rng = crate::seed::rng(13, &[]);
        for _ in 0..20 {
            let (taus, thetas, g) = random_instance(&mut rng, 4, 30);
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lam = AggWeights::new(softmax(&z)).unwrap();
            let lhs = aggregate(&thetas, &lam).unwrap();
            let rhs = crate::tensor::axpy(1.0, &merge_vectors(&taus, &lam).unwrap(), &g).unwrap();
            assert!(close(lhs.values(), rhs.values(), 1e-12));
        }
    }

    #[test]
    fn optimizer_is_deterministic() {
        let mut rng = crate::seed::rng(14, &[]);
        let (taus, thetas, g) = random_instance(&mut rng, 5, 20);
        let init = AggWeights::uniform(5).unwrap();
        for opts in [AwaOptions::default(), AwaOptions::converged()] {
            let a = optimize_weights(&taus, &thetas, &g, &init, &opts).unwrap();
            let b = optimize_weights(&taus, &thetas, &g, &init, &opts).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn every_rule_stays_on_the_simplex(
            k in 1usize..6,
            dim in 1usize..12,
            seed_value in any::<u64>(),
        ) {
            let mut rng = crate::seed::rng(seed_value, &[]);
            let (taus, thetas, g) = random_instance(&mut rng, k, dim);
            let n: Vec<usize> = (0..k).map(|_| rng.random_range(1..100)).collect();
            let init = fedavg_weights(&n).unwrap();
            let mut outs = vec![
                init.clone(),
                ldawa_weights(&thetas, &g).unwrap(),
                awa_cos_weights(&taus, &init).unwrap(),
                optimize_weights(&taus, &thetas, &g, &init, &AwaOptions::default()).unwrap().weights,
            ];
            let hists: Vec<LabelHistogram> = (0..k)
                .map(|_| LabelHistogram::from_counts((0..3).map(|_| rng.random_range(0..5u64)).chain([1]).collect()).unwrap())
                .collect();
            let global = LabelHistogram::from_counts(vec![3, 3, 3, 3]).unwrap();
            outs.push(disco_weights(&n, &hists, &global, 0.5, 0.1).unwrap());
            for o in outs {
                prop_assert!(o.lambda().iter().all(|&l| l >= 0.0));
                prop_assert!((o.lambda().iter().sum::<f64>() - 1.0).abs() < SIMPLEX_TOL);
            }
        }
    }
}
