//! The condensation pre-training loop: learnable condensed-graph
//! parameters, the total loss `L_total = L_cost + xi * L_plan`, analytic
//! gradients through the unrolled Sinkhorn solve, and the Adam-driven
//! epoch loop.
//!
//! Pre-training is task-free by construction: nothing in this module reads
//! labels.

mod autograd;
mod train;

pub use autograd::{forward_loss, loss_and_grad};
pub use train::{condense, CondenseResult};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, CondensedGraph, Graph};
use crate::numkit::{kmeans, Mat};
use crate::ot::OtConfig;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

/// Learnable condensed graph: a feature matrix and symmetric adjacency
/// logits. The adjacency materializes as `sigmoid((S + S^T) / 2)`.
#[derive(Clone, Debug)]
pub struct CondensedParams {
    pub features: Mat,
    pub adj_logits: Mat,
}

impl CondensedParams {
    pub fn m(&self) -> usize {
        self.features.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStrategy {
    /// Copy `m` distinct source feature rows.
    RandomSample,
    /// K-means centroids of the source features.
    KmeansCentroids,
}

/// Configuration of one condensation run.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Plan-loss weight `xi`.
    pub xi: f64,
    pub ot: OtConfig,
    pub epochs: usize,
    /// Euler steps `K` per diffusion draw.
    pub steps_k: usize,
    /// Lower edge of the interval distribution; `None` uses 1% of the
    /// admissible upper bound.
    pub delta_t_min: Option<f64>,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub seed: u64,
    /// Epochs between graph-plan recomputations (`T_D`).
    pub plan_refresh_period: usize,
    /// Adjacency entries below this are dropped in the exported graph.
    pub sparsify_threshold: f64,
    pub init: InitStrategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            xi: 1.0,
            ot: OtConfig::default(),
            epochs: 500,
            steps_k: 5,
            delta_t_min: None,
            learning_rate: 0.01,
            adam_betas: (0.9, 0.999),
            seed: 0,
            plan_refresh_period: 20,
            sparsify_threshold: 0.5,
            init: InitStrategy::KmeansCentroids,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.ot.validate()?;
        if self.xi < 0.0 || !self.xi.is_finite() {
            return Err(Error::invalid(format!("xi must be >= 0, got {}", self.xi)));
        }
        if self.steps_k == 0 {
            return Err(Error::invalid("steps_k must be >= 1"));
        }
        if self.plan_refresh_period == 0 {
            return Err(Error::invalid("plan_refresh_period must be >= 1"));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        Ok(())
    }
}

/// One epoch's loss decomposition; `total = cost_term + xi * plan_term`
/// holds exactly by construction.
#[derive(Clone, Copy, Debug)]
pub struct LossBreakdown {
    pub cost_term: f64,
    pub plan_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(cost_term: f64, plan_term: f64, xi: f64) -> LossBreakdown {
        LossBreakdown {
            cost_term,
            plan_term,
            total: cost_term + xi * plan_term,
        }
    }
}

/// Initialize condensed parameters from the source graph.
///
/// Features come from `m` sampled source rows or from k-means centroids;
/// adjacency logits start at zero (sigmoid 0.5) with a +2 diagonal boost.
pub fn init_condensed(
    g: &Graph,
    m: usize,
    strategy: InitStrategy,
    seed: u64,
) -> Result<CondensedParams> {
    if m == 0 || m >= g.n {
        return Err(Error::invalid(format!(
            "condensed size must satisfy 1 <= m < n, got m = {m}, n = {}",
            g.n
        )));
    }
    let features = match strategy {
        InitStrategy::RandomSample => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut indices: Vec<usize> = (0..g.n).collect();
            indices.shuffle(&mut rng);
            indices.truncate(m);
            g.features.select_rows(&indices)
        }
        InitStrategy::KmeansCentroids => kmeans(&g.features, m, seed, 100)?.centroids,
    };
    let mut adj_logits = Mat::zeros(m, m);
    for i in 0..m {
        adj_logits.set(i, i, 2.0);
    }
    Ok(CondensedParams { features, adj_logits })
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Materialized adjacency `sigmoid((S + S^T) / 2)`.
pub fn materialize_adjacency(params: &CondensedParams) -> Mat {
    let s = &params.adj_logits;
    let sym = s.add(&s.transpose()).scale(0.5);
    sym.map(sigmoid)
}

/// Materialize the condensed graph.
///
/// Without a threshold the adjacency is the raw sigmoid materialization.
/// With a threshold, entries below it are zeroed and the result is
/// re-symmetric-normalized with self-loops (the export path); nodes that
/// lose every neighbor keep only their self-loop and are reported in the
/// second return value.
pub fn materialize_with_report(
    params: &CondensedParams,
    threshold: Option<f64>,
) -> Result<(CondensedGraph, Vec<usize>)> {
    let adjacency = materialize_adjacency(params);
    params.features.check_finite("condensed features")?;
    let Some(thr) = threshold else {
        return Ok((
            CondensedGraph::new(adjacency, params.features.clone(), None)?,
            Vec::new(),
        ));
    };
    let m = adjacency.rows();
    let mut kept = adjacency.map(|v| if v < thr { 0.0 } else { v });
    let mut rescued = Vec::new();
    for i in 0..m {
        let connected = (0..m).any(|j| j != i && kept.get(i, j) > 0.0);
        if !connected {
            rescued.push(i);
            // drop any stray diagonal weight; the rescue self-loop is added
            // by the normalization below
            kept.set(i, i, 0.0);
        }
    }
    let normalized = normalize_adjacency(&kept, true)?;
    Ok((
        CondensedGraph::new(normalized, params.features.clone(), None)?,
        rescued,
    ))
}

pub fn materialize(params: &CondensedParams, threshold: Option<f64>) -> Result<CondensedGraph> {
    materialize_with_report(params, threshold).map(|(g, _)| g)
}

/// Adam optimizer state for one parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Mat,
    v: Mat,
    t: usize,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> AdamState {
        AdamState {
            m: Mat::zeros(rows, cols),
            v: Mat::zeros(rows, cols),
            t: 0,
        }
    }
}

const ADAM_EPS: f64 = 1e-8;

/// Standard Adam with bias correction; deterministic.
pub fn adam_step(
    params: &mut Mat,
    grads: &Mat,
    state: &mut AdamState,
    lr: f64,
    betas: (f64, f64),
) {
    assert_eq!((params.rows(), params.cols()), (grads.rows(), grads.cols()));
    let (b1, b2) = betas;
    state.t += 1;
    let bc1 = 1.0 - b1.powi(state.t as i32);
    let bc2 = 1.0 - b2.powi(state.t as i32);
    for idx in 0..params.as_slice().len() {
        let g = grads.as_slice()[idx];
        let m = b1 * state.m.as_slice()[idx] + (1.0 - b1) * g;
        let v = b2 * state.v.as_slice()[idx] + (1.0 - b2) * g * g;
        state.m.as_mut_slice()[idx] = m;
        state.v.as_mut_slice()[idx] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        params.as_mut_slice()[idx] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}
