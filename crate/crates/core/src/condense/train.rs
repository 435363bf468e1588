use crate::condense::autograd::{loss_and_grad_with_lambda, normalized_condensed_adjacency};
use crate::condense::{
    adam_step, init_condensed, materialize_with_report, AdamState, CondensedParams, LossBreakdown,
    TrainConfig,
};
use crate::diffusion::{laplacian_lambda_max, propagate_unchecked, sample_interval, DiffusionDraw};
use crate::error::{Error, Result};
use crate::graph::{CondensedGraph, Graph};
use crate::ot::{fgw_plan_weighted, uniform_marginal, wasserstein_plan, TransportPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

// The admissible interval is shrunk 1% against staleness of the cached
// condensed-side lambda_max between plan refreshes.
const INTERVAL_SAFETY: f64 = 0.99;

/// Everything a finished condensation run produces.
pub struct CondenseResult {
    /// Thresholded, re-normalized condensed graph (export form).
    pub graph: CondensedGraph,
    /// Representation-space plan recomputed at the reference interval.
    pub final_plan: TransportPlan,
    /// Per-epoch loss decomposition.
    pub history: Vec<LossBreakdown>,
    /// Raw learned parameters.
    pub params: CondensedParams,
    /// Condensed nodes that kept only a self-loop after sparsification.
    pub rescued_nodes: Vec<usize>,
    /// Deterministic reference interval of the exported plan.
    pub delta_t_ref: f64,
    /// The interval drawn at each epoch, aligned with `history`.
    pub draws: Vec<f64>,
}

/// Run the condensation pre-training loop.
///
/// Per epoch: draw a diffusion interval from the admissible range, refresh
/// the graph-space FGW plan every `plan_refresh_period` epochs (it is a
/// detached target in between), take one Adam step on features and
/// adjacency logits. Label data is never touched. Deterministic given the
/// config seed.
pub fn condense(g: &Graph, m: usize, cfg: &TrainConfig) -> Result<CondenseResult> {
    cfg.validate()?;
    let mut params = init_condensed(g, m, cfg.init, cfg.seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    let lam_g = laplacian_lambda_max(&g.adjacency)?;
    let mu = uniform_marginal(g.n);
    let nu = uniform_marginal(m);

    let mut feat_state = AdamState::new(params.features.rows(), params.features.cols());
    let mut logit_state = AdamState::new(m, m);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut draws = Vec::with_capacity(cfg.epochs);
    let mut pi_d: Option<TransportPlan> = None;
    let mut lam_c = 0.0;

    for epoch in 0..cfg.epochs {
        if epoch % cfg.plan_refresh_period == 0 || pi_d.is_none() {
            let (_, _, ahat) = normalized_condensed_adjacency(&params);
            lam_c = laplacian_lambda_max(&ahat).map_err(|e| e.at_epoch(epoch))?;
            let sol = fgw_plan_weighted(
                &g.features,
                &g.adjacency,
                &params.features,
                &ahat,
                &mu,
                &nu,
                &cfg.ot,
            )
            .map_err(|e| e.at_epoch(epoch))?;
            pi_d = Some(sol.plan);
        }
        let target = pi_d.as_ref().expect("plan refreshed above");

        let (dt_min, upper) = admissible_interval(lam_g.max(lam_c), cfg)?;
        let dt = sample_interval(2.0 / upper, dt_min, &mut rng).map_err(|e| e.at_epoch(epoch))?;
        let draw = DiffusionDraw::new(dt, cfg.steps_k, epoch)?;

        let (loss, grad_f, grad_l, _pi_z) =
            loss_and_grad_with_lambda(g, &params, &draw, target, cfg, Some(lam_g))
                .map_err(|e| e.at_epoch(epoch))?;
        adam_step(
            &mut params.features,
            &grad_f,
            &mut feat_state,
            cfg.learning_rate,
            cfg.adam_betas,
        );
        adam_step(
            &mut params.adj_logits,
            &grad_l,
            &mut logit_state,
            cfg.learning_rate,
            cfg.adam_betas,
        );
        params
            .features
            .check_finite("features after step")
            .map_err(|e| e.at_epoch(epoch))?;
        params
            .adj_logits
            .check_finite("logits after step")
            .map_err(|e| e.at_epoch(epoch))?;
        history.push(loss);
        draws.push(dt);
    }

    // The exported plan is recomputed at a deterministic reference interval
    // (midpoint of the final admissible range) so downstream artifacts do
    // not depend on the last random draw.
    let (_, _, ahat) = normalized_condensed_adjacency(&params);
    let lam_final = laplacian_lambda_max(&ahat)?.max(lam_g);
    let (dt_min, upper) = admissible_interval(lam_final, cfg)?;
    let delta_t_ref = 0.5 * (dt_min + upper);
    let z = propagate_unchecked(&g.adjacency, &g.features, delta_t_ref, cfg.steps_k);
    let zc = propagate_unchecked(&ahat, &params.features, delta_t_ref, cfg.steps_k);
    let (final_plan, _) = wasserstein_plan(&z, &zc, &cfg.ot)?;

    let (graph, rescued_nodes) = materialize_with_report(&params, Some(cfg.sparsify_threshold))?;

    Ok(CondenseResult {
        graph,
        final_plan,
        history,
        params,
        rescued_nodes,
        delta_t_ref,
        draws,
    })
}

fn admissible_interval(lam: f64, cfg: &TrainConfig) -> Result<(f64, f64)> {
    if lam <= 0.0 {
        return Err(Error::invalid(format!("lambda_max must be > 0, got {lam}")));
    }
    let upper = 2.0 / lam * INTERVAL_SAFETY;
    let dt_min = cfg.delta_t_min.unwrap_or(0.01 * upper);
    if !(dt_min > 0.0 && dt_min < upper) {
        return Err(Error::invalid(format!(
            "diffusion interval [{dt_min}, {upper}] is empty"
        )));
    }
    Ok((dt_min, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condense::InitStrategy;
    use crate::graph::{default_centers, sbm_generate};
    use crate::ot::OtConfig;

    fn quick_cfg(seed: u64, epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            seed,
            ot: OtConfig {
                epsilon: 0.05,
                sinkhorn_iters: 60,
                fw_iters: 20,
                gamma: 0.5,
            },
            steps_k: 3,
            plan_refresh_period: 10,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let g = sbm_generate(&[6, 6], 0.7, 0.1, &default_centers(2, 2, 2.0), 0.2, 1).unwrap();
        let cfg = quick_cfg(3, 0);
        let out = condense(&g, 3, &cfg).unwrap();
        assert!(out.history.is_empty());
        let init = init_condensed(&g, 3, InitStrategy::KmeansCentroids, 3).unwrap();
        assert_eq!(out.params.features, init.features);
        assert_eq!(out.params.adj_logits, init.adj_logits);
    }

    #[test]
    fn smoothed_loss_decreases() {
        // Per-epoch losses are noisy in the random interval; compare window
        // means wide enough to cover the draw distribution.
        let g = sbm_generate(&[8, 8], 0.7, 0.05, &default_centers(2, 3, 3.0), 0.3, 2).unwrap();
        let cfg = quick_cfg(0, 120);
        let out = condense(&g, 4, &cfg).unwrap();
        let w = 25;
        let first: f64 = out.history[..w].iter().map(|l| l.total).sum::<f64>() / w as f64;
        let last: f64 = out.history[out.history.len() - w..]
            .iter()
            .map(|l| l.total)
            .sum::<f64>()
            / w as f64;
        assert!(last < first, "smoothed loss did not decrease: {first} -> {last}");
    }

    #[test]
    fn deterministic_given_seed() {
        let g = sbm_generate(&[6, 6], 0.8, 0.1, &default_centers(2, 2, 2.0), 0.2, 7).unwrap();
        let cfg = quick_cfg(11, 15);
        let a = condense(&g, 3, &cfg).unwrap();
        let b = condense(&g, 3, &cfg).unwrap();
        assert_eq!(a.params.features, b.params.features);
        assert_eq!(a.params.adj_logits, b.params.adj_logits);
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.total.to_bits(), y.total.to_bits());
        }
    }

    #[test]
    fn labels_never_influence_condensation() {
        let g = sbm_generate(&[6, 6], 0.8, 0.1, &default_centers(2, 2, 2.0), 0.2, 9).unwrap();
        let mut unlabeled = g.clone();
        unlabeled.labels = None;
        let cfg = quick_cfg(5, 10);
        let a = condense(&g, 3, &cfg).unwrap();
        let b = condense(&unlabeled, 3, &cfg).unwrap();
        assert_eq!(a.params.features, b.params.features);
        assert_eq!(a.params.adj_logits, b.params.adj_logits);
    }

    #[test]
    fn single_node_condensation_is_well_defined() {
        let g = sbm_generate(&[5, 5], 0.7, 0.1, &default_centers(2, 2, 2.0), 0.2, 8).unwrap();
        let out = condense(&g, 1, &quick_cfg(0, 5)).unwrap();
        assert_eq!(out.graph.m, 1);
        // the plan against a single condensed node is the source marginal
        for (v, mu) in out.final_plan.coupling.as_slice().iter().zip(&out.final_plan.mu) {
            assert!((v - mu).abs() < 1e-9);
        }
        assert!(out.history.iter().all(|l| l.total.is_finite()));
    }

    #[test]
    fn condensed_feature_means_near_block_centers() {
        let centers = crate::graph::default_centers(2, 4, 3.0);
        let noise = 0.3;
        let g = sbm_generate(&[30, 30], 0.5, 0.02, &centers, noise, 0).unwrap();
        let cfg = TrainConfig {
            epochs: 300,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let out = condense(&g, 6, &cfg).unwrap();
        let km = crate::numkit::kmeans(&out.graph.features, 2, 0, 100).unwrap();
        for c in 0..2 {
            let dist = (0..2)
                .map(|b| {
                    crate::numkit::sq_dist(km.centroids.row(c), centers.row(b)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= 0.5 * noise, "centroid {c} is {dist} from the nearest center");
        }
    }

    #[test]
    fn exported_graph_is_normalized_and_small() {
        let g = sbm_generate(&[8, 8], 0.7, 0.1, &default_centers(2, 2, 2.0), 0.2, 4).unwrap();
        let out = condense(&g, 4, &quick_cfg(0, 10)).unwrap();
        assert_eq!(out.graph.m, 4);
        // export path normalizes, so the graph view must validate
        out.graph.as_graph().unwrap();
        assert_eq!(out.final_plan.coupling.rows(), g.n);
        assert_eq!(out.final_plan.coupling.cols(), 4);
    }
}
