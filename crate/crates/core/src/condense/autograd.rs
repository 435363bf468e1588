//! Analytic gradients of the condensation loss.
//!
//! The forward pass is a fixed, fully deterministic composition:
//! sigmoid-symmetrization of the adjacency logits, symmetric degree
//! normalization, `K` explicit-Euler diffusion steps, the Euclidean cost
//! against the diffused source states, a fixed number of log-domain
//! Sinkhorn iterations, and the two loss terms. The backward pass walks
//! that exact composition in reverse; the graph-space plan is a detached
//! constant. `forward_loss` exposes the identical forward computation so
//! finite-difference checks probe precisely what the gradients claim.

use crate::condense::{materialize_adjacency, CondensedParams, LossBreakdown, TrainConfig};
use crate::diffusion::{check_stability, laplacian_lambda_max, propagate_unchecked, step_operator, DiffusionDraw};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numkit::Mat;
use crate::ot::sinkhorn::{round_to_polytope, sinkhorn_unrolled, SinkhornTrace};
use crate::ot::{uniform_marginal, TransportPlan};

const NORM_GUARD: f64 = 1e-9;

pub(crate) struct Forward {
    atil: Mat,
    degrees: Vec<f64>,
    ahat: Mat,
    step: Mat,
    /// Diffusion states `y_0 = X~` through `y_K = Z~`.
    states: Vec<Mat>,
    z: Mat,
    cost: Mat,
    trace: SinkhornTrace,
    pub loss: LossBreakdown,
}

/// Normalized materialization `D^{-1/2} sigmoid((S+S^T)/2) D^{-1/2}` used
/// on the condensed side of every diffusion forward. The sigmoid keeps all
/// entries positive, so degrees never vanish and the normalized spectrum
/// stays in [-1, 1] where explicit Euler is stable.
pub(crate) fn normalized_condensed_adjacency(params: &CondensedParams) -> (Mat, Vec<f64>, Mat) {
    let atil = materialize_adjacency(params);
    let degrees = atil.row_sums();
    let m = atil.rows();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let ahat = Mat::from_fn(m, m, |i, j| atil.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
    (atil, degrees, ahat)
}

pub(crate) fn forward(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
) -> Result<Forward> {
    forward_with_lambda(g, params, draw, pi_d, cfg, None)
}

/// `lam_g_hint` lets the training loop reuse the source graph's dominant
/// Laplacian eigenvalue instead of re-estimating it every epoch; it only
/// feeds the stability gate, never the computed values.
pub(crate) fn forward_with_lambda(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
    lam_g_hint: Option<f64>,
) -> Result<Forward> {
    let (n, m) = (g.n, params.m());
    if pi_d.coupling.rows() != n || pi_d.coupling.cols() != m {
        return Err(Error::shape(format!(
            "cached graph plan is {}x{}, expected {n}x{m}",
            pi_d.coupling.rows(),
            pi_d.coupling.cols()
        )));
    }
    if params.features.cols() != g.feature_dim() {
        return Err(Error::shape("condensed feature dimension differs from source".to_string()));
    }
    params.features.check_finite("condensed features")?;
    params.adj_logits.check_finite("adjacency logits")?;

    let (atil, degrees, ahat) = normalized_condensed_adjacency(params);

    // Stability on both sides; the normalized condensed spectrum caps
    // lambda_max at 2, so the original graph usually binds.
    let lam_g = match lam_g_hint {
        Some(l) => l,
        None => laplacian_lambda_max(&g.adjacency)?,
    };
    let lam_c = laplacian_lambda_max(&ahat)?;
    check_stability(draw.delta_t, lam_g.max(lam_c))?;

    let step = step_operator(&ahat, draw.delta_t);
    let mut states = Vec::with_capacity(draw.steps + 1);
    states.push(params.features.clone());
    for k in 0..draw.steps {
        states.push(step.matmul(&states[k]));
    }
    let z = propagate_unchecked(&g.adjacency, &g.features, draw.delta_t, draw.steps);
    let z_tilde = &states[draw.steps];

    let cost = crate::ot::feature_cost(&z, z_tilde)?;
    let mu = uniform_marginal(n);
    let nu = uniform_marginal(m);
    let trace = sinkhorn_unrolled(&cost, &mu, &nu, cfg.ot.epsilon, cfg.ot.sinkhorn_iters)?;

    let cost_term = cost.dot(&trace.plan);
    let plan_term = pi_d.coupling.sub(&trace.plan).as_slice().iter().map(|v| v * v).sum();
    let loss = LossBreakdown::new(cost_term, plan_term, cfg.xi);
    if !loss.total.is_finite() {
        return Err(Error::NumericalFailure {
            context: "condensation loss is non-finite".to_string(),
            epsilon: cfg.ot.epsilon,
        });
    }

    Ok(Forward {
        atil,
        degrees,
        ahat,
        step,
        states,
        z,
        cost,
        trace,
        loss,
    })
}

/// The loss of the exact forward computation that `loss_and_grad`
/// differentiates. Finite-difference oracles perturb parameters and call
/// this.
pub fn forward_loss(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    forward(g, params, draw, pi_d, cfg).map(|f| f.loss)
}

/// Loss, analytic gradients for features and adjacency logits, and the
/// representation-space plan of this draw.
pub fn loss_and_grad(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, Mat, Mat, TransportPlan)> {
    loss_and_grad_with_lambda(g, params, draw, pi_d, cfg, None)
}

pub(crate) fn loss_and_grad_with_lambda(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
    lam_g_hint: Option<f64>,
) -> Result<(LossBreakdown, Mat, Mat, TransportPlan)> {
    let fwd = forward_with_lambda(g, params, draw, pi_d, cfg, lam_g_hint)?;
    let (grad_features, grad_logits) = backward(g, params, draw, pi_d, cfg, &fwd)?;
    grad_features.check_finite("feature gradient")?;
    grad_logits.check_finite("logit gradient")?;

    let (n, m) = (g.n, params.m());
    let mu = uniform_marginal(n);
    let nu = uniform_marginal(m);
    let mut exported = fwd.trace.plan.clone();
    round_to_polytope(&mut exported, &mu, &nu);
    let objective = fwd.cost.dot(&exported);
    let pi_z = TransportPlan::new(exported, mu, nu, objective)?;
    Ok((fwd.loss, grad_features, grad_logits, pi_z))
}

fn backward(
    g: &Graph,
    params: &CondensedParams,
    draw: &DiffusionDraw,
    pi_d: &TransportPlan,
    cfg: &TrainConfig,
    fwd: &Forward,
) -> Result<(Mat, Mat)> {
    let (n, m) = (g.n, params.m());
    let eps = cfg.ot.epsilon;
    let pi = &fwd.trace.plan;
    let cost = &fwd.cost;

    // dL/dpi feeds the final potentials and the direct cost dependence of
    // pi = exp((f + g - C) / eps).
    let mut c_bar = Mat::zeros(n, m);
    let mut f_bar = vec![0.0; n];
    let mut g_bar = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let p = pi.get(i, j);
            let dl_dpi =
                cost.get(i, j) + 2.0 * cfg.xi * (p - pi_d.coupling.get(i, j));
            let w = dl_dpi * p / eps;
            f_bar[i] += w;
            g_bar[j] += w;
            // direct <C, pi> term plus the -pi/eps chain through pi
            c_bar.set(i, j, c_bar.get(i, j) + p - w);
        }
    }

    // Reverse the unrolled Sinkhorn updates.
    let iters = fwd.trace.f_levels.len();
    for r in (0..iters).rev() {
        let f_r = &fwd.trace.f_levels[r];
        let g_prev = &fwd.trace.g_levels[r];

        // g^r_j = eps ln nu_j - eps lse_i((f^r_i - C_ij)/eps)
        for j in 0..m {
            let gb = g_bar[j];
            if gb == 0.0 {
                continue;
            }
            let mut max = f64::NEG_INFINITY;
            for i in 0..n {
                max = max.max((f_r[i] - cost.get(i, j)) / eps);
            }
            let mut denom = 0.0;
            for i in 0..n {
                denom += (((f_r[i] - cost.get(i, j)) / eps) - max).exp();
            }
            for i in 0..n {
                let soft = ((((f_r[i] - cost.get(i, j)) / eps) - max).exp()) / denom;
                f_bar[i] -= gb * soft;
                c_bar.set(i, j, c_bar.get(i, j) + gb * soft);
            }
        }

        // f^r_i = eps ln mu_i - eps lse_j((g^{r-1}_j - C_ij)/eps)
        let mut next_g_bar = vec![0.0; m];
        for i in 0..n {
            let fb = f_bar[i];
            if fb == 0.0 {
                continue;
            }
            let row = cost.row(i);
            let mut max = f64::NEG_INFINITY;
            for j in 0..m {
                max = max.max((g_prev[j] - row[j]) / eps);
            }
            let mut denom = 0.0;
            for j in 0..m {
                denom += (((g_prev[j] - row[j]) / eps) - max).exp();
            }
            for j in 0..m {
                let soft = ((((g_prev[j] - row[j]) / eps) - max).exp()) / denom;
                next_g_bar[j] -= fb * soft;
                c_bar.set(i, j, c_bar.get(i, j) + fb * soft);
            }
        }
        g_bar = next_g_bar;
        f_bar = vec![0.0; n];
    }
    // g^0 is the zero constant; its adjoint is dropped.

    // Cost entries are Euclidean norms; the derivative guard caps the
    // denominator away from zero.
    let z_tilde = &fwd.states[draw.steps];
    let f_dim = z_tilde.cols();
    let mut zt_bar = Mat::zeros(m, f_dim);
    for i in 0..n {
        for j in 0..m {
            let cb = c_bar.get(i, j);
            if cb == 0.0 {
                continue;
            }
            let denom = cost.get(i, j).max(NORM_GUARD);
            for d in 0..f_dim {
                let contrib = cb * (z_tilde.get(j, d) - fwd.z.get(i, d)) / denom;
                zt_bar.set(j, d, zt_bar.get(j, d) + contrib);
            }
        }
    }

    // Reverse the K Euler steps y_k = P y_{k-1}.
    let mut y_bar = zt_bar;
    let mut p_bar = Mat::zeros(m, m);
    for k in (1..=draw.steps).rev() {
        p_bar = p_bar.add(&y_bar.matmul(&fwd.states[k - 1].transpose()));
        y_bar = fwd.step.transpose().matmul(&y_bar);
    }
    let grad_features = y_bar;

    // P = (1 - dt) I + dt A_hat
    let ahat_bar = p_bar.scale(draw.delta_t);

    // A_hat = D^{-1/2} A_til D^{-1/2} with degrees d = row sums of A_til.
    let d = &fwd.degrees;
    let mut d_bar = vec![0.0; m];
    for k in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            acc += ahat_bar.get(k, j) * fwd.ahat.get(k, j);
            acc += ahat_bar.get(j, k) * fwd.ahat.get(j, k);
        }
        d_bar[k] = -0.5 * acc / d[k];
    }
    let mut atil_bar = Mat::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            let direct = ahat_bar.get(k, l) / (d[k] * d[l]).sqrt();
            atil_bar.set(k, l, direct + d_bar[k]);
        }
    }

    // A_til = sigmoid(T), T = (S + S^T)/2.
    let mut grad_logits = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let a = fwd.atil.get(i, j);
            let t_bar_ij = atil_bar.get(i, j) * a * (1.0 - a);
            let a_ji = fwd.atil.get(j, i);
            let t_bar_ji = atil_bar.get(j, i) * a_ji * (1.0 - a_ji);
            grad_logits.set(i, j, 0.5 * (t_bar_ij + t_bar_ji));
        }
    }

    Ok((grad_features, grad_logits))
}
