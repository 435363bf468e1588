use crate::error::{Error, Result};
use crate::numkit::Mat;
use crate::ot::{feature_cost, uniform_marginal, validate_marginal, OtConfig, TransportPlan};

const RESIDUAL_TOL: f64 = 1e-9;

/// Log-domain entropic Sinkhorn.
///
/// Alternates dual-potential updates
/// `f_i = eps (ln mu_i - lse_j((g_j - C_ij)/eps))` and the symmetric column
/// update until the row-marginal residual drops below 1e-9 or the iteration
/// budget runs out. The returned objective is the linear part `<cost, plan>`
/// (entropy excluded), so values are comparable with exact oracles.
pub fn sinkhorn(cost: &Mat, mu: &[f64], nu: &[f64], cfg: &OtConfig) -> Result<TransportPlan> {
    cfg.validate()?;
    validate_marginal(mu, "source")?;
    validate_marginal(nu, "target")?;
    if cost.rows() != mu.len() || cost.cols() != nu.len() {
        return Err(Error::shape(format!(
            "cost {}x{} does not match marginals {} / {}",
            cost.rows(),
            cost.cols(),
            mu.len(),
            nu.len()
        )));
    }
    cost.check_finite("sinkhorn cost")?;

    let eps = cfg.epsilon;
    let (n, m) = (cost.rows(), cost.cols());
    let log_mu: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    let log_nu: Vec<f64> = nu.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    for it in 0..cfg.sinkhorn_iters {
        update_row_potential(&mut f, &g, cost, &log_mu, eps);
        update_col_potential(&mut g, &f, cost, &log_nu, eps);
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                context: format!("sinkhorn potentials diverged at iteration {it}"),
                epsilon: eps,
            });
        }
        if row_residual(&f, &g, cost, mu, eps) < RESIDUAL_TOL {
            break;
        }
    }

    build_plan(&f, &g, cost, mu, nu, eps)
}

/// Fixed-depth variant: runs exactly `iters` double updates with no early
/// stop and returns the full potential history, oldest first. This is the
/// unrolled form the condensation loss differentiates through.
pub(crate) fn sinkhorn_unrolled(
    cost: &Mat,
    mu: &[f64],
    nu: &[f64],
    eps: f64,
    iters: usize,
) -> Result<SinkhornTrace> {
    let (n, m) = (cost.rows(), cost.cols());
    let log_mu: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    let log_nu: Vec<f64> = nu.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut f_levels = Vec::with_capacity(iters);
    let mut g_levels = Vec::with_capacity(iters + 1);
    g_levels.push(g.clone());
    for it in 0..iters {
        update_row_potential(&mut f, &g, cost, &log_mu, eps);
        update_col_potential(&mut g, &f, cost, &log_nu, eps);
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                context: format!("unrolled sinkhorn diverged at iteration {it}"),
                epsilon: eps,
            });
        }
        f_levels.push(f.clone());
        g_levels.push(g.clone());
    }
    let plan = plan_matrix(&f, &g, cost, eps);
    Ok(SinkhornTrace {
        f_levels,
        g_levels,
        plan,
    })
}

/// Potentials of every unrolled iteration plus the final coupling.
/// `g_levels[r]` is the column potential entering row update `r + 1`;
/// `f_levels[r]` is the row potential produced by it.
pub(crate) struct SinkhornTrace {
    pub f_levels: Vec<Vec<f64>>,
    pub g_levels: Vec<Vec<f64>>,
    pub plan: Mat,
}

fn update_row_potential(f: &mut [f64], g: &[f64], cost: &Mat, log_mu: &[f64], eps: f64) {
    for (i, fi) in f.iter_mut().enumerate() {
        let row = cost.row(i);
        *fi = eps * (log_mu[i] - lse_over(g, row, eps));
    }
}

fn update_col_potential(g: &mut [f64], f: &[f64], cost: &Mat, log_nu: &[f64], eps: f64) {
    let m = g.len();
    for (j, gj) in g.iter_mut().enumerate() {
        let mut max = f64::NEG_INFINITY;
        for (i, &fi) in f.iter().enumerate() {
            max = max.max((fi - cost.get(i, j)) / eps);
        }
        let mut sum = 0.0;
        for (i, &fi) in f.iter().enumerate() {
            sum += (((fi - cost.get(i, j)) / eps) - max).exp();
        }
        *gj = eps * (log_nu[j] - (max + sum.ln()));
    }
    debug_assert_eq!(g.len(), m);
}

// lse over j of (g_j - c_j)/eps, stabilized by max subtraction.
fn lse_over(g: &[f64], cost_row: &[f64], eps: f64) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (&gj, &c) in g.iter().zip(cost_row) {
        max = max.max((gj - c) / eps);
    }
    let mut sum = 0.0;
    for (&gj, &c) in g.iter().zip(cost_row) {
        sum += (((gj - c) / eps) - max).exp();
    }
    max + sum.ln()
}

fn plan_matrix(f: &[f64], g: &[f64], cost: &Mat, eps: f64) -> Mat {
    Mat::from_fn(f.len(), g.len(), |i, j| {
        ((f[i] + g[j] - cost.get(i, j)) / eps).exp()
    })
}

fn row_residual(f: &[f64], g: &[f64], cost: &Mat, mu: &[f64], eps: f64) -> f64 {
    let mut worst = 0.0f64;
    for (i, &m) in mu.iter().enumerate() {
        let mut sum = 0.0;
        for (j, &gj) in g.iter().enumerate() {
            sum += ((f[i] + gj - cost.get(i, j)) / eps).exp();
        }
        worst = worst.max((sum - m).abs());
    }
    worst
}

fn build_plan(
    f: &[f64],
    g: &[f64],
    cost: &Mat,
    mu: &[f64],
    nu: &[f64],
    eps: f64,
) -> Result<TransportPlan> {
    let mut plan = plan_matrix(f, g, cost, eps);
    if plan.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "sinkhorn plan has non-finite entries".to_string(),
            epsilon: eps,
        });
    }
    round_to_polytope(&mut plan, mu, nu);
    let objective = cost.dot(&plan);
    TransportPlan::new(plan, mu.to_vec(), nu.to_vec(), objective)
}

/// Project a near-feasible coupling onto the transport polytope: scale rows
/// and columns down where they overshoot, then spread the leftover mass as
/// a rank-one correction. Shifts the objective by at most
/// `max |cost| * marginal residual`.
pub(crate) fn round_to_polytope(plan: &mut Mat, mu: &[f64], nu: &[f64]) {
    let (n, m) = (plan.rows(), plan.cols());
    let row_sums = plan.row_sums();
    for i in 0..n {
        if row_sums[i] > mu[i] && row_sums[i] > 0.0 {
            let scale = mu[i] / row_sums[i];
            for v in plan.row_mut(i) {
                *v *= scale;
            }
        }
    }
    let col_sums = plan.col_sums();
    for j in 0..m {
        if col_sums[j] > nu[j] && col_sums[j] > 0.0 {
            let scale = nu[j] / col_sums[j];
            for i in 0..n {
                let v = plan.get(i, j) * scale;
                plan.set(i, j, v);
            }
        }
    }
    let row_err: Vec<f64> = plan
        .row_sums()
        .iter()
        .zip(mu)
        .map(|(r, m)| (m - r).max(0.0))
        .collect();
    let col_err: Vec<f64> = plan
        .col_sums()
        .iter()
        .zip(nu)
        .map(|(c, n)| (n - c).max(0.0))
        .collect();
    let total: f64 = row_err.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            if row_err[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let v = plan.get(i, j) + row_err[i] * col_err[j] / total;
                plan.set(i, j, v);
            }
        }
    }
}

/// Wasserstein plan between two point clouds under the Euclidean feature
/// cost; the returned distance is the linear transport cost, which doubles
/// as the representation discrepancy in the condensation loss.
pub fn wasserstein_plan(z: &Mat, zc: &Mat, cfg: &OtConfig) -> Result<(TransportPlan, f64)> {
    let mu = uniform_marginal(z.rows());
    let nu = uniform_marginal(zc.rows());
    wasserstein_plan_weighted(z, zc, &mu, &nu, cfg)
}

pub fn wasserstein_plan_weighted(
    z: &Mat,
    zc: &Mat,
    mu: &[f64],
    nu: &[f64],
    cfg: &OtConfig,
) -> Result<(TransportPlan, f64)> {
    let cost = feature_cost(z, zc)?;
    let plan = sinkhorn(&cost, mu, nu, cfg)?;
    let distance = plan.objective;
    Ok((plan, distance))
}
