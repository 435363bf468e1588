use crate::error::{Error, Result};
use crate::graph::{CondensedGraph, Graph};
use crate::numkit::Mat;
use crate::ot::{
    feature_cost, outer, sinkhorn, structure_cost_apply, uniform_marginal, validate_marginal,
    OtConfig, TransportPlan,
};

/// Result of the conditional-gradient FGW solve.
pub struct FgwSolution {
    pub plan: TransportPlan,
    pub converged: bool,
    /// Objective after initialization and after every outer iteration.
    pub objective_curve: Vec<f64>,
}

/// Fused Gromov-Wasserstein plan between a graph and a condensed graph with
/// uniform marginals.
pub fn fgw_plan(g: &Graph, gc: &CondensedGraph, cfg: &OtConfig) -> Result<FgwSolution> {
    let mu = uniform_marginal(g.n);
    let nu = uniform_marginal(gc.m);
    fgw_plan_weighted(
        &g.features,
        &g.adjacency,
        &gc.features,
        &gc.adjacency,
        &mu,
        &nu,
        cfg,
    )
}

// The GW quadratic is nonconvex; on symmetric instances the product
// coupling is a stationary mixture of the optimal matchings and conditional
// gradient cannot leave it. Besides the product start we therefore run a
// few deterministically perturbed starts and keep the best outcome.
const RESTARTS: usize = 4;

/// Conditional-gradient (Frank-Wolfe) solver for
/// `min_pi < gamma K + (1 - gamma) J (x) pi, pi >`.
///
/// Each outer iteration linearizes the quadratic structure term at the
/// current plan (gradient `gamma K + 2 (1 - gamma) J (x) pi`), solves the
/// linear subproblem with entropic Sinkhorn, and takes the exact minimizer
/// of the scalar quadratic along the FW segment. The objective never
/// increases within a run; if floating-point noise produces an uphill step
/// the step is halved a few times and the run terminates flagged as
/// non-converged.
pub fn fgw_plan_weighted(
    x: &Mat,
    a: &Mat,
    xc: &Mat,
    ac: &Mat,
    mu: &[f64],
    nu: &[f64],
    cfg: &OtConfig,
) -> Result<FgwSolution> {
    cfg.validate()?;
    validate_marginal(mu, "source")?;
    validate_marginal(nu, "target")?;
    if x.rows() != a.rows() || xc.rows() != ac.rows() {
        return Err(Error::shape("features and adjacency disagree on node count".to_string()));
    }

    let k_cost = feature_cost(x, xc)?;
    let mut best: Option<FgwRun> = None;
    for start_idx in 0..=RESTARTS {
        let start = if start_idx == 0 {
            outer(mu, nu)
        } else {
            perturbed_start(mu, nu, start_idx as u64)
        };
        let run = fgw_run(&k_cost, a, ac, start, mu, nu, cfg)?;
        let better = match &best {
            Some(b) => run.objective < b.objective,
            None => true,
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    let plan = TransportPlan::new(run.plan, mu.to_vec(), nu.to_vec(), run.objective)?;
    Ok(FgwSolution {
        plan,
        converged: run.converged,
        objective_curve: run.curve,
    })
}

fn perturbed_start(mu: &[f64], nu: &[f64], salt: u64) -> Mat {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xf6_0000 + salt);
    let mut start = outer(mu, nu);
    for v in start.as_mut_slice() {
        *v *= 1.0 + rng.random_range(-0.5..0.5);
    }
    crate::ot::sinkhorn::round_to_polytope(&mut start, mu, nu);
    start
}

struct FgwRun {
    plan: Mat,
    objective: f64,
    converged: bool,
    curve: Vec<f64>,
}

fn fgw_run(
    k_cost: &Mat,
    a: &Mat,
    ac: &Mat,
    start: Mat,
    mu: &[f64],
    nu: &[f64],
    cfg: &OtConfig,
) -> Result<FgwRun> {
    let gamma = cfg.gamma;
    let mut plan = start;
    let mut j_pi = structure_cost_apply(a, ac, &plan)?;
    let mut objective = gamma * k_cost.dot(&plan) + (1.0 - gamma) * j_pi.dot(&plan);
    let mut curve = vec![objective];
    let mut converged = false;

    for _ in 0..cfg.fw_iters {
        let grad = k_cost.scale(gamma).add(&j_pi.scale(2.0 * (1.0 - gamma)));
        let direction = sinkhorn(&grad, mu, nu, cfg)?;
        let delta = direction.coupling.sub(&plan);
        let j_delta = structure_cost_apply(a, ac, &delta)?;
        // objective along pi + t delta: a t^2 + b t + objective
        let b = grad.dot(&delta);
        let a_quad = (1.0 - gamma) * j_delta.dot(&delta);
        let mut theta = if a_quad > 1e-18 {
            (-b / (2.0 * a_quad)).clamp(0.0, 1.0)
        } else if a_quad + b < 0.0 {
            1.0
        } else {
            0.0
        };
        if theta <= 0.0 {
            converged = true;
            break;
        }

        let mut accepted = false;
        for _ in 0..30 {
            let cand_plan = plan.add(&delta.scale(theta));
            let cand_j = j_pi.add(&j_delta.scale(theta));
            let cand_obj = gamma * k_cost.dot(&cand_plan) + (1.0 - gamma) * cand_j.dot(&cand_plan);
            if cand_obj <= objective + 1e-15 * objective.abs().max(1.0) {
                let improvement = objective - cand_obj;
                plan = cand_plan;
                j_pi = cand_j;
                objective = cand_obj;
                curve.push(objective);
                accepted = true;
                if improvement <= 1e-12 * objective.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            theta *= 0.5;
        }
        if !accepted {
            // uphill even after halving: stop with what we have
            converged = false;
            break;
        }
        if converged {
            break;
        }
    }

    Ok(FgwRun {
        plan,
        objective,
        converged,
        curve,
    })
}
