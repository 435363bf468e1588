//! Optimal-transport kernel: entropic Sinkhorn in the log domain, feature
//! and structure costs, fused Gromov-Wasserstein by conditional gradient,
//! and an exhaustive oracle for small uniform instances.

mod bruteforce;
mod cost;
mod fgw;
pub(crate) mod sinkhorn;

pub use bruteforce::exact_ot_bruteforce;
pub use cost::{feature_cost, structure_cost_apply};
pub use fgw::{fgw_plan, fgw_plan_weighted, FgwSolution};
pub use sinkhorn::{sinkhorn, wasserstein_plan, wasserstein_plan_weighted};

use crate::error::{Error, Result};
use crate::numkit::Mat;

const MARGINAL_TOL: f64 = 1e-6;
const MASS_TOL: f64 = 1e-9;

/// Entropic OT solver configuration.
///
/// `gamma` trades feature cost against structure cost in the fused
/// Gromov-Wasserstein objective: `gamma = 1` is pure Wasserstein on
/// features, `gamma = 0` pure Gromov-Wasserstein on structure.
#[derive(Clone, Copy, Debug)]
pub struct OtConfig {
    pub epsilon: f64,
    pub sinkhorn_iters: usize,
    pub fw_iters: usize,
    pub gamma: f64,
}

impl Default for OtConfig {
    fn default() -> Self {
        OtConfig {
            epsilon: 0.01,
            sinkhorn_iters: 200,
            fw_iters: 50,
            gamma: 0.5,
        }
    }
}

impl OtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if self.sinkhorn_iters == 0 || self.fw_iters == 0 {
            return Err(Error::invalid("iteration budgets must be >= 1"));
        }
        Ok(())
    }
}

/// A coupling between two discrete distributions, with the marginals it was
/// solved against and the linear transport cost `<cost, plan>`.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub coupling: Mat,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub objective: f64,
}

impl TransportPlan {
    /// Validates the coupling invariants: non-negative entries, marginals
    /// within 1e-6 absolute, unit total mass within 1e-9.
    pub fn new(coupling: Mat, mu: Vec<f64>, nu: Vec<f64>, objective: f64) -> Result<TransportPlan> {
        if coupling.rows() != mu.len() || coupling.cols() != nu.len() {
            return Err(Error::shape(format!(
                "coupling {}x{} does not match marginals {} / {}",
                coupling.rows(),
                coupling.cols(),
                mu.len(),
                nu.len()
            )));
        }
        coupling.check_finite("transport plan")?;
        if coupling.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("transport plan has negative entries"));
        }
        let row_sums = coupling.row_sums();
        for (i, (&r, &m)) in row_sums.iter().zip(&mu).enumerate() {
            if (r - m).abs() > MARGINAL_TOL {
                return Err(Error::invalid(format!(
                    "row {i} marginal {r} deviates from mu {m} by more than {MARGINAL_TOL}"
                )));
            }
        }
        let col_sums = coupling.col_sums();
        for (j, (&c, &n)) in col_sums.iter().zip(&nu).enumerate() {
            if (c - n).abs() > MARGINAL_TOL {
                return Err(Error::invalid(format!(
                    "column {j} marginal {c} deviates from nu {n} by more than {MARGINAL_TOL}"
                )));
            }
        }
        let mass: f64 = coupling.as_slice().iter().sum();
        if (mass - 1.0).abs() > MASS_TOL + MARGINAL_TOL * mu.len().max(nu.len()) as f64 {
            return Err(Error::invalid(format!("transport plan mass {mass} is not 1")));
        }
        Ok(TransportPlan {
            coupling,
            mu,
            nu,
            objective,
        })
    }

    pub fn source_len(&self) -> usize {
        self.mu.len()
    }

    pub fn target_len(&self) -> usize {
        self.nu.len()
    }
}

/// The uniform probability vector `(1/n, ..., 1/n)`.
pub fn uniform_marginal(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

pub(crate) fn validate_marginal(w: &[f64], name: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::invalid(format!("{name} marginal is empty")));
    }
    if w.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::invalid(format!("{name} marginal must be strictly positive")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("{name} marginal sums to {sum}, expected 1")));
    }
    Ok(())
}

/// `mu nu^T`, the independence coupling used as the entropic and FW start.
pub(crate) fn outer(mu: &[f64], nu: &[f64]) -> Mat {
    Mat::from_fn(mu.len(), nu.len(), |i, j| mu[i] * nu[j])
}
