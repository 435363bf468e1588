//! Graph heat-equation propagation by explicit Euler, stochastic interval
//! sampling for diffusion augmentation, and the spectral-coverage diagnostic.
//!
//! One Euler step multiplies by `A^(dt) = (1 - dt) I + dt A`; `K` steps from
//! the features give the terminal state `Z_T = [A^(dt)]^K X` with
//! `T = K dt`. Stability requires `dt <= 2 / lambda_max(I - A)`.

use crate::error::{Error, Result};
use crate::graph::{CondensedGraph, Graph};
use crate::numkit::{lambda_max_sym, Mat};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

const STABILITY_SLACK: f64 = 1e-12;

/// One sampled diffusion configuration: interval, step count, terminal time.
#[derive(Clone, Copy, Debug)]
pub struct DiffusionDraw {
    pub delta_t: f64,
    pub steps: usize,
    pub terminal_time: f64,
    pub epoch: usize,
}

impl DiffusionDraw {
    pub fn new(delta_t: f64, steps: usize, epoch: usize) -> Result<DiffusionDraw> {
        if steps == 0 {
            return Err(Error::invalid("diffusion needs steps >= 1"));
        }
        if !(delta_t >= 0.0 && delta_t.is_finite()) {
            return Err(Error::invalid(format!("bad diffusion interval {delta_t}")));
        }
        Ok(DiffusionDraw {
            delta_t,
            steps,
            terminal_time: delta_t * steps as f64,
            epoch,
        })
    }
}

/// Largest-magnitude eigenvalue of `I - a` (power iteration).
pub fn laplacian_lambda_max(a: &Mat) -> Result<f64> {
    let l = crate::graph::laplacian(a)?;
    let (lm, _) = lambda_max_sym(&l, 1e-8, 5000)?;
    Ok(lm)
}

/// `K` explicit-Euler steps of the graph heat equation on features `x`.
///
/// `a` must be a symmetric-normalized adjacency; the stability bound
/// `delta_t <= 2 / lambda_max(I - a)` is verified and violation is an error
/// reporting the estimated `lambda_max`.
pub fn propagate(a: &Mat, x: &Mat, delta_t: f64, steps: usize) -> Result<Mat> {
    if a.rows() != x.rows() {
        return Err(Error::shape(format!(
            "adjacency is {}x{} but features have {} rows",
            a.rows(),
            a.cols(),
            x.rows()
        )));
    }
    let lambda_max = laplacian_lambda_max(a)?;
    check_stability(delta_t, lambda_max)?;
    Ok(propagate_unchecked(a, x, delta_t, steps))
}

pub(crate) fn check_stability(delta_t: f64, lambda_max: f64) -> Result<()> {
    if delta_t < 0.0 || !delta_t.is_finite() {
        return Err(Error::invalid(format!("bad diffusion interval {delta_t}")));
    }
    if lambda_max > 0.0 && delta_t > 2.0 / lambda_max + STABILITY_SLACK {
        return Err(Error::StabilityViolation { delta_t, lambda_max });
    }
    Ok(())
}

/// The raw stepping kernel, shared with the training loop which manages its
/// own stability bound.
pub(crate) fn propagate_unchecked(a: &Mat, x: &Mat, delta_t: f64, steps: usize) -> Mat {
    let step = step_operator(a, delta_t);
    let mut z = x.clone();
    for _ in 0..steps {
        z = step.matmul(&z);
    }
    z
}

pub(crate) fn step_operator(a: &Mat, delta_t: f64) -> Mat {
    let n = a.rows();
    let mut p = a.scale(delta_t);
    for i in 0..n {
        let v = p.get(i, i) + 1.0 - delta_t;
        p.set(i, i, v);
    }
    p
}

/// Uniform draw of the diffusion interval on `[delta_t_min, 2 / lambda_max]`.
pub fn sample_interval(
    lambda_max: f64,
    delta_t_min: f64,
    rng: &mut ChaCha20Rng,
) -> Result<f64> {
    if lambda_max <= 0.0 {
        return Err(Error::invalid(format!("lambda_max must be > 0, got {lambda_max}")));
    }
    let hi = 2.0 / lambda_max;
    if !(delta_t_min > 0.0 && delta_t_min < hi) {
        return Err(Error::invalid(format!(
            "interval [{delta_t_min}, {hi}] is empty or inverted"
        )));
    }
    Ok(rng.random_range(delta_t_min..hi))
}

/// Propagate original and condensed graphs with the identical `(dt, K)`.
///
/// The bound uses the more restrictive of the two Laplacian spectra, so the
/// Euler scheme is stable on both sides.
pub fn augmented_pair(
    g: &Graph,
    gc: &CondensedGraph,
    delta_t: f64,
    steps: usize,
) -> Result<(Mat, Mat)> {
    let lam_g = laplacian_lambda_max(&g.adjacency)?;
    let lam_c = laplacian_lambda_max(&gc.adjacency)?;
    check_stability(delta_t, lam_g.max(lam_c))?;
    let z = propagate_unchecked(&g.adjacency, &g.features, delta_t, steps);
    let zc = propagate_unchecked(&gc.adjacency, &gc.features, delta_t, steps);
    Ok((z, zc))
}

/// Heat attenuation `e^{-K dt lambda}` of one eigencomponent.
pub fn spectral_response(lambda: f64, delta_t: f64, steps: usize) -> f64 {
    (-(steps as f64) * delta_t * lambda).exp()
}

/// One row of the coverage report: how well the sampled intervals cover the
/// response of one eigenvalue at one grid point.
#[derive(Clone, Copy, Debug)]
pub struct CoverageRow {
    pub eigen_index: usize,
    pub eigenvalue: f64,
    pub grid_delta_t: f64,
    pub min_gap: f64,
}

/// Full coverage profile over an inclusive grid of `grid_resolution` points
/// spanning `interval`.
pub fn coverage_profile(
    eigenvalues: &[f64],
    sampled_intervals: &[f64],
    interval: (f64, f64),
    grid_resolution: usize,
    steps: usize,
) -> Result<Vec<CoverageRow>> {
    let (lo, hi) = interval;
    if sampled_intervals.is_empty() {
        return Err(Error::invalid("coverage gap needs at least one sampled interval"));
    }
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad coverage interval [{lo}, {hi}]")));
    }
    if grid_resolution < 2 {
        return Err(Error::invalid("grid resolution must be >= 2"));
    }
    if let Some(bad) = sampled_intervals
        .iter()
        .find(|&&s| s < lo - STABILITY_SLACK || s > hi + STABILITY_SLACK)
    {
        return Err(Error::invalid(format!(
            "sampled interval {bad} outside [{lo}, {hi}]"
        )));
    }

    let mut rows = Vec::with_capacity(eigenvalues.len() * grid_resolution);
    for (idx, &lam) in eigenvalues.iter().enumerate() {
        if lam < -1e-9 {
            return Err(Error::invalid(format!("negative eigenvalue {lam}")));
        }
        let sample_phi: Vec<f64> = sampled_intervals
            .iter()
            .map(|&s| spectral_response(lam, s, steps))
            .collect();
        for gi in 0..grid_resolution {
            let t = lo + (hi - lo) * gi as f64 / (grid_resolution - 1) as f64;
            let phi = spectral_response(lam, t, steps);
            let min_gap = sample_phi
                .iter()
                .map(|&p| (phi - p).abs())
                .fold(f64::INFINITY, f64::min);
            rows.push(CoverageRow {
                eigen_index: idx,
                eigenvalue: lam,
                grid_delta_t: t,
                min_gap,
            });
        }
    }
    Ok(rows)
}

/// Worst-case spectral coverage gap:
/// `max_i sup_{dt in grid} min_tau |Phi_i(dt) - Phi_i(dt_tau)|`.
///
/// Monotone non-increasing as samples are appended.
pub fn coverage_gap(
    eigenvalues: &[f64],
    sampled_intervals: &[f64],
    interval: (f64, f64),
    grid_resolution: usize,
    steps: usize,
) -> Result<f64> {
    let rows = coverage_profile(eigenvalues, sampled_intervals, interval, grid_resolution, steps)?;
    Ok(rows.iter().map(|r| r.min_gap).fold(0.0, f64::max))
}
