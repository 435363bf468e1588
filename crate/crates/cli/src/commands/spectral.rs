use super::ensure_dir;
use crate::config::Config;
use crate::dataset::graph_from_config;
use crate::error::{CliError, CliResult};
use crate::textio::{self, format_float};
use pregc_core::diffusion::{coverage_profile, sample_interval};
use pregc_core::graph::laplacian;
use pregc_core::numkit::sym_eigenvalues;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::path::Path;

/// Spectral-coverage report: how well uniformly sampled diffusion
/// intervals cover the heat response of every Laplacian eigenvalue.
pub fn cmd_spectral_report(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let graph = graph_from_config(cfg)?;
    let samples: usize = cfg.parse_or("spectral.samples", 200usize)?;
    let grid: usize = cfg.parse_or("spectral.grid", 1000usize)?;
    let steps: usize = cfg.parse_or("train.steps_k", 5usize)?;
    let seed: u64 = cfg.parse_or("run.seed", 0u64)?;
    cfg.set("spectral.samples", samples.to_string());
    cfg.set("spectral.grid", grid.to_string());
    if samples == 0 {
        return Err(CliError::config("spectral.samples must be >= 1"));
    }
    ensure_dir(out)?;

    let lap = laplacian(&graph.adjacency)?;
    let eigenvalues: Vec<f64> = sym_eigenvalues(&lap, 100)?
        .into_iter()
        .map(|l| l.max(0.0))
        .collect();
    let lambda_max = eigenvalues.iter().copied().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return Err(CliError::config("graph Laplacian has no positive eigenvalue"));
    }
    let hi = 2.0 / lambda_max;
    let lo: f64 = cfg.parse_or("spectral.delta_t_min", 0.01 * hi)?;
    cfg.set("spectral.delta_t_min", lo.to_string());

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let drawn: Vec<f64> = (0..samples)
        .map(|_| sample_interval(lambda_max, lo, &mut rng))
        .collect::<Result<_, _>>()?;

    let rows = coverage_profile(&eigenvalues, &drawn, (lo, hi), grid, steps)?;
    let mut csv = String::from("eigen_index,eigenvalue,grid_delta_t,min_gap\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.eigen_index,
            format_float(r.eigenvalue),
            format_float(r.grid_delta_t),
            format_float(r.min_gap)
        ));
    }
    textio::write_text(&out.join("coverage.csv"), &csv)?;

    let gap = rows.iter().map(|r| r.min_gap).fold(0.0, f64::max);
    let summary = format!(
        "samples = {samples}\ngrid = {grid}\nsteps_k = {steps}\ninterval = [{}, {}]\nmax_gap = {}\n",
        format_float(lo),
        format_float(hi),
        format_float(gap)
    );
    textio::write_text(&out.join("coverage_summary.txt"), &summary)?;
    textio::write_text(&out.join("config.txt"), &cfg.echo())?;
    print!("{summary}");
    Ok(())
}
