use super::ensure_dir;
use crate::checkpoint;
use crate::config::Config;
use crate::dataset::graph_from_config;
use crate::error::{CliError, CliResult};
use crate::textio::{self, format_float};
use pregc_core::eval::{propagated_design, GraphView};
use pregc_core::eval::avg_nn_distance;
use pregc_core::harmonize::{node_significance, select_training_set};
use std::path::Path;

/// Score source nodes by transport mass, select a training budget, and
/// compare its embedding dispersion against the original train split.
pub fn cmd_significance(
    checkpoint_dir: &Path,
    overrides: &Config,
    h_arg: Option<usize>,
    budget_arg: Option<usize>,
    out: &Path,
) -> CliResult<()> {
    let ckpt = checkpoint::load(checkpoint_dir)?;
    let mut cfg = ckpt.config.clone();
    for (k, v) in overrides.iter() {
        cfg.set(k, v.to_string());
    }
    let graph = graph_from_config(&mut cfg)?;
    let n = graph.n;
    let m = ckpt.graph.m;

    // default H: each condensed node claims about its share of sources
    let h = match h_arg.or(cfg.parse_opt("significance.h")?) {
        Some(h) => h,
        None => n.div_ceil(m),
    };
    let budget = match budget_arg.or(cfg.parse_opt("significance.budget")?) {
        Some(b) => b,
        None => graph
            .splits
            .as_ref()
            .map(|s| s.train.len())
            .filter(|&len| len > 0)
            .ok_or_else(|| {
                CliError::config("no train split to size the budget; pass --budget")
            })?,
    };
    if budget > n {
        return Err(CliError::config(format!("budget {budget} exceeds node count {n}")));
    }
    cfg.set("significance.h", h.to_string());
    cfg.set("significance.budget", budget.to_string());
    ensure_dir(out)?;

    let scores = node_significance(&ckpt.plan, h)?;
    let selected = select_training_set(&scores, budget)?;

    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut sig_csv = String::from("node,score,rank\n");
    let mut rank_of = vec![0usize; n];
    for (rank, &node) in ranked.iter().enumerate() {
        rank_of[node] = rank;
    }
    for (node, rank) in rank_of.iter().enumerate() {
        sig_csv.push_str(&format!(
            "{node},{},{rank}\n",
            format_float(scores.scores[node])
        ));
    }
    textio::write_text(&out.join("significance.csv"), &sig_csv)?;

    let mut sel_csv = String::from("rank,node\n");
    for (rank, &node) in selected.iter().enumerate() {
        sel_csv.push_str(&format!("{rank},{node}\n"));
    }
    textio::write_text(&out.join("selected.csv"), &sel_csv)?;

    // dispersion report on 2-step diffused features
    let z = propagated_design(
        GraphView {
            adjacency: &graph.adjacency,
            features: &graph.features,
        },
        2,
    );
    let mut report = String::new();
    report.push_str(&format!("h = {h}\nbudget = {budget}\nconfig_hash = {}\n", cfg.hash_hex()));
    let d_selected = avg_nn_distance(&z, &selected)?;
    report.push_str(&format!("dbar_selected = {}\n", format_float(d_selected)));
    if let Some(splits) = &graph.splits {
        if splits.train.len() >= 2 {
            let d_train = avg_nn_distance(&z, &splits.train)?;
            report.push_str(&format!("dbar_train_split = {}\n", format_float(d_train)));
        }
    }
    textio::write_text(&out.join("significance_report.txt"), &report)?;
    textio::write_text(&out.join("significance_config.txt"), &cfg.echo())?;
    print!("{report}");
    Ok(())
}
