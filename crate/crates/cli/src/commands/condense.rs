use super::{ensure_dir, resolve_m};
use crate::checkpoint;
use crate::config::Config;
use crate::dataset::graph_from_config;
use crate::error::CliResult;
use std::path::Path;

/// Load or generate the source graph, run condensation, and write the
/// checkpoint directory.
pub fn cmd_condense(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let graph = graph_from_config(cfg)?;
    let m = resolve_m(cfg, graph.n)?;
    let train = cfg.train_config()?;
    ensure_dir(out)?;

    let result = pregc_core::condense::condense(&graph, m, &train)?;
    for &node in &result.rescued_nodes {
        eprintln!(
            "warning: condensed node {node} lost every neighbor at threshold {}; kept only its self-loop",
            train.sparsify_threshold
        );
    }
    checkpoint::write(out, &result, cfg)?;
    eprintln!(
        "condensed {} nodes -> {} (checkpoint in {})",
        graph.n,
        m,
        out.display()
    );
    Ok(())
}
