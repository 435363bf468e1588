use super::ensure_dir;
use crate::config::Config;
use crate::dataset::{synthetic_from_config, write_dataset};
use crate::error::CliResult;
use crate::textio;
use std::path::Path;

/// Generate a synthetic block-model dataset and write it out in the
/// dataset file formats, ready to be loaded back via `[dataset]` paths.
pub fn cmd_gen_synthetic(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let graph = synthetic_from_config(cfg)?;
    ensure_dir(out)?;
    write_dataset(&graph, out)?;
    textio::write_text(&out.join("config.txt"), &cfg.echo())?;
    eprintln!(
        "wrote {} nodes / {} features to {}",
        graph.n,
        graph.feature_dim(),
        out.display()
    );
    Ok(())
}
