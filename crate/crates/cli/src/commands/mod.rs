//! The user-facing commands. Each takes a fully resolved [`Config`] and an
//! output directory, writes its artifacts, and returns nothing on success;
//! `main` maps errors to a nonzero exit with the error chain on stderr.

mod condense;
mod evaluate;
mod finetune;
mod gen;
mod significance;
mod spectral;

pub use condense::cmd_condense;
pub use evaluate::cmd_evaluate;
pub use finetune::cmd_finetune;
pub use gen::cmd_gen_synthetic;
pub use significance::cmd_significance;
pub use spectral::cmd_spectral_report;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use pregc_core::eval::HeadConfig;
use pregc_core::eval::TaskSpec;
use pregc_core::graph::Graph;

/// Condensed size from `run.m` or `run.ratio` (exactly one).
pub(crate) fn resolve_m(cfg: &mut Config, n: usize) -> CliResult<usize> {
    let m: Option<usize> = cfg.parse_opt("run.m")?;
    let ratio: Option<f64> = cfg.parse_opt("run.ratio")?;
    let m = match (m, ratio) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("set run.m or run.ratio, not both"));
        }
        (Some(m), None) => m,
        (None, Some(r)) => {
            if !(0.0 < r && r < 1.0) {
                return Err(CliError::config(format!("run.ratio must be in (0, 1), got {r}")));
            }
            ((r * n as f64).ceil() as usize).max(1)
        }
        (None, None) => {
            return Err(CliError::config("one of run.m or run.ratio is required"));
        }
    };
    if m == 0 || m >= n {
        return Err(CliError::config(format!(
            "condensed size must satisfy 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    cfg.set("run.m", m.to_string());
    Ok(m)
}

pub(crate) fn head_config(cfg: &mut Config) -> CliResult<HeadConfig> {
    let d = HeadConfig::default();
    let out = HeadConfig {
        k: cfg.parse_or("eval.k", d.k)?,
        epochs: cfg.parse_or("eval.epochs", d.epochs)?,
        lr: cfg.parse_or("eval.lr", d.lr)?,
        seed: cfg.parse_or("run.seed", 0u64)?,
        lp_dim: cfg.parse_or("eval.lp_dim", d.lp_dim)?,
    };
    cfg.set("eval.k", out.k.to_string());
    cfg.set("eval.epochs", out.epochs.to_string());
    cfg.set("eval.lr", out.lr.to_string());
    cfg.set("eval.lp_dim", out.lp_dim.to_string());
    Ok(out)
}

pub(crate) fn parse_task(token: &str) -> CliResult<TaskSpec> {
    match token.trim().to_lowercase().as_str() {
        "nc" | "node-classification" => Ok(TaskSpec::node_classification()),
        "nclu" | "node-clustering" => Ok(TaskSpec::node_clustering()),
        "lp" | "link-prediction" => Ok(TaskSpec::link_prediction()),
        "nr" | "node-regression" => Ok(TaskSpec::node_regression()),
        other => Err(CliError::config(format!(
            "unknown task {other:?} (expected nc, nclu, lp, or nr)"
        ))),
    }
}

pub(crate) fn parse_tasks(cfg: &mut Config) -> CliResult<Vec<TaskSpec>> {
    let raw = cfg.get_or("run.tasks", "nc").to_string();
    cfg.set("run.tasks", raw.clone());
    raw.split(',').map(parse_task).collect()
}

/// Label sanity for a supervised task: NR wants a scalar column, NC/NClu
/// want one-hot classes.
pub(crate) fn check_label_kind(g: &Graph, task: &TaskSpec) -> CliResult<()> {
    use pregc_core::eval::TaskKind;
    let Some(y) = &g.labels else {
        return match task.kind {
            TaskKind::LinkPrediction => Ok(()),
            _ => Err(CliError::config("task requires labels but the graph has none")),
        };
    };
    match task.kind {
        TaskKind::NodeRegression => {
            if y.cols() != 1 {
                return Err(CliError::config(format!(
                    "node regression needs a scalar target, but labels are one-hot with {} classes",
                    y.cols()
                )));
            }
        }
        TaskKind::NodeClassification | TaskKind::NodeClustering => {
            if y.cols() < 2 {
                return Err(CliError::config(
                    "classification needs one-hot class labels, but labels are a scalar column",
                ));
            }
        }
        TaskKind::LinkPrediction => {}
    }
    Ok(())
}

pub(crate) fn ensure_dir(path: &std::path::Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

pub(crate) fn task_token(task: &TaskSpec) -> &'static str {
    use pregc_core::eval::TaskKind;
    match task.kind {
        TaskKind::NodeClassification => "nc",
        TaskKind::NodeClustering => "nclu",
        TaskKind::LinkPrediction => "lp",
        TaskKind::NodeRegression => "nr",
    }
}

pub(crate) fn metric_token(task: &TaskSpec) -> &'static str {
    use pregc_core::eval::MetricKind;
    match task.metric {
        MetricKind::Accuracy => "accuracy",
        MetricKind::Nmi => "nmi",
        MetricKind::Auc => "auc",
        MetricKind::RSquared => "r2",
    }
}
