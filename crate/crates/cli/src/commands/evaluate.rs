use super::{check_label_kind, ensure_dir, head_config, metric_token, parse_tasks, task_token};
use crate::checkpoint::{self, Checkpoint};
use crate::config::Config;
use crate::dataset::graph_from_config;
use crate::error::{CliError, CliResult};
use crate::textio::{self, format_float};
use pregc_core::eval::{evaluate, lre, train_head, Provenance, TaskKind, TaskSpec};
use pregc_core::graph::{normalize_adjacency, CondensedGraph, Graph};
use pregc_core::harmonize::{discretize_plan, harmonize_labels};
use pregc_core::numkit::Mat;
use rand_like::shuffled_prefix;
use std::path::Path;

// Small deterministic index sampler so the coreset arm does not depend on
// the rand crate from the CLI side.
mod rand_like {
    /// First `take` elements of a seeded Fisher-Yates shuffle of `0..n`.
    pub fn shuffled_prefix(n: usize, take: usize, seed: u64) -> Vec<usize> {
        let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
        let mut next = || {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            state = state.wrapping_mul(0x2545_f491_4f6c_dd1d);
            state
        };
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (next() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        let mut out: Vec<usize> = idx.into_iter().take(take).collect();
        out.sort_unstable();
        out
    }
}

/// Evaluation arms: the condensed graph with harmonized labels, the whole
/// original graph, and a random coreset of equal size.
pub fn cmd_evaluate(checkpoint_dir: &Path, overrides: &Config, out: &Path) -> CliResult<()> {
    let ckpt = checkpoint::load(checkpoint_dir)?;
    let mut cfg = ckpt.config.clone();
    for (k, v) in overrides.iter() {
        cfg.set(k, v.to_string());
    }
    let graph = graph_from_config(&mut cfg)?;
    let tasks = parse_tasks(&mut cfg)?;
    let head = head_config(&mut cfg)?;
    let seed: u64 = cfg.parse_or("run.seed", 0u64)?;
    let lre_k: usize = cfg.parse_or("eval.lre_k", 5usize)?;
    cfg.set("eval.lre_k", lre_k.to_string());
    ensure_dir(out)?;

    let report = evaluate_all(&graph, &ckpt, &tasks, &head, seed, lre_k, &cfg)?;
    textio::write_text(&out.join("metrics.txt"), &report)?;
    textio::write_text(&out.join("metrics_config.txt"), &cfg.echo())?;
    print!("{report}");
    Ok(())
}

pub(crate) struct ArmResults {
    pub condensed: f64,
    pub whole: f64,
    pub coreset: f64,
}

pub(crate) fn evaluate_all(
    graph: &Graph,
    ckpt: &Checkpoint,
    tasks: &[TaskSpec],
    head: &pregc_core::eval::HeadConfig,
    seed: u64,
    lre_k: usize,
    cfg: &Config,
) -> CliResult<String> {
    let hash = cfg.hash_hex();
    let mut lines = Vec::new();

    let (condensed, coverage) = condensed_with_labels(graph, ckpt)?;
    let coreset = coreset_arm(graph, ckpt.graph.m, seed)?;

    for task in tasks {
        check_label_kind(graph, task)?;
        let r = run_arms(graph, &condensed, &coverage, &coreset, task, head, seed)?;
        for (arm, value) in [
            ("condensed", r.condensed),
            ("whole", r.whole),
            ("coreset", r.coreset),
        ] {
            lines.push(format!(
                "task={} metric={} arm={arm} value={} seed={seed} config_hash={hash}",
                task_token(task),
                metric_token(task),
                format_float(value)
            ));
        }
    }

    // distribution diagnostics, label-based
    if let (Some(y), Some(yc)) = (&graph.labels, &condensed.labels) {
        let lre_condensed = lre(graph, y, &condensed, yc, lre_k)?;
        lines.push(format!(
            "diagnostic=lre arm=condensed value={} seed={seed} config_hash={hash}",
            format_float(lre_condensed)
        ));
        if let Some(y_core) = &coreset.labels {
            let core_g = CondensedGraph::new(
                coreset.adjacency.clone(),
                coreset.features.clone(),
                Some(y_core.clone()),
            )?;
            let lre_coreset = lre(graph, y, &core_g, y_core, lre_k)?;
            lines.push(format!(
                "diagnostic=lre arm=coreset value={} seed={seed} config_hash={hash}",
                format_float(lre_coreset)
            ));
        }
    }

    Ok(lines.join("\n") + "\n")
}

/// Condensed graph from the checkpoint plus harmonized labels from the
/// original training split.
pub(crate) fn condensed_with_labels(
    graph: &Graph,
    ckpt: &Checkpoint,
) -> CliResult<(CondensedGraph, Vec<bool>)> {
    let mut condensed = ckpt.graph.clone();
    let Some(y) = &graph.labels else {
        return Ok((condensed, vec![true; ckpt.graph.m]));
    };
    let omega: Vec<usize> = match &graph.splits {
        Some(s) if !s.train.is_empty() => s.train.clone(),
        _ => (0..graph.n).collect(),
    };
    let assignment = discretize_plan(&ckpt.plan);
    let y_tr = y.select_rows(&omega);
    let (labels, coverage) = harmonize_labels(&assignment, &y_tr, &omega)?;
    condensed.labels = Some(labels);
    Ok((condensed, coverage))
}

/// Random coreset control: an induced subgraph on `m` seeded random nodes
/// carrying their own labels.
pub(crate) fn coreset_arm(graph: &Graph, m: usize, seed: u64) -> CliResult<Graph> {
    let picked = shuffled_prefix(graph.n, m, seed);
    let sub = Mat::from_fn(m, m, |i, j| graph.adjacency.get(picked[i], picked[j]));
    let adjacency = match normalize_adjacency(&sub, false) {
        Ok(a) => a,
        Err(_) => normalize_adjacency(&sub, true)?,
    };
    let features = graph.features.select_rows(&picked);
    let labels = graph.labels.as_ref().map(|y| y.select_rows(&picked));
    Ok(Graph::new(adjacency, features, labels, None)?)
}

fn run_arms(
    graph: &Graph,
    condensed: &CondensedGraph,
    coverage: &[bool],
    coreset: &Graph,
    task: &TaskSpec,
    head: &pregc_core::eval::HeadConfig,
    seed: u64,
) -> CliResult<ArmResults> {
    let needs_labels = !matches!(task.kind, TaskKind::LinkPrediction);
    if needs_labels && condensed.labels.is_none() {
        return Err(CliError::config("checkpoint evaluation requires labels"));
    }

    let condensed_model = train_head(
        condensed.into(),
        condensed.labels.as_ref(),
        Some(coverage),
        None,
        task,
        head,
        Provenance::Condensed,
    )?;
    let condensed_metric = evaluate(&condensed_model, graph, task, seed)?;

    let train_idx = graph.splits.as_ref().map(|s| s.train.as_slice());
    let whole_model = train_head(
        graph.into(),
        graph.labels.as_ref(),
        None,
        train_idx,
        task,
        head,
        Provenance::Original,
    )?;
    let whole_metric = evaluate(&whole_model, graph, task, seed)?;

    let coreset_model = train_head(
        coreset.into(),
        coreset.labels.as_ref(),
        None,
        None,
        task,
        head,
        Provenance::Condensed,
    )?;
    let coreset_metric = evaluate(&coreset_model, graph, task, seed)?;

    Ok(ArmResults {
        condensed: condensed_metric,
        whole: whole_metric,
        coreset: coreset_metric,
    })
}
