use super::{check_label_kind, ensure_dir, head_config, metric_token, parse_task, task_token};
use crate::checkpoint;
use crate::commands::evaluate::condensed_with_labels;
use crate::config::Config;
use crate::dataset::graph_from_config;
use crate::error::{CliError, CliResult};
use crate::textio::{self, format_float};
use pregc_core::eval::metrics::softmax_rows;
use pregc_core::eval::{evaluate, propagated_design, train_head, Provenance, TaskKind, TaskSpec};
use pregc_core::graph::CondensedGraph;
use pregc_core::harmonize::{discretize_plan, finetune_assignment, harmonize_labels, AssignmentMatrix};
use pregc_core::Mat;
use std::path::Path;

/// Test-time fine-tuning: every `tau_up` epochs the assignment matrix is
/// blended toward the transport plan between model predictions on the two
/// graphs, labels are re-harmonized, and the metric re-measured. The
/// reported metric always comes from a freshly trained head on the current
/// labels, so `decay = 1` reproduces the evaluate command exactly.
pub fn cmd_finetune(
    checkpoint_dir: &Path,
    overrides: &Config,
    out: &Path,
) -> CliResult<()> {
    let ckpt = checkpoint::load(checkpoint_dir)?;
    let mut cfg = ckpt.config.clone();
    for (k, v) in overrides.iter() {
        cfg.set(k, v.to_string());
    }
    let graph = graph_from_config(&mut cfg)?;
    let task = parse_task(cfg.get_or("finetune.task", "nc"))?;
    let tau_up: usize = cfg.parse_or("finetune.tau_up", 10usize)?;
    let decay: f64 = cfg.parse_or("finetune.decay", 0.9)?;
    let epochs: usize = cfg.parse_or("finetune.epochs", 50usize)?;
    let head = head_config(&mut cfg)?;
    let seed: u64 = cfg.parse_or("run.seed", 0u64)?;
    let ot = cfg.ot_config()?;
    cfg.set("finetune.task", task_token(&task).to_string());
    cfg.set("finetune.tau_up", tau_up.to_string());
    cfg.set("finetune.decay", decay.to_string());
    cfg.set("finetune.epochs", epochs.to_string());
    ensure_dir(out)?;

    if tau_up == 0 {
        return Err(CliError::config("finetune.tau_up must be >= 1"));
    }
    if !(0.0..=1.0).contains(&decay) {
        return Err(CliError::config(format!("finetune.decay must be in [0, 1], got {decay}")));
    }
    check_label_kind(&graph, &task)?;
    if matches!(task.kind, TaskKind::LinkPrediction) {
        return Err(CliError::config(
            "fine-tuning blends label assignments; link prediction has none",
        ));
    }
    let y = graph
        .labels
        .as_ref()
        .ok_or_else(|| CliError::config("fine-tuning requires labels"))?;
    let omega: Vec<usize> = match &graph.splits {
        Some(s) if !s.train.is_empty() => s.train.clone(),
        _ => (0..graph.n).collect(),
    };
    let y_tr = y.select_rows(&omega);

    let (condensed_base, _) = condensed_with_labels(&graph, &ckpt)?;
    let mut assignment = discretize_plan(&ckpt.plan);
    let mut history: Vec<f64> = Vec::new();

    let cycles = epochs / tau_up;
    let mut condensed = condensed_base;
    let mut coverage: Vec<bool>;
    {
        let (labels, cov) = harmonize_labels(&assignment, &y_tr, &omega)?;
        condensed.labels = Some(labels);
        coverage = cov;
    }

    // pre-finetune baseline (identical to the evaluate command's arm)
    let mut model = train_head(
        (&condensed).into(),
        condensed.labels.as_ref(),
        Some(&coverage),
        None,
        &task,
        &head,
        Provenance::Condensed,
    )?;
    history.push(evaluate(&model, &graph, &task, seed)?);

    for _cycle in 0..cycles {
        let (y_hat, y_hat_c) = predictions(&graph, &condensed, &model, &task);
        assignment = blend(&assignment, &y_hat, &y_hat_c, decay, &ot)?;
        let (labels, cov) = harmonize_labels(&assignment, &y_tr, &omega)?;
        condensed.labels = Some(labels);
        coverage = cov;
        model = train_head(
            (&condensed).into(),
            condensed.labels.as_ref(),
            Some(&coverage),
            None,
            &task,
            &head,
            Provenance::Condensed,
        )?;
        history.push(evaluate(&model, &graph, &task, seed)?);
    }

    let mut csv = String::from("cycle,value\n");
    for (cycle, v) in history.iter().enumerate() {
        csv.push_str(&format!("{cycle},{}\n", format_float(*v)));
    }
    textio::write_text(&out.join("finetune_history.csv"), &csv)?;
    textio::write_matrix(
        &out.join("harmonized_labels.csv"),
        condensed.labels.as_ref().expect("labels set above"),
    )?;
    textio::write_matrix(&out.join("assignment.csv"), &assignment.entries)?;

    let first = history.first().copied().unwrap_or(0.0);
    let last = history.last().copied().unwrap_or(0.0);
    let report = format!(
        "task={} metric={} pre_finetune={} post_finetune={} cycles={} config_hash={}\n",
        task_token(&task),
        metric_token(&task),
        format_float(first),
        format_float(last),
        cycles,
        cfg.hash_hex()
    );
    textio::write_text(&out.join("finetune_report.txt"), &report)?;
    textio::write_text(&out.join("finetune_config.txt"), &cfg.echo())?;
    print!("{report}");
    Ok(())
}

fn predictions(
    graph: &pregc_core::graph::Graph,
    condensed: &CondensedGraph,
    model: &pregc_core::eval::SgcModel,
    task: &TaskSpec,
) -> (Mat, Mat) {
    let z = propagated_design(graph.into(), model.steps_k);
    let zc = propagated_design(condensed.into(), model.steps_k);
    let scores = z.matmul(&model.weights);
    let scores_c = zc.matmul(&model.weights);
    match task.kind {
        TaskKind::NodeRegression => (scores, scores_c),
        _ => (softmax_rows(&scores), softmax_rows(&scores_c)),
    }
}

fn blend(
    assignment: &AssignmentMatrix,
    y_hat: &Mat,
    y_hat_c: &Mat,
    decay: f64,
    ot: &pregc_core::ot::OtConfig,
) -> CliResult<AssignmentMatrix> {
    Ok(finetune_assignment(assignment, y_hat, y_hat_c, decay, ot)?)
}
