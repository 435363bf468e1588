//! Dataset ingestion and synthetic generation.
//!
//! File formats:
//! - edges: whitespace-separated `src dst` integer pairs, one per line;
//!   both orientations are inserted and duplicates collapse,
//! - features: CSV of reals, one row per node id in order,
//! - labels: CSV `node_id,label` where the label is a class index or a
//!   real value (a file of all-integer labels is one-hot encoded),
//! - splits: CSV `node_id,split` with split in {train, val, test}.

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::textio;
use pregc_core::graph::{default_centers, normalize_adjacency, sbm_generate, Graph, Splits};
use pregc_core::Mat;
use std::path::Path;

pub fn load_graph(
    edges_path: &Path,
    features_path: &Path,
    labels_path: Option<&Path>,
    splits_path: Option<&Path>,
    add_self_loops: bool,
) -> CliResult<Graph> {
    let features = textio::read_matrix(features_path)?;
    let n = features.rows();

    let text = textio::read_text(edges_path)?;
    let mut raw = Mat::zeros(n, n);
    let mut max_node = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(CliError::parse(edges_path, lineno + 1, "expected `src dst`"));
        };
        if fields.next().is_some() {
            return Err(CliError::parse(edges_path, lineno + 1, "expected exactly two fields"));
        }
        let src: usize = a
            .parse()
            .map_err(|_| CliError::parse(edges_path, lineno + 1, format!("bad node id {a:?}")))?;
        let dst: usize = b
            .parse()
            .map_err(|_| CliError::parse(edges_path, lineno + 1, format!("bad node id {b:?}")))?;
        if src >= n || dst >= n {
            return Err(CliError::parse(
                edges_path,
                lineno + 1,
                format!("node id {} out of range (features define {} nodes)", src.max(dst), n),
            ));
        }
        max_node = max_node.max(src).max(dst);
        if src != dst {
            raw.set(src, dst, 1.0);
            raw.set(dst, src, 1.0);
        }
    }
    if n == 0 || max_node + 1 != n {
        return Err(CliError::parse(
            features_path,
            1,
            format!(
                "feature row count {} does not equal max node id + 1 = {}",
                n,
                max_node + 1
            ),
        ));
    }

    let labels = match labels_path {
        Some(path) => Some(load_labels(path, n)?),
        None => None,
    };
    let splits = match splits_path {
        Some(path) => Some(load_splits(path, n)?),
        None => None,
    };

    let adjacency = normalize_adjacency(&raw, add_self_loops)?;
    Ok(Graph::new(adjacency, features, labels, splits)?)
}

fn load_labels(path: &Path, n: usize) -> CliResult<Mat> {
    let text = textio::read_text(path)?;
    let mut pairs: Vec<(usize, f64, bool)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((id, label)) = line.split_once(',') else {
            return Err(CliError::parse(path, lineno + 1, "expected `node_id,label`"));
        };
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, lineno + 1, format!("bad node id {id:?}")))?;
        if id >= n {
            return Err(CliError::parse(
                path,
                lineno + 1,
                format!("node id {id} out of range (n = {n})"),
            ));
        }
        let label = label.trim();
        let as_int = label.parse::<i64>();
        let value: f64 = label
            .parse()
            .map_err(|_| CliError::parse(path, lineno + 1, format!("bad label {label:?}")))?;
        pairs.push((id, value, as_int.is_ok() && value >= 0.0));
    }
    if pairs.is_empty() {
        return Err(CliError::parse(path, 1, "label file has no entries"));
    }
    let classification = pairs.iter().all(|&(_, _, int_like)| int_like);
    if classification {
        let classes = pairs.iter().map(|&(_, v, _)| v as usize).max().unwrap() + 1;
        let mut y = Mat::zeros(n, classes);
        for &(id, v, _) in &pairs {
            y.set(id, v as usize, 1.0);
        }
        Ok(y)
    } else {
        let mut y = Mat::zeros(n, 1);
        for &(id, v, _) in &pairs {
            y.set(id, 0, v);
        }
        Ok(y)
    }
}

fn load_splits(path: &Path, n: usize) -> CliResult<Splits> {
    let text = textio::read_text(path)?;
    let mut splits = Splits::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((id, kind)) = line.split_once(',') else {
            return Err(CliError::parse(path, lineno + 1, "expected `node_id,split`"));
        };
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, lineno + 1, format!("bad node id {id:?}")))?;
        if id >= n {
            return Err(CliError::parse(
                path,
                lineno + 1,
                format!("node id {id} out of range (n = {n})"),
            ));
        }
        match kind.trim() {
            "train" => splits.train.push(id),
            "val" => splits.val.push(id),
            "test" => splits.test.push(id),
            other => {
                return Err(CliError::parse(
                    path,
                    lineno + 1,
                    format!("unknown split token {other:?} (expected train/val/test)"),
                ));
            }
        }
    }
    Ok(splits)
}

/// Build the graph named by the configuration: either the `[dataset]`
/// file group or the `[synthetic]` block-model spec, never both.
pub fn graph_from_config(cfg: &mut Config) -> CliResult<Graph> {
    let has_dataset = cfg.contains("dataset.edges") || cfg.contains("dataset.features");
    let has_synthetic = cfg.contains("synthetic.blocks");
    match (has_dataset, has_synthetic) {
        (true, true) => Err(CliError::config(
            "both [dataset] and [synthetic] are configured; pick one",
        )),
        (false, false) => Err(CliError::config(
            "no input graph: configure [dataset] paths or a [synthetic] spec",
        )),
        (true, false) => {
            let edges = cfg
                .get("dataset.edges")
                .ok_or_else(|| CliError::config("dataset.edges is required"))?
                .to_string();
            let features = cfg
                .get("dataset.features")
                .ok_or_else(|| CliError::config("dataset.features is required"))?
                .to_string();
            let labels = cfg.get("dataset.labels").map(|s| s.to_string());
            let splits = cfg.get("dataset.splits").map(|s| s.to_string());
            let self_loops = cfg.parse_bool("dataset.add_self_loops", true)?;
            cfg.set("dataset.add_self_loops", self_loops.to_string());
            load_graph(
                Path::new(&edges),
                Path::new(&features),
                labels.as_deref().map(Path::new),
                splits.as_deref().map(Path::new),
                self_loops,
            )
        }
        (false, true) => synthetic_from_config(cfg),
    }
}

pub fn synthetic_from_config(cfg: &mut Config) -> CliResult<Graph> {
    let blocks: Vec<usize> = cfg
        .parse_list("synthetic.blocks")?
        .ok_or_else(|| CliError::config("synthetic.blocks is required"))?;
    let p_in: f64 = cfg.parse_or("synthetic.p_in", 0.5)?;
    let p_out: f64 = cfg.parse_or("synthetic.p_out", 0.02)?;
    let feature_dim: usize = cfg.parse_or("synthetic.feature_dim", 4)?;
    let center_scale: f64 = cfg.parse_or("synthetic.center_scale", 3.0)?;
    let noise_sigma: f64 = cfg.parse_or("synthetic.noise_sigma", 0.3)?;
    let train_frac: f64 = cfg.parse_or("synthetic.train_frac", 0.3)?;
    let val_frac: f64 = cfg.parse_or("synthetic.val_frac", 0.2)?;
    let seed: u64 = cfg.parse_or("synthetic.seed", cfg.parse_or("run.seed", 0u64)?)?;

    // echo resolved values
    cfg.set("synthetic.p_in", p_in.to_string());
    cfg.set("synthetic.p_out", p_out.to_string());
    cfg.set("synthetic.feature_dim", feature_dim.to_string());
    cfg.set("synthetic.center_scale", center_scale.to_string());
    cfg.set("synthetic.noise_sigma", noise_sigma.to_string());
    cfg.set("synthetic.train_frac", train_frac.to_string());
    cfg.set("synthetic.val_frac", val_frac.to_string());
    cfg.set("synthetic.seed", seed.to_string());

    let centers = default_centers(blocks.len(), feature_dim, center_scale);
    let g = sbm_generate(&blocks, p_in, p_out, &centers, noise_sigma, seed)?
        .with_random_splits(train_frac, val_frac, seed);
    Ok(g)
}

/// Write a generated graph out as the dataset file formats.
pub fn write_dataset(g: &Graph, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Write {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut edges = String::new();
    for i in 0..g.n {
        for j in (i + 1)..g.n {
            if g.adjacency.get(i, j) > 0.0 {
                edges.push_str(&format!("{i} {j}\n"));
            }
        }
    }
    textio::write_text(&dir.join("edges.txt"), &edges)?;
    textio::write_matrix(&dir.join("features.csv"), &g.features)?;
    if let Some(y) = &g.labels {
        let mut out = String::new();
        if y.cols() == 1 {
            for i in 0..g.n {
                out.push_str(&format!("{i},{}\n", textio::format_float(y.get(i, 0))));
            }
        } else {
            for i in 0..g.n {
                let class = y
                    .row(i)
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(c, _)| c)
                    .unwrap_or(0);
                out.push_str(&format!("{i},{class}\n"));
            }
        }
        textio::write_text(&dir.join("labels.csv"), &out)?;
    }
    if let Some(s) = &g.splits {
        let mut out = String::new();
        for (name, set) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
            for &i in set {
                out.push_str(&format!("{i},{name}\n"));
            }
        }
        textio::write_text(&dir.join("splits.csv"), &out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn duplicate_edges_collapse() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        write(&e, "0 1\n1 0\n");
        write(&f, "1.0\n2.0\n");
        let g = load_graph(&e, &f, None, None, true).unwrap();
        assert_eq!(g.n, 2);
        // single undirected edge, self-loops on: all entries 0.5
        assert!((g.adjacency.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_labels_gives_unlabeled_graph() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        write(&e, "0 1\n");
        write(&f, "1.0\n2.0\n");
        let g = load_graph(&e, &f, None, None, true).unwrap();
        assert!(g.labels.is_none());
    }

    #[test]
    fn feature_count_mismatch_is_parse_error() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        write(&e, "0 1\n");
        write(&f, "1.0\n2.0\n3.0\n");
        let err = load_graph(&e, &f, None, None, true).unwrap_err();
        assert!(err.to_string().contains("max node id"), "{err}");
    }

    #[test]
    fn out_of_range_edge_names_line() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        write(&e, "0 1\n0 7\n");
        write(&f, "1.0\n2.0\n");
        let err = load_graph(&e, &f, None, None, true).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn unknown_split_token_rejected() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        let s = dir.path().join("splits.csv");
        write(&e, "0 1\n");
        write(&f, "1.0\n2.0\n");
        write(&s, "0,train\n1,holdout\n");
        let err = load_graph(&e, &f, None, Some(&s), true).unwrap_err();
        assert!(err.to_string().contains("holdout"), "{err}");
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn integer_labels_one_hot() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        let l = dir.path().join("labels.csv");
        write(&e, "0 1\n1 2\n");
        write(&f, "1.0\n2.0\n3.0\n");
        write(&l, "0,0\n1,1\n2,1\n");
        let g = load_graph(&e, &f, Some(&l), None, true).unwrap();
        let y = g.labels.unwrap();
        assert_eq!(y.cols(), 2);
        assert_eq!(y.row(2), &[0.0, 1.0]);
    }

    #[test]
    fn real_labels_single_column() {
        let dir = tempdir().unwrap();
        let e = dir.path().join("edges.txt");
        let f = dir.path().join("features.csv");
        let l = dir.path().join("labels.csv");
        write(&e, "0 1\n");
        write(&f, "1.0\n2.0\n");
        write(&l, "0,1.5\n1,-2.25\n");
        let g = load_graph(&e, &f, Some(&l), None, true).unwrap();
        let y = g.labels.unwrap();
        assert_eq!(y.cols(), 1);
        assert_eq!(y.get(1, 0), -2.25);
    }

    #[test]
    fn dataset_roundtrip_through_files() {
        let dir = tempdir().unwrap();
        let mut cfg = Config::default();
        cfg.set("synthetic.blocks", "5,5");
        cfg.set("synthetic.seed", "3");
        let g = synthetic_from_config(&mut cfg).unwrap();
        write_dataset(&g, dir.path()).unwrap();
        let back = load_graph(
            &dir.path().join("edges.txt"),
            &dir.path().join("features.csv"),
            Some(&dir.path().join("labels.csv")),
            Some(&dir.path().join("splits.csv")),
            true,
        )
        .unwrap();
        assert_eq!(back.n, g.n);
        assert!(back.adjacency.sub(&g.adjacency).max_abs() < 1e-12);
        for (a, b) in back.features.as_slice().iter().zip(g.features.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.labels.unwrap(), g.labels.unwrap());
        let (sa, sb) = (back.splits.unwrap(), g.splits.unwrap());
        assert_eq!(sa.train, sb.train);
        assert_eq!(sa.test, sb.test);
    }
}
