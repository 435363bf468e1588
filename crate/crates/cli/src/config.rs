//! Flat `key = value` configuration with `[section]` prefixes.
//!
//! Files look like:
//!
//! ```text
//! [synthetic]
//! blocks = 30,30
//! p_in = 0.5
//!
//! [run]
//! m = 6
//! seed = 0
//! ```
//!
//! Sections merely prefix keys (`run.m`); command-line `--set run.m=8`
//! overrides use the same dotted form. Every resolved value, defaults
//! included, is echoed into the output directory for provenance.

use crate::error::{CliError, CliResult};
use crate::textio;
use pregc_core::condense::{InitStrategy, TrainConfig};
use pregc_core::ot::OtConfig;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn from_file(path: &Path) -> CliResult<Config> {
        let text = textio::read_text(path)?;
        let mut cfg = Config::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_lowercase();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::parse(path, lineno + 1, "expected key = value"));
            };
            let key = key.trim().to_lowercase();
            if key.is_empty() {
                return Err(CliError::parse(path, lineno + 1, "empty key"));
            }
            let full = if section.is_empty() {
                key
            } else {
                format!("{section}.{key}")
            };
            cfg.values.insert(full, value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_lowercase(), value.into());
    }

    /// Apply a `key=value` override (the `--set` flag).
    pub fn apply_override(&mut self, spec: &str) -> CliResult<()> {
        let Some((key, value)) = spec.split_once('=') else {
            return Err(CliError::config(format!(
                "override {spec:?} is not of the form key=value"
            )));
        };
        self.set(key.trim(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str()).filter(|s| !s.is_empty())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn get_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::config(format!("cannot parse {key} = {raw:?}"))),
        }
    }

    pub fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("cannot parse {key} = {raw:?}"))),
        }
    }

    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse()
                        .map_err(|_| CliError::config(format!("cannot parse {key} element {f:?}")))
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn parse_bool(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("on") => Ok(true),
            Some("false") | Some("0") | Some("off") => Ok(false),
            Some(other) => Err(CliError::config(format!("cannot parse {key} = {other:?} as bool"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical echo: sorted `key = value` lines.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", textio::fnv1a64(&self.echo()))
    }

    /// The training configuration with every resolved value echoed back in.
    pub fn train_config(&mut self) -> CliResult<TrainConfig> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            xi: self.parse_or("train.xi", d.xi)?,
            ot: self.ot_config()?,
            epochs: self.parse_or("train.epochs", d.epochs)?,
            steps_k: self.parse_or("train.steps_k", d.steps_k)?,
            delta_t_min: self.parse_opt("train.delta_t_min")?,
            learning_rate: self.parse_or("train.learning_rate", d.learning_rate)?,
            adam_betas: (
                self.parse_or("train.adam_beta1", d.adam_betas.0)?,
                self.parse_or("train.adam_beta2", d.adam_betas.1)?,
            ),
            seed: self.parse_or("run.seed", 0u64)?,
            plan_refresh_period: self.parse_or("train.plan_refresh_period", d.plan_refresh_period)?,
            sparsify_threshold: self.parse_or("train.sparsify_threshold", d.sparsify_threshold)?,
            init: match self.get_or("train.init", "kmeans") {
                "kmeans" | "kmeans-centroids" => InitStrategy::KmeansCentroids,
                "random" | "random-sample" => InitStrategy::RandomSample,
                other => {
                    return Err(CliError::config(format!("unknown train.init {other:?}")));
                }
            },
        };
        cfg.validate()?;
        self.echo_train(&cfg);
        Ok(cfg)
    }

    fn echo_train(&mut self, cfg: &TrainConfig) {
        self.set("train.xi", cfg.xi.to_string());
        self.set("train.epochs", cfg.epochs.to_string());
        self.set("train.steps_k", cfg.steps_k.to_string());
        if let Some(dt) = cfg.delta_t_min {
            self.set("train.delta_t_min", dt.to_string());
        }
        self.set("train.learning_rate", cfg.learning_rate.to_string());
        self.set("train.adam_beta1", cfg.adam_betas.0.to_string());
        self.set("train.adam_beta2", cfg.adam_betas.1.to_string());
        self.set("run.seed", cfg.seed.to_string());
        self.set("train.plan_refresh_period", cfg.plan_refresh_period.to_string());
        self.set("train.sparsify_threshold", cfg.sparsify_threshold.to_string());
        self.set(
            "train.init",
            match cfg.init {
                InitStrategy::KmeansCentroids => "kmeans",
                InitStrategy::RandomSample => "random",
            },
        );
        self.set("ot.epsilon", cfg.ot.epsilon.to_string());
        self.set("ot.sinkhorn_iters", cfg.ot.sinkhorn_iters.to_string());
        self.set("ot.fw_iters", cfg.ot.fw_iters.to_string());
        self.set("ot.gamma", cfg.ot.gamma.to_string());
    }

    pub fn ot_config(&self) -> CliResult<OtConfig> {
        let d = OtConfig::default();
        let cfg = OtConfig {
            epsilon: self.parse_or("ot.epsilon", d.epsilon)?,
            sinkhorn_iters: self.parse_or("ot.sinkhorn_iters", d.sinkhorn_iters)?,
            fw_iters: self.parse_or("ot.fw_iters", d.fw_iters)?,
            gamma: self.parse_or("ot.gamma", d.gamma)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn sections_prefix_keys() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "# comment\ntop = 1\n[run]\nm = 6\nseed = 3\n[ot]\nepsilon = 0.5\n")
            .unwrap();
        let cfg = Config::from_file(&path).unwrap();
        assert_eq!(cfg.get("top"), Some("1"));
        assert_eq!(cfg.get("run.m"), Some("6"));
        assert_eq!(cfg.parse_or("ot.epsilon", 0.0).unwrap(), 0.5);
    }

    #[test]
    fn overrides_win() {
        let mut cfg = Config::default();
        cfg.set("run.m", "6");
        cfg.apply_override("run.m=9").unwrap();
        assert_eq!(cfg.get("run.m"), Some("9"));
        assert!(cfg.apply_override("no-equals").is_err());
    }

    #[test]
    fn echo_is_sorted_and_stable() {
        let mut cfg = Config::default();
        cfg.set("b.x", "2");
        cfg.set("a.y", "1");
        assert_eq!(cfg.echo(), "a.y = 1\nb.x = 2\n");
        assert_eq!(cfg.hash_hex(), cfg.hash_hex());
    }

    #[test]
    fn bad_line_reports_location() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "[run]\nvalid = 1\nnot a kv line\n").unwrap();
        let err = Config::from_file(&path).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }
}
