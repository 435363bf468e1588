use clap::{Args, Parser, Subcommand};
use pregc_cli::commands;
use pregc_cli::config::Config;
use pregc_cli::CliResult;
use std::path::PathBuf;
use std::process::ExitCode;

/// Graph condensation by optimal-transport plan matching over stochastic
/// graph-diffusion states.
#[derive(Parser)]
#[command(name = "pregc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (flat `key = value`, `[section]` prefixes).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set run.m=6` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Random seed (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (overrides `run.output`).
    #[arg(long)]
    output: Option<PathBuf>,

    /// Enable the data-parallel code path (single-threaded by default).
    #[arg(long)]
    parallel: bool,
}

impl CommonArgs {
    fn build_config(&self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        for spec in &self.overrides {
            cfg.apply_override(spec)?;
        }
        if let Some(seed) = self.seed {
            cfg.set("run.seed", seed.to_string());
        }
        if let Some(out) = &self.output {
            cfg.set("run.output", out.display().to_string());
        }
        cfg.set("run.parallel", self.parallel.to_string());
        Ok(cfg)
    }

    fn output_dir(&self, cfg: &Config, default: &str) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(cfg.get_or("run.output", default)))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Condense a graph and write a checkpoint directory.
    Condense {
        #[command(flatten)]
        common: CommonArgs,
        /// Condensed node count (overrides `run.m`).
        #[arg(long)]
        m: Option<usize>,
        /// Condensation ratio M/N in (0, 1) (overrides `run.ratio`).
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Harmonize labels, train heads, and report metrics for the
    /// condensed / whole / random-coreset arms.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated task list: nc, nclu, lp, nr.
        #[arg(long)]
        tasks: Option<String>,
    },
    /// Score source nodes by transport mass and select a training set.
    Significance {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Column mask size H (default: ceil(n / m)).
        #[arg(long)]
        h: Option<usize>,
        /// Selection budget (default: train split size).
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Test-time fine-tuning of the assignment matrix.
    Finetune {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Task to fine-tune: nc, nclu, or nr.
        #[arg(long)]
        task: Option<String>,
        /// Blend cadence in epochs.
        #[arg(long)]
        tau_up: Option<usize>,
        /// Decay rate in [0, 1]; 1 keeps the assignment fixed.
        #[arg(long)]
        decay: Option<f64>,
        /// Total fine-tuning epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Spectral-coverage diagnostic of interval sampling.
    SpectralReport {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of sampled intervals.
        #[arg(long)]
        samples: Option<usize>,
        /// Grid resolution.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Generate a synthetic block-model dataset on disk.
    GenSynthetic {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn run() -> CliResult<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Condense { common, m, ratio } => {
            let mut cfg = common.build_config()?;
            if let Some(m) = m {
                cfg.set("run.m", m.to_string());
            }
            if let Some(r) = ratio {
                cfg.set("run.ratio", r.to_string());
            }
            set_parallel(&cfg)?;
            let out = common.output_dir(&cfg, "pregc-out");
            commands::cmd_condense(&mut cfg, &out)
        }
        Command::Evaluate {
            common,
            checkpoint,
            tasks,
        } => {
            let mut overrides = common.build_config()?;
            if let Some(tasks) = tasks {
                overrides.set("run.tasks", tasks);
            }
            set_parallel(&overrides)?;
            let out = common
                .output
                .clone()
                .unwrap_or_else(|| checkpoint.clone());
            commands::cmd_evaluate(&checkpoint, &overrides, &out)
        }
        Command::Significance {
            common,
            checkpoint,
            h,
            budget,
        } => {
            let overrides = common.build_config()?;
            set_parallel(&overrides)?;
            let out = common
                .output
                .clone()
                .unwrap_or_else(|| checkpoint.clone());
            commands::cmd_significance(&checkpoint, &overrides, h, budget, &out)
        }
        Command::Finetune {
            common,
            checkpoint,
            task,
            tau_up,
            decay,
            epochs,
        } => {
            let mut overrides = common.build_config()?;
            if let Some(task) = task {
                overrides.set("finetune.task", task);
            }
            if let Some(t) = tau_up {
                overrides.set("finetune.tau_up", t.to_string());
            }
            if let Some(d) = decay {
                overrides.set("finetune.decay", d.to_string());
            }
            if let Some(e) = epochs {
                overrides.set("finetune.epochs", e.to_string());
            }
            set_parallel(&overrides)?;
            let out = common
                .output
                .clone()
                .unwrap_or_else(|| checkpoint.clone());
            commands::cmd_finetune(&checkpoint, &overrides, &out)
        }
        Command::SpectralReport {
            common,
            samples,
            grid,
        } => {
            let mut cfg = common.build_config()?;
            if let Some(s) = samples {
                cfg.set("spectral.samples", s.to_string());
            }
            if let Some(g) = grid {
                cfg.set("spectral.grid", g.to_string());
            }
            set_parallel(&cfg)?;
            let out = common.output_dir(&cfg, "pregc-out");
            commands::cmd_spectral_report(&mut cfg, &out)
        }
        Command::GenSynthetic { common } => {
            let mut cfg = common.build_config()?;
            let out = common.output_dir(&cfg, "pregc-data");
            commands::cmd_gen_synthetic(&mut cfg, &out)
        }
    }
}

fn set_parallel(cfg: &Config) -> CliResult<()> {
    let enabled = cfg.parse_bool("run.parallel", false)?;
    pregc_core::parallel::set_enabled(enabled);
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}
