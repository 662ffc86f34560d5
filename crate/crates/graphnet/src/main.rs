use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphnet::cli::{cmd_eval, cmd_gen, cmd_predict, cmd_train, CliError};
use graphnet::config::{ConfigError, RunConfig};

/// Graph convolutional network for joint surface classification and
/// segmentation.
///
/// Settings come from defaults, then `--config FILE` (plain `key = value`
/// lines), then `--set key=value`, then the dedicated flags. Exit codes:
/// 0 success, 2 configuration error, 3 data error, 4 numeric failure.
#[derive(Parser)]
#[command(name = "graphnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one setting; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the effective configuration to FILE before running.
    #[arg(long, value_name = "FILE")]
    dump_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        class_ratio: Option<f64>,
        #[arg(long)]
        lobulation: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Train on a dataset directory; writes model.gnet, train_log.csv and config.txt.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Ignore all edges (the PointNet special case).
        #[arg(long)]
        pointnet: bool,
    },
    /// Evaluate a checkpoint; writes report.json and roc.csv.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Classify and segment one OFF or OBJ surface.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        mesh: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Comma-separated auxiliary values.
        #[arg(long, allow_hyphen_values = true)]
        aux: Option<String>,
        /// Use a zero auxiliary vector.
        #[arg(long)]
        aux_zeros: bool,
    },
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    for kv in &common.set {
        cfg.apply_override(kv)?;
    }
    Ok(cfg)
}

fn set<T: ToString>(cfg: &mut RunConfig, key: &str, v: &Option<T>) -> Result<(), CliError> {
    if let Some(v) = v {
        cfg.set(key, &v.to_string(), "command line")?;
    }
    Ok(())
}

fn set_path(cfg: &mut RunConfig, key: &str, v: &Option<PathBuf>) -> Result<(), CliError> {
    set(cfg, key, &v.as_ref().map(|p| p.display().to_string()))
}

fn finish(common: &Common, cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(path) = &common.dump_config {
        std::fs::write(path, cfg.dump()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { common, samples, seed, nodes, class_ratio, lobulation, out } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg, "samples", &samples)?;
            set(&mut cfg, "seed", &seed)?;
            set(&mut cfg, "nodes", &nodes)?;
            set(&mut cfg, "class_ratio", &class_ratio)?;
            set(&mut cfg, "lobulation", &lobulation)?;
            set_path(&mut cfg, "out", &out)?;
            finish(&common, &cfg)?;
            let s = cmd_gen(&cfg)?;
            println!(
                "wrote {} samples to {}: {} unruptured (class 0), {} ruptured (class 1)",
                s.per_class[0] + s.per_class[1],
                s.dir.display(),
                s.per_class[0],
                s.per_class[1]
            );
        }
        Command::Train { common, data, out, epochs, batch_size, lr, pointnet } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg, "data", &data)?;
            set_path(&mut cfg, "out", &out)?;
            set(&mut cfg, "epochs", &epochs)?;
            set(&mut cfg, "batch_size", &batch_size)?;
            set(&mut cfg, "lr", &lr)?;
            if pointnet {
                cfg.pointnet = true;
            }
            finish(&common, &cfg)?;
            let s = cmd_train(&cfg)?;
            if let Some(last) = s.logs.last() {
                println!(
                    "epoch {}: lr {:.6} ce {:.5} dsc loss {:.5} total {:.5}",
                    last.epoch, last.lr, last.mean_ce, last.mean_dsc_loss, last.total
                );
            }
            println!("checkpoint {}", s.checkpoint.display());
        }
        Command::Eval { common, checkpoint, data, out } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg, "checkpoint", &checkpoint)?;
            set_path(&mut cfg, "data", &data)?;
            set_path(&mut cfg, "out", &out)?;
            finish(&common, &cfg)?;
            let r = cmd_eval(&cfg)?;
            println!(
                "samples {} accuracy {:.4} auc {:.4} youden: threshold {:.4} sens {:.4} spec {:.4} acc {:.4}",
                r.scores.len(),
                r.accuracy,
                r.roc.auc,
                r.youden.threshold,
                r.youden.sensitivity,
                r.youden.specificity,
                r.youden.accuracy
            );
            println!("mean node dsc {:.4} mean latency {:.3} ms", r.mean_node_dsc, r.mean_latency_ms);
        }
        Command::Predict { common, checkpoint, mesh, out, aux, aux_zeros } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg, "checkpoint", &checkpoint)?;
            set_path(&mut cfg, "mesh", &mesh)?;
            set_path(&mut cfg, "out", &out)?;
            set(&mut cfg, "aux", &aux)?;
            if aux_zeros {
                cfg.aux_zeros = true;
            }
            finish(&common, &cfg)?;
            let p = cmd_predict(&cfg)?;
            let probs: Vec<String> = p.class_probabilities.iter().map(|v| format!("{v:.6}")).collect();
            println!("class probabilities {}", probs.join(" "));
            let fg = p.node_classes.iter().filter(|&&c| c == 1).count();
            println!("{fg} of {} nodes segmented as class 1", p.node_classes.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
