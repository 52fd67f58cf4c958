use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcclust::config::{parse_config, ConfigError, Overrides, PipelineConfig};
use rcclust::pipeline;

#[derive(Parser)]
#[command(name = "rcclust", version, about = "Robust Continuous Clustering pipeline for image datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Load images, apply PCA and normalization; write features.csv and labels_true.csv.
    Ingest,
    /// Cluster features.csv with the configured algorithms.
    Cluster,
    /// Compute the t-SNE embedding of features.csv.
    Embed,
    /// Score predicted labels against labels_true.csv into metrics.json.
    Evaluate,
    /// Render scatter SVGs from embedding.csv and the label files.
    Plot,
    /// Run every stage.
    Pipeline,
}

fn load(cli: &Cli) -> Result<PipelineConfig, ConfigError> {
    let overrides = Overrides { dataset_dir: cli.dataset_dir.clone(), output_dir: cli.output_dir.clone(), seed: cli.seed };
    match &cli.config {
        Some(path) => parse_config(path, &overrides),
        None => PipelineConfig::parse_str("", &overrides),
    }
}

fn run(cmd: Command, cfg: &PipelineConfig) -> Result<(), Box<dyn std::error::Error>> {
    let dir = cfg.output_dir.as_path();
    if !matches!(cmd, Command::Pipeline) {
        std::fs::create_dir_all(dir)?;
    }
    match cmd {
        Command::Ingest => pipeline::run_ingest(cfg, dir)?,
        Command::Cluster => pipeline::run_cluster(cfg, dir)?,
        Command::Embed => pipeline::run_embed(cfg, dir)?,
        Command::Evaluate => {
            pipeline::run_evaluate(cfg, dir)?;
        }
        Command::Plot => pipeline::run_plot(cfg, dir)?,
        Command::Pipeline => {
            for path in pipeline::run_pipeline(cfg)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
