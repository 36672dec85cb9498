use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mexneedlet::experiments::{
    cmd_bias, cmd_estimate, cmd_frame_check, cmd_rate, cmd_tables, CommandOutcome, ExperimentConfig,
};

/// Mexican needlet frame diagnostics and density-estimation experiments.
#[derive(Debug, Parser)]
#[command(name = "mexneedlet", version)]
struct Cli {
    /// Experiment config (`key = value` lines with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for replications and frame levels.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tightness, localization, norm, Calderón and partition-sum checks.
    FrameCheck,
    /// One thresholded and one linear estimate with survivor counts.
    Estimate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        kappa0: Option<f64>,
    },
    /// Survivor counts per level and Monte-Carlo risks.
    Tables,
    /// Risk against n / ln n with fitted slope.
    Rate,
    /// Bias components against calibrated bounds.
    Bias,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required")?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut entries = ExperimentConfig::parse_entries(&text)?;
    if let Some(seed) = cli.seed {
        entries.insert("seed".into(), seed.to_string());
    }
    let mut config = ExperimentConfig::from_entries(entries)?;
    if let Some(out) = &cli.out {
        config = config.with_output_dir(out.clone());
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<CommandOutcome> {
    let config = load(cli)?;
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker threads")?;
    }
    let outcome = match &cli.command {
        Command::FrameCheck => cmd_frame_check(&config)?,
        Command::Estimate { n, kappa0 } => cmd_estimate(
            &config,
            n.unwrap_or(config.estimate_n),
            kappa0.unwrap_or(config.estimate_kappa0),
        )?,
        Command::Tables => cmd_tables(&config)?,
        Command::Rate => cmd_rate(&config)?,
        Command::Bias => cmd_bias(&config)?,
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            for failure in &outcome.failures {
                eprintln!("FAILED: {failure}");
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
