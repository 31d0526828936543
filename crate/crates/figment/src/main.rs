use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use figment::commands::{self, ModelKind};
use figment::formats::write_text;
use figment::RunConfig;

/// Corpus-level fine-grained entity typing.
#[derive(Parser)]
#[command(name = "figment", version)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set cm.mode=att`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gm,
    Cm,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Gm => ModelKind::Gm,
            Model::Cm => ModelKind::Cm,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with its catalog and embeddings.
    Synth,
    /// Clean, split, extract and sample contexts.
    Preprocess,
    /// Train the global or the context model.
    Train {
        model: Model,
        #[arg(long)]
        force: bool,
    },
    /// Score dev and test entities with a trained model.
    Predict {
        model: Model,
        #[arg(long)]
        force: bool,
    },
    /// Average global and context model scores.
    Joint {
        #[arg(long)]
        gm: PathBuf,
        #[arg(long)]
        cm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Tune thresholds on dev scores and report all metrics on test scores.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides)?,
        None => RunConfig::from_toml("", &cli.overrides)?,
    };
    let summary = match cli.command {
        Command::Synth => commands::synth(&cfg)?,
        Command::Preprocess => commands::preprocess(&cfg)?,
        Command::Train { model, force } => commands::train(&cfg, model.into(), force)?,
        Command::Predict { model, force } => commands::predict(&cfg, model.into(), force)?,
        Command::Joint { gm, cm, out, force } => commands::joint(&gm, &cm, &out, force)?,
        Command::Evaluate { scores, dev, out, force } => {
            let json = commands::evaluate_files(&cfg, &scores, &dev, force)?;
            match out {
                Some(path) => {
                    write_text(&path, &json)?;
                    format!("evaluate: report written to {}", path.display())
                }
                None => {
                    print!("{json}");
                    String::new()
                }
            }
        }
    };
    if !summary.is_empty() {
        eprintln!("{summary}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("figment: {e:#}");
            ExitCode::FAILURE
        }
    }
}
