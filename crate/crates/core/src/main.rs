use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use textmix::pipeline::{cmd_augment, cmd_clean, cmd_encode, cmd_eval, cmd_inspect, ConfigOverrides, PipelineConfig};
use textmix::Result;

/// Synthetic text augmentation by interpolating same-class embeddings.
#[derive(Parser)]
#[command(name = "textmix", version)]
struct Cli {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: ConfigOverrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic examples: embed, interpolate, project, decode.
    Augment,
    /// Compare real-only, real+synthetic and synthetic-only classifiers.
    Eval,
    /// Summarize a vector store file.
    Inspect { store: PathBuf },
    /// Embed a corpus into a vector store.
    Encode,
    /// Strip headers, quotes and signatures from a corpus.
    Clean,
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&cli.overrides);
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let mut stdout = io::stdout().lock();
    if let Command::Inspect { store } = &cli.command {
        cmd_inspect(store, &mut stdout)?;
        return Ok(());
    }
    let cfg = effective_config(cli)?;
    match cli.command {
        Command::Augment => cmd_augment(&cfg, &mut stdout).map(drop),
        Command::Eval => cmd_eval(&cfg, &mut stdout).map(drop),
        Command::Encode => cmd_encode(&cfg, &mut stdout).map(drop),
        Command::Clean => cmd_clean(&cfg, &mut stdout).map(drop),
        Command::Inspect { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
