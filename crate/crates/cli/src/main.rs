//! `protrans`: corpus generation, feature extraction, cascade training,
//! evaluation and per-record classification driven by one JSON config.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use exit::CliError;

#[derive(Parser)]
#[command(name = "protrans", version, about = "Transient classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configuration's `out` directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configuration's `jobs`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sets any config leaf: `--set gen.per_class=20`. The value is parsed
    /// as JSON, falling back to a plain string.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize a labelled corpus.
    Gen,
    /// Detect events and write one feature row per triggered record.
    Features,
    /// Train a cascade and report per-stage cross-validated scores.
    Train,
    /// Score a trained cascade on a labelled corpus.
    Eval,
    /// Emit one JSON decision per record.
    Classify,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, CliError> {
    let mut out = Vec::new();
    for s in &cli.sets {
        let (path, text) = s
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set {s:?}: expected PATH=VALUE")))?;
        let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
        out.push((path.to_string(), value));
    }
    if let Some(seed) = cli.seed {
        out.push(("seed".into(), seed.into()));
    }
    if let Some(dir) = &cli.out {
        out.push(("out".into(), Value::String(dir.display().to_string())));
    }
    if let Some(j) = cli.jobs {
        out.push(("jobs".into(), j.into()));
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let loaded = config::load(raw, &overrides(cli)?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(loaded.config.jobs.unwrap_or(0))
        .build()
        .map_err(CliError::config)?;
    pool.install(|| match cli.command {
        Command::Gen => commands::gen(&loaded),
        Command::Features => commands::features(&loaded),
        Command::Train => commands::train(&loaded),
        Command::Eval => commands::eval(&loaded),
        Command::Classify => commands::classify(&loaded),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
