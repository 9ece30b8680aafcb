//! `biosearch`: index a dataset corpus, search it, and evaluate the results.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! for unreadable or malformed data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{ArgAction, Parser, Subcommand};
use log::LevelFilter;

use crate::config::{usage, GlobalConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "biosearch", version, about = "Dataset retrieval with term-relevance ranking and inferred evaluation")]
struct Cli {
    /// TOML file with paths and parameter defaults; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index snapshot from a corpus.
    Index(commands::IndexArgs),
    /// Rank documents for every topic and write a run file.
    Search(commands::SearchArgs),
    /// Show the weighted query produced by embedding expansion.
    Expand(commands::ExpandArgs),
    /// Assign categories to query text, topics or documents.
    Classify(commands::ClassifyArgs),
    /// Boost documents whose categories match their query's.
    Rerank(commands::RerankArgs),
    /// Combine two run files by weighted normalized scores.
    Fuse(commands::FuseArgs),
    /// Score run files against relevance judgments.
    Eval(commands::EvalArgs),
    /// Run, evaluate and compare a set of configured models.
    Experiment(commands::ExperimentArgs),
}

fn log_level(cli: &Cli, config: &GlobalConfig) -> Result<LevelFilter> {
    if cli.quiet {
        return Ok(LevelFilter::Error);
    }
    let base = match &config.verbosity {
        Some(name) => name
            .parse::<LevelFilter>()
            .map_err(|_| usage(format!("unknown verbosity `{name}`")))?,
        None => LevelFilter::Warn,
    };
    let raised = (base as usize + cli.verbose as usize).min(LevelFilter::Trace as usize);
    Ok(LevelFilter::iter().nth(raised).unwrap_or(LevelFilter::Trace))
}

fn run(cli: Cli) -> Result<()> {
    let config = GlobalConfig::load(cli.config.as_deref())?;
    env_logger::Builder::new()
        .filter_level(log_level(&cli, &config)?)
        .format_timestamp(None)
        .init();
    if let Some(threads) = cli.threads.or(config.threads) {
        if threads == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Index(args) => commands::index(args, &config),
        Command::Search(args) => commands::search(args, &config),
        Command::Expand(args) => commands::expand(args, &config),
        Command::Classify(args) => commands::classify(args, &config),
        Command::Rerank(args) => commands::rerank(args, &config),
        Command::Fuse(args) => commands::fuse(args, &config),
        Command::Eval(args) => commands::eval(args, &config),
        Command::Experiment(args) => commands::experiment(args, &config),
    }
}

fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause.is::<UsageError>()
            || matches!(
                cause.downcast_ref::<biosearch::Error>(),
                Some(biosearch::Error::InvalidParameter(_) | biosearch::Error::Config(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage_error(&err) { 1 } else { 2 })
        }
    }
}
